"""End-to-end pipelines: raw instances -> features -> fitted model -> labels.

Classical pipelines pair one of the six classic learners with a feature mode:

    oh     binary bag-of-words with an aspect presence block
    le     padded phrase-mode aspect sequence + padded location sequence
    tfidf  L2-normalized tf-idf counts

The memnet pipeline applies stop-word removal (aspect protected), maps tokens
to ids, and trains the memory network. Everything fitted here is derived from
the training instances only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from . import classic, encode, memnet, textproc
from .classic import BoostParams, ForestParams, SvmParams, TreeParams
from .corpus import Instance
from .memnet import MemNetHyperparams

CLASSIC_KINDS = ("nb", "dtree", "svm", "rforest", "etrees", "gboost")
FEATURE_MODES = ("oh", "le", "tfidf", "memnet")


@dataclass
class PipelineConfig:
    model: str
    features: str
    seed: int = 42
    min_freq: int = 1
    max_len: int | None = None          # le mode; None -> 95th percentile of training lengths
    nb_alpha: float = 1.0
    tree: TreeParams | None = None      # None -> the learner's own defaults
    svm: SvmParams | None = None
    forest: ForestParams | None = None
    gboost: BoostParams | None = None
    memnet: MemNetHyperparams = field(default_factory=MemNetHyperparams)
    stopwords: frozenset[str] | None = None  # memnet only; None -> bundled list
    embeddings_path: str | None = None       # memnet only; None -> seeded random table
    title: str | None = None

    def __post_init__(self):
        if self.features not in FEATURE_MODES:
            raise ValueError(f"unknown feature mode {self.features!r}")
        if self.model == "memnet":
            if self.features != "memnet":
                raise ValueError("the memnet model requires the memnet feature mode")
        elif self.model in CLASSIC_KINDS:
            if self.features == "memnet":
                raise ValueError(f"feature mode 'memnet' is incompatible with model {self.model!r}")
        else:
            raise ValueError(f"unknown model kind {self.model!r}")


def make_config(model: str, features: str | None = None, seed: int = 42, **overrides) -> PipelineConfig:
    """Build a config with the seed stamped into every stochastic component."""
    if features is None:
        features = "memnet" if model == "memnet" else "oh"
    defaults = dict(
        svm=SvmParams(seed=seed),
        forest=ForestParams(seed=seed, bootstrap=(model != "etrees")),
        gboost=BoostParams(seed=seed),
        memnet=MemNetHyperparams(seed=seed),
    )
    defaults.update(overrides)
    return PipelineConfig(model=model, features=features, seed=seed, **defaults)


class ClassicPipeline:
    """Tokenize, vectorize with the configured feature mode, fit a classic model."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.vocab: textproc.Vocabulary | None = None
        self.aspect_ids: encode.AspectIdMap | None = None
        self.tfidf: encode.TfIdfModel | None = None
        self.max_len: int | None = None
        self.model: classic.ClassicModel | None = None

    def fit(self, instances: Sequence[Instance]) -> "ClassicPipeline":
        cfg = self.config
        tis = [textproc.tokenize_instance(inst) for inst in instances]
        self.vocab = textproc.build_vocab(tis, min_freq=cfg.min_freq)
        if cfg.features == "le":
            self.aspect_ids = encode.assign_aspect_ids(tis)
            self.max_len = cfg.max_len or encode.default_max_len(
                [ti.collapsed_length for ti in tis]
            )
        elif cfg.features == "tfidf":
            self.tfidf = encode.tfidf_fit(tis, self.vocab)
        X = [self._featurize(ti) for ti in tis]
        y = [ti.polarity for ti in tis]
        self.model = self._fit_model(X, y)
        return self

    def predict(self, instances: Sequence[Instance]) -> list[int]:
        if self.model is None:
            raise RuntimeError("pipeline is not fitted")
        tis = [textproc.tokenize_instance(inst) for inst in instances]
        X = [self._featurize(ti) for ti in tis]
        return classic.predict(self.model, X)

    def _featurize(self, ti: textproc.TokenizedInstance) -> encode.FeatureVector:
        cfg = self.config
        if cfg.features == "oh":
            return encode.one_hot_vector(ti, self.vocab)
        if cfg.features == "tfidf":
            return encode.tfidf_transform(self.tfidf, ti)
        return encode.location_feature_vector(ti, self.aspect_ids.id_for(ti), self.max_len)

    def _fit_model(self, X, y) -> classic.ClassicModel:
        cfg = self.config
        if cfg.model == "nb":
            return classic.fit_naive_bayes(X, y, alpha=cfg.nb_alpha)
        if cfg.model == "dtree":
            return classic.fit_decision_tree(X, y, cfg.tree)
        if cfg.model == "svm":
            return classic.fit_svm(X, y, cfg.svm)
        if cfg.model == "rforest":
            return classic.fit_random_forest(X, y, cfg.forest)
        if cfg.model == "etrees":
            return classic.fit_extra_trees(X, y, cfg.forest)
        if cfg.model == "gboost":
            return classic.fit_gradient_boosting(X, y, cfg.gboost)
        raise ValueError(f"unknown model kind {cfg.model!r}")


class MemNetPipeline:
    """Stop-word removal, id mapping, and memory-network training."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.stopwords: set[str] | None = None
        self.vocab: textproc.Vocabulary | None = None
        self.params: memnet.MemNetParams | None = None
        self.loss_history: list[float] = []

    def fit(self, instances: Sequence[Instance]) -> "MemNetPipeline":
        cfg = self.config
        self.stopwords = (
            set(cfg.stopwords) if cfg.stopwords is not None else textproc.default_stopwords()
        )
        tis = [textproc.tokenize_instance(inst, self.stopwords) for inst in instances]
        self.vocab = textproc.build_vocab(tis, min_freq=cfg.min_freq)
        if cfg.embeddings_path:
            table = memnet.load_embeddings(
                cfg.embeddings_path, self.vocab, cfg.memnet.dim, cfg.seed
            )
        else:
            table = memnet.random_embeddings(self.vocab.size, cfg.memnet.dim, cfg.seed)
        inputs = [memnet.build_input(ti, self.vocab) for ti in tis]
        golds = [ti.polarity for ti in tis]
        self.params, self.loss_history = memnet.train(inputs, golds, table, cfg.memnet)
        return self

    def predict(self, instances: Sequence[Instance]) -> list[int]:
        if self.params is None:
            raise RuntimeError("pipeline is not fitted")
        return [
            memnet.predict_memnet(self.params, self._to_input(inst)) for inst in instances
        ]

    def _to_input(self, instance: Instance) -> memnet.MemNetInput:
        ti = textproc.tokenize_instance(instance, self.stopwords)
        return memnet.build_input(ti, self.vocab)


class MajorityBaseline:
    """Predicts the most frequent training label; ties go to the smaller label."""

    title = "majority"

    def __init__(self):
        self.label: int | None = None

    def fit(self, instances: Sequence[Instance]) -> "MajorityBaseline":
        if not instances:
            raise ValueError("cannot fit on an empty dataset")
        counts = {lbl: 0 for lbl in (-1, 0, 1)}
        for inst in instances:
            counts[inst.polarity] += 1
        self.label = max(counts, key=lambda lbl: (counts[lbl], -lbl))
        return self

    def predict(self, instances: Sequence[Instance]) -> list[int]:
        if self.label is None:
            raise RuntimeError("baseline is not fitted")
        return [self.label] * len(instances)


Pipeline = ClassicPipeline | MemNetPipeline | MajorityBaseline


def build_pipeline(config) -> Pipeline:
    if isinstance(config, PipelineConfig):
        if config.model == "memnet":
            return MemNetPipeline(config)
        return ClassicPipeline(config)
    if config == "majority":
        return MajorityBaseline()
    raise TypeError(f"cannot build a pipeline from {config!r}")
