"""Versioned `.absa` archives for fitted pipelines.

Layout: one line of compact JSON (format version, kind, metadata, and an
array manifest) followed by the raw little-endian array payload. The header
is human-inspectable; numeric state round-trips bit-exactly. Writes are
atomic (temp file + rename).
"""

from __future__ import annotations

import dataclasses
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import classic, memnet, pipeline as pipeline_mod
from .encode import AspectIdMap, TfIdfModel
from .textproc import Vocabulary
from .trees import Tree

FORMAT_VERSION = 1

_DTYPES = {"<f8": np.dtype("<f8"), "<i8": np.dtype("<i8")}


class ArchiveError(ValueError):
    pass


class CorruptArchiveError(ArchiveError):
    """The file is not a readable archive (empty, truncated, or mangled)."""


class UnsupportedVersionError(ArchiveError):
    """The archive declares a format version this build cannot read."""


def save(bundle, path: str | Path) -> None:
    """Atomically write a fitted pipeline to path."""
    meta, arrays = _serialize(bundle)
    manifest = []
    payload = bytearray()
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        dtype = "<i8" if arr.dtype.kind in "iu" else "<f8"
        raw = arr.astype(_DTYPES[dtype]).tobytes()
        manifest.append(
            {"name": name, "shape": list(arr.shape), "dtype": dtype,
             "offset": len(payload), "nbytes": len(raw)}
        )
        payload.extend(raw)
    header = {
        "format_version": FORMAT_VERSION,
        "created": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "kind": meta["kind"],
        "meta": meta,
        "arrays": manifest,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
            fh.write(b"\n")
            fh.write(bytes(payload))
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def load(path: str | Path):
    """Read an archive back into a ready-to-predict pipeline."""
    data = Path(path).read_bytes()
    newline = data.find(b"\n")
    if newline < 0:
        raise CorruptArchiveError(f"{path}: no header line found")
    try:
        header = json.loads(data[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptArchiveError(f"{path}: unreadable header ({exc})") from exc
    if not isinstance(header, dict) or not isinstance(header.get("format_version"), int):
        raise CorruptArchiveError(f"{path}: header lacks a format_version")
    version = header["format_version"]
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"{path}: format_version {version} is not supported (expected {FORMAT_VERSION})"
        )
    payload = data[newline + 1:]
    arrays = {}
    for entry in header["arrays"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(payload):
            raise CorruptArchiveError(f"{path}: payload truncated at array {entry['name']!r}")
        arr = np.frombuffer(payload[start:start + nbytes], dtype=_DTYPES[entry["dtype"]])
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return _deserialize(header["meta"], arrays)


# --- serialization of the individual pipeline flavors ---

def _serialize(bundle):
    if isinstance(bundle, pipeline_mod.ClassicPipeline):
        return _serialize_classic(bundle)
    if isinstance(bundle, pipeline_mod.MemNetPipeline):
        return _serialize_memnet(bundle)
    raise TypeError(f"cannot archive object of type {type(bundle).__name__}")


def _deserialize(meta, arrays):
    if meta["pipeline"] == "classic":
        return _deserialize_classic(meta, arrays)
    if meta["pipeline"] == "memnet":
        return _deserialize_memnet(meta, arrays)
    raise CorruptArchiveError(f"unknown pipeline flavor {meta.get('pipeline')!r}")


def _trees_to_arrays(trees: list[Tree], prefix: str, arrays: dict) -> list[int]:
    counts = [t.n_nodes for t in trees]
    arrays[f"{prefix}_feature"] = np.concatenate([t.feature for t in trees])
    arrays[f"{prefix}_threshold"] = np.concatenate([t.threshold for t in trees])
    arrays[f"{prefix}_left"] = np.concatenate([t.left for t in trees])
    arrays[f"{prefix}_right"] = np.concatenate([t.right for t in trees])
    arrays[f"{prefix}_value"] = np.concatenate([t.value for t in trees], axis=0)
    return counts


def _trees_from_arrays(prefix: str, arrays: dict, counts: list[int]) -> list[Tree]:
    trees = []
    start = 0
    for count in counts:
        end = start + count
        trees.append(
            Tree(
                feature=arrays[f"{prefix}_feature"][start:end],
                threshold=arrays[f"{prefix}_threshold"][start:end],
                left=arrays[f"{prefix}_left"][start:end],
                right=arrays[f"{prefix}_right"][start:end],
                value=arrays[f"{prefix}_value"][start:end],
            )
        )
        start = end
    return trees


def _vocab_tokens(vocab: Vocabulary) -> list[str]:
    return list(vocab.id_to_token[1:])


def _vocab_from_tokens(tokens: list[str]) -> Vocabulary:
    return Vocabulary(
        token_to_id={t: i + 1 for i, t in enumerate(tokens)},
        id_to_token=("",) + tuple(tokens),
    )


def _serialize_classic(pipe):
    if pipe.model is None:
        raise ValueError("cannot archive an unfitted pipeline")
    cfg = pipe.config
    model = pipe.model
    meta = {
        "pipeline": "classic",
        "kind": model.kind,
        "features": cfg.features,
        "seed": cfg.seed,
        "min_freq": cfg.min_freq,
        "vocab_tokens": _vocab_tokens(pipe.vocab),
        "dim": model.dim,
        "hyperparams": _hyperparams_dict(cfg),
    }
    arrays: dict[str, np.ndarray] = {}
    if pipe.aspect_ids is not None:
        ordered = sorted(pipe.aspect_ids.phrase_to_id, key=pipe.aspect_ids.phrase_to_id.get)
        meta["aspect_phrases"] = ordered
        meta["max_len"] = pipe.max_len
    if pipe.tfidf is not None:
        meta["tfidf_n_docs"] = pipe.tfidf.n_docs
        arrays["tfidf_idf"] = pipe.tfidf.idf
    if isinstance(model, classic.NaiveBayesModel):
        meta["nb_alpha"] = model.alpha
        arrays["class_log_prior"] = model.class_log_prior
        arrays["feature_log_prob"] = model.feature_log_prob
    elif isinstance(model, classic.DecisionTreeModel):
        meta["tree_nodes"] = _trees_to_arrays([model.tree], "tree", arrays)
    elif isinstance(model, classic.ForestModel):
        meta["tree_nodes"] = _trees_to_arrays(model.trees, "tree", arrays)
    elif isinstance(model, classic.SvmModel):
        arrays["svm_weights"] = model.weights
        arrays["svm_bias"] = model.bias
    elif isinstance(model, classic.BoostModel):
        flat = [t for round_trees in model.trees for t in round_trees]
        meta["tree_nodes"] = _trees_to_arrays(flat, "tree", arrays)
        meta["boost_rounds"] = len(model.trees)
        meta["boost_learning_rate"] = model.learning_rate
    return meta, arrays


def _deserialize_classic(meta, arrays):
    kind = meta["kind"]
    cfg = pipeline_mod.PipelineConfig(
        model=kind, features=meta["features"], seed=meta["seed"], min_freq=meta["min_freq"]
    )
    pipe = pipeline_mod.ClassicPipeline(cfg)
    pipe.vocab = _vocab_from_tokens(meta["vocab_tokens"])
    if "aspect_phrases" in meta:
        pipe.aspect_ids = AspectIdMap(
            phrase_to_id={p: i + 1 for i, p in enumerate(meta["aspect_phrases"])}
        )
        pipe.max_len = meta["max_len"]
    if "tfidf_n_docs" in meta:
        pipe.tfidf = TfIdfModel(
            vocab=pipe.vocab, idf=arrays["tfidf_idf"], n_docs=meta["tfidf_n_docs"]
        )
    dim = meta["dim"]
    if kind == "nb":
        model = classic.NaiveBayesModel(
            alpha=meta["nb_alpha"],
            class_log_prior=arrays["class_log_prior"],
            feature_log_prob=arrays["feature_log_prob"],
        )
    elif kind == "dtree":
        model = classic.DecisionTreeModel(
            tree=_trees_from_arrays("tree", arrays, meta["tree_nodes"])[0], dim=dim
        )
    elif kind in ("rforest", "etrees"):
        model = classic.ForestModel(
            kind_tag=kind, trees=_trees_from_arrays("tree", arrays, meta["tree_nodes"]), dim=dim
        )
    elif kind == "svm":
        model = classic.SvmModel(weights=arrays["svm_weights"], bias=arrays["svm_bias"])
    elif kind == "gboost":
        flat = _trees_from_arrays("tree", arrays, meta["tree_nodes"])
        rounds = meta["boost_rounds"]
        per_round = len(flat) // rounds if rounds else 0
        model = classic.BoostModel(
            trees=[flat[i * per_round:(i + 1) * per_round] for i in range(rounds)],
            learning_rate=meta["boost_learning_rate"],
            dim=dim,
        )
    else:
        raise CorruptArchiveError(f"unknown classic model kind {kind!r}")
    pipe.model = model
    return pipe


def _serialize_memnet(pipe):
    if pipe.params is None:
        raise ValueError("cannot archive an unfitted pipeline")
    cfg = pipe.config
    params = pipe.params
    meta = {
        "pipeline": "memnet",
        "kind": "memnet",
        "features": "memnet",
        "seed": cfg.seed,
        "min_freq": cfg.min_freq,
        "vocab_tokens": _vocab_tokens(pipe.vocab),
        "stopwords": sorted(pipe.stopwords),
        "hops": params.hops,
        "dim": params.dim,
        "trainable_embeddings": params.trainable_embeddings,
        "hyperparams": dataclasses.asdict(cfg.memnet),
    }
    arrays = {
        "w_att": params.w_att, "b_att": params.b_att,
        "w_lin": params.w_lin, "b_lin": params.b_lin,
        "w_s": params.w_s, "b_s": params.b_s,
        "embeddings": params.embeddings.matrix,
    }
    return meta, arrays


def _deserialize_memnet(meta, arrays):
    cfg = pipeline_mod.PipelineConfig(
        model="memnet", features="memnet", seed=meta["seed"], min_freq=meta["min_freq"],
        memnet=memnet.MemNetHyperparams(**meta["hyperparams"]),
    )
    pipe = pipeline_mod.MemNetPipeline(cfg)
    pipe.stopwords = set(meta["stopwords"])
    pipe.vocab = _vocab_from_tokens(meta["vocab_tokens"])
    table = memnet.EmbeddingTable(dim=meta["dim"], matrix=arrays["embeddings"])
    pipe.params = memnet.MemNetParams(
        w_att=arrays["w_att"], b_att=arrays["b_att"],
        w_lin=arrays["w_lin"], b_lin=arrays["b_lin"],
        w_s=arrays["w_s"], b_s=arrays["b_s"],
        hops=meta["hops"], embeddings=table,
        trainable_embeddings=meta["trainable_embeddings"],
    )
    return pipe


def _hyperparams_dict(cfg) -> dict:
    out = {"nb_alpha": cfg.nb_alpha}
    for name in ("tree", "svm", "forest", "gboost"):
        hp = getattr(cfg, name)
        if hp is not None:
            out[name] = dataclasses.asdict(hp)
    return out
