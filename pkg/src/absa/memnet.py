"""Deep memory network: K attention hops over location-weighted context memories.

Architecture, for context embeddings e(c_i) and location weights v_i:

    m_i = v_i * e(c_i)                                  (memory, built once)
    x_0 = mean of aspect token embeddings
    hop k:  g_i    = tanh(w_att . [m_i ; x_{k-1}] + b_att)
            alpha  = softmax(g)            over real contexts only
            o      = sum_i alpha_i m_i     (o = 0 when there is no context)
            x_k    = o + W_lin x_{k-1} + b_lin
    probabilities  = softmax(W_s x_K + b_s)

The attention and linear weights are shared across hops. Training is plain
per-instance SGD on cross-entropy with hand-derived gradients; grad_check
verifies them against central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .encode import location_encode
from .numerics import softmax
from .textproc import TokenizedInstance, Vocabulary

LABELS = (-1, 0, 1)
N_CLASSES = 3


class EmbeddingParseError(ValueError):
    """An embedding file line does not follow the token + d floats layout."""


class TrainingDivergedError(RuntimeError):
    """Training encountered a non-finite loss."""


@dataclass
class EmbeddingTable:
    """(vocab size + 1) x dim matrix; row 0 is the all-zero padding row."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.matrix.shape[1] != self.dim:
            raise ValueError(f"matrix width {self.matrix.shape[1]} != dim {self.dim}")
        if not np.isfinite(self.matrix).all():
            raise ValueError("embedding matrix contains non-finite entries")


def random_embeddings(vocab_size: int, dim: int, seed: int) -> EmbeddingTable:
    """Uniform [-0.25, 0.25] rows for every token; row 0 zeroed."""
    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-0.25, 0.25, size=(vocab_size + 1, dim))
    matrix[0] = 0.0
    return EmbeddingTable(dim=dim, matrix=matrix)


def load_embeddings(path: str | Path, vocab: Vocabulary, dim: int, seed: int) -> EmbeddingTable:
    """Read GloVe-style text embeddings; vocabulary tokens missing from the
    file keep their seeded uniform [-0.25, 0.25] initialization."""
    table = random_embeddings(vocab.size, dim, seed)
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            if len(parts) - 1 != dim:
                raise EmbeddingParseError(
                    f"line {lineno}: expected {dim} floats after the token, got {len(parts) - 1}"
                )
            tid = vocab.id(parts[0])
            if tid:
                try:
                    table.matrix[tid] = [float(p) for p in parts[1:]]
                except ValueError as exc:
                    raise EmbeddingParseError(f"line {lineno}: non-numeric value") from exc
    table.matrix[0] = 0.0
    return table


@dataclass
class MemNetParams:
    """All trainable tensors. The same attention and linear weights serve every hop."""

    w_att: np.ndarray  # (2d,)
    b_att: np.ndarray  # (1,)
    w_lin: np.ndarray  # (d, d)
    b_lin: np.ndarray  # (d,)
    w_s: np.ndarray    # (3, d)
    b_s: np.ndarray    # (3,)
    hops: int
    embeddings: EmbeddingTable
    trainable_embeddings: bool = False

    @property
    def dim(self) -> int:
        return self.embeddings.dim

    def trainable_arrays(self) -> list[tuple[str, np.ndarray]]:
        arrays = [
            ("w_att", self.w_att), ("b_att", self.b_att),
            ("w_lin", self.w_lin), ("b_lin", self.b_lin),
            ("w_s", self.w_s), ("b_s", self.b_s),
        ]
        if self.trainable_embeddings:
            arrays.append(("embeddings", self.embeddings.matrix))
        return arrays


def init_params(
    embeddings: EmbeddingTable, hops: int, seed: int, trainable_embeddings: bool = False
) -> MemNetParams:
    """Uniform [-0.01, 0.01] initialization of every dense parameter."""
    if hops < 1:
        raise ValueError(f"hops must be >= 1, got {hops}")
    d = embeddings.dim
    rng = np.random.default_rng(seed)
    u = lambda *shape: rng.uniform(-0.01, 0.01, size=shape)
    return MemNetParams(
        w_att=u(2 * d), b_att=u(1), w_lin=u(d, d), b_lin=u(d),
        w_s=u(N_CLASSES, d), b_s=u(N_CLASSES),
        hops=hops, embeddings=embeddings, trainable_embeddings=trainable_embeddings,
    )


@dataclass
class MemNetInput:
    """Word-id view of one instance: context ids (aspect excluded), aspect ids,
    the aspect's collapsed position, and each context word's distance to it."""

    context_ids: np.ndarray    # (m,) int64; id 0 marks padding / unknown words
    aspect_ids: np.ndarray     # int64, ids of the aspect tokens
    aspect_position: int       # collapsed position of the aspect
    locations: np.ndarray      # (m,) int64, distances >= 1

    def __post_init__(self):
        self.context_ids = np.asarray(self.context_ids, dtype=np.int64)
        self.aspect_ids = np.asarray(self.aspect_ids, dtype=np.int64)
        self.locations = np.asarray(self.locations, dtype=np.int64)
        if self.context_ids.shape != self.locations.shape:
            raise ValueError("context_ids and locations must have equal length")

    @property
    def n(self) -> int:
        """Collapsed sentence length: m context positions plus the aspect."""
        return len(self.context_ids) + 1


def build_input(ti: TokenizedInstance, vocab: Vocabulary) -> MemNetInput:
    """Map a tokenized instance to word ids; out-of-vocabulary tokens become id 0."""
    start, end = ti.aspect_token_span
    context_tokens = ti.tokens[:start] + ti.tokens[end:]
    return MemNetInput(
        context_ids=np.array([vocab.id(t) for t in context_tokens], dtype=np.int64),
        aspect_ids=np.array([vocab.id(t) for t in ti.aspect_tokens], dtype=np.int64),
        aspect_position=start,
        locations=np.array(location_encode(ti), dtype=np.int64),
    )


def location_weights(locations: Sequence[int], n: int) -> np.ndarray:
    """v_i = 1 - l_i / n, strictly inside (0, 1)."""
    l = np.asarray(locations, dtype=float)
    if l.size and (l.min() < 1 or l.max() >= n):
        raise ValueError(f"locations must satisfy 1 <= l < n = {n}")
    return 1.0 - l / n


@dataclass
class ForwardTrace:
    memory: np.ndarray          # (m', d) kept memories
    kept_ids: np.ndarray        # (m',) context ids that entered attention
    kept_weights: np.ndarray    # (m',) their location weights
    states: list[np.ndarray]    # x_0 .. x_K
    scores: list[np.ndarray]    # tanh attention scores per hop
    alphas: list[np.ndarray]    # attention distributions per hop
    probs: np.ndarray           # (3,)


def forward(params: MemNetParams, inp: MemNetInput) -> tuple[np.ndarray, ForwardTrace]:
    """Class probabilities plus everything backward needs."""
    E = params.embeddings.matrix
    d = params.dim
    v_all = location_weights(inp.locations, inp.n)
    keep = inp.context_ids != 0  # padding and unknown words never enter attention
    ids = inp.context_ids[keep]
    v = v_all[keep]
    M = v[:, None] * E[ids]
    aspect_ids = inp.aspect_ids[inp.aspect_ids != 0]
    x = E[aspect_ids].mean(axis=0) if aspect_ids.size else np.zeros(d)

    wa_m, wa_x = params.w_att[:d], params.w_att[d:]
    states = [x]
    scores: list[np.ndarray] = []
    alphas: list[np.ndarray] = []
    for _ in range(params.hops):
        if len(M):
            g = np.tanh(M @ wa_m + wa_x @ x + params.b_att[0])
            alpha = softmax(g)
            o = alpha @ M
        else:
            g = np.zeros(0)
            alpha = np.zeros(0)
            o = np.zeros(d)
        x = o + params.w_lin @ x + params.b_lin
        states.append(x)
        scores.append(g)
        alphas.append(alpha)
    probs = softmax(params.w_s @ x + params.b_s)
    trace = ForwardTrace(
        memory=M, kept_ids=ids, kept_weights=v,
        states=states, scores=scores, alphas=alphas, probs=probs,
    )
    return probs, trace


@dataclass
class MemNetGrads:
    w_att: np.ndarray
    b_att: np.ndarray
    w_lin: np.ndarray
    b_lin: np.ndarray
    w_s: np.ndarray
    b_s: np.ndarray
    embeddings: np.ndarray | None = None


def loss_only(params: MemNetParams, inp: MemNetInput, gold: int) -> float:
    probs, _ = forward(params, inp)
    return -math.log(probs[gold + 1])


def loss_and_gradients(
    params: MemNetParams, inp: MemNetInput, gold: int
) -> tuple[float, MemNetGrads]:
    """Cross-entropy loss and full backprop through all hops.

    Shared weights accumulate their gradients across hops; embedding rows get
    gradients only when trainable_embeddings is set.
    """
    if gold not in LABELS:
        raise ValueError(f"gold label {gold!r} not in {LABELS}")
    probs, tr = forward(params, inp)
    loss = -math.log(probs[gold + 1])

    d = params.dim
    wa_m, wa_x = params.w_att[:d], params.w_att[d:]
    M = tr.memory
    has_context = len(M) > 0
    want_emb = params.trainable_embeddings

    ds = probs.copy()
    ds[gold + 1] -= 1.0
    g_w_s = np.outer(ds, tr.states[-1])
    g_b_s = ds.copy()
    dx = params.w_s.T @ ds

    g_w_att = np.zeros(2 * d)
    g_b_att = np.zeros(1)
    g_w_lin = np.zeros((d, d))
    g_b_lin = np.zeros(d)
    dM = np.zeros_like(M) if (want_emb and has_context) else None

    for k in reversed(range(params.hops)):
        x_prev = tr.states[k]
        g_w_lin += np.outer(dx, x_prev)
        g_b_lin += dx
        dx_prev = params.w_lin.T @ dx
        if has_context:
            alpha = tr.alphas[k]
            g = tr.scores[k]
            do = dx  # x_k = o + linear; do/dx_k is the identity
            dalpha = M @ do
            dg = alpha * (dalpha - alpha @ dalpha)
            dz = (1.0 - g * g) * dg
            z_sum = dz.sum()
            g_w_att[:d] += M.T @ dz
            g_w_att[d:] += z_sum * x_prev
            g_b_att[0] += z_sum
            dx_prev += wa_x * z_sum
            if dM is not None:
                dM += np.outer(alpha, do) + np.outer(dz, wa_m)
        dx = dx_prev

    g_emb = None
    if want_emb:
        g_emb = np.zeros_like(params.embeddings.matrix)
        if dM is not None:
            np.add.at(g_emb, tr.kept_ids, tr.kept_weights[:, None] * dM)
        aspect_ids = inp.aspect_ids[inp.aspect_ids != 0]
        if aspect_ids.size:
            np.add.at(g_emb, aspect_ids, dx[None, :] / aspect_ids.size)
        g_emb[0] = 0.0  # the padding row stays pinned at zero

    return loss, MemNetGrads(
        w_att=g_w_att, b_att=g_b_att, w_lin=g_w_lin, b_lin=g_b_lin,
        w_s=g_w_s, b_s=g_b_s, embeddings=g_emb,
    )


def grad_check(params: MemNetParams, inp: MemNetInput, gold: int, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients."""
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    _, grads = loss_and_gradients(params, inp, gold)
    worst = 0.0
    for name, arr in params.trainable_arrays():
        analytic = getattr(grads, name)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            orig = arr[ix]
            arr[ix] = orig + eps
            hi = loss_only(params, inp, gold)
            arr[ix] = orig - eps
            lo = loss_only(params, inp, gold)
            arr[ix] = orig
            numeric = (hi - lo) / (2.0 * eps)
            a = float(analytic[ix])
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst


def gradcheck_sweep(
    seed: int,
    dim: int = 8,
    hop_counts: Sequence[int] = (1, 2, 3),
    context_sizes: Sequence[int] = (0, 1, 5),
    eps: float = 1e-5,
) -> float:
    """Worst grad_check result over random instances at every (hops, m, trainable) combo.

    Parameters are drawn uniform [-0.5, 0.5] and embeddings [-0.75, 0.75]:
    large enough that no true gradient entry sits below the finite-difference
    noise floor (about 1e-11 absolute at eps=1e-5 in double precision), small
    enough that tanh does not saturate.
    """
    rng = np.random.default_rng(seed)
    base = random_embeddings(vocab_size=12, dim=dim, seed=seed)
    table = EmbeddingTable(dim=dim, matrix=base.matrix * 3.0)
    worst = 0.0
    for hops in hop_counts:
        for m in context_sizes:
            for trainable in (False, True):
                params = init_params(
                    table, hops=hops, seed=int(rng.integers(0, 2**32)),
                    trainable_embeddings=trainable,
                )
                for name, arr in params.trainable_arrays():
                    if name != "embeddings":
                        arr[...] = rng.uniform(-0.5, 0.5, size=arr.shape)
                inp = MemNetInput(
                    context_ids=rng.integers(1, 13, size=m),
                    aspect_ids=rng.integers(1, 13, size=2),
                    aspect_position=0,
                    locations=rng.integers(1, m + 1, size=m) if m else np.zeros(0, dtype=np.int64),
                )
                gold = int(rng.integers(0, 3)) - 1
                worst = max(worst, grad_check(params, inp, gold, eps=eps))
    return worst


@dataclass
class MemNetHyperparams:
    hops: int = 3
    lr: float = 0.01
    epochs: int = 100
    l2: float = 0.0
    seed: int = 42
    trainable_embeddings: bool = False
    dim: int = 50


def train(
    inputs: Sequence[MemNetInput],
    golds: Sequence[int],
    embeddings: EmbeddingTable,
    hp: MemNetHyperparams,
) -> tuple[MemNetParams, list[float]]:
    """Per-instance SGD; returns the trained parameters and mean loss per epoch."""
    if len(inputs) == 0:
        raise ValueError("cannot train on an empty dataset")
    if len(inputs) != len(golds):
        raise ValueError("inputs and golds must have equal length")
    rng = np.random.default_rng(hp.seed)
    params = init_params(
        embeddings, hops=hp.hops,
        seed=int(rng.integers(0, 2**32)),
        trainable_embeddings=hp.trainable_embeddings,
    )
    history: list[float] = []
    for epoch in range(hp.epochs):
        total = 0.0
        for i in rng.permutation(len(inputs)):
            loss, grads = loss_and_gradients(params, inputs[i], golds[i])
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, instance {i}"
                )
            for name, arr in params.trainable_arrays():
                step = getattr(grads, name)
                if hp.l2 and name != "embeddings":
                    step = step + hp.l2 * arr
                arr -= hp.lr * step
            total += loss
        history.append(total / len(inputs))
    return params, history


def predict_memnet(params: MemNetParams, inp: MemNetInput) -> int:
    """Most probable label; exact ties resolve to the smaller class index."""
    probs, _ = forward(params, inp)
    return LABELS[int(np.argmax(probs))]
