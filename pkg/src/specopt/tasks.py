"""Built-in training tasks with hand-derived gradients.

Both tasks expose the same small surface the harness drives:

    params = task.init_params(rng)
    loss, grads = task.loss_and_grads(params, indices)
    task.train_loss(params), task.eval_loss(params)
    task.num_train

Parameters are dicts of numpy arrays. Weight matrices are stored with
fan_out as the row count and fan_in as the column count
(output-features by input-features, applied as x @ W.T); that fixed
orientation is what the optimizer's fan scaling reads.

Gradients are derived and coded by hand, no autograd anywhere; the test
suite checks every parameter against central finite differences.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .errors import ConfigError

VOCAB_SIZE = 96  # newline plus printable ASCII 32..126

_GELU_C = float(np.sqrt(2.0 / np.pi))
_GELU_K = 0.044715


def _gelu(x: np.ndarray) -> np.ndarray:
    inner = _GELU_C * (x + _GELU_K * x ** 3)
    return 0.5 * x * (1.0 + np.tanh(inner))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    inner = _GELU_C * (x + _GELU_K * x ** 3)
    th = np.tanh(inner)
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * _GELU_C * (1.0 + 3.0 * _GELU_K * x ** 2)


def encode_text(text: str) -> np.ndarray:
    """Map text onto the 96-symbol vocabulary.

    Newline is symbol 0, printable ASCII 32..126 are symbols 1..95, and
    anything else collapses to the space symbol.
    """
    codes = np.frombuffer(text.encode("utf-8", errors="replace"), dtype=np.uint8)
    out = np.ones(codes.shape, dtype=np.int64)  # default: space
    printable = (codes >= 32) & (codes <= 126)
    out[printable] = codes[printable].astype(np.int64) - 31
    out[codes == 10] = 0
    return out


def builtin_corpus() -> str:
    return resources.files("specopt.data").joinpath("corpus.txt").read_text(encoding="utf-8")


def _rng(seed: int, stream: int) -> np.random.Generator:
    # One documented generator everywhere: PCG64 seeded through SeedSequence
    # with a (seed, stream) pair, deterministic across platforms.
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))


class MatrixRegression:
    """Planted bilinear least squares: minimize 0.5 ||A W B - C||_F^2 / rows.

    A and B are fixed random maps, C is generated from a planted W plus
    small noise, and W (32 x 24 by default) is the single, matrix-shaped
    parameter. Rows of (A, C) are data points; the last ``eval_rows`` of
    them form the held-out split. The closed-form least-squares optimum
    exists and is what long runs should approach.
    """

    name = "matreg"

    def __init__(
        self,
        seed: int,
        data_rows: int = 48,
        w_rows: int = 32,
        w_cols: int = 24,
        out_cols: int = 16,
        eval_rows: int = 8,
        noise: float = 0.01,
    ):
        if eval_rows >= data_rows:
            raise ConfigError("eval_rows must leave at least one training row")
        rng = _rng(seed, 0)
        self.a_map = rng.standard_normal((data_rows, w_rows)) / np.sqrt(w_rows)
        self.b_map = rng.standard_normal((w_cols, out_cols)) / np.sqrt(w_cols)
        w_star = rng.standard_normal((w_rows, w_cols))
        self.targets = self.a_map @ w_star @ self.b_map
        self.targets += noise * rng.standard_normal(self.targets.shape)
        self.num_train = data_rows - eval_rows
        self._shape = (w_rows, w_cols)

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        del rng  # the zero start is part of the task definition
        return {"W": np.zeros(self._shape)}

    def _loss_grad_rows(self, params, rows):
        w = params["W"]
        a = self.a_map[rows]
        c = self.targets[rows]
        resid = a @ w @ self.b_map - c
        loss = 0.5 * float(np.sum(resid * resid)) / len(rows)
        grad = (a.T @ resid @ self.b_map.T) / len(rows)
        return loss, {"W": grad}

    def loss_and_grads(self, params, indices):
        return self._loss_grad_rows(params, np.asarray(indices))

    def train_loss(self, params) -> float:
        return self._loss_grad_rows(params, np.arange(self.num_train))[0]

    def eval_loss(self, params) -> float:
        rows = np.arange(self.num_train, self.targets.shape[0])
        return self._loss_grad_rows(params, rows)[0]


class CharMlp:
    """One-hidden-layer MLP next-character model over the 96-symbol vocab.

    Context window of ``context`` characters, each embedded into
    ``emb_dim`` dimensions and concatenated; one GELU hidden layer of width
    ``hidden``; softmax cross-entropy in nats. Positions are shuffled once
    per task seed and split 90/10 into train and held-out sets.
    """

    name = "charlm"

    def __init__(
        self,
        seed: int,
        corpus_text: str | None = None,
        context: int = 8,
        emb_dim: int = 16,
        hidden: int = 128,
        holdout_fraction: float = 0.1,
    ):
        text = corpus_text if corpus_text is not None else builtin_corpus()
        self.data = encode_text(text)
        self.context = context
        self.emb_dim = emb_dim
        self.hidden = hidden
        total = self.data.shape[0] - context
        if total < 20:
            raise ConfigError(f"corpus too short: only {total} usable positions")
        positions = _rng(seed, 0).permutation(total)
        n_eval = max(1, int(round(total * holdout_fraction)))
        self._eval_positions = positions[:n_eval]
        self._train_positions = positions[n_eval:]
        self.num_train = self._train_positions.shape[0]

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        feat = self.context * self.emb_dim
        return {
            "embed": 0.1 * rng.standard_normal((VOCAB_SIZE, self.emb_dim)),
            "W1": rng.standard_normal((self.hidden, feat)) / np.sqrt(feat),
            "b1": np.zeros(self.hidden),
            "W2": rng.standard_normal((VOCAB_SIZE, self.hidden)) / np.sqrt(self.hidden),
            "b2": np.zeros(VOCAB_SIZE),
        }

    def _batch(self, positions):
        ctx = self.data[positions[:, None] + np.arange(self.context)]
        tgt = self.data[positions + self.context]
        return ctx, tgt

    def _forward(self, params, ctx):
        batch = ctx.shape[0]
        emb = params["embed"][ctx]                      # (B, T, D)
        x = emb.reshape(batch, -1)                      # (B, T*D)
        z1 = x @ params["W1"].T + params["b1"]
        h = _gelu(z1)
        z2 = h @ params["W2"].T + params["b2"]
        zmax = z2.max(axis=1, keepdims=True)
        shifted = z2 - zmax
        logsum = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        logp = shifted - logsum
        return x, z1, h, logp

    def _loss(self, params, positions) -> float:
        ctx, tgt = self._batch(positions)
        logp = self._forward(params, ctx)[3]
        return -float(logp[np.arange(len(tgt)), tgt].mean())

    def loss_and_grads(self, params, indices):
        positions = self._train_positions[np.asarray(indices)]
        ctx, tgt = self._batch(positions)
        batch = ctx.shape[0]
        x, z1, h, logp = self._forward(params, ctx)
        loss = -float(logp[np.arange(batch), tgt].mean())

        dz2 = np.exp(logp)
        dz2[np.arange(batch), tgt] -= 1.0
        dz2 /= batch
        grad_w2 = dz2.T @ h
        grad_b2 = dz2.sum(axis=0)
        dh = dz2 @ params["W2"]
        dz1 = dh * _gelu_grad(z1)
        grad_w1 = dz1.T @ x
        grad_b1 = dz1.sum(axis=0)
        dx = dz1 @ params["W1"]
        grad_embed = np.zeros_like(params["embed"])
        np.add.at(grad_embed, ctx, dx.reshape(batch, self.context, self.emb_dim))
        return loss, {
            "embed": grad_embed,
            "W1": grad_w1,
            "b1": grad_b1,
            "W2": grad_w2,
            "b2": grad_b2,
        }

    def train_loss(self, params) -> float:
        return self._loss(params, self._train_positions)

    def eval_loss(self, params) -> float:
        return self._loss(params, self._eval_positions)


def make_task(name: str, seed: int, corpus_path: str | None = None):
    """Build a task by its config token."""
    if name == MatrixRegression.name:
        return MatrixRegression(seed)
    if name == CharMlp.name:
        text = None
        if corpus_path is not None:
            with open(corpus_path, "r", encoding="utf-8") as fh:
                text = fh.read()
        return CharMlp(seed, corpus_text=text)
    raise ConfigError(f"unknown task {name!r}; valid tasks: matreg, charlm")
