"""Synthetic inputs with controlled spectra for checks, tests, and demos.

numpy's QR is used only to manufacture orthogonal factors for inputs; the
transforms under test never see it.
"""

from __future__ import annotations

import numpy as np

from .dense import Matrix


def random_orthogonal(rng: np.random.Generator, n: int) -> Matrix:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    # Fix the sign convention so the factor is a deterministic function of
    # the gaussian draw.
    return q * np.sign(np.diag(r))


def spectrum_matrix(
    rng: np.random.Generator, rows: int, cols: int, cond: float
) -> Matrix:
    """Random rows x cols matrix with condition number exactly `cond`.

    Largest singular value is 1, smallest 1/cond, interior values drawn
    log-uniformly between them.
    """
    if cond < 1:
        raise ValueError(f"cond must be >= 1, got {cond}")
    k = min(rows, cols)
    sigma = np.ones(k)
    if k >= 2:
        sigma[-1] = 1.0 / cond
    if k > 2:
        interior = np.exp(rng.uniform(np.log(1.0 / cond), 0.0, size=k - 2))
        sigma[1:-1] = np.sort(interior)[::-1]
    u = random_orthogonal(rng, rows)[:, :k]
    v = random_orthogonal(rng, cols)[:, :k]
    return (u * sigma) @ v.T


def random_spd(rng: np.random.Generator, n: int, cond: float) -> Matrix:
    """Symmetric positive definite with eigenvalues spanning [1/cond, 1]."""
    lam = np.ones(n)
    if n >= 2:
        lam[-1] = 1.0 / cond
    if n > 2:
        lam[1:-1] = np.exp(rng.uniform(np.log(1.0 / cond), 0.0, size=n - 2))
    q = random_orthogonal(rng, n)
    x = (q * lam) @ q.T
    return 0.5 * (x + x.T)
