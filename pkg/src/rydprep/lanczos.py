"""Lowest eigenpairs of a real symmetric operator by thick-restart Lanczos.

Every new Krylov vector is orthogonalized twice against the whole basis
(classical Gram-Schmidt, two passes), so the projected matrix stays exactly
symmetric and ghost copies of converged eigenvalues never appear.  On restart
the ``keep`` lowest Ritz vectors and the current residual direction are kept;
the projected matrix then has the usual arrowhead shape, which the next
orthogonalization pass fills in automatically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

log = logging.getLogger(__name__)


class EigensolverError(RuntimeError):
    """Raised when the requested pairs do not converge."""

    def __init__(self, message: str, info: "LanczosInfo"):
        super().__init__(f"{message}; {info.summary()}")
        self.info = info


@dataclass
class LanczosInfo:
    matvecs: int = 0
    restarts: int = 0
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0))
    norm_estimate: float = 0.0

    def summary(self) -> str:
        worst = float(self.residuals.max()) if self.residuals.size else float("nan")
        return (f"{self.matvecs} matvecs, {self.restarts} restarts, "
                f"max residual {worst:.3e}, |H| ~ {self.norm_estimate:.3e}")


def _orthogonalize(V: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h = V @ w
    w = w - V.T @ h
    h2 = V @ w
    w = w - V.T @ h2
    return w, h + h2


def lanczos_lowest(
    matvec: Callable[[np.ndarray], np.ndarray],
    dim: int,
    k: int,
    *,
    tol: float = 1e-10,
    basis_size: Optional[int] = None,
    keep: Optional[int] = None,
    max_restarts: int = 200,
    v0: Optional[np.ndarray] = None,
    seed: int = 20220101,
) -> tuple[np.ndarray, np.ndarray, LanczosInfo]:
    """Lowest ``k`` eigenvalues (ascending) and eigenvectors (columns).

    Convergence: ||A y - theta y|| < tol * |A| for every requested pair, with
    |A| estimated by the largest Ritz value magnitude seen so far.
    """
    if not 1 <= k <= dim:
        raise ValueError(f"need 1 <= k <= dim, got k={k}, dim={dim}")
    m = basis_size or max(2 * k + 30, 60)
    m = min(m, dim)
    keep = keep or min(m - 1, max(k + 10, m // 2))
    keep = max(k, min(keep, m - 1)) if m > k else k
    rng = np.random.default_rng(seed)

    V = np.zeros((m + 1, dim))
    T = np.zeros((m, m))
    v = rng.standard_normal(dim) if v0 is None else np.array(v0, dtype=float)
    V[0] = v / np.linalg.norm(v)
    info = LanczosInfo()
    start = 0
    beta = 0.0

    for restart in range(max_restarts + 1):
        info.restarts = restart
        size = m
        for j in range(start, m):
            w = matvec(V[j])
            info.matvecs += 1
            w, h = _orthogonalize(V[: j + 1], w)
            T[: j + 1, j] = h
            T[j, : j + 1] = h
            beta = np.linalg.norm(w)
            scale = max(np.abs(np.diag(T)[: j + 1]).max(), 1.0)
            if beta <= 1e-13 * scale:
                if j + 1 >= dim:
                    size = j + 1
                    beta = 0.0
                    break
                # invariant subspace: continue with a fresh orthogonal direction
                w, _ = _orthogonalize(V[: j + 1], rng.standard_normal(dim))
                w, _ = _orthogonalize(V[: j + 1], w)
                V[j + 1] = w / np.linalg.norm(w)
                beta = 0.0
                continue
            V[j + 1] = w / beta

        theta, S = np.linalg.eigh(T[:size, :size])
        resid = np.abs(beta * S[size - 1, :])
        info.norm_estimate = max(info.norm_estimate, float(np.abs(theta).max()))
        info.residuals = resid[:k]
        if np.all(resid[:k] < tol * info.norm_estimate):
            vecs = V[:size].T @ S[:, :k]
            vecs /= np.linalg.norm(vecs, axis=0)
            log.debug("lanczos converged: %s", info.summary())
            return theta[:k], vecs, info

        # thick restart with the lowest `keep` Ritz vectors plus the residual direction
        kept = V[:size].T @ S[:, :keep]
        V[:keep] = kept.T
        V[keep] = V[size]
        V[keep + 1:] = 0.0
        T[:] = 0.0
        T[np.arange(keep), np.arange(keep)] = theta[:keep]
        start = keep

    raise EigensolverError(f"no convergence after {max_restarts} restarts", info)
