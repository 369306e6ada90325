"""Eigendecomposition, low-rank factors and closed-form ID/OOD representations."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .adjacency import degree_matrix, normalize

RESIDUAL_TOL = 1e-8
DEGENERATE_TOL = 1e-10
SIGMA_FLOOR = 1e-12


class DegenerateCutWarning(UserWarning):
    """The k-th and (k+1)-th eigenvalues coincide, so the top-k subspace is not unique."""


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenvalues in descending order with matching orthonormal columns."""

    values: np.ndarray
    vectors: np.ndarray

    def top(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return self.values[:k], self.vectors[:, :k]


@dataclass(frozen=True, eq=False)
class Embeddings:
    Z: np.ndarray
    Z_ood: np.ndarray
    k: int
    eig: EigenSystem
    Atilde: np.ndarray


def _fix_signs(V: np.ndarray) -> np.ndarray:
    mags = np.abs(V)
    for j in range(V.shape[1]):
        # first index within rounding of the column max
        i = int(np.flatnonzero(mags[:, j] >= mags[:, j].max() - 1e-12)[0])
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V


def eigendecompose(Atilde: np.ndarray) -> EigenSystem:
    """Full symmetric eigensystem with a deterministic sign convention.

    Each eigenvector's largest-magnitude entry is made positive, the lowest
    index winning ties.
    """
    A = np.asarray(Atilde, dtype=float)
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    if np.abs(A - A.T).max(initial=0.0) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    w, V = np.linalg.eigh(A)
    order = np.argsort(-w, kind="stable")
    w, V = w[order], _fix_signs(V[:, order].copy())
    resid = float(np.abs(A @ V - V * w).max(initial=0.0))
    if resid > RESIDUAL_TOL * scale:
        raise np.linalg.LinAlgError(f"eigensolver did not converge (residual {resid:.3g})")
    return EigenSystem(values=w, vectors=V)


def _check_k(eig: EigenSystem, k: int) -> None:
    if not 1 <= k <= eig.values.size:
        raise ValueError(f"k={k} outside [1, {eig.values.size}]")


def top_k_factor(eig: EigenSystem, k: int) -> np.ndarray:
    """``F_k = V_k Sigma_k^{1/2}``, the best rank-k PSD factor of the decomposed matrix.

    Emits :class:`DegenerateCutWarning` when lambda_k and lambda_{k+1} are
    within 1e-10 of each other.
    """
    _check_k(eig, k)
    lam, V = eig.top(k)
    if lam[-1] <= 0:
        raise ValueError(f"top-k eigenvalue not positive (lambda_k={lam[-1]:.3g})")
    if k < eig.values.size and abs(eig.values[k - 1] - eig.values[k]) < DEGENERATE_TOL:
        warnings.warn(
            f"degenerate cut: lambda_{k} and lambda_{k + 1} coincide", DegenerateCutWarning, stacklevel=2
        )
    return V * np.sqrt(lam)


def _inv_sqrt_sigma(eig: EigenSystem, k: int) -> np.ndarray:
    _check_k(eig, k)
    lam = eig.values[:k]
    if lam[-1] <= SIGMA_FLOOR * eig.values[0]:
        raise ValueError(f"ill-conditioned Sigma_k inverse (lambda_k={lam[-1]:.3g})")
    return 1.0 / np.sqrt(lam)


def id_embedding(eig: EigenSystem, d: np.ndarray | None, k: int) -> np.ndarray:
    """Rows of ``D^{-1/2} V_k Sigma_k^{1/2}``; ``d=None`` drops the degree factor."""
    F = top_k_factor(eig, k)
    if d is None:
        return F
    return F / np.sqrt(np.asarray(d, dtype=float))[:, None]


def ood_embedding_closed_form(
    A_oi: np.ndarray, eig: EigenSystem, d_ood: np.ndarray | None, k: int
) -> np.ndarray:
    """Out-of-sample representations ``D_ood^{-1/2} A_oi V_k Sigma_k^{-1/2}``."""
    inv = _inv_sqrt_sigma(eig, k)
    Z = (np.asarray(A_oi, dtype=float) @ eig.vectors[:, :k]) * inv
    if d_ood is None:
        return Z
    d_ood = np.asarray(d_ood, dtype=float)
    if (d_ood <= 0).any():
        raise ValueError("OOD degrees must be positive")
    return Z / np.sqrt(d_ood)[:, None]


def ood_embedding_least_squares(A_oi: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Solve ``min ||A_oi - F_ood F^T||_F`` for ``F_ood`` by orthogonal factorization."""
    F = np.asarray(F, dtype=float)
    if np.linalg.matrix_rank(F) < F.shape[1]:
        raise ValueError("factor is rank deficient")
    X, *_ = np.linalg.lstsq(F, np.asarray(A_oi, dtype=float).T, rcond=None)
    return X.T


def spectral_gap_tau(eig: EigenSystem, k: int) -> float:
    """``lambda_k / lambda_{k+1}``."""
    if not 1 <= k < eig.values.size:
        raise ValueError(f"k={k} leaves no lambda_(k+1)")
    nxt = eig.values[k]
    if nxt <= 0:
        raise ValueError(f"gap undefined: nonpositive lambda_{k + 1} ({nxt:.3g})")
    return float(eig.values[k - 1] / nxt)


def max_embedding_norm_r(Z: np.ndarray) -> float:
    Z = np.asarray(Z, dtype=float)
    if Z.size == 0:
        raise ValueError("empty representation matrix")
    return float(np.sqrt((Z**2).sum(axis=1)).max())


def embed(A: np.ndarray, A_oi: np.ndarray, k: int, with_degrees: bool = True) -> Embeddings:
    """ID and OOD representations from a raw ID adjacency and an OOD-ID matrix.

    ``A`` is degree-normalized here; ``A_oi`` is used as given. With
    ``with_degrees=False`` both ``D^{-1/2}`` and ``D_ood^{-1/2}`` are dropped.
    """
    d = degree_matrix(A)
    Atilde = normalize(A, d)
    eig = eigendecompose(Atilde)
    if with_degrees:
        Z = id_embedding(eig, d, k)
        Z_ood = ood_embedding_closed_form(A_oi, eig, degree_matrix(A_oi), k)
    else:
        Z = id_embedding(eig, None, k)
        Z_ood = ood_embedding_closed_form(A_oi, eig, None, k)
    return Embeddings(Z=Z, Z_ood=Z_ood, k=k, eig=eig, Atilde=Atilde)
