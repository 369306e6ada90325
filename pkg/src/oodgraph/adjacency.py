"""ID adjacency matrices, degree normalization and class connectors.

Degrees are carried as 1-D arrays holding the diagonal of ``D``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ClassConnectors:
    """Per-class connection strengths: ``q`` is N x c (ID), ``p`` is M x c (OOD)."""

    q: np.ndarray
    p: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.p is not None and self.p.shape[1] != self.q.shape[1]:
            raise ValueError("p and q must have the same number of class columns")
        if (self.q < 0).any() or (self.p is not None and (self.p < 0).any()):
            raise ValueError("connector entries must be nonnegative")

    @property
    def classes(self) -> int:
        return self.q.shape[1]


def _check_nonnegative(M: np.ndarray, what: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if (M < 0).any():
        raise ValueError(f"{what} has negative entries")
    return M


def unlabeled_adjacency(T: np.ndarray) -> np.ndarray:
    """Edge weights ``(1/N) sum_xbar T[x, xbar] T[x', xbar]`` under a uniform population.

    ``T[x, xbar]`` is the probability of augmenting natural point ``xbar`` into ``x``.
    """
    T = _check_nonnegative(T, "T")
    A = T @ T.T / T.shape[1]
    zero = np.flatnonzero(A.sum(axis=1) == 0)
    if zero.size:
        raise ValueError(f"isolated vertex at row {zero[0]}")
    return A


def class_index(labels: np.ndarray, classes: int | None = None) -> list[np.ndarray]:
    """Member indices of each class; every class in ``range(classes)`` must be non-empty."""
    labels = np.asarray(labels)
    c = int(labels.max()) + 1 if classes is None else classes
    members = [np.flatnonzero(labels == i) for i in range(c)]
    for i, idx in enumerate(members):
        if idx.size == 0:
            raise ValueError(f"class {i} is empty")
    if sum(idx.size for idx in members) != labels.size:
        raise ValueError("labels outside range(classes)")
    return members


def class_connectors(
    T: np.ndarray,
    labels: np.ndarray,
    p_matrix: np.ndarray | None = None,
    ood_kernel: np.ndarray | None = None,
    classes: int | None = None,
) -> ClassConnectors:
    """Column ``i`` of ``q`` averages the class-``i`` columns of ``T``.

    ``p`` is ``p_matrix`` when given, otherwise the same average over the
    columns of ``ood_kernel`` (an M x N OOD-to-ID augmentation kernel).
    """
    T = _check_nonnegative(T, "T")
    members = class_index(labels, classes)
    q = np.column_stack([T[:, idx].mean(axis=1) for idx in members])
    if p_matrix is not None:
        p = np.asarray(p_matrix, dtype=float)
    elif ood_kernel is not None:
        K = _check_nonnegative(ood_kernel, "ood_kernel")
        p = np.column_stack([K[:, idx].mean(axis=1) for idx in members])
    else:
        p = None
    return ClassConnectors(q=q, p=p)


def labeled_adjacency(A_u: np.ndarray, q: np.ndarray, phi_u: float, phi_l: float) -> np.ndarray:
    """``phi_u * A_u + phi_l * q q^T`` (the outer-product sum over classes)."""
    if phi_u < 0 or phi_l < 0:
        raise ValueError("phi_u and phi_l must be nonnegative")
    return phi_u * np.asarray(A_u, dtype=float) + phi_l * (q @ q.T)


def labeled_ood_adjacency(
    A_oi_u: np.ndarray, p: np.ndarray, q: np.ndarray, phi_u: float, phi_l: float
) -> np.ndarray:
    """OOD-ID counterpart: ``phi_u * A_oi_u + phi_l * p q^T``."""
    if phi_u < 0 or phi_l < 0:
        raise ValueError("phi_u and phi_l must be nonnegative")
    return phi_u * np.asarray(A_oi_u, dtype=float) + phi_l * (p @ q.T)


def degree_matrix(M: np.ndarray) -> np.ndarray:
    """Row sums of a nonnegative matrix, as the diagonal of ``D``."""
    M = _check_nonnegative(M, "matrix")
    d = M.sum(axis=1)
    zero = np.flatnonzero(d == 0)
    if zero.size:
        raise ValueError(f"dangling node at row {zero[0]}")
    return d


def normalize(A: np.ndarray, d_row: np.ndarray, d_col: np.ndarray | None = None) -> np.ndarray:
    """``D_row^{-1/2} A D_col^{-1/2}``; ``d_col`` defaults to ``d_row``."""
    d_row = np.asarray(d_row, dtype=float)
    d_col = d_row if d_col is None else np.asarray(d_col, dtype=float)
    if (d_row <= 0).any() or (d_col <= 0).any():
        raise ValueError("degrees must be positive")
    return A / np.sqrt(d_row)[:, None] / np.sqrt(d_col)[None, :]


def normalized_adjacency(A: np.ndarray) -> np.ndarray:
    d = degree_matrix(A)
    return normalize(A, d)


def balance_symmetric(A: np.ndarray, tol: float = 1e-13, max_iter: int = 100_000) -> np.ndarray:
    """Symmetric Sinkhorn scaling: returns ``S A S`` with unit row sums, ``S`` diagonal."""
    A = _check_nonnegative(A, "A")
    x = 1.0 / np.sqrt(degree_matrix(A))
    for _ in range(max_iter):
        x = np.sqrt(x / (A @ x))
        B = x[:, None] * A * x[None, :]
        if np.abs(B.sum(axis=1) - 1.0).max() < tol:
            return 0.5 * (B + B.T)
    raise RuntimeError("symmetric balancing did not converge")


@dataclass(frozen=True, eq=False)
class PerturbationFamily:
    """Labeled perturbation of a degree-normalized unlabeled graph.

    ``phi_u * base_A`` must have unit row sums, so the degree of the perturbed
    graph is ``1 + phi_l * sum_i q_i`` to first order.
    """

    base_A: np.ndarray
    base_A_oi: np.ndarray
    connectors: ClassConnectors
    phi_u: float = 1.0

    @classmethod
    def from_unlabeled(
        cls,
        A_u: np.ndarray,
        A_oi_u: np.ndarray,
        connectors: ClassConnectors,
        phi_u: float = 1.0,
    ) -> "PerturbationFamily":
        """Balance ``A_u`` symmetrically so that ``phi_u * base_A`` has unit row sums."""
        if phi_u <= 0:
            raise ValueError("phi_u must be positive")
        base = balance_symmetric(A_u) / phi_u
        return cls(base_A=base, base_A_oi=np.asarray(A_oi_u, dtype=float), connectors=connectors, phi_u=phi_u)


def family_eval(
    fam: PerturbationFamily, phi_l: float, tol: float = 1e-6
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(A(phi_l), A_oi(phi_l), diag D(phi_l))``."""
    if phi_l < 0:
        raise ValueError("phi_l must be nonnegative")
    dev = np.abs(fam.phi_u * fam.base_A.sum(axis=1) - 1.0)
    if dev.max() > tol:
        row = int(dev.argmax())
        raise ValueError(f"base graph not degree-normalized: row {row} deviates by {dev[row]:.3g}")
    q, p = fam.connectors.q, fam.connectors.p
    if p is None:
        raise ValueError("family needs OOD connectors p")
    A = labeled_adjacency(fam.base_A, q, fam.phi_u, phi_l)
    A_oi = labeled_ood_adjacency(fam.base_A_oi, p, q, fam.phi_u, phi_l)
    d = 1.0 + phi_l * q.sum(axis=1)
    return A, A_oi, d
