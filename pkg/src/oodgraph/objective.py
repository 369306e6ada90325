"""Factorization loss and the surrogate contrastive losses as exact expectations.

All expectations run over a finite population with uniform natural-point and
per-class label distributions. ``T[x, xbar]`` is the probability of producing
augmented point ``x`` from natural point ``xbar``; columns must sum to one for
the contrastive/factorization identity to hold, so the contrastive losses
reject kernels that are not column-stochastic.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .adjacency import class_index, labeled_adjacency, normalized_adjacency, unlabeled_adjacency

STOCHASTIC_TOL = 1e-9


class ContrastiveTerms(NamedTuple):
    L1: float
    L2: float
    L3: float
    L4: float
    L5: float


def factorization_loss(Atilde: np.ndarray, F: np.ndarray) -> float:
    """``||Atilde - F F^T||_F^2``."""
    R = np.asarray(Atilde, dtype=float) - F @ F.T
    return float(np.sum(R * R))


def _check_kernel(T: np.ndarray) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    if (T < 0).any():
        raise ValueError("T has negative entries")
    dev = np.abs(T.sum(axis=0) - 1.0)
    if dev.max() > STOCHASTIC_TOL:
        raise ValueError(f"T column {int(dev.argmax())} does not sum to one")
    return T


def contrastive_terms(T: np.ndarray, labels: np.ndarray | None, H: np.ndarray) -> ContrastiveTerms:
    """The five expectation terms; ``labels=None`` leaves L1, L3, L4 at zero.

    L1 pairs two draws from the same class, L2 two augmentations of one natural
    point, and L3-L5 are squared inner products between independent draws from
    the labeled mixture ``Q`` and the unlabeled marginal ``u``.
    """
    T = _check_kernel(T)
    H = np.asarray(H, dtype=float)
    G = H @ H.T
    G2 = G * G
    u = T.mean(axis=1)
    L2 = float(np.einsum("xb,xy,yb->", T, G, T) / T.shape[1])
    L5 = float(u @ G2 @ u)
    if labels is None:
        return ContrastiveTerms(0.0, L2, 0.0, 0.0, L5)
    q = np.column_stack([T[:, idx].mean(axis=1) for idx in class_index(labels)])
    Q = q.sum(axis=1)
    L1 = float(np.einsum("xi,xy,yi->", q, G, q))
    L3 = float(Q @ G2 @ Q)
    L4 = float(Q @ G2 @ u)
    return ContrastiveTerms(L1, L2, L3, L4, L5)


def labeled_contrastive_loss(
    T: np.ndarray, labels: np.ndarray, H: np.ndarray, phi_u: float, phi_l: float
) -> float:
    L1, L2, L3, L4, L5 = contrastive_terms(T, labels, H)
    return (
        -2 * phi_l * L1
        - 2 * phi_u * L2
        + phi_l**2 * L3
        + 2 * phi_l * phi_u * L4
        + phi_u**2 * L5
    )


def unlabeled_contrastive_loss(T: np.ndarray, H: np.ndarray, phi_u: float) -> float:
    _, L2, _, _, L5 = contrastive_terms(T, None, H)
    return -2 * phi_u * L2 + phi_u**2 * L5


def scaled_features(A: np.ndarray, H: np.ndarray) -> np.ndarray:
    """``f_x = sqrt(deg_x) h(x)``."""
    return np.sqrt(A.sum(axis=1))[:, None] * np.asarray(H, dtype=float)


def equivalence_residual(
    T: np.ndarray, labels: np.ndarray | None, H: np.ndarray, phi_u: float, phi_l: float
) -> float:
    """``|L(F, A) - (||Atilde||_F^2 + L_contrastive(H))|`` with ``F`` the degree-scaled ``H``.

    ``labels=None`` (or ``phi_l=0``) checks the unlabeled identity.
    """
    T = _check_kernel(T)
    A = phi_u * unlabeled_adjacency(T)
    if labels is not None:
        q = np.column_stack([T[:, idx].mean(axis=1) for idx in class_index(labels)])
        A = labeled_adjacency(A, q, 1.0, phi_l)
        loss = labeled_contrastive_loss(T, labels, H, phi_u, phi_l)
    else:
        loss = unlabeled_contrastive_loss(T, H, phi_u)
    Atilde = normalized_adjacency(A)
    F = scaled_features(A, H)
    return abs(factorization_loss(Atilde, F) - (float(np.sum(Atilde**2)) + loss))
