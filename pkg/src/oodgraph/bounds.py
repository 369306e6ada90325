"""Lower bound on the probing error difference and its assumption diagnostics."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .adjacency import ClassConnectors
from .probing import LabeledFeatures
from .spectral import EigenSystem


@dataclass(frozen=True, eq=False)
class BoundInputs:
    Atilde_u: np.ndarray
    A_oi_u: np.ndarray
    connectors: ClassConnectors
    k: int
    tau: float
    r: float
    phi_l: float
    C: float
    N: int
    M: int

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.r < 0:
            raise ValueError("r must be nonnegative")
        if self.connectors.p is None:
            raise ValueError("bound needs OOD connectors p")


@dataclass(frozen=True)
class AssumptionDiagnostics:
    tau: float | None
    tau_over_k: float | None
    a1_holds: bool
    a2_nullspace_residual: float
    a2_span_residual: float


class AssumptionError(ValueError):
    def __init__(self, message: str, diagnostics: AssumptionDiagnostics | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class BoundReport:
    epsilon: float
    bound_thm2: float
    bound_thm3_epsilon: float | None
    G_empirical: float
    assumption_diag: AssumptionDiagnostics
    tightness_gap: float
    C: float
    tau: float
    r: float

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _norm2(M: np.ndarray) -> float:
    return float(np.sum(np.square(M)))


def epsilon_theorem2(inputs: BoundInputs) -> float:
    tau, k = inputs.tau, inputs.k
    if math.isclose(tau, 1.0, rel_tol=0.0, abs_tol=1e-15):
        raise ZeroDivisionError("division by zero spectral margin (tau = 1)")
    q, p, A_oi = inputs.connectors.q, inputs.connectors.p, inputs.A_oi_u
    cross = 2.0 * float(np.einsum("mi,mn,ni->", p, A_oi, q))
    s = _norm2(A_oi) * _norm2(inputs.Atilde_u)
    q_sq = _norm2(q)
    q_l1 = float(np.abs(q).sum())
    margin = s * 2.0 * (tau - k) / (tau - 1.0) - 2.0
    return cross + (1.0 - s) * q_sq + inputs.r**2 * margin * q_l1


def constant_C(lf_unlabeled: LabeledFeatures) -> float:
    """``(2/3) ||y||_F^2 lambda_max(Z^T Z)`` on the unlabeled features."""
    Z = lf_unlabeled.Z_all
    if not np.any(Z):
        raise ValueError("zero feature matrix")
    lam_max = float(np.linalg.eigvalsh(Z.T @ Z)[-1])
    return 2.0 / 3.0 * _norm2(lf_unlabeled.y) * lam_max


def lower_bound_theorem2(inputs: BoundInputs) -> float:
    return inputs.C * inputs.phi_l * epsilon_theorem2(inputs) / (inputs.N + inputs.M)


def simplified_bound_theorem3(
    inputs: BoundInputs, diagnostics: AssumptionDiagnostics | None = None
) -> float:
    if not inputs.tau > inputs.k:
        raise AssumptionError(
            f"spectral gap assumption fails: tau={inputs.tau:.4g} <= k={inputs.k}", diagnostics
        )
    a_oi = _norm2(inputs.A_oi_u)
    a_id = _norm2(inputs.Atilde_u)
    return (1.0 + a_oi * (2.0 * inputs.N**2 - a_id)) * _norm2(inputs.connectors.q)


def assumption_diagnostics(eig: EigenSystem, q: np.ndarray, k: int) -> AssumptionDiagnostics:
    """Spectral-gap ratio and how far each connector column is from the top-k span."""
    n = eig.values.size
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < {n}")
    lam_k, V_k = eig.top(k)
    V_rest = eig.vectors[:, k:]
    null_res = float(np.linalg.norm(V_rest.T @ q, axis=0).max())
    recon = V_k @ ((V_k.T @ q) / lam_k[:, None])
    span_res = float(np.linalg.norm(recon - q, axis=0).max())
    nxt = eig.values[k]
    tau = float(lam_k[-1] / nxt) if nxt > 0 else None
    return AssumptionDiagnostics(
        tau=tau,
        tau_over_k=None if tau is None else tau / k,
        a1_holds=tau is not None and tau > k,
        a2_nullspace_residual=null_res,
        a2_span_residual=span_res,
    )


def evaluate_bounds(
    inputs: BoundInputs, G_empirical: float, diagnostics: AssumptionDiagnostics
) -> BoundReport:
    bound = lower_bound_theorem2(inputs)
    try:
        thm3 = simplified_bound_theorem3(inputs, diagnostics)
    except AssumptionError:
        thm3 = None
    return BoundReport(
        epsilon=epsilon_theorem2(inputs),
        bound_thm2=bound,
        bound_thm3_epsilon=thm3,
        G_empirical=G_empirical,
        assumption_diag=diagnostics,
        tightness_gap=G_empirical - bound,
        C=inputs.C,
        tau=inputs.tau,
        r=inputs.r,
    )
