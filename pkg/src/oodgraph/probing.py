"""Linear probing of ID-vs-OOD separability on frozen representations.

The probe is the least-squares classifier ``theta = Z_all^+ y``. Its 0-1 error
``R`` upper-bounds the best achievable linear 0-1 error, and ``R_bar`` (twice
the mean squared regression residual) upper-bounds ``R``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

import numpy as np

PINV_RCOND = 1e-12


@dataclass(frozen=True, eq=False)
class LabeledFeatures:
    Z_all: np.ndarray
    y: np.ndarray

    @property
    def n_id(self) -> int:
        return int(self.y[:, 0].sum())

    @property
    def n_ood(self) -> int:
        return int(self.y[:, 1].sum())


@dataclass
class ProbeReport:
    R: float
    R_bar: float
    theta: np.ndarray
    k: int
    N: int
    M: int
    seed: int | None = None
    G: float | None = None
    G_01: float | None = None
    warnings: list[str] = field(default_factory=list)
    metrics: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d.pop("theta")
        return d


def stack_features(Z: np.ndarray, Z_ood: np.ndarray) -> LabeledFeatures:
    """ID rows first with label (1, 0), then OOD rows with label (0, 1)."""
    Z, Z_ood = np.atleast_2d(Z), np.atleast_2d(Z_ood)
    if Z_ood.shape[0] == 0 or Z_ood.size == 0:
        raise ValueError("no OOD rows")
    if Z.shape[1] != Z_ood.shape[1]:
        raise ValueError(f"dimension mismatch: {Z.shape[1]} vs {Z_ood.shape[1]}")
    n, m = Z.shape[0], Z_ood.shape[0]
    y = np.zeros((n + m, 2))
    y[:n, 0] = 1.0
    y[n:, 1] = 1.0
    return LabeledFeatures(Z_all=np.vstack([Z, Z_ood]), y=y)


def _pinv(Z: np.ndarray) -> np.ndarray:
    return np.linalg.pinv(Z, rcond=PINV_RCOND)


def least_squares_classifier(lf: LabeledFeatures) -> np.ndarray:
    return _pinv(lf.Z_all) @ lf.y


def zero_one_error(lf: LabeledFeatures, theta: np.ndarray) -> float:
    """Fraction of rows whose predicted column differs from the label; ties are errors."""
    scores = lf.Z_all @ theta
    truth = lf.y.argmax(axis=1)
    hit = scores[np.arange(truth.size), truth]
    other = scores[np.arange(truth.size), 1 - truth]
    return float(np.mean(~(hit > other)))


def probing_upper_bound(lf: LabeledFeatures) -> float:
    """``(2/n) ||y - Z Z^+ y||_F^2``."""
    resid = lf.y - lf.Z_all @ (_pinv(lf.Z_all) @ lf.y)
    return float(2.0 * np.sum(resid * resid) / lf.y.shape[0])


def probe(lf: LabeledFeatures, seed: int | None = None) -> ProbeReport:
    theta = least_squares_classifier(lf)
    return ProbeReport(
        R=zero_one_error(lf, theta),
        R_bar=probing_upper_bound(lf),
        theta=theta,
        k=lf.Z_all.shape[1],
        N=lf.n_id,
        M=lf.n_ood,
        seed=seed,
    )


def error_difference(report_u: ProbeReport, report_l: ProbeReport) -> float:
    """``G = R_bar(unlabeled) - R_bar(labeled)``; also stores ``G`` and ``G_01`` on both reports."""
    G = report_u.R_bar - report_l.R_bar
    G_01 = report_u.R - report_l.R
    for rep in (report_u, report_l):
        rep.G, rep.G_01 = G, G_01
    return G
