"""End-to-end evaluation of one scenario seed and aggregation across seeds."""

from __future__ import annotations

import hashlib
import json
import statistics
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .. import __version__
from ..adjacency import (
    class_connectors,
    degree_matrix,
    labeled_adjacency,
    labeled_ood_adjacency,
    normalize,
    unlabeled_adjacency,
)
from ..bounds import BoundInputs, BoundReport, assumption_diagnostics, constant_C, evaluate_bounds
from ..metrics import auroc, fpr_at_tpr, knn_ood_scores
from ..probing import ProbeReport, error_difference, probe, stack_features
from ..spectral import Embeddings, embed, max_embedding_norm_r, spectral_gap_tau
from ..synthgraph import ScenarioConfig, make_scenario

AOI_SAMPLED = "sampled"
AOI_RENORMALIZED = "renormalized"


@dataclass(frozen=True)
class PipelineOptions:
    """Knobs of the evaluation pipeline that are not part of the scenario itself.

    ``aoi_norm`` rescales the sampled OOD-ID block to that Frobenius norm.
    ``aoi_for_bound`` picks which OOD-ID matrix enters the bound: the sampled
    one, or its degree-normalized version ``D_ood^{-1/2} A_oi D^{-1/2}``.
    """

    k: int = 2
    with_degrees: bool = True
    aoi_norm: float | None = None
    aoi_for_bound: str = AOI_SAMPLED
    knn_k: int = 25
    tpr: float = 0.95

    def __post_init__(self) -> None:
        if self.aoi_for_bound not in (AOI_SAMPLED, AOI_RENORMALIZED):
            raise ValueError(f"unknown aoi_for_bound {self.aoi_for_bound!r}")
        if self.aoi_norm is not None and not self.aoi_norm > 0:
            raise ValueError("aoi_norm must be positive")


@dataclass
class SeedResult:
    seed: int
    probe_u: ProbeReport
    probe_l: ProbeReport
    bounds: BoundReport
    aoi_norm: float
    aid_norm: float
    q_norm: float
    warnings: list[str]
    labels: np.ndarray = field(repr=False)
    emb_u: Embeddings = field(repr=False)
    emb_l: Embeddings = field(repr=False)

    @property
    def G(self) -> float:
        return self.bounds.G_empirical

    def summary(self) -> dict[str, Any]:
        diag = self.bounds.assumption_diag
        return {
            "seed": self.seed,
            "G": self.G,
            "G_01": self.probe_u.G_01,
            "R_u": self.probe_u.R,
            "R_l": self.probe_l.R,
            "R_bar_u": self.probe_u.R_bar,
            "R_bar_l": self.probe_l.R_bar,
            "bound": self.bounds.bound_thm2,
            "epsilon": self.bounds.epsilon,
            "C": self.bounds.C,
            "tau": self.bounds.tau,
            "r": self.bounds.r,
            "a1": diag.a1_holds,
            "a2_resid": max(diag.a2_nullspace_residual, diag.a2_span_residual),
            "auroc_u": self.probe_u.metrics["auroc"],
            "fpr95_u": self.probe_u.metrics["fpr95"],
            "auroc_l": self.probe_l.metrics["auroc"],
            "fpr95_l": self.probe_l.metrics["fpr95"],
            "aoi_norm": self.aoi_norm,
            "aid_norm": self.aid_norm,
            "q_norm": self.q_norm,
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "probe_unlabeled": self.probe_u.to_dict(),
            "probe_labeled": self.probe_l.to_dict(),
            "bounds": self.bounds.to_dict(),
            "aoi_norm": self.aoi_norm,
            "aid_norm": self.aid_norm,
            "q_norm": self.q_norm,
            "warnings": list(self.warnings),
        }


def _knn_metrics(emb: Embeddings, opts: PipelineOptions) -> dict[str, float]:
    knn_k = min(opts.knn_k, emb.Z.shape[0] - 1)
    id_s = knn_ood_scores(emb.Z, emb.Z, knn_k, exclude_self=True)
    ood_s = knn_ood_scores(emb.Z, emb.Z_ood, knn_k)
    return {"auroc": auroc(id_s, ood_s), "fpr95": fpr_at_tpr(id_s, ood_s, opts.tpr), "knn_k": knn_k}


def evaluate_seed(config: ScenarioConfig, opts: PipelineOptions) -> SeedResult:
    """generate -> adjacency -> spectral -> probe -> bound -> metrics for one seed."""
    sc = make_scenario(config)
    phi_u, phi_l, k = config.phi_u, config.phi_l, opts.k
    A_oi_u = np.array(sc.A_oi_raw)
    if opts.aoi_norm is not None:
        A_oi_u *= opts.aoi_norm / np.linalg.norm(A_oi_u)

    A_u = unlabeled_adjacency(sc.T)
    conn = class_connectors(sc.T, sc.labels, p_matrix=sc.p_matrix)
    A_l = labeled_adjacency(A_u, conn.q, phi_u, phi_l)
    A_oi_l = labeled_ood_adjacency(A_oi_u, conn.p, conn.q, phi_u, phi_l)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        emb_u = embed(phi_u * A_u, phi_u * A_oi_u, k, opts.with_degrees)
        emb_l = embed(A_l, A_oi_l, k, opts.with_degrees)
    notes = [f"{w.category.__name__}: {w.message}" for w in caught]

    lf_u = stack_features(emb_u.Z, emb_u.Z_ood)
    lf_l = stack_features(emb_l.Z, emb_l.Z_ood)
    rep_u, rep_l = probe(lf_u, config.seed), probe(lf_l, config.seed)
    G = error_difference(rep_u, rep_l)
    rep_u.metrics = _knn_metrics(emb_u, opts)
    rep_l.metrics = _knn_metrics(emb_l, opts)

    if opts.aoi_for_bound == AOI_RENORMALIZED:
        A_oi_bound = normalize(A_oi_u, degree_matrix(A_oi_u), degree_matrix(A_u))
    else:
        A_oi_bound = A_oi_u
    inputs = BoundInputs(
        Atilde_u=emb_u.Atilde,
        A_oi_u=A_oi_bound,
        connectors=conn,
        k=k,
        tau=spectral_gap_tau(emb_u.eig, k),
        r=max_embedding_norm_r(emb_u.Z),
        phi_l=phi_l,
        C=constant_C(lf_u),
        N=sc.N,
        M=sc.M,
    )
    diag = assumption_diagnostics(emb_u.eig, conn.q, k)
    if not diag.a1_holds:
        notes.append(f"spectral gap assumption fails: tau={diag.tau:.6g} <= k={k}")
    rep_u.warnings = rep_l.warnings = notes

    return SeedResult(
        seed=config.seed,
        probe_u=rep_u,
        probe_l=rep_l,
        bounds=evaluate_bounds(inputs, G, diag),
        aoi_norm=float(np.linalg.norm(A_oi_u)),
        aid_norm=float(np.linalg.norm(emb_u.Atilde)),
        q_norm=float(np.linalg.norm(conn.q)),
        warnings=notes,
        labels=sc.labels,
        emb_u=emb_u,
        emb_l=emb_l,
    )


def _evaluate_or_fail(config: ScenarioConfig, opts: PipelineOptions) -> SeedResult | dict[str, Any]:
    try:
        return evaluate_seed(config, opts)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return {"seed": config.seed, "error": f"{type(exc).__name__}: {exc}"}


def evaluate_seeds(
    config: ScenarioConfig, seeds: list[int], opts: PipelineOptions, workers: int = 1
) -> list[SeedResult | dict[str, Any]]:
    """Evaluate each seed; failures become ``{"seed", "error"}`` entries. Output is seed-sorted."""
    configs = [config.replace(seed=s) for s in sorted(seeds)]
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_evaluate_or_fail, configs, [opts] * len(configs)))
    return [_evaluate_or_fail(c, opts) for c in configs]


MEDIAN_FIELDS = (
    "G", "G_01", "R_u", "R_l", "R_bar_u", "R_bar_l", "bound", "epsilon", "C", "tau", "r",
    "a2_resid", "auroc_u", "fpr95_u", "auroc_l", "fpr95_l", "aoi_norm", "aid_norm", "q_norm",
)


def medians(results: list[SeedResult]) -> dict[str, float | None]:
    ok = [r.summary() for r in results]
    if not ok:
        return {name: None for name in MEDIAN_FIELDS}
    return {name: float(statistics.median(s[name] for s in ok)) for name in MEDIAN_FIELDS}


def spec_hash(payload: dict[str, Any]) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class RunRecord:
    """Per-seed results and their medians for one scenario and option set.

    ``wall_time`` is kept out of :meth:`to_dict` so serialized records are
    byte-identical across reruns.
    """

    name: str
    config: ScenarioConfig
    options: PipelineOptions
    seeds: list[int]
    results: list[SeedResult]
    failures: list[dict[str, Any]]
    medians: dict[str, float | None]
    spec_hash: str
    tool_version: str = __version__
    wall_time: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "spec_hash": self.spec_hash,
            "tool_version": self.tool_version,
            "config": self.config.to_dict(),
            "options": vars(self.options).copy(),
            "seeds": list(self.seeds),
            "medians": self.medians,
            "per_seed": [r.to_dict() for r in self.results],
            "failures": self.failures,
        }


def run_config(
    name: str,
    config: ScenarioConfig,
    seeds: list[int],
    opts: PipelineOptions,
    workers: int = 1,
) -> RunRecord:
    if not seeds:
        raise ValueError("at least one seed is required")
    start = time.perf_counter()
    outcome = evaluate_seeds(config, seeds, opts, workers)
    results = [r for r in outcome if isinstance(r, SeedResult)]
    failures = [r for r in outcome if not isinstance(r, SeedResult)]
    payload = {"config": replace(config, seed=0).to_dict(), "options": vars(opts), "seeds": sorted(seeds)}
    return RunRecord(
        name=name,
        config=config,
        options=opts,
        seeds=sorted(seeds),
        results=results,
        failures=failures,
        medians=medians(results),
        spec_hash=spec_hash(payload),
        wall_time=time.perf_counter() - start,
    )
