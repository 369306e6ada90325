"""Named experiments: single runs, one-axis sweeps and the bound-tightness table."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..synthgraph import FAR_OOD_CONN, NEAR_OOD_CONN, ScenarioConfig
from .pipeline import PipelineOptions, RunRecord, run_config

DEFAULT_SEEDS = (0, 1, 2, 3, 4)
TIGHTNESS_NORMS = (60.0, 72.0, 84.0, 96.0, 108.0, 120.0)

NEAR = ScenarioConfig(ood_conn=NEAR_OOD_CONN)
FAR = ScenarioConfig(ood_conn=FAR_OOD_CONN)

AXES = ("aoi_norm", "aid_norm", "q_norm")


@dataclass(frozen=True)
class Preset:
    config: ScenarioConfig
    kind: str = "run"
    axis: str | None = None
    values: tuple[float, ...] = ()


PRESETS: dict[str, Preset] = {
    "fig2-near": Preset(NEAR),
    "fig2-far": Preset(FAR),
    "tightness-table": Preset(NEAR, kind="tightness", axis="aoi_norm", values=TIGHTNESS_NORMS),
    "sweep-aoi": Preset(
        NEAR, kind="sweep", axis="aoi_norm", values=(12.0, 24.0, 36.0, 48.0, 60.0, 84.0, 120.0)
    ),
    # value = level of the first class; the others keep their 0.05 / 0.1 offsets
    "sweep-aid": Preset(NEAR, kind="sweep", axis="aid_norm", values=(0.8, 0.75, 0.7, 0.65, 0.6)),
    # value = cross-block level
    "sweep-q": Preset(NEAR, kind="sweep", axis="q_norm", values=(0.1, 0.15, 0.2, 0.25, 0.3)),
}


@dataclass
class ExperimentSpec:
    scenario: ScenarioConfig | str = "fig2-near"
    k: int = 2
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    output_dir: Path | None = None
    emit_plots: bool = False
    formats: tuple[str, ...] = ("csv", "json")
    options: dict[str, Any] = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if isinstance(self.scenario, str) and self.scenario not in PRESETS:
            raise ValueError(f"unknown preset {self.scenario!r}; choose from {sorted(PRESETS)}")

    @property
    def name(self) -> str:
        return self.scenario if isinstance(self.scenario, str) else "custom"

    @property
    def preset(self) -> Preset:
        if isinstance(self.scenario, str):
            return PRESETS[self.scenario]
        return Preset(self.scenario)

    def pipeline_options(self, **extra: Any) -> PipelineOptions:
        return PipelineOptions(k=self.k, **(self.options | extra))


def _emit(record: Any, spec: ExperimentSpec) -> None:
    if spec.output_dir is None:
        return
    from .export import export

    formats = set(spec.formats) | ({"svg"} if spec.emit_plots else set())
    export(record, spec.output_dir, formats)


def run_scenario(spec: ExperimentSpec) -> RunRecord:
    record = run_config(
        spec.name, spec.preset.config, list(spec.seeds), spec.pipeline_options(), spec.workers
    )
    _emit(record, spec)
    return record


def apply_axis(config: ScenarioConfig, axis: str, value: float) -> tuple[ScenarioConfig, dict[str, Any]]:
    """Scenario and option overrides realizing one sweep point."""
    if not value > 0:
        raise ValueError("axis values must be positive")
    if axis == "aoi_norm":
        return config, {"aoi_norm": float(value)}
    if axis == "aid_norm":
        offsets = [lvl - config.intra_levels[0] for lvl in config.intra_levels]
        levels = tuple(value + off for off in offsets)
        return config.replace(intra_levels=levels), {}
    if axis == "q_norm":
        return config.replace(cross_level=float(value)), {}
    raise ValueError(f"unknown sweep axis {axis!r}; choose from {AXES}")


@dataclass
class SweepTable:
    name: str
    axis: str
    values: list[float]
    records: list[RunRecord]

    COLUMNS = ("value", "aoi_norm", "aid_norm", "q_norm", "G", "G_01", "bound", "R_u", "R_l")

    def rows(self) -> list[dict[str, Any]]:
        out = []
        for value, rec in zip(self.values, self.records):
            out.append({"value": value} | {c: rec.medians[c] for c in self.COLUMNS[1:]})
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "axis": self.axis,
            "rows": self.rows(),
            "records": [r.to_dict() for r in self.records],
        }


def sweep(spec: ExperimentSpec, axis: str | None = None, values: list[float] | None = None) -> SweepTable:
    preset = spec.preset
    axis = axis or preset.axis
    values = list(values if values is not None else preset.values)
    if axis is None or not values:
        raise ValueError("sweep needs an axis and at least one value")
    records = []
    for value in values:
        config, extra = apply_axis(preset.config, axis, value)
        opts = spec.pipeline_options(**extra)
        records.append(run_config(f"{spec.name}:{axis}={value:g}", config, list(spec.seeds), opts, spec.workers))
    table = SweepTable(name=spec.name, axis=axis, values=values, records=records)
    _emit(table, spec)
    return table


@dataclass
class TightnessTable:
    records: list[RunRecord]
    norms: list[float]

    COLUMNS = ("aoi_norm", "G", "bound", "gap", "tau", "r", "a1", "a2_resid")

    def rows(self) -> list[dict[str, Any]]:
        out = []
        for norm, rec in zip(self.norms, self.records):
            m = rec.medians
            a1 = bool(rec.results) and all(r.bounds.assumption_diag.a1_holds for r in rec.results)
            gap = None if m["G"] is None else m["G"] - m["bound"]
            out.append(
                {
                    "aoi_norm": norm,
                    "G": m["G"],
                    "bound": m["bound"],
                    "gap": gap,
                    "tau": m["tau"],
                    "r": m["r"],
                    "a1": a1,
                    "a2_resid": m["a2_resid"],
                    "C": m["C"],
                    "epsilon": m["epsilon"],
                }
            )
        return out

    def violations(self) -> list[dict[str, Any]]:
        return [row for row in self.rows() if row["G"] is None or row["bound"] > row["G"]]

    def to_dict(self) -> dict[str, Any]:
        return {
            "rescaling": "uniform scalar rescaling of the sampled near-OOD block",
            "rows": self.rows(),
            "records": [r.to_dict() for r in self.records],
        }


class TightnessViolation(AssertionError):
    def __init__(self, table: TightnessTable):
        bad = table.violations()
        lines = [f"bound exceeds median G in {len(bad)} of {len(table.norms)} rows:"]
        for row in bad:
            lines.append(
                "  aoi_norm={aoi_norm:g} G={G} bound={bound} tau={tau} a1={a1} a2_resid={a2_resid}".format(**row)
            )
        super().__init__("\n".join(lines))
        self.table = table


def reproduce_tightness_table(
    spec: ExperimentSpec | None = None, norms: tuple[float, ...] = TIGHTNESS_NORMS
) -> TightnessTable:
    """Median G and bound at each target OOD-ID norm; exports before any check."""
    spec = spec or ExperimentSpec(scenario="tightness-table")
    config = spec.preset.config
    records = [
        run_config(
            f"tightness:aoi_norm={n:g}", config, list(spec.seeds), spec.pipeline_options(aoi_norm=n), spec.workers
        )
        for n in norms
    ]
    table = TightnessTable(records=records, norms=list(norms))
    _emit(table, spec)
    return table


def check_tightness(table: TightnessTable) -> None:
    if table.violations():
        raise TightnessViolation(table)


def spearman(x: list[float], y: list[float]) -> float:
    from scipy.stats import spearmanr

    return float(spearmanr(x, y).statistic)
