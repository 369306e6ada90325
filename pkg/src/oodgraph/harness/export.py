"""Write run, sweep and tightness records as CSV, JSON and static SVG files."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from ..matrix_io import fmt
from .experiments import SweepTable, TightnessTable
from .pipeline import RunRecord, SeedResult

FORMATS = ("csv", "json", "svg")


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return str(v)


def table_csv(columns: Iterable[str], rows: Iterable[dict[str, Any]]) -> str:
    columns = list(columns)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def dumps_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def embeddings_csv(result: SeedResult, labeled: bool) -> str:
    emb = result.emb_l if labeled else result.emb_u
    k = emb.k
    rows = []
    for i, z in enumerate(emb.Z):
        rows.append({"point": i, "set": "id", "label": int(result.labels[i])} | _zcols(z))
    for j, z in enumerate(emb.Z_ood):
        rows.append({"point": len(emb.Z) + j, "set": "ood", "label": -1} | _zcols(z))
    return table_csv(["point", "set", "label", *[f"z{d + 1}" for d in range(k)]], rows)


def _zcols(z: np.ndarray) -> dict[str, float]:
    return {f"z{d + 1}": float(v) for d, v in enumerate(z)}


def read_embeddings_csv(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (coordinates, labels, is_ood)."""
    with open(path, newline="") as fh:
        recs = list(csv.DictReader(fh))
    zcols = [c for c in recs[0] if c.startswith("z")]
    Z = np.array([[float(r[c]) for c in zcols] for r in recs])
    labels = np.array([int(r["label"]) for r in recs])
    is_ood = np.array([r["set"] == "ood" for r in recs])
    return Z, labels, is_ood


SEED_COLUMNS = (
    "seed", "G", "G_01", "R_u", "R_l", "R_bar_u", "R_bar_l", "bound", "epsilon", "C", "tau", "r",
    "a1", "a2_resid", "auroc_u", "fpr95_u", "auroc_l", "fpr95_l", "aoi_norm", "aid_norm", "q_norm",
)


def _write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def export(record: RunRecord | SweepTable | TightnessTable, out_dir: str | Path, formats: Iterable[str]) -> list[Path]:
    """Write ``record`` into ``out_dir`` in each requested format; returns written paths."""
    formats = set(formats)
    unknown = formats - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown formats {sorted(unknown)}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written: list[Path] = []
    if isinstance(record, RunRecord):
        written += _export_run(record, out, formats)
    elif isinstance(record, SweepTable):
        written += _export_sweep(record, out, formats)
    elif isinstance(record, TightnessTable):
        written += _export_tightness(record, out, formats)
    else:
        raise TypeError(f"cannot export {type(record).__name__}")
    return written


def _export_run(record: RunRecord, out: Path, formats: set[str]) -> list[Path]:
    written = []
    if "json" in formats:
        written.append(_write(out / "run.json", dumps_json(record.to_dict())))
        written.append(_write(out / "timing.json", dumps_json({"wall_time_s": record.wall_time})))
    if "csv" in formats:
        rows = [r.summary() for r in record.results]
        written.append(_write(out / "seeds.csv", table_csv(SEED_COLUMNS, rows)))
        if record.results:
            first = record.results[0]
            written.append(_write(out / "embeddings_labeled.csv", embeddings_csv(first, True)))
            written.append(_write(out / "embeddings_unlabeled.csv", embeddings_csv(first, False)))
    if "svg" in formats and record.results:
        from . import plots

        first = record.results[0]
        for labeled, name in ((True, "labeled"), (False, "unlabeled")):
            emb = first.emb_l if labeled else first.emb_u
            Z = np.vstack([emb.Z, emb.Z_ood])
            labels = np.concatenate([first.labels, -np.ones(len(emb.Z_ood), dtype=int)])
            is_ood = labels < 0
            title = f"{name} (seed {first.seed}, R={(first.probe_l if labeled else first.probe_u).R:.3f})"
            path = out / f"embeddings_{name}.svg"
            plots.scatter_embeddings(Z, labels, is_ood, title, path)
            written.append(path)
    return written


def _export_sweep(table: SweepTable, out: Path, formats: set[str]) -> list[Path]:
    written = []
    stem = f"sweep_{table.axis}"
    if "json" in formats:
        written.append(_write(out / f"{stem}.json", dumps_json(table.to_dict())))
    if "csv" in formats:
        written.append(_write(out / f"{stem}.csv", table_csv(SweepTable.COLUMNS, table.rows())))
    if "svg" in formats:
        from . import plots

        rows = table.rows()
        x = [r[table.axis] for r in rows]
        series = {"G": [r["G"] for r in rows], "bound": [r["bound"] for r in rows]}
        path = out / f"{stem}.svg"
        plots.line_plot(x, series, table.axis, f"sweep over {table.axis}", path)
        written.append(path)
    return written


def _export_tightness(table: TightnessTable, out: Path, formats: set[str]) -> list[Path]:
    written = []
    if "json" in formats:
        written.append(_write(out / "tightness.json", dumps_json(table.to_dict())))
    if "csv" in formats:
        written.append(_write(out / "tightness.csv", table_csv(TightnessTable.COLUMNS, table.rows())))
    if "svg" in formats:
        from . import plots

        rows = table.rows()
        x = [r["aoi_norm"] for r in rows]
        series = {"G": [r["G"] for r in rows], "bound": [r["bound"] for r in rows]}
        path = out / "tightness.svg"
        plots.line_plot(x, series, "aoi_norm", "bound tightness", path)
        written.append(path)
    return written


def export_from_directory(in_dir: str | Path, out_dir: str | Path, formats: Iterable[str]) -> list[Path]:
    """Re-render a saved run directory (``run.json`` plus embedding CSVs)."""
    src, out = Path(in_dir), Path(out_dir)
    formats = set(formats)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    record = json.loads((src / "run.json").read_text())
    if "json" in formats and src != out:
        written.append(_write(out / "run.json", dumps_json(record)))
    if "csv" in formats:
        rows = []
        for entry in record["per_seed"]:
            b, pu, pl = entry["bounds"], entry["probe_unlabeled"], entry["probe_labeled"]
            diag = b["assumption_diag"]
            rows.append(
                {
                    "seed": entry["seed"], "G": pu["G"], "G_01": pu["G_01"], "R_u": pu["R"], "R_l": pl["R"],
                    "R_bar_u": pu["R_bar"], "R_bar_l": pl["R_bar"], "bound": b["bound_thm2"],
                    "epsilon": b["epsilon"], "C": b["C"], "tau": b["tau"], "r": b["r"],
                    "a1": diag["a1_holds"],
                    "a2_resid": max(diag["a2_nullspace_residual"], diag["a2_span_residual"]),
                    "auroc_u": pu["metrics"]["auroc"], "fpr95_u": pu["metrics"]["fpr95"],
                    "auroc_l": pl["metrics"]["auroc"], "fpr95_l": pl["metrics"]["fpr95"],
                    "aoi_norm": entry["aoi_norm"], "aid_norm": entry["aid_norm"], "q_norm": entry["q_norm"],
                }
            )
        written.append(_write(out / "seeds.csv", table_csv(SEED_COLUMNS, rows)))
    if "svg" in formats:
        from . import plots

        for name in ("labeled", "unlabeled"):
            path = src / f"embeddings_{name}.csv"
            if path.exists():
                Z, labels, is_ood = read_embeddings_csv(path)
                target = out / f"embeddings_{name}.svg"
                plots.scatter_embeddings(Z, labels, is_ood, name, target)
                written.append(target)
    return written
