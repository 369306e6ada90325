"""Seeded generator for block-structured augmentation graphs with OOD attachments.

An ID population of ``classes * points_per_class`` points is connected by a
symmetric kernel ``T`` whose class blocks sit at fixed connectivity levels plus
truncated-normal noise. A separate block ``A_oi_raw`` links ``ood_points`` OOD
points to the ID population.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.special import ndtr

from . import matrix_io

RNG_NAME = "numpy.random.Philox"
MIN_ACCEPTANCE = 1e-6


@dataclass(frozen=True)
class TruncNormalParams:
    """Normal(mean, variance) conditioned on ``[lower, upper]``."""

    mean: float
    variance: float
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not self.variance > 0:
            raise ValueError(f"variance must be positive, got {self.variance}")
        if not self.lower < self.upper:
            raise ValueError(f"need lower < upper, got [{self.lower}, {self.upper}]")

    @property
    def acceptance(self) -> float:
        sd = math.sqrt(self.variance)
        return float(ndtr((self.upper - self.mean) / sd) - ndtr((self.lower - self.mean) / sd))


NEAR_OOD_CONN = TruncNormalParams(mean=0.5, variance=0.05, lower=0.0, upper=0.5)
FAR_OOD_CONN = TruncNormalParams(mean=0.2, variance=0.05, lower=0.0, upper=0.2)
DEFAULT_NOISE = TruncNormalParams(mean=0.0, variance=1.0, lower=-0.1, upper=0.1)


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one synthetic scenario.

    ``intra_levels`` holds one diagonal-block level per class and
    ``cross_level`` is shared by every off-diagonal block. ``noise=None`` and
    ``ood_conn=None`` select zero-noise and all-zero OOD connectivity.
    """

    classes: int = 3
    points_per_class: int = 40
    ood_points: int = 60
    intra_levels: tuple[float, ...] = (0.8, 0.75, 0.7)
    cross_level: float = 0.1
    noise: TruncNormalParams | None = DEFAULT_NOISE
    ood_conn: TruncNormalParams | None = NEAR_OOD_CONN
    p_value: float = 0.1
    phi_u: float = 1.0
    phi_l: float = 0.5
    seed: int = 0
    clamp_negative: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "intra_levels", tuple(float(v) for v in self.intra_levels))
        for name in ("classes", "points_per_class", "ood_points"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if len(self.intra_levels) != self.classes:
            raise ValueError(
                f"expected {self.classes} intra-block levels, got {len(self.intra_levels)}"
            )
        for level in (*self.intra_levels, self.cross_level):
            if not 0.0 <= level <= 1.0:
                raise ValueError(f"block level {level} outside [0, 1]")
        if self.phi_u < 0 or self.phi_l < 0:
            raise ValueError("phi_u and phi_l must be nonnegative")

    @property
    def n_id(self) -> int:
        return self.classes * self.points_per_class

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self) | {"intra_levels": list(self.intra_levels)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        data = dict(data)
        for key in ("noise", "ood_conn"):
            if isinstance(data.get(key), dict):
                data[key] = TruncNormalParams(**data[key])
        if "intra_levels" in data:
            data["intra_levels"] = tuple(data["intra_levels"])
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


PRESETS: dict[str, ScenarioConfig] = {
    "near": ScenarioConfig(ood_conn=NEAR_OOD_CONN),
    "far": ScenarioConfig(ood_conn=FAR_OOD_CONN),
}


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a JSON scenario config.

    The optional key ``"preset"`` (``near`` or ``far``) supplies defaults that
    the remaining keys override.
    """
    data = json.loads(Path(path).read_text())
    preset = data.pop("preset", None)
    base = PRESETS[preset].to_dict() if preset else {}
    return ScenarioConfig.from_dict(base | data)


@dataclass(frozen=True, eq=False)
class Scenario:
    T: np.ndarray
    labels: np.ndarray
    A_oi_raw: np.ndarray
    p_matrix: np.ndarray
    config: ScenarioConfig
    rng_name: str = field(default=RNG_NAME)

    def __post_init__(self) -> None:
        for arr in (self.T, self.labels, self.A_oi_raw, self.p_matrix):
            arr.setflags(write=False)

    @property
    def N(self) -> int:
        return self.T.shape[0]

    @property
    def M(self) -> int:
        return self.A_oi_raw.shape[0]


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator; same seed gives the same stream on every platform."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def sample_truncated_normal(
    params: TruncNormalParams, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``n`` samples by rejection from the parent normal."""
    acc = params.acceptance
    if acc < MIN_ACCEPTANCE:
        raise ValueError(f"degenerate truncation window (acceptance {acc:.3g})")
    sd = math.sqrt(params.variance)
    out = np.empty(n)
    filled = 0
    while filled < n:
        need = n - filled
        batch = params.mean + sd * rng.standard_normal(int(need / acc * 1.1) + 16)
        keep = batch[(batch >= params.lower) & (batch <= params.upper)][:need]
        out[filled : filled + keep.size] = keep
        filled += keep.size
    return out


def _noise(config: ScenarioConfig, shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    if config.noise is None:
        return np.zeros(shape)
    return sample_truncated_normal(config.noise, shape[0] * shape[1], rng).reshape(shape)


def build_block_augmentation_graph(
    config: ScenarioConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Assemble the symmetric block kernel ``T`` and its class labels.

    Blocks are visited as (i, j) with i <= j in row-major order, each with its
    own noise draw; block (j, i) is the transpose of block (i, j).
    """
    n, c = config.points_per_class, config.classes
    T = np.empty((n * c, n * c))
    for i in range(c):
        for j in range(i, c):
            level = config.intra_levels[i] if i == j else config.cross_level
            eps = _noise(config, (n, n), rng)
            block = level + 0.5 * (eps + eps.T)
            T[i * n : (i + 1) * n, j * n : (j + 1) * n] = block
            T[j * n : (j + 1) * n, i * n : (i + 1) * n] = block.T
    if config.clamp_negative:
        np.maximum(T, 0.0, out=T)
    labels = np.repeat(np.arange(c), n)
    return T, labels


def build_ood_id_block(
    config: ScenarioConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """OOD-ID connectivity with i.i.d. entries, plus the constant OOD connector."""
    shape = (config.ood_points, config.n_id)
    if config.ood_conn is None:
        A_oi = np.zeros(shape)
    else:
        A_oi = sample_truncated_normal(config.ood_conn, shape[0] * shape[1], rng).reshape(shape)
    p = np.full((config.ood_points, config.classes), float(config.p_value))
    return A_oi, p


def make_scenario(config: ScenarioConfig) -> Scenario:
    rng = make_rng(config.seed)
    T, labels = build_block_augmentation_graph(config, rng)
    A_oi, p = build_ood_id_block(config, rng)
    return Scenario(T=T, labels=labels, A_oi_raw=A_oi, p_matrix=p, config=config)


def save_scenario(scenario: Scenario, directory: str | Path) -> Path:
    """Write the scenario as CSV blocks plus ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {
        "T": ("T.csv", scenario.T, "augmentation"),
        "labels": ("labels.csv", scenario.labels.reshape(-1, 1).astype(float), "labels"),
        "A_oi_raw": ("A_oi.csv", scenario.A_oi_raw, "ood_id"),
        "p_matrix": ("p.csv", scenario.p_matrix, "connector_p"),
    }
    for fname, arr, kind in files.values():
        matrix_io.write_matrix(directory / fname, arr, kind)
    manifest = {
        "config": scenario.config.to_dict(),
        "files": {k: v[0] for k, v in files.items()},
        "rng": scenario.rng_name,
        "numpy": np.__version__,
        "seed": scenario.config.seed,
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return directory


def load_scenario(directory: str | Path) -> Scenario:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    files = manifest["files"]
    arrays = {k: matrix_io.read_matrix(directory / v)[0] for k, v in files.items()}
    return Scenario(
        T=arrays["T"],
        labels=arrays["labels"].ravel().astype(int),
        A_oi_raw=arrays["A_oi_raw"],
        p_matrix=arrays["p_matrix"],
        config=ScenarioConfig.from_dict(manifest["config"]),
        rng_name=manifest["rng"],
    )
