"""Pipeline configuration and its flat ``key = value`` file format.

Every key maps onto one field of :class:`PipelineConfig`; lines starting with
``#`` are comments. Writing and re-reading a config is lossless, and the
resolved config is stored next to every run's outputs.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from datetime import date
from pathlib import Path

from .calibration import CalibrationConfig
from .network import EdgeFilterConfig, Method
from .nulls import Bin, CalibratedNullConfig, ShuffleConfig
from .similarity import KernelConfig


@dataclass
class PipelineConfig:
    input: str = ""
    output: str = "artifacts"
    seed: int = 0
    threads: int = 1
    replicas: int = 100
    null_models: str = "calibrated,shuffle"
    write_replicas: bool = False

    horizon_start: date = date(2014, 1, 1)
    horizon_end: date = date(2024, 12, 31)
    amendments: str = "latest"

    min_trades: int = 8
    min_overlap_weeks: int = 4
    score_threshold: float = 0.8
    require_tenure_overlap: bool = True
    method: str = "best_match"
    kernel_width: int = 7

    quarter_length_days: int = 91
    open_days_per_quarter: int = 30
    p_buy: float = 0.528
    shuffle_bin: str = "quarter"

    closeness_distance: str = "unit"
    eigen_tol: float = 1e-10
    eigen_max_iter: int = 100000
    oddball_law: str = "edpl"
    lof_k: int = 20
    top: int = 100

    allowed_days: int = 1200
    calib_alpha: float = 0.05
    # 0 means "count from the ingested data"
    calib_firms: int = 0
    calib_insiders: int = 0
    calib_simulate: int = 0

    # ---- derived module configs
    @property
    def horizon(self) -> tuple[date, date]:
        return self.horizon_start, self.horizon_end

    @property
    def models(self) -> list[str]:
        return [m.strip() for m in self.null_models.split(",") if m.strip()]

    def edge_filter(self) -> EdgeFilterConfig:
        return EdgeFilterConfig(
            min_trades=self.min_trades,
            min_overlap_weeks=self.min_overlap_weeks,
            score_threshold=self.score_threshold,
            require_tenure_overlap=self.require_tenure_overlap,
            method=Method(self.method),
            kernel=KernelConfig(self.kernel_width),
        )

    def calibrated_null(self) -> CalibratedNullConfig:
        return CalibratedNullConfig(
            horizon=self.horizon,
            quarter_length_days=self.quarter_length_days,
            open_business_days_per_quarter=self.open_days_per_quarter,
            p_buy=self.p_buy,
            seed=self.seed,
            replicas=self.replicas,
        )

    def shuffle_null(self) -> ShuffleConfig:
        return ShuffleConfig(bin=Bin(self.shuffle_bin), seed=self.seed, replicas=self.replicas)

    def calibration(self, n_firms: int, n_insiders: int) -> CalibrationConfig:
        return CalibrationConfig(
            allowed_days=self.allowed_days,
            m=self.min_trades,
            n=self.min_trades,
            n_firms=self.calib_firms or max(n_firms, 1),
            n_insiders=self.calib_insiders or max(n_insiders, 1),
            alpha=self.calib_alpha,
            window_days=2 * self.kernel_width,
        )

    def validate(self) -> None:
        self.edge_filter()
        self.calibrated_null()
        self.shuffle_null()
        unknown = set(self.models) - {"calibrated", "shuffle"}
        if unknown:
            raise ValueError(f"unknown null models {sorted(unknown)}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.replicas < 0:
            raise ValueError("replicas must be >= 0")
        if self.amendments not in ("latest", "all"):
            raise ValueError("amendments must be 'latest' or 'all'")

    # ---- serialisation
    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, bool):
                val = "true" if val else "false"
            elif isinstance(val, date):
                val = val.isoformat()
            elif isinstance(val, float):
                val = repr(val)
            lines.append(f"{f.name} = {val}")
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    def with_overrides(self, overrides: dict[str, str]) -> "PipelineConfig":
        kinds = {f.name: f.type for f in fields(self)}
        changes = {}
        for key, raw in overrides.items():
            key = key.strip().replace("-", "_")
            if key not in kinds:
                raise KeyError(f"unknown config key {key!r}")
            changes[key] = _coerce(getattr(self, key), raw.strip())
        return dataclasses.replace(self, **changes)

    @classmethod
    def loads(cls, text: str) -> "PipelineConfig":
        return cls().with_overrides(parse_kv(text))

    @classmethod
    def read(cls, path: str | Path) -> "PipelineConfig":
        return cls.loads(Path(path).read_text())


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected 'key = value', got {line!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _coerce(current, raw: str):
    if isinstance(current, bool):
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, date):
        return date.fromisoformat(raw)
    return raw
