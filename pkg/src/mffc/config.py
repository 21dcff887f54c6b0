"""Pipeline configuration: key=value files and named parameter presets."""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .descriptor import DEFAULT_FFT_CROSSOVER, BlockSpec
from .errors import ParameterError
from .gabor import GaborParams
from .pooling import PoolSpec

KINDS = ("gabor", "gabor_pca", "gabor_ica")


@dataclass
class PipelineConfig:
    preset: str = "feret1"
    # Gabor wavelets
    sigma: float = 2 * math.pi
    k_max: float = math.pi / 2
    f: float = math.sqrt(2)
    u_max: int = 8
    v_max: int = 5
    support: int = 7
    # diversification
    kind: str = "gabor"
    n_folds: int = 2
    crop: int = 0
    # descriptor
    grid_rows: int = 8
    grid_cols: int = 8
    overlap: float = 0.0
    pool_window: int = 2
    pool_stride: int = 2
    pool_mode: str = "avg"
    backend: str = "auto"
    fft_crossover: int = DEFAULT_FFT_CROSSOVER
    image_height: int = 0
    image_width: int = 0
    # learning
    n_patches: int = 500_000
    n_filters: int = 8
    ica_max_iter: int = 200
    ica_tol: float = 1e-6
    seed: int = 0
    # compression and evaluation
    wpca_dim: int = 1000
    wpca_split: str = "gallery"
    flip: bool = False
    kfold: int = 10
    video_frames: int = 20
    threads: int = 1

    def __post_init__(self):
        self.kind = self.kind.replace("-", "_")
        if self.kind not in KINDS:
            raise ParameterError(f"descriptor kind must be one of {KINDS}, got {self.kind!r}")
        if self.n_folds < 1:
            raise ParameterError("the number of folds M must be >= 1")
        if self.kind != "gabor" and self.n_folds != 2:
            raise ParameterError("learned offspring sets are 2-fold (Gabor then learned bank)")
        # validate nested specs eagerly
        self.gabor_params()
        self.block_spec()
        self.pool_spec()

    def gabor_params(self) -> GaborParams:
        return GaborParams(self.sigma, self.k_max, self.f, self.u_max, self.v_max, self.support)

    def block_spec(self) -> BlockSpec:
        return BlockSpec(self.grid_rows, self.grid_cols, self.overlap)

    def pool_spec(self) -> PoolSpec:
        return PoolSpec(self.pool_window, self.pool_stride, self.pool_mode)

    @property
    def image_size(self) -> tuple[int, int] | None:
        if self.image_height and self.image_width:
            return self.image_height, self.image_width
        return None

    @property
    def offspring_side(self) -> int:
        side = self.n_folds * (self.support - 1) + 1
        return self.crop or side

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        return "".join(f"{fld.name}={_format(getattr(self, fld.name))}\n" for fld in fields(self))

    def hash(self) -> str:
        # threads never changes results
        text = "".join(line for line in self.to_text().splitlines(True) if not line.startswith("threads="))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @classmethod
    def from_preset(cls, name: str, **overrides) -> "PipelineConfig":
        if name not in PRESETS:
            raise ParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        values = dict(PRESETS[name], preset=name)
        values.update(overrides)
        return cls(**values)

    @classmethod
    def load(cls, path=None, preset: str | None = None, overrides: dict | None = None) -> "PipelineConfig":
        """Preset defaults, then file values, then ``overrides`` (strings or typed)."""
        raw: dict = {}
        if path is not None:
            raw.update(parse_key_values(Path(path).read_text()))
        raw.update(overrides or {})
        name = preset or raw.pop("preset", None) or "feret1"
        raw.pop("preset", None)
        return cls.from_preset(name, **coerce(raw))


def _format(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_key_values(text: str) -> dict[str, str]:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {n}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def coerce(raw: dict) -> dict:
    """Convert string values to the declared field types."""
    types = {fld.name: fld.type for fld in fields(PipelineConfig)}
    out = {}
    for key, value in raw.items():
        if key not in types:
            raise ParameterError(f"unknown config key {key!r}")
        if not isinstance(value, str):
            out[key] = value
            continue
        kind = types[key]
        try:
            if kind == "bool":
                out[key] = value.lower() in ("1", "true", "yes", "on")
            elif kind == "int":
                out[key] = int(value)
            elif kind == "float":
                out[key] = float(value)
            else:
                out[key] = value
        except ValueError as exc:
            raise ParameterError(f"bad value for {key}: {value!r}") from exc
    return out


PRESETS: dict[str, dict] = {
    "feret1": dict(grid_rows=8, grid_cols=8, overlap=0.0, pool_window=2, pool_stride=2, wpca_dim=1000,
                   support=7, image_height=128, image_width=128),
    "feret2": dict(grid_rows=8, grid_cols=8, overlap=0.5, pool_window=2, pool_stride=2, wpca_dim=300,
                   support=9, image_height=128, image_width=128),
    "ar": dict(grid_rows=8, grid_cols=8, overlap=0.0, pool_window=2, pool_stride=2, wpca_dim=180,
               support=9, image_height=165, image_width=120),
    "lfw_a": dict(grid_rows=10, grid_cols=6, overlap=0.5, pool_window=2, pool_stride=2, wpca_dim=2000,
                  support=9, image_height=150, image_width=80, flip=True),
    "lfw_hpen": dict(grid_rows=11, grid_cols=8, overlap=0.5, pool_window=4, pool_stride=4, wpca_dim=2000,
                     support=9, image_height=88, image_width=64, flip=True),
    "ytf": dict(grid_rows=8, grid_cols=6, overlap=0.5, pool_window=2, pool_stride=2, wpca_dim=2000,
                support=9, image_height=120, image_width=100, flip=True),
    # desk-scale settings for the synthetic corpus
    "synth": dict(grid_rows=4, grid_cols=4, overlap=0.0, pool_window=2, pool_stride=2, wpca_dim=100,
                  support=7, image_height=64, image_width=64, n_patches=50_000),
}
