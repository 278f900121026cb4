from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


SCHEMA_VERSION = 1
COMMANDS = ("roots", "trace", "field", "smale-audit", "smale-regions", "smale-extremal", "sweep")
SUPPORTED_FORMATS = ("json", "csv", "svg")
FIELD_QUANTITIES = ("modulus", "gain", "phase-residual")

DEFAULT_TOL_ROOT = 1e-9
DEFAULT_MAX_ITERS = 200
CLUSTER_RADIUS = 1e-6

DEFAULT_GAIN_CAP = 1e6
DEFAULT_CORRECTOR_TOL = 1e-8
DEFAULT_CORRECTOR_ITERS = 12
DEFAULT_MAX_STEPS = 100_000
DEFAULT_H_MIN = 1e-8
SEED_EPS_FACTOR = 1e-3
STEP_FACTOR = 1e-2
SINGULAR_RADIUS_FACTOR = 1e-3
BOUNDARY_TOL_FACTOR = 1e-6
BOUNDARY_SAMPLES = 1024
MONOTONE_TOL = 1e-9

BBOX_HALF_WIDTH_FACTOR = 2.0
DEFAULT_RESOLUTION = 512
DEFAULT_EXTREMAL_RESOLUTION = 201
DEFAULT_N_SAMPLES = 256
PATTERN_SEARCH_ITERATIONS = 60


class LocusLabError(Exception):
    """Base class for every failure raised by the locuslab scripts."""


class InputError(LocusLabError):
    """Malformed user input (exit status 1)."""


class NumericError(LocusLabError):
    """Numerical failure on well-formed input (exit status 2)."""


class PolynomialParseError(InputError):
    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        super().__init__(f"{message} at position {position}\n  {text}\n  {' ' * position}^")


class RootFindingError(NumericError):
    def __init__(self, message: str, iterates: list[complex], residuals: list[float]):
        self.iterates = iterates
        self.residuals = residuals
        super().__init__(message)


class IndeterminateFormError(NumericError):
    """0/0 at a coincident zero/pole that was never registered as removable."""


class SingularPointError(NumericError):
    """Phase or logarithmic derivative requested at a zero, pole or removable point."""


class SeedError(NumericError):
    pass


@dataclass(frozen=True)
class AtInfinity:
    """Marker returned instead of a value at a pole. Callers must branch on it."""

    def __repr__(self) -> str:
        return "AT_INFINITY"


AT_INFINITY = AtInfinity()


@dataclass(frozen=True)
class Bbox:
    sigma_min: float
    sigma_max: float
    t_min: float
    t_max: float

    def __post_init__(self):
        values = (self.sigma_min, self.sigma_max, self.t_min, self.t_max)
        if not all(math.isfinite(v) for v in values):
            raise InputError(f"bbox must be finite: {values}")
        if not (self.sigma_min < self.sigma_max and self.t_min < self.t_max):
            raise InputError(f"bbox is degenerate: {values}")

    @classmethod
    def centered(cls, half_width: float, center: complex = 0j) -> Bbox:
        return cls(
            center.real - half_width,
            center.real + half_width,
            center.imag - half_width,
            center.imag + half_width,
        )

    @property
    def width(self) -> float:
        return self.sigma_max - self.sigma_min

    @property
    def height(self) -> float:
        return self.t_max - self.t_min

    def contains(self, s: complex) -> bool:
        return self.sigma_min <= s.real <= self.sigma_max and self.t_min <= s.imag <= self.t_max

    def distance_to_edge(self, s: complex) -> float:
        return min(
            s.real - self.sigma_min,
            self.sigma_max - s.real,
            s.imag - self.t_min,
            self.t_max - s.imag,
        )

    def as_list(self) -> list[float]:
        return [self.sigma_min, self.sigma_max, self.t_min, self.t_max]


def default_bbox(scale: float) -> Bbox:
    return Bbox.centered(BBOX_HALF_WIDTH_FACTOR * scale)


@dataclass(frozen=True)
class TraceOptions:
    bbox: Bbox
    h_init: float
    h_max: float
    max_step: float
    h_min: float = DEFAULT_H_MIN
    gain_cap: float = DEFAULT_GAIN_CAP
    tol: float = DEFAULT_CORRECTOR_TOL
    corrector_iters: int = DEFAULT_CORRECTOR_ITERS
    max_steps: int = DEFAULT_MAX_STEPS
    singular_radius: float = SINGULAR_RADIUS_FACTOR
    boundary_tol: float = BOUNDARY_TOL_FACTOR
    seed_eps: float = SEED_EPS_FACTOR

    @classmethod
    def for_scale(cls, scale: float, bbox: Bbox | None = None, **overrides) -> TraceOptions:
        h = STEP_FACTOR * scale
        base = {
            "bbox": bbox or default_bbox(scale),
            "h_init": h,
            "h_max": h,
            "max_step": 2.0 * h,
            "singular_radius": SINGULAR_RADIUS_FACTOR * scale,
            "boundary_tol": BOUNDARY_TOL_FACTOR * scale,
            "seed_eps": SEED_EPS_FACTOR * scale,
        }
        base.update(overrides)
        return cls(**base)


@dataclass(frozen=True)
class LocusPoint:
    s: complex
    gain: float
    phase_residual: float


@dataclass(frozen=True)
class LocusTrace:
    alpha: float
    points: tuple[LocusPoint, ...]
    origin: str
    branch: int
    terminus: str
    terminus_zero: int | None = None
    monotone_gain: bool = True
    first_violation: int | None = None
    saddle_indices: tuple[int, ...] = ()
    diagnostic: str = ""

    def positions(self) -> np.ndarray:
        return np.array([[p.s.real, p.s.imag] for p in self.points], dtype=float).reshape(-1, 2)


@dataclass(frozen=True)
class MonotoneReport:
    passed: bool
    first_violation: int | None
    violation_count: int
    annotated_violations: int
    unannotated_violations: int


@dataclass(frozen=True, eq=False)
class GridField:
    bbox: Bbox
    nx: int
    ny: int
    values: np.ndarray  # shape (ny, nx), row-major, +inf marks singular samples

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise InputError(f"grid needs at least 2x2 samples, got {self.nx}x{self.ny}")
        if self.values.shape != (self.ny, self.nx):
            raise ValueError(f"values shape {self.values.shape} does not match {self.ny}x{self.nx}")

    @property
    def dx(self) -> float:
        return self.bbox.width / (self.nx - 1)

    @property
    def dy(self) -> float:
        return self.bbox.height / (self.ny - 1)

    @property
    def cell_diagonal(self) -> float:
        return math.hypot(self.dx, self.dy)

    def sigmas(self) -> np.ndarray:
        return np.linspace(self.bbox.sigma_min, self.bbox.sigma_max, self.nx)

    def ts(self) -> np.ndarray:
        return np.linspace(self.bbox.t_min, self.bbox.t_max, self.ny)

    def points(self) -> np.ndarray:
        return self.sigmas()[None, :] + 1j * self.ts()[:, None]

    def node(self, flat_index: int) -> complex:
        row, col = divmod(int(flat_index), self.nx)
        return complex(self.sigmas()[col], self.ts()[row])

    def with_values(self, values: np.ndarray) -> GridField:
        return GridField(self.bbox, self.nx, self.ny, values)


@dataclass(frozen=True, eq=False)
class Polyline:
    points: np.ndarray  # shape (k, 2): sigma, t
    closed: bool

    def vertices(self) -> np.ndarray:
        """Vertices with the first one repeated at the end for closed curves."""
        if self.closed and len(self.points):
            return np.vstack([self.points, self.points[:1]])
        return self.points


@dataclass(frozen=True, eq=False)
class Region:
    id: int
    cells: np.ndarray  # flat grid indices
    boundary: tuple[Polyline, ...]
    contains: tuple[int, ...]  # indices into the marked points
    mask: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class RunConfig:
    command: str
    poly: str | None
    num: str | None
    den: str | None
    bbox: Bbox | None
    resolution: tuple[int, int]
    alpha: float | None
    seed: int
    out_dir: str
    formats: tuple[str, ...]
    quantity: str
    level: float
    n_samples: int
    count: int
    degree_range: tuple[int, int]
    coeff_box: float
    threads: int
    quiet: bool
