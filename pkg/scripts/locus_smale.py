from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from locus_fields import connected_components, label_components, region_at, sample_grid
from locus_models import (
    CLUSTER_RADIUS,
    DEFAULT_EXTREMAL_RESOLUTION,
    DEFAULT_N_SAMPLES,
    DEFAULT_RESOLUTION,
    PATTERN_SEARCH_ITERATIONS,
    SINGULAR_RADIUS_FACTOR,
    AtInfinity,
    Bbox,
    GridField,
    InputError,
    Region,
    default_bbox,
)
from locus_polynomial import (
    ComplexPolynomial,
    clustered_roots,
    divided_difference,
    root_multiplicity,
    taylor_shift,
)
from locus_rational import RationalMap, eval_W, make_rational_map, modulus_many


# Verdicts for sublevel components that hold no zero of W_i.
STATUS_CONTAINS_ZERO = "contains-zero"
STATUS_CLIPPED = "clipped-by-bbox"
STATUS_GRID_ARTIFACT = "grid-artifact"
STATUS_UNRESOLVED = "unresolved"

CLAIM_INSIDE = "quotient<=1 inside a |W_i|<1 component"
CLAIM_OUTSIDE = "quotient>1 outside every |W_i|<1 component"
CLAIM_MEAN_VALUE = "min over critical points of quotient > 1"

_COMPASS_DIRECTIONS = tuple(cmath.exp(1j * k * math.pi / 4) for k in range(8))


@dataclass(frozen=True, eq=False)
class SmaleCase:
    f: ComplexPolynomial
    critical_points: tuple[tuple[complex, int], ...]
    maps: tuple[RationalMap, ...]

    @property
    def degree(self) -> int:
        return self.f.degree

    @property
    def scale(self) -> float:
        return max([1.0] + [abs(c) for c, _ in self.critical_points])

    def thetas(self) -> list[complex]:
        return [c for c, _ in self.critical_points]


@dataclass(frozen=True)
class RegionVerdict:
    id: int
    cell_count: int
    critical_points: tuple[int, ...]
    contains_zero: bool
    touches_bbox: bool
    status: str


@dataclass(frozen=True)
class Counterexample:
    s: complex
    i: int
    quotient: float
    claim: str


@dataclass(frozen=True, eq=False)
class ThetaAudit:
    theta: complex
    multiplicity: int
    limit_at_theta: float
    theta_in_region: bool
    neighborhood_below_one: bool
    regions: tuple[Region, ...]
    verdicts: tuple[RegionVerdict, ...]
    regions_without_critical_points: int
    inside_samples: int
    outside_samples: int
    boundary_nodes_excluded: int
    quotient_gt1_inside: float | None
    quotient_le1_outside: float | None


@dataclass(frozen=True)
class QuantifierStats:
    samples: int
    forall_le1: float
    min_le1: float


@dataclass(frozen=True, eq=False)
class SmaleAuditReport:
    f: ComplexPolynomial
    critical_points: tuple[tuple[complex, int], ...]
    per_theta: tuple[ThetaAudit, ...]
    counterexamples: tuple[Counterexample, ...]
    quantifiers: QuantifierStats
    extremal: tuple[complex, float]
    bbox: Bbox
    resolution: tuple[int, int]
    n_samples: int
    seed: int


def _require_degree(f: ComplexPolynomial) -> None:
    if f.degree < 2:
        raise InputError(f"polynomial must have degree >= 2, got degree {f.degree}")


def _resolution(resolution: int | Sequence[int]) -> tuple[int, int]:
    if isinstance(resolution, int):
        return resolution, resolution
    nx, ny = resolution
    return int(nx), int(ny)


def critical_points(f: ComplexPolynomial) -> list[tuple[complex, int]]:
    """Clustered roots of f' as (theta, multiplicity); multiplicities sum to deg f - 1."""
    _require_degree(f)
    return clustered_roots(f.derivative())


def _deflated_quotient(q: ComplexPolynomial, fprime: ComplexPolynomial, c: complex, s: complex, at_least: int) -> float:
    """|Q/f'| at s after dividing the common factor (s - c)^m out of both."""
    m = max(at_least, min(root_multiplicity(q, c), root_multiplicity(fprime, c)))
    top = ComplexPolynomial(taylor_shift(q, c).coeffs[m:])
    bottom = ComplexPolynomial(taylor_shift(fprime, c).coeffs[m:])
    h = s - c
    b = bottom(h)
    if b == 0:
        return math.inf
    return abs(top(h)) / abs(b)


def smale_quotient(f: ComplexPolynomial, s: complex, theta: complex) -> float:
    """|f(s) - f(theta)| / (|s - theta| |f'(s)|), evaluated as |Q_theta(s)| / |f'(s)|."""
    s = complex(s)
    theta = complex(theta)
    fprime = f.derivative()
    q = divided_difference(f, theta)
    if abs(s - theta) <= CLUSTER_RADIUS * max(1.0, abs(theta)):
        return _deflated_quotient(q, fprime, theta, s, at_least=0)
    top = q(s)
    bottom = fprime(s)
    if fprime.is_negligible(bottom, s) and q.is_negligible(top, s):
        return _deflated_quotient(q, fprime, s, s, at_least=1)
    if bottom == 0:
        return math.inf
    return abs(top) / abs(bottom)


def build_W(f: ComplexPolynomial, theta: complex, multiplicity: int | None = None) -> RationalMap:
    """W_theta = f' / Q_theta; a critical theta is registered as a removable point of that multiplicity."""
    _require_degree(f)
    theta = complex(theta)
    fprime = f.derivative()
    if multiplicity is None:
        multiplicity = root_multiplicity(fprime, theta)
    removable = [(theta, multiplicity)] if multiplicity > 0 else []
    return make_rational_map(fprime, divided_difference(f, theta), removable)


def limit_at_critical_point(f: ComplexPolynomial, theta: complex, multiplicity: int | None = None) -> float:
    W = build_W(f, theta, multiplicity)
    rp = W.removable_near(complex(theta))
    value = eval_W(W, theta) if rp is None else rp.limit()
    return math.inf if isinstance(value, AtInfinity) else abs(value)


def make_case(f: ComplexPolynomial) -> SmaleCase:
    points = tuple(critical_points(f))
    maps = tuple(build_W(f, theta, m) for theta, m in points)
    return SmaleCase(f, points, maps)


def _below_one(values: np.ndarray) -> np.ndarray:
    return values < 1.0


def modulus_field(W: RationalMap, bbox: Bbox, nx: int, ny: int) -> GridField:
    return sample_grid(lambda points: modulus_many(W, points), bbox, nx, ny)


def adjacent_domains(
    case: SmaleCase,
    i: int,
    bbox: Bbox | None = None,
    resolution: int | Sequence[int] = DEFAULT_RESOLUTION,
) -> list[Region]:
    """Components of {|W_i| < 1}, each tagged with the critical points of f it holds."""
    bbox = bbox or default_bbox(case.scale)
    nx, ny = _resolution(resolution)
    field = modulus_field(case.maps[i], bbox, nx, ny)
    return connected_components(field, _below_one, level=1.0, marks=case.thetas())


def min_quotient_many(case: SmaleCase, points: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        quotients = [1.0 / modulus_many(W, points) for W in case.maps]
    return np.min(quotients, axis=0)


def min_quotient(case: SmaleCase, s: complex) -> tuple[float, int]:
    values = [smale_quotient(case.f, s, theta) for theta in case.thetas()]
    best = min(range(len(values)), key=values.__getitem__)
    return values[best], best


def extremal_search(
    f: ComplexPolynomial,
    bbox: Bbox | None = None,
    resolution: int | Sequence[int] = DEFAULT_EXTREMAL_RESOLUTION,
    case: SmaleCase | None = None,
) -> tuple[complex, float]:
    """Maximize min_i quotient(s, theta_i): grid scan, then 8-direction pattern search halving the step."""
    case = case or make_case(f)
    bbox = bbox or default_bbox(case.scale)
    nx, ny = _resolution(resolution)
    field = sample_grid(lambda points: min_quotient_many(case, points), bbox, nx, ny)
    scores = np.where(np.isfinite(field.values), field.values, -np.inf)
    best = field.node(int(np.argmax(scores)))
    value, _ = min_quotient(case, best)
    step = max(field.dx, field.dy)
    for _ in range(PATTERN_SEARCH_ITERATIONS):
        improved = False
        for direction in _COMPASS_DIRECTIONS:
            candidate = best + step * direction
            if not bbox.contains(candidate):
                continue
            score, _ = min_quotient(case, candidate)
            if score > value:
                best, value, improved = candidate, score, True
        if not improved:
            step *= 0.5
    return best, value


def _touches_edge(mask: np.ndarray) -> bool:
    return bool(mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any())


def _zero_owners(W: RationalMap, labels: np.ndarray, field: GridField) -> set[int]:
    return {region_at(labels, field, z) for z, _ in W.zeros} - {0}


def _reverify(W: RationalMap, field: GridField, region: Region, fine: GridField, fine_labels: np.ndarray) -> str:
    """Inspect the region's lowest node on the doubled grid; a zero or the edge reached there dismisses it."""
    cells = region.cells
    lowest = int(cells[np.argmin(field.values.ravel()[cells])])
    row, col = divmod(lowest, field.nx)
    label = fine_labels[2 * row, 2 * col]
    if label == 0:
        return STATUS_GRID_ARTIFACT
    if _touches_edge(fine_labels == label) or label in _zero_owners(W, fine_labels, fine):
        return STATUS_GRID_ARTIFACT
    return STATUS_UNRESOLVED


def _interior(mask: np.ndarray, border_value: int) -> np.ndarray:
    structure = ndimage.generate_binary_structure(2, 1)
    return ndimage.binary_erosion(mask, structure=structure, border_value=border_value)


def _sample_nodes(rng: np.random.Generator, nodes: np.ndarray, n_samples: int) -> np.ndarray:
    if len(nodes) <= n_samples:
        return nodes
    return np.sort(rng.choice(nodes, size=n_samples, replace=False))


def _audit_theta(
    case: SmaleCase,
    i: int,
    bbox: Bbox,
    nx: int,
    ny: int,
    n_samples: int,
    seed: int,
) -> tuple[ThetaAudit, list[Counterexample]]:
    W = case.maps[i]
    theta, multiplicity = case.critical_points[i]
    field = modulus_field(W, bbox, nx, ny)
    labels, _ = label_components(field, _below_one)
    regions = connected_components(field, _below_one, level=1.0, marks=case.thetas())
    zero_owners = _zero_owners(W, labels, field)

    fine: tuple[GridField, np.ndarray] | None = None
    verdicts = []
    for region in regions:
        touches = _touches_edge(region.mask)
        contains_zero = region.id in zero_owners
        if contains_zero:
            status = STATUS_CONTAINS_ZERO
        elif touches:
            status = STATUS_CLIPPED
        else:
            if fine is None:
                fine_field = modulus_field(W, bbox, 2 * nx - 1, 2 * ny - 1)
                fine = (fine_field, label_components(fine_field, _below_one)[0])
            status = _reverify(W, field, region, *fine)
        verdicts.append(RegionVerdict(
            id=region.id,
            cell_count=len(region.cells),
            critical_points=region.contains,
            contains_zero=contains_zero,
            touches_bbox=touches,
            status=status,
        ))

    selected = labels > 0
    inside = np.flatnonzero(_interior(selected, border_value=0))
    outside = np.flatnonzero(_interior(~selected, border_value=1))
    rng = np.random.default_rng([seed, i + 1])
    inside = _sample_nodes(rng, inside, n_samples)
    outside = _sample_nodes(rng, outside, n_samples)

    counterexamples = []
    inside_ok = 0
    for index in inside:
        s = field.node(index)
        q = smale_quotient(case.f, s, theta)
        if q > 1:
            inside_ok += 1
        else:
            counterexamples.append(Counterexample(s, i, q, CLAIM_INSIDE))
    outside_ok = 0
    for index in outside:
        s = field.node(index)
        q = smale_quotient(case.f, s, theta)
        if q <= 1:
            outside_ok += 1
        else:
            counterexamples.append(Counterexample(s, i, q, CLAIM_OUTSIDE))

    radius = SINGULAR_RADIUS_FACTOR * case.scale
    ring = np.array([theta + radius * d for d in _COMPASS_DIRECTIONS])
    strict_total = int(np.count_nonzero(_interior(selected, 0))) + int(np.count_nonzero(_interior(~selected, 1)))

    audit = ThetaAudit(
        theta=theta,
        multiplicity=multiplicity,
        limit_at_theta=limit_at_critical_point(case.f, theta, multiplicity),
        theta_in_region=any(i in region.contains for region in regions),
        neighborhood_below_one=bool(np.all(modulus_many(W, ring) < 1.0)),
        regions=tuple(regions),
        verdicts=tuple(verdicts),
        regions_without_critical_points=sum(1 for region in regions if not region.contains),
        inside_samples=len(inside),
        outside_samples=len(outside),
        boundary_nodes_excluded=nx * ny - strict_total,
        quotient_gt1_inside=inside_ok / len(inside) if len(inside) else None,
        quotient_le1_outside=outside_ok / len(outside) if len(outside) else None,
    )
    return audit, counterexamples


def _quantifier_stats(case: SmaleCase, bbox: Bbox, n_samples: int, seed: int) -> tuple[QuantifierStats, list[Counterexample]]:
    rng = np.random.default_rng([seed, 0])
    sigmas = rng.uniform(bbox.sigma_min, bbox.sigma_max, n_samples)
    ts = rng.uniform(bbox.t_min, bbox.t_max, n_samples)
    forall_count = 0
    min_count = 0
    counterexamples = []
    for sigma, t in zip(sigmas, ts):
        s = complex(sigma, t)
        values = [smale_quotient(case.f, s, theta) for theta in case.thetas()]
        if all(v <= 1 for v in values):
            forall_count += 1
        best = min(range(len(values)), key=values.__getitem__)
        if values[best] <= 1:
            min_count += 1
        else:
            counterexamples.append(Counterexample(s, best, values[best], CLAIM_MEAN_VALUE))
    stats = QuantifierStats(
        samples=n_samples,
        forall_le1=forall_count / n_samples if n_samples else 0.0,
        min_le1=min_count / n_samples if n_samples else 0.0,
    )
    return stats, counterexamples


def audit_theorems(
    case: SmaleCase,
    bbox: Bbox | None = None,
    resolution: int | Sequence[int] = DEFAULT_RESOLUTION,
    n_samples: int = DEFAULT_N_SAMPLES,
    seed: int = 0,
) -> SmaleAuditReport:
    """Findings on the |W_i| < 1 components of every critical point; never asserts the claims it audits."""
    bbox = bbox or default_bbox(case.scale)
    nx, ny = _resolution(resolution)
    per_theta = []
    counterexamples: list[Counterexample] = []
    for i in range(len(case.maps)):
        audit, found = _audit_theta(case, i, bbox, nx, ny, n_samples, seed)
        per_theta.append(audit)
        counterexamples.extend(found)
    stats, found = _quantifier_stats(case, bbox, n_samples, seed)
    counterexamples.extend(found)
    return SmaleAuditReport(
        f=case.f,
        critical_points=case.critical_points,
        per_theta=tuple(per_theta),
        counterexamples=tuple(counterexamples),
        quantifiers=stats,
        extremal=extremal_search(case.f, bbox, case=case),
        bbox=bbox,
        resolution=(nx, ny),
        n_samples=n_samples,
        seed=seed,
    )


def replay_counterexample(case: SmaleCase, counterexample: Counterexample) -> bool:
    """Re-evaluate the quotient and check the inequality the counterexample was recorded under."""
    if counterexample.claim == CLAIM_MEAN_VALUE:
        value, _ = min_quotient(case, counterexample.s)
        return value > 1
    theta = case.critical_points[counterexample.i][0]
    value = smale_quotient(case.f, counterexample.s, theta)
    if counterexample.claim == CLAIM_INSIDE:
        return value <= 1
    if counterexample.claim == CLAIM_OUTSIDE:
        return value > 1
    raise ValueError(f"unknown claim {counterexample.claim!r}")
