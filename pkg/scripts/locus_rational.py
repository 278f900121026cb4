from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from locus_models import (
    AT_INFINITY,
    CLUSTER_RADIUS,
    AtInfinity,
    IndeterminateFormError,
    SingularPointError,
)
from locus_polynomial import (
    ComplexPolynomial,
    clustered_roots,
    polynomial_to_json,
    taylor_shift,
)


# Distance (relative to scene scale) under which s counts as sitting on a zero, pole or removable point.
POINT_TOL = 1e-12


@dataclass(frozen=True)
class RemovablePoint:
    """Common root of N and D; N and D are deflated by h^multiplicity around it (h = s - center)."""

    center: complex
    multiplicity: int
    num_deflated: ComplexPolynomial
    den_deflated: ComplexPolynomial

    @classmethod
    def build(cls, num: ComplexPolynomial, den: ComplexPolynomial, center: complex, multiplicity: int) -> RemovablePoint:
        num_shift = taylor_shift(num, center).coeffs
        den_shift = taylor_shift(den, center).coeffs
        return cls(
            complex(center),
            multiplicity,
            ComplexPolynomial(num_shift[multiplicity:]),
            ComplexPolynomial(den_shift[multiplicity:]),
        )

    def limit(self) -> complex | AtInfinity:
        n = self.num_deflated.coeffs[0]
        d = self.den_deflated.coeffs[0]
        if self.den_deflated.is_negligible(d, 0j):
            return AT_INFINITY
        return n / d


@dataclass(frozen=True)
class PhaseGradient:
    d_sigma: float
    d_t: float

    @property
    def norm_sq(self) -> float:
        return self.d_sigma * self.d_sigma + self.d_t * self.d_t


@dataclass(frozen=True, eq=False)
class RationalMap:
    """W(s) = N(s)/D(s). Zeros, poles, removable points and saddles are computed once at construction."""

    num: ComplexPolynomial
    den: ComplexPolynomial
    explicit_removable: tuple[tuple[complex, int], ...] = ()
    zeros: tuple[tuple[complex, int], ...] = field(init=False)
    poles: tuple[tuple[complex, int], ...] = field(init=False)
    removable: tuple[RemovablePoint, ...] = field(init=False)
    saddles: tuple[complex, ...] = field(init=False)
    scale: float = field(init=False)

    def __post_init__(self):
        if self.num.is_zero or self.den.is_zero:
            raise ValueError("numerator and denominator must be nonzero polynomials")
        num_clusters = clustered_roots(self.num)
        den_clusters = clustered_roots(self.den)
        scale = max([1.0] + [abs(c) for c, _ in num_clusters + den_clusters])
        radius = CLUSTER_RADIUS * scale

        pairs = [(complex(c), int(m)) for c, m in self.explicit_removable if m > 0]
        for pole, beta in den_clusters:
            if any(abs(pole - c) <= radius for c, _ in pairs):
                continue
            for zero, gamma in num_clusters:
                if abs(pole - zero) <= radius:
                    pairs.append((pole, min(beta, gamma)))
                    break

        def reduce(clusters):
            kept = []
            for center, mult in clusters:
                for c, m in pairs:
                    if abs(center - c) <= radius:
                        mult -= m
                if mult > 0:
                    kept.append((center, mult))
            return tuple(kept)

        zeros = reduce(num_clusters)
        poles = reduce(den_clusters)
        removable = tuple(RemovablePoint.build(self.num, self.den, c, m) for c, m in pairs)

        cross = self.saddle_polynomial
        saddles: list[complex] = []
        if not cross.is_zero and cross.degree >= 1:
            special = [c for c, _ in zeros + poles] + [rp.center for rp in removable]
            for center, _ in clustered_roots(cross):
                if all(abs(center - c) > radius for c in special):
                    saddles.append(center)

        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "removable", removable)
        object.__setattr__(self, "saddles", tuple(saddles))
        object.__setattr__(self, "scale", scale)

    @property
    def removable_radius(self) -> float:
        return CLUSTER_RADIUS * self.scale

    @property
    def saddle_polynomial(self) -> ComplexPolynomial:
        """N'D - D'N, whose roots off the zeros and poles are the saddles of the phase field."""
        return self.num.derivative() * self.den - self.den.derivative() * self.num

    def removable_near(self, s: complex) -> RemovablePoint | None:
        for rp in self.removable:
            if abs(s - rp.center) <= self.removable_radius:
                return rp
        return None

    def singular_points(self) -> list[complex]:
        return [c for c, _ in self.zeros + self.poles] + [rp.center for rp in self.removable]

    def distance_to_zeros_and_poles(self, s: complex) -> float:
        centers = [c for c, _ in self.zeros + self.poles]
        return min((abs(s - c) for c in centers), default=math.inf)

    def nearest_zero(self, s: complex) -> int | None:
        if not self.zeros:
            return None
        return min(range(len(self.zeros)), key=lambda k: abs(s - self.zeros[k][0]))


def _parts(W: RationalMap, s: complex):
    """Numerator and denominator values at s (deflated near removable points) plus their polynomials."""
    rp = W.removable_near(s)
    if rp is not None:
        h = s - rp.center
        return rp.num_deflated, rp.den_deflated, h
    return W.num, W.den, s


def eval_W(W: RationalMap, s: complex) -> complex | AtInfinity:
    s = complex(s)
    num, den, x = _parts(W, s)
    n = num(x)
    d = den(x)
    if den.is_negligible(d, x):
        if num.is_negligible(n, x):
            raise IndeterminateFormError(
                f"0/0 at s={s!r}: register this coincident zero/pole as a removable point"
            )
        return AT_INFINITY
    return n / d


def gain(W: RationalMap, s: complex) -> float:
    """K(s) = 1/|W(s)|: 0 at poles, +inf at zeros."""
    value = eval_W(W, s)
    if isinstance(value, AtInfinity):
        return 0.0
    modulus = abs(value)
    return math.inf if modulus == 0 else 1.0 / modulus


def four_quadrant_phase(u: float, v: float) -> float:
    """arg(u + iv) in (-pi, pi]."""
    if u > 0:
        return math.atan(v / u)
    if u < 0:
        return math.atan(v / u) + math.pi if v >= 0 else math.atan(v / u) - math.pi
    if v > 0:
        return math.pi / 2
    if v < 0:
        return -math.pi / 2
    raise SingularPointError("phase of zero is undefined")


def _require_regular(W: RationalMap, s: complex, what: str) -> None:
    tol = POINT_TOL * W.scale
    for c in W.singular_points():
        if abs(s - c) <= tol:
            raise SingularPointError(f"{what} is undefined at the zero/pole/removable point {c!r}")


def phase(W: RationalMap, s: complex) -> float:
    s = complex(s)
    _require_regular(W, s, "phase")
    value = eval_W(W, s)
    if isinstance(value, AtInfinity) or value == 0:
        raise SingularPointError(f"phase is undefined at s={s!r}")
    return four_quadrant_phase(value.real, value.imag)


def log_derivative(W: RationalMap, s: complex) -> complex:
    """W'(s)/W(s) as N'/N - D'/D, never forming W' itself."""
    s = complex(s)
    _require_regular(W, s, "log-derivative")
    num, den, x = _parts(W, s)
    n = num(x)
    d = den(x)
    if num.is_negligible(n, x) or den.is_negligible(d, x):
        raise SingularPointError(f"log-derivative is undefined at s={s!r}")
    return num.derivative()(x) / n - den.derivative()(x) / d


def phase_gradient(W: RationalMap, s: complex) -> PhaseGradient:
    """(d phi/d sigma, d phi/d t) = (Im(W'/W), Re(W'/W))."""
    L = log_derivative(W, s)
    return PhaseGradient(d_sigma=L.imag, d_t=L.real)


def signed_wrap(phi, alpha):
    """Signed circular difference phi - alpha in [-pi, pi)."""
    return np.mod(np.asarray(phi) - alpha + np.pi, 2 * np.pi) - np.pi


def eval_many(W: RationalMap, points: np.ndarray) -> np.ndarray:
    """Vectorized W over an array of points; poles give complex inf, 0/0 gives nan."""
    points = np.asarray(points, dtype=complex)
    n = W.num.eval_many(points)
    d = W.den.eval_many(points)
    with np.errstate(all="ignore"):
        values = n / d
    for rp in W.removable:
        near = np.abs(points - rp.center) <= W.removable_radius
        if np.any(near):
            h = points[near] - rp.center
            n[near] = rp.num_deflated.eval_many(h)
            d[near] = rp.den_deflated.eval_many(h)
            with np.errstate(all="ignore"):
                values[near] = n[near] / d[near]
    d_zero = d == 0
    values = np.where(d_zero & (n != 0), complex(np.inf, 0.0), values)
    values = np.where(d_zero & (n == 0), complex(np.nan, np.nan), values)
    return values


def modulus_many(W: RationalMap, points: np.ndarray) -> np.ndarray:
    values = eval_many(W, points)
    modulus = np.abs(values)
    return np.where(np.isnan(modulus), np.inf, modulus)


def gain_many(W: RationalMap, points: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 1.0 / modulus_many(W, points)


def phase_many(W: RationalMap, points: np.ndarray) -> np.ndarray:
    """Principal phase in (-pi, pi]; nan where W is 0, infinite or undefined."""
    values = eval_many(W, points)
    angles = np.angle(values)
    angles = np.where(angles == -np.pi, np.pi, angles)
    bad = ~np.isfinite(values) | (values == 0)
    return np.where(bad, np.nan, angles)


def rational_map_to_json(W: RationalMap) -> dict:
    return {"num": polynomial_to_json(W.num), "den": polynomial_to_json(W.den)}


def make_rational_map(
    num: ComplexPolynomial,
    den: ComplexPolynomial,
    removable: Sequence[tuple[complex, int]] = (),
) -> RationalMap:
    return RationalMap(num, den, tuple((complex(c), int(m)) for c, m in removable))
