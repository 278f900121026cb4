from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from locus_models import (
    CLUSTER_RADIUS,
    DEFAULT_MAX_ITERS,
    DEFAULT_TOL_ROOT,
    PolynomialParseError,
    RootFindingError,
)


# |p(s)| below NOISE * sum(|a_k| |s|^k) is indistinguishable from zero in double precision.
NOISE = 64 * np.finfo(float).eps
# Backward-error budget for calling a group of nearby roots one multiple root.
MULTIPLE_ROOT_NOISE = 1e3 * NOISE

_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_PURE_IMAG = re.compile(rf"^(?P<im>[+-]?(?:{_NUM})?)[ij]$")
_COMPLEX = re.compile(rf"^(?P<re>[+-]?{_NUM})(?:(?P<im>[+-](?:{_NUM})?)[ij])?$")


def _imag_part(token: str) -> float:
    if token in ("", "+"):
        return 1.0
    if token == "-":
        return -1.0
    return float(token)


@dataclass(frozen=True)
class ComplexPolynomial:
    """Polynomial with complex coefficients stored in ascending degree (coeffs[k] = a_k)."""

    coeffs: tuple[complex, ...]

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs) or (0j,)
        if not all(math.isfinite(c.real) and math.isfinite(c.imag) for c in coeffs):
            raise ValueError(f"coefficients must be finite: {coeffs}")
        end = len(coeffs)
        while end > 1 and coeffs[end - 1] == 0:
            end -= 1
        object.__setattr__(self, "coeffs", coeffs[:end])

    @classmethod
    def from_roots(cls, roots: Iterable[complex], leading: complex = 1.0) -> ComplexPolynomial:
        coeffs = np.array([complex(leading)])
        for root in roots:
            # multiply by (s - root), ascending order
            coeffs = np.concatenate([[0j], coeffs]) - complex(root) * np.concatenate([coeffs, [0j]])
        return cls(tuple(coeffs))

    @classmethod
    def monomial(cls, degree: int, coefficient: complex = 1.0) -> ComplexPolynomial:
        return cls((0j,) * degree + (complex(coefficient),))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0

    @property
    def leading(self) -> complex:
        return self.coeffs[-1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=complex)

    def __call__(self, s: complex) -> complex:
        return evaluate(self, s)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        return horner(self.as_array(), np.asarray(points, dtype=complex))

    def eval_scale(self, s: complex) -> float:
        """Sum of |a_k| |s|^k, the magnitude that bounds Horner's rounding error."""
        r = abs(s)
        acc = 0.0
        for a in reversed(self.coeffs):
            acc = acc * r + abs(a)
        return acc

    def is_negligible(self, value: complex, s: complex) -> bool:
        return abs(value) <= NOISE * self.eval_scale(s)

    def derivative(self) -> ComplexPolynomial:
        return derivative(self)

    def divided_difference(self, theta: complex) -> ComplexPolynomial:
        return divided_difference(self, theta)

    def __add__(self, other: ComplexPolynomial) -> ComplexPolynomial:
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros(n, dtype=complex)
        a[: len(self.coeffs)] += self.as_array()
        a[: len(other.coeffs)] += other.as_array()
        return ComplexPolynomial(tuple(a))

    def __neg__(self) -> ComplexPolynomial:
        return ComplexPolynomial(tuple(-a for a in self.coeffs))

    def __sub__(self, other: ComplexPolynomial) -> ComplexPolynomial:
        return self + (-other)

    def __mul__(self, other) -> ComplexPolynomial:
        if isinstance(other, ComplexPolynomial):
            return ComplexPolynomial(tuple(np.convolve(self.as_array(), other.as_array())))
        return ComplexPolynomial(tuple(complex(other) * a for a in self.coeffs))

    __rmul__ = __mul__


def horner(coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    acc = np.full(np.shape(points), coeffs[-1], dtype=np.result_type(coeffs, points))
    for a in coeffs[-2::-1]:
        acc = acc * points + a
    return acc


def evaluate(p: ComplexPolynomial, s: complex) -> complex:
    acc = 0j
    for a in reversed(p.coeffs):
        acc = acc * s + a
    return acc


def derivative(p: ComplexPolynomial) -> ComplexPolynomial:
    """k*a_k shifted down one degree; a constant differentiates to the zero polynomial."""
    if p.degree == 0:
        return ComplexPolynomial((0j,))
    return ComplexPolynomial(tuple(k * a for k, a in enumerate(p.coeffs) if k > 0))


def divided_difference(f: ComplexPolynomial, theta: complex) -> ComplexPolynomial:
    """Q_theta with f(s) - f(theta) = (s - theta) * Q_theta(s), by synthetic division."""
    n = f.degree
    if n < 1:
        raise ValueError("divided difference needs degree >= 1")
    theta = complex(theta)
    b = [0j] * n
    b[n - 1] = f.coeffs[n]
    for k in range(n - 1, 0, -1):
        b[k - 1] = f.coeffs[k] + theta * b[k]
    return ComplexPolynomial(tuple(b))


def taylor_shift(p: ComplexPolynomial, c: complex) -> ComplexPolynomial:
    """Coefficients of p(c + h) as a polynomial in h."""
    a = list(p.coeffs)
    n = len(a) - 1
    c = complex(c)
    for i in range(n):
        for j in range(n - 1, i - 1, -1):
            a[j] += c * a[j + 1]
    return ComplexPolynomial(tuple(a))


def root_multiplicity(p: ComplexPolynomial, c: complex, rel_tol: float = CLUSTER_RADIUS) -> int:
    """Number of leading Taylor coefficients of p at c that are negligible."""
    b = taylor_shift(p, c).coeffs
    scale = max(abs(x) for x in b)
    if scale == 0:
        return 0
    m = 0
    while m < len(b) - 1 and abs(b[m]) <= rel_tol * scale:
        m += 1
    return m


def find_roots(
    p: ComplexPolynomial,
    tol: float = DEFAULT_TOL_ROOT,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> list[complex]:
    """All roots with multiplicity, by Aberth-Ehrlich simultaneous iteration."""
    n = p.degree
    if n < 1:
        raise ValueError("root finding needs degree >= 1")
    a = p.as_array()
    if n == 1:
        return [complex(-a[0] / a[1])]

    monic = a / a[-1]
    dmonic = monic[1:] * np.arange(1, n + 1)
    radius = 1.0 + float(np.max(np.abs(monic[:-1])))
    k = np.arange(n)
    # Perturbed angles so conjugate-symmetric inputs do not trap the iterates.
    angles = 2 * np.pi * k / n + 0.4 + 0.07 * np.sin(3.1 * k + 0.5)
    z = radius * np.exp(1j * angles)
    coeff_scale = float(np.max(np.abs(a)))
    abs_monic = np.abs(monic)

    def residuals(points: np.ndarray) -> np.ndarray:
        return np.abs(horner(a, points)) / (coeff_scale * np.maximum(1.0, np.abs(points)) ** n)

    for _ in range(max_iters):
        pz = horner(monic, z)
        dpz = horner(dmonic, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        denom = dpz - pz * inv.sum(axis=1)
        step = np.divide(pz, denom, out=np.zeros_like(pz), where=denom != 0)
        z = z - step
        if not np.all(np.isfinite(z)):
            raise RootFindingError("Aberth iteration diverged", [complex(v) for v in z], [math.inf] * n)

        if np.all(residuals(z) <= tol):
            at_noise = np.abs(horner(monic, z)) <= NOISE * horner(abs_monic, np.abs(z))
            tiny_step = np.abs(step) <= 4 * np.finfo(float).eps * (1.0 + np.abs(z))
            if np.all(at_noise | tiny_step):
                break

    final = residuals(z)
    if np.any(final > tol):
        raise RootFindingError(
            f"root finder did not converge in {max_iters} iterations (max residual {float(final.max()):.3e})",
            [complex(v) for v in z],
            [float(r) for r in final],
        )
    return [complex(v) for v in z]


def cluster_roots(roots: Sequence[complex], radius: float | None = None) -> list[tuple[complex, int]]:
    """Merge roots closer than radius (single linkage); returns (center, multiplicity) pairs."""
    if not roots:
        return []
    if radius is None:
        radius = CLUSTER_RADIUS * max(1.0, max(abs(r) for r in roots))
    parent = list(range(len(roots)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if abs(roots[i] - roots[j]) <= radius:
                parent[find(i)] = find(j)

    groups: dict[int, list[complex]] = {}
    for i, r in enumerate(roots):
        groups.setdefault(find(i), []).append(r)
    clusters = [(complex(sum(members) / len(members)), len(members)) for members in groups.values()]
    return sorted(clusters, key=lambda c: (c[0].real, c[0].imag))


def polish_center(p: ComplexPolynomial, center: complex, multiplicity: int, radius: float) -> complex:
    """Newton on p^(m-1), where an m-fold root of p is simple; the center is kept if Newton wanders off."""
    q = p
    for _ in range(multiplicity - 1):
        q = q.derivative()
    dq = q.derivative()
    z = center
    for _ in range(8):
        d = dq(z)
        if d == 0:
            break
        step = q(z) / d
        z -= step
        if abs(step) <= 4 * np.finfo(float).eps * (1.0 + abs(z)):
            break
    return z if abs(z - center) <= radius else center


def is_multiple_root(p: ComplexPolynomial, c: complex, multiplicity: int, noise: float = MULTIPLE_ROOT_NOISE) -> bool:
    """True when the first `multiplicity` Taylor coefficients of p at c vanish to within rounding.

    Each coefficient is measured against the same coefficient of |p| shifted to |c|, the
    magnitude that bounds its evaluation error.
    """
    if multiplicity > p.degree:
        return False
    b = taylor_shift(p, c).coeffs
    bound = taylor_shift(ComplexPolynomial(tuple(abs(a) for a in p.coeffs)), abs(c)).coeffs
    return all(abs(b[k]) <= noise * bound[k].real for k in range(multiplicity))


def _merge_multiple_roots(p: ComplexPolynomial, clusters: list[tuple[complex, int]], scale: float) -> list[tuple[complex, int]]:
    """Regroup clusters that together form one m-fold root of p.

    An m-fold root comes back from the iteration as m points about noise**(1/m) apart,
    so the merge radius grows with the combined multiplicity; is_multiple_root then
    confirms the merge at the polished center.
    """
    clusters = list(clusters)
    merged = True
    while merged:
        merged = False
        for center, _ in clusters:
            order = sorted(range(len(clusters)), key=lambda j: abs(clusters[j][0] - center))
            best = None
            for size in range(2, len(order) + 1):
                group = [clusters[j] for j in order[:size]]
                m = sum(k for _, k in group)
                centroid = sum(z * k for z, k in group) / m
                radius = scale * MULTIPLE_ROOT_NOISE ** (1.0 / m)
                if max(abs(z - centroid) for z, _ in group) > radius:
                    continue
                polished = polish_center(p, centroid, m, radius)
                if is_multiple_root(p, polished, m):
                    best = (set(order[:size]), polished, m)
            if best is not None:
                members, polished, m = best
                clusters = [c for j, c in enumerate(clusters) if j not in members] + [(polished, m)]
                merged = True
                break
    return clusters


def clustered_roots(
    p: ComplexPolynomial,
    tol: float = DEFAULT_TOL_ROOT,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> list[tuple[complex, int]]:
    if p.degree < 1:
        return []
    roots = find_roots(p, tol, max_iters)
    scale = max(1.0, max(abs(r) for r in roots))
    radius = CLUSTER_RADIUS * scale
    clusters = [
        (polish_center(p, c, m, radius) if m > 1 else c, m)
        for c, m in cluster_roots(roots, radius)
    ]
    clusters = _merge_multiple_roots(p, clusters, scale)
    return sorted(clusters, key=lambda c: (c[0].real, c[0].imag))


def format_coefficient(c: complex) -> str:
    if c.imag == 0:
        return repr(float(c.real))
    sign = "-" if math.copysign(1.0, c.imag) < 0 else "+"
    return f"{float(c.real)!r}{sign}{abs(float(c.imag))!r}i"


def format_polynomial(p: ComplexPolynomial) -> str:
    return ",".join(format_coefficient(c) for c in p.coeffs)


def parse_coefficient(token: str) -> complex:
    token = token.strip()
    match = _PURE_IMAG.match(token)
    if match:
        return complex(0.0, _imag_part(match.group("im")))
    match = _COMPLEX.match(token)
    if not match:
        raise ValueError(token)
    im = match.group("im")
    return complex(float(match.group("re")), 0.0 if im is None else _imag_part(im))


def parse_polynomial(text: str) -> ComplexPolynomial:
    """Parse comma-separated ascending coefficients, each `a` or `a+bi` (e.g. `0,-4,0,0,1`)."""
    if not text or not text.strip():
        raise PolynomialParseError("empty polynomial", text or "", 0)
    coeffs: list[complex] = []
    position = 0
    for token in text.split(","):
        offset = position + len(token) - len(token.lstrip())
        try:
            coeffs.append(parse_coefficient(token))
        except ValueError:
            raise PolynomialParseError(f"cannot parse coefficient {token.strip()!r}", text, offset) from None
        position += len(token) + 1
    return ComplexPolynomial(tuple(coeffs))


def polynomial_to_json(p: ComplexPolynomial) -> list[list[float]]:
    return [[float(c.real), float(c.imag)] for c in p.coeffs]


def polynomial_from_json(pairs: Sequence[Sequence[float]]) -> ComplexPolynomial:
    return ComplexPolynomial(tuple(complex(float(re), float(im)) for re, im in pairs))
