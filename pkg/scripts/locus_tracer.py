from __future__ import annotations

import cmath
import math
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from locus_models import (
    BOUNDARY_SAMPLES,
    MONOTONE_TOL,
    AtInfinity,
    Bbox,
    LocusPoint,
    LocusTrace,
    MonotoneReport,
    NumericError,
    SeedError,
    SingularPointError,
    TraceOptions,
)
from locus_polynomial import ComplexPolynomial, find_roots, taylor_shift
from locus_rational import (
    RationalMap,
    eval_W,
    gain,
    log_derivative,
    phase,
    phase_gradient,
    phase_many,
    signed_wrap,
)


# Fractions of the ray-to-edge distance tried for a seed at infinity.
INFINITY_SEED_SHRINK = (1.0, 0.9, 0.75, 0.5)


class Seed(NamedTuple):
    point: complex
    branch: int
    origin: str


def trace_options(W: RationalMap, bbox: Bbox | None = None, **overrides) -> TraceOptions:
    return TraceOptions.for_scale(W.scale, bbox=bbox, **overrides)


def phase_residual(W: RationalMap, alpha: float, s: complex) -> float:
    return float(signed_wrap(phase(W, s), alpha))


def correct_phase(
    W: RationalMap,
    alpha: float,
    s: complex,
    tol: float,
    max_iters: int,
) -> complex | None:
    """Minimum-norm Newton projection of s onto {phase(W) = alpha}; None when it does not converge."""
    try:
        for _ in range(max_iters):
            r = phase_residual(W, alpha, s)
            if abs(r) <= tol:
                return s
            g = phase_gradient(W, s)
            if g.norm_sq == 0 or not math.isfinite(g.norm_sq):
                return None
            s = s - r * complex(g.d_sigma, g.d_t) / g.norm_sq
        return s if abs(phase_residual(W, alpha, s)) <= tol else None
    except (SingularPointError, ZeroDivisionError, OverflowError):
        return None


def pole_constant(W: RationalMap, pole: complex, beta: int) -> complex:
    """C_p = lim (s - p)^beta W(s), with a removable factor of multiplicity gamma at p divided out first."""
    rp = W.removable_near(pole)
    gamma = rp.multiplicity if rp is not None else 0
    num_taylor = taylor_shift(W.num, pole).coeffs
    den_taylor = taylor_shift(W.den, pole).coeffs
    return num_taylor[gamma] / den_taylor[beta + gamma]


def _min_separation(W: RationalMap) -> float:
    centers = [c for c, _ in W.zeros + W.poles]
    best = math.inf
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            best = min(best, abs(centers[i] - centers[j]))
    return best


def seed_points(W: RationalMap, alpha: float, eps: float | None = None, opts: TraceOptions | None = None) -> list[Seed]:
    """beta seeds around every pole of multiplicity beta, corrected onto the alpha locus."""
    opts = opts or trace_options(W)
    eps = opts.seed_eps if eps is None else eps
    if eps >= 0.5 * _min_separation(W):
        raise SeedError(f"eps={eps:g} is not below half the minimum zero/pole separation; use a smaller eps")

    seeds: list[Seed] = []
    for index, (pole, beta) in enumerate(W.poles):
        arg_c = cmath.phase(pole_constant(W, pole, beta))
        for k in range(beta):
            psi = (arg_c - alpha + 2 * math.pi * k) / beta
            guess = pole + eps * cmath.exp(1j * psi)
            s = correct_phase(W, alpha, guess, opts.tol, opts.corrector_iters)
            if s is None or abs(s - pole) > 2 * eps:
                raise SeedError(f"seed corrector diverged at pole {index} branch {k}; use a smaller eps")
            seeds.append(Seed(s, k, f"pole:{index}"))
    return seeds


def _ray_exit_distance(bbox: Bbox, direction: complex) -> float:
    """Distance from the origin to the bbox edge along a unit direction (origin inside the bbox)."""
    limits = []
    if direction.real > 0:
        limits.append(bbox.sigma_max / direction.real)
    elif direction.real < 0:
        limits.append(bbox.sigma_min / direction.real)
    if direction.imag > 0:
        limits.append(bbox.t_max / direction.imag)
    elif direction.imag < 0:
        limits.append(bbox.t_min / direction.imag)
    return min(limits)


def seed_points_at_infinity(W: RationalMap, alpha: float, opts: TraceOptions | None = None) -> list[Seed]:
    """When deg N > deg D the point at infinity is a pole of order r and emits r loci.

    Seeds sit on the asymptote rays just inside the bbox. A branch whose corrected seed
    leaves the box is re-seeded further in, and dropped if it never lands inside.
    """
    opts = opts or trace_options(W)
    r = W.num.degree - W.den.degree
    if r <= 0 or not opts.bbox.contains(0j):
        return []
    arg_c = cmath.phase(W.num.leading / W.den.leading)
    seeds: list[Seed] = []
    for k in range(r):
        psi = (alpha - arg_c + 2 * math.pi * k) / r
        direction = cmath.exp(1j * psi)
        radius = _ray_exit_distance(opts.bbox, direction) - 2 * opts.boundary_tol
        diverged = True
        for shrink in INFINITY_SEED_SHRINK:
            s = correct_phase(W, alpha, shrink * radius * direction, opts.tol, opts.corrector_iters)
            if s is None:
                continue
            diverged = False
            if opts.bbox.contains(s):
                seeds.append(Seed(s, k, "infinity"))
                break
        if diverged:
            raise SeedError(f"seed corrector diverged at infinity branch {k}")
    return seeds


def _edges(bbox: Bbox) -> list[tuple[complex, complex, complex]]:
    """(start, end, inward normal) per edge, counterclockwise from the bottom-left corner."""
    corners = (
        complex(bbox.sigma_min, bbox.t_min),
        complex(bbox.sigma_max, bbox.t_min),
        complex(bbox.sigma_max, bbox.t_max),
        complex(bbox.sigma_min, bbox.t_max),
    )
    normals = (1j, -1 + 0j, -1j, 1 + 0j)
    return [(corners[k], corners[(k + 1) % 4], normals[k]) for k in range(4)]


def boundary_crossings(
    W: RationalMap,
    alpha: float,
    bbox: Bbox,
    samples: int = BOUNDARY_SAMPLES,
) -> list[tuple[complex, complex]]:
    """Points where the alpha loci meet the bbox edges, each with the inward normal of its edge.

    The wrapped residual is sampled along every edge and each sign change away from the
    alpha + pi cut is refined by Brent's method on the edge segment.
    """
    found: list[tuple[complex, complex]] = []
    u = np.linspace(0.0, 1.0, samples)
    for start, end, normal in _edges(bbox):
        points = start + u * (end - start)
        r = signed_wrap(phase_many(W, points), alpha)
        ra, rb = r[:-1], r[1:]
        with np.errstate(invalid="ignore"):
            bracket = (ra * rb < 0) & (np.abs(ra - rb) < math.pi / 2)
        # The last sample is the next edge's first one.
        for k in np.flatnonzero(ra == 0):
            found.append((complex(points[k]), normal))
        for k in np.flatnonzero(bracket):
            a, b = complex(points[k]), complex(points[k + 1])
            try:
                x = brentq(lambda v: phase_residual(W, alpha, a + v * (b - a)), 0.0, 1.0, xtol=1e-12)
            except (ValueError, NumericError):
                continue
            found.append((a + x * (b - a), normal))
    return found


def seed_points_on_boundary(W: RationalMap, alpha: float, opts: TraceOptions | None = None) -> list[Seed]:
    """Seeds where an alpha locus enters the bbox: loci from infinity, and pole loci that left and come back."""
    opts = opts or trace_options(W)
    seeds: list[Seed] = []
    for s, normal in boundary_crossings(W, alpha, opts.bbox):
        try:
            L = log_derivative(W, s)
        except NumericError:
            continue
        if L == 0:
            continue
        tau = -L.conjugate() / abs(L)
        if (tau * normal.conjugate()).real > 0:
            seeds.append(Seed(s, len(seeds), "boundary"))
    return seeds


def _gain_violations(points: tuple[LocusPoint, ...]) -> list[int]:
    return [
        i for i in range(1, len(points))
        if points[i].gain < points[i - 1].gain - MONOTONE_TOL * (1.0 + points[i - 1].gain)
    ]


def _near_saddle(W: RationalMap, s: complex, radius: float) -> bool:
    return _saddle_near(W, s, radius) is not None


def _saddle_near(W: RationalMap, s: complex, radius: float) -> complex | None:
    return next((c for c in W.saddles if abs(s - c) <= radius), None)


def _step_over_saddle(
    W: RationalMap,
    alpha: float,
    points: list[LocusPoint],
    saddle: complex,
    opts: TraceOptions,
) -> complex | None:
    """Jump from the incoming branch onto an outgoing one, one singular_radius past the saddle.

    Outgoing branches leave at right angles to the incoming one; the clockwise turn relative
    to the side the trace came from is tried first.
    """
    radius = opts.singular_radius
    side = next((p.s - saddle for p in reversed(points) if abs(p.s - saddle) > radius), points[0].s - saddle)
    if side == 0:
        return None
    v = side / abs(side)
    offset = (points[-1].s - saddle) * v.conjugate()
    if abs(offset.imag) > abs(offset.real):
        return None  # already on an outgoing branch
    k_s = points[-1].gain
    for u in (-v * 1j, v * 1j):
        candidate = correct_phase(W, alpha, saddle + radius * u, opts.tol, opts.corrector_iters)
        if candidate is None or not opts.bbox.contains(candidate):
            continue
        if abs(candidate - saddle) < 0.5 * radius or ((candidate - saddle) * u.conjugate()).real <= 0:
            continue
        try:
            k_new = gain(W, candidate)
        except NumericError:
            continue
        if k_new > k_s:
            return candidate
    return None


def _point(W: RationalMap, alpha: float, s: complex) -> LocusPoint:
    return LocusPoint(s, gain(W, s), abs(phase_residual(W, alpha, s)))


def _try_step(W: RationalMap, alpha: float, s: complex, k_s: float, tau: complex, h: float, opts: TraceOptions):
    """Euler predictor plus phase corrector; accepted only when it moves forward and raises the gain."""
    candidate = correct_phase(W, alpha, s + h * tau, opts.tol, opts.corrector_iters)
    if candidate is None:
        return None
    move = candidate - s
    if abs(move) == 0 or abs(move) > opts.max_step:
        return None
    if (move * tau.conjugate()).real < 0.5 * abs(move):
        return None
    try:
        k_new = gain(W, candidate)
    except NumericError:
        return None
    if not k_new > k_s:
        return None
    return candidate


def trace_locus(
    W: RationalMap,
    alpha: float,
    seed: complex | Seed,
    opts: TraceOptions | None = None,
) -> LocusTrace:
    """March along {phase(W) = alpha} toward increasing gain until a zero, the bbox edge or the step limit."""
    opts = opts or trace_options(W)
    origin, branch = "seed", 0
    if isinstance(seed, Seed):
        origin, branch = seed.origin, seed.branch
        seed = seed.point
    s = complex(seed)
    if abs(phase_residual(W, alpha, s)) > opts.tol:
        corrected = correct_phase(W, alpha, s, opts.tol, opts.corrector_iters)
        if corrected is None:
            raise SeedError(f"seed {s!r} does not satisfy the phase condition")
        s = corrected

    points = [_point(W, alpha, s)]
    saddle_indices = [0] if _near_saddle(W, s, opts.singular_radius) else []
    h = opts.h_init
    prev_tau: complex | None = None
    terminus, diagnostic = "step-limit", ""

    while len(points) <= opts.max_steps:
        k_s = points[-1].gain
        L = log_derivative(W, s)
        if abs(L) * W.scale > 1e-10:
            tau = -L.conjugate() / abs(L)
        elif prev_tau is not None:
            tau = prev_tau
        else:
            terminus, diagnostic = "truncated", f"tangent undefined at start point {s!r}"
            break

        h_eff = min(h, opts.h_max, 0.5 * W.distance_to_zeros_and_poles(s))
        candidate, used = _try_step(W, alpha, s, k_s, tau, h_eff, opts), tau
        if candidate is None:
            saddle = _saddle_near(W, s, opts.singular_radius)
            if saddle is not None:
                candidate = _step_over_saddle(W, alpha, points, saddle, opts)
                if candidate is not None:
                    used = (candidate - saddle) / abs(candidate - saddle)

        if candidate is None:
            h = h_eff / 2
            if h < opts.h_min:
                near = " near a saddle of the phase field" if _near_saddle(W, s, opts.singular_radius) else ""
                terminus = "truncated"
                diagnostic = f"corrector failed at minimum step h={h:.3e} at s={s!r}{near}"
                break
            continue

        if not opts.bbox.contains(candidate):
            if h_eff <= opts.boundary_tol:
                terminus = "bbox-exit"
                break
            h = h_eff / 2
            continue

        s = candidate
        points.append(_point(W, alpha, s))
        if _near_saddle(W, s, opts.singular_radius):
            saddle_indices.append(len(points) - 1)
        prev_tau = used
        h = min(2 * h_eff, opts.h_max)

        if points[-1].gain >= opts.gain_cap:
            terminus = "zero"
            break
        if opts.bbox.distance_to_edge(s) <= opts.boundary_tol:
            terminus = "bbox-exit"
            break

    frozen = tuple(points)
    violations = _gain_violations(frozen)
    return LocusTrace(
        alpha=alpha,
        points=frozen,
        origin=origin,
        branch=branch,
        terminus=terminus,
        terminus_zero=W.nearest_zero(s) if terminus == "zero" else None,
        monotone_gain=not violations,
        first_violation=violations[0] if violations else None,
        saddle_indices=tuple(saddle_indices),
        diagnostic=diagnostic,
    )


def trace_all(W: RationalMap, alpha: float, opts: TraceOptions | None = None) -> list[LocusTrace]:
    """Every alpha locus inside the bbox: one trace per branch of each pole in the box, plus one per inbound edge crossing."""
    opts = opts or trace_options(W)
    seeds = [seed for seed in seed_points(W, alpha, opts=opts) if opts.bbox.contains(seed.point)]
    seeds += seed_points_on_boundary(W, alpha, opts)
    return [trace_locus(W, alpha, seed, opts) for seed in seeds]


def verify_monotone_gain(trace: LocusTrace) -> MonotoneReport:
    """Strict gain increase along the stored points.

    trace_locus only accepts gain-increasing steps, so its traces pass by construction;
    a failure means the points were reordered or assembled outside the tracer.
    """
    if len(trace.points) < 2:
        raise ValueError("monotonicity needs at least two points")
    violations = _gain_violations(trace.points)
    annotated = set(trace.saddle_indices)
    near_saddle = [i for i in violations if i in annotated or i - 1 in annotated]
    return MonotoneReport(
        passed=not violations,
        first_violation=violations[0] if violations else None,
        violation_count=len(violations),
        annotated_violations=len(near_saddle),
        unannotated_violations=len(violations) - len(near_saddle),
    )


def gain_crossings(W: RationalMap, alpha: float, gain_value: float) -> list[complex]:
    """Points of the alpha loci carrying gain K: roots of K*N(s) - e^{i alpha}*D(s)."""
    if gain_value < 0:
        raise ValueError("gain must be nonnegative")
    if gain_value == 0:
        return [c for c, m in W.poles for _ in range(m)]
    if math.isinf(gain_value):
        return [c for c, m in W.zeros for _ in range(m)]
    characteristic: ComplexPolynomial = gain_value * W.num - W.den * cmath.exp(1j * alpha)
    if characteristic.degree < 1:
        return []
    crossings = []
    for root in find_roots(characteristic):
        if W.removable_near(root) is not None:
            continue
        value = eval_W(W, root)
        if isinstance(value, AtInfinity):
            continue
        crossings.append(root)
    return sorted(crossings, key=lambda z: (z.real, z.imag))
