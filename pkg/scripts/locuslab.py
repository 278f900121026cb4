#!/usr/bin/env python3
"""locuslab: trace root loci of rational maps and audit Smale quotient regions.

Usage:
    locuslab.py trace --num "-1,1" --den "1,1" --alpha 1.5707963267948966
    locuslab.py smale-audit --poly "0,-4,0,0,1"
    locuslab.py sweep --count 50 --degrees 2,6 --seed 7
"""
from __future__ import annotations

import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from locus_config import load_config
from locus_fields import contour_extract, hausdorff_distance, phase_level_scan, sample_grid
from locus_models import (
    Bbox,
    InputError,
    LocusLabError,
    NumericError,
    RunConfig,
    default_bbox,
)
from locus_plotting import contours_svg, regions_svg, trace_svg
from locus_polynomial import (
    ComplexPolynomial,
    clustered_roots,
    parse_polynomial,
    polynomial_from_json,
    polynomial_to_json,
)
from locus_rational import (
    RationalMap,
    gain_many,
    make_rational_map,
    modulus_many,
    phase_many,
    signed_wrap,
)
from locus_reporting import (
    audit_payload,
    audit_to_json,
    batch_payload,
    error_payload,
    extremal_payload,
    field_csv,
    field_payload,
    instance_verdict,
    regions_payload,
    roots_payload,
    trace_csv,
    trace_payload,
    write_json,
    write_text,
)
from locus_smale import adjacent_domains, audit_theorems, extremal_search, make_case
from locus_tracer import trace_all, trace_options


EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2


def log(config: RunConfig, message: str) -> None:
    if not config.quiet:
        print(message, file=sys.stderr)


def _parse(text: str | None, what: str) -> ComplexPolynomial:
    if text is None:
        raise InputError(f"missing --{what}")
    return parse_polynomial(text)


def _load_map(config: RunConfig) -> RationalMap:
    num = _parse(config.num, "num")
    den = _parse(config.den or "1", "den")
    if num.is_zero or den.is_zero:
        raise InputError("numerator and denominator must be nonzero polynomials")
    return make_rational_map(num, den)


def _formats(config: RunConfig, name: str) -> bool:
    return name in config.formats


def run_roots(config: RunConfig) -> list[str]:
    artifacts = []
    if config.poly:
        p = _parse(config.poly, "poly")
        clusters = clustered_roots(p)
        payload = roots_payload(p, clusters)
    else:
        W = _load_map(config)
        clusters = list(W.zeros)
        payload = roots_payload(W.num, clustered_roots(W.num), W)
    log(config, f"{len(clusters)} distinct root(s)")
    if _formats(config, "json"):
        artifacts.append(write_json(config.out_dir, "roots.json", payload))
    if _formats(config, "csv"):
        rows = ["sigma,t,multiplicity"] + [f"{c.real!r},{c.imag!r},{m}" for c, m in clusters]
        artifacts.append(write_text(config.out_dir, "roots.csv", "\n".join(rows) + "\n"))
    return artifacts


def run_trace(config: RunConfig) -> list[str]:
    W = _load_map(config)
    bbox = config.bbox or default_bbox(W.scale)
    traces = trace_all(W, config.alpha, trace_options(W, bbox))
    log(config, f"traced {len(traces)} locus branch(es) at alpha={config.alpha!r}")
    for index, trace in enumerate(traces):
        if trace.diagnostic:
            log(config, f"trace {index}: {trace.terminus}: {trace.diagnostic}")

    nx, ny = config.resolution
    scan = phase_level_scan(W, config.alpha, bbox, nx, ny)
    spacing = 0.5 * min(bbox.width / (nx - 1), bbox.height / (ny - 1))
    distance = hausdorff_distance([t.positions() for t in traces], scan, spacing) if traces else None

    artifacts = []
    csv_names: list[str | None] = [None] * len(traces)
    if _formats(config, "csv"):
        for index, trace in enumerate(traces):
            csv_names[index] = f"trace_{index:03d}.csv"
            artifacts.append(write_text(config.out_dir, csv_names[index], trace_csv(trace)))
    if _formats(config, "json"):
        payload = trace_payload(W, config.alpha, bbox, traces, csv_names, distance, (nx, ny))
        artifacts.append(write_json(config.out_dir, "trace.json", payload))
    if _formats(config, "svg"):
        artifacts.append(write_text(config.out_dir, "trace.svg", trace_svg(W, bbox, traces, config.alpha)))
    return artifacts


def run_field(config: RunConfig) -> list[str]:
    W = _load_map(config)
    bbox = config.bbox or default_bbox(W.scale)
    nx, ny = config.resolution
    if config.quantity == "phase-residual":
        field = sample_grid(lambda pts: signed_wrap(phase_many(W, pts), config.alpha), bbox, nx, ny)
        level = 0.0
        contours = contour_extract(field, level, max_jump=math.pi)
    else:
        fn = modulus_many if config.quantity == "modulus" else gain_many
        field = sample_grid(lambda pts: fn(W, pts), bbox, nx, ny)
        level = config.level
        contours = contour_extract(field, level)
    log(config, f"{config.quantity} field {nx}x{ny}: {len(contours)} contour(s) at level {level!r}")

    artifacts = []
    if _formats(config, "csv"):
        artifacts.append(write_text(config.out_dir, "field.csv", field_csv(field)))
    if _formats(config, "json"):
        payload = field_payload(field, config.quantity, level, contours, config.alpha)
        artifacts.append(write_json(config.out_dir, "field.json", payload))
    if _formats(config, "svg"):
        caption = f"{config.quantity} = {level!r}"
        artifacts.append(write_text(config.out_dir, "field.svg", contours_svg(bbox, contours, caption, W)))
    return artifacts


def run_smale_audit(config: RunConfig) -> list[str]:
    case = make_case(_parse(config.poly, "poly"))
    bbox = config.bbox or default_bbox(case.scale)
    report = audit_theorems(case, bbox, config.resolution, config.n_samples, config.seed)
    log(config, f"audited {len(report.per_theta)} critical point(s), {len(report.counterexamples)} counterexample(s)")

    artifacts = []
    if _formats(config, "json"):
        artifacts.append(write_json(config.out_dir, "audit.json", audit_payload(report)))
    if _formats(config, "csv"):
        rows = ["sigma,t,i,quotient,claim"] + [
            f"{c.s.real!r},{c.s.imag!r},{c.i},{c.quotient!r},{c.claim}" for c in report.counterexamples
        ]
        artifacts.append(write_text(config.out_dir, "counterexamples.csv", "\n".join(rows) + "\n"))
    if _formats(config, "svg"):
        regions = [audit.regions for audit in report.per_theta]
        svg = regions_svg(bbox, case.thetas(), regions, "|W_i| < 1")
        artifacts.append(write_text(config.out_dir, "audit.svg", svg))
    return artifacts


def run_smale_regions(config: RunConfig) -> list[str]:
    case = make_case(_parse(config.poly, "poly"))
    bbox = config.bbox or default_bbox(case.scale)
    regions = [adjacent_domains(case, i, bbox, config.resolution) for i in range(len(case.maps))]
    log(config, f"{sum(len(r) for r in regions)} component(s) across {len(regions)} critical point(s)")

    artifacts = []
    if _formats(config, "json"):
        artifacts.append(write_json(config.out_dir, "regions.json", regions_payload(case, bbox, config.resolution, regions)))
    if _formats(config, "svg"):
        artifacts.append(write_text(config.out_dir, "regions.svg", regions_svg(bbox, case.thetas(), regions, "|W_i| < 1")))
    return artifacts


def run_smale_extremal(config: RunConfig) -> list[str]:
    case = make_case(_parse(config.poly, "poly"))
    bbox = config.bbox or default_bbox(case.scale)
    s, value = extremal_search(case.f, bbox, config.resolution, case=case)
    log(config, f"max of min quotient {value!r} at {s!r}")

    artifacts = []
    if _formats(config, "json"):
        artifacts.append(write_json(config.out_dir, "extremal.json", extremal_payload(case, bbox, config.resolution, s, value)))
    return artifacts


def random_instances(count: int, degree_range: tuple[int, int], coeff_box: float, seed: int) -> list[ComplexPolynomial]:
    rng = np.random.default_rng(seed)
    lo, hi = degree_range
    instances = []
    for _ in range(count):
        degree = int(rng.integers(lo, hi + 1))
        re = rng.uniform(-coeff_box, coeff_box, degree + 1)
        im = rng.uniform(-coeff_box, coeff_box, degree + 1)
        instances.append(ComplexPolynomial(tuple(re + 1j * im)))
    return instances


def audit_instance(job: tuple) -> dict:
    """One sweep instance; numeric failures are recorded instead of raised."""
    index, coeffs, bbox_list, resolution, n_samples, seed = job
    f = polynomial_from_json(coeffs)
    record = {"index": index, "polynomial": polynomial_to_json(f), "seed": seed}
    try:
        case = make_case(f)
        bbox = Bbox(*bbox_list) if bbox_list else default_bbox(case.scale)
        audit = audit_to_json(audit_theorems(case, bbox, resolution, n_samples, seed), include_boundary=False)
    except (LocusLabError, ValueError) as e:
        record.update({"verdict": "failed", "error": type(e).__name__, "message": str(e)})
        return record
    record.update({"verdict": instance_verdict(audit), "audit": audit})
    return record


def run_sweep(config: RunConfig) -> list[str]:
    polynomials = random_instances(config.count, config.degree_range, config.coeff_box, config.seed)
    seeds = np.random.SeedSequence(config.seed).generate_state(config.count)
    bbox_list = config.bbox.as_list() if config.bbox else None
    jobs = [
        (index, polynomial_to_json(f), bbox_list, config.resolution, config.n_samples, int(seeds[index]))
        for index, f in enumerate(polynomials)
    ]

    instances = []
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            results = pool.map(audit_instance, jobs)
            for record in results:
                instances.append(record)
                log(config, f"instance {record['index']}: {record['verdict']}")
    else:
        for job in jobs:
            record = audit_instance(job)
            instances.append(record)
            log(config, f"instance {record['index']}: {record['verdict']}")

    batch_config = {
        "count": config.count,
        "degree_range": list(config.degree_range),
        "coeff_box": config.coeff_box,
        "seed": config.seed,
        "bbox": bbox_list,
        "resolution": list(config.resolution),
        "n_samples": config.n_samples,
    }
    payload = batch_payload(batch_config, instances)
    failed = payload["summary"]["verdicts"]["failed"]
    if failed:
        log(config, f"{failed} of {config.count} instance(s) failed")
    return [write_json(config.out_dir, "sweep.json", payload)]


HANDLERS = {
    "roots": run_roots,
    "trace": run_trace,
    "field": run_field,
    "smale-audit": run_smale_audit,
    "smale-regions": run_smale_regions,
    "smale-extremal": run_smale_extremal,
    "sweep": run_sweep,
}


def run(config: RunConfig) -> int:
    try:
        artifacts = HANDLERS[config.command](config)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        write_json(config.out_dir, "error.json", error_payload(config.command, e))
        return EXIT_NUMERIC
    print(json.dumps({"command": config.command, "artifacts": artifacts}, indent=2))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        config = load_config(sys.argv[1:] if argv is None else argv)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
