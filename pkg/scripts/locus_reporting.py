from __future__ import annotations

import json
import math
import os
from typing import Iterable, Sequence

import numpy as np

from locus_models import SCHEMA_VERSION, AtInfinity, Bbox, GridField, LocusTrace, Polyline, Region
from locus_polynomial import ComplexPolynomial, format_polynomial, polynomial_to_json
from locus_rational import RationalMap, rational_map_to_json
from locus_smale import (
    STATUS_CLIPPED,
    STATUS_CONTAINS_ZERO,
    STATUS_GRID_ARTIFACT,
    STATUS_UNRESOLVED,
    SmaleAuditReport,
    SmaleCase,
)
from locus_tracer import verify_monotone_gain


def to_jsonable(value):
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(value, AtInfinity):
        return "inf"
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [to_jsonable(value.real), to_jsonable(value.imag)]
    return value


def dumps(payload: dict) -> str:
    # float repr is the shortest round-trip decimal, so equal inputs give byte-identical files.
    return json.dumps(to_jsonable(payload), indent=2, allow_nan=False) + "\n"


def write_text(out_dir: str, name: str, text: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    return path


def write_json(out_dir: str, name: str, payload: dict) -> str:
    return write_text(out_dir, name, dumps(payload))


def _number(value: float) -> str:
    return repr(float(value))


def trace_csv(trace: LocusTrace) -> str:
    lines = ["sigma,t,gain,phase_residual"]
    for point in trace.points:
        lines.append(",".join(_number(v) for v in (point.s.real, point.s.imag, point.gain, point.phase_residual)))
    return "\n".join(lines) + "\n"


def field_csv(field: GridField) -> str:
    b = field.bbox
    lines = [
        f"# bbox={_number(b.sigma_min)},{_number(b.sigma_max)},{_number(b.t_min)},{_number(b.t_max)} "
        f"nx={field.nx} ny={field.ny} row-major from t_min"
    ]
    for row in field.values:
        lines.append(",".join(_number(v) for v in row))
    return "\n".join(lines) + "\n"


def polylines_to_json(polylines: Iterable[Polyline]) -> list[dict]:
    return [{"closed": line.closed, "points": line.points} for line in polylines]


def _points_with_multiplicity(points: Sequence[tuple[complex, int]]) -> list[dict]:
    return [{"s": c, "multiplicity": m} for c, m in points]


def map_summary(W: RationalMap) -> dict:
    return {
        **rational_map_to_json(W),
        "zeros": _points_with_multiplicity(W.zeros),
        "poles": _points_with_multiplicity(W.poles),
        "removable": [{"s": rp.center, "multiplicity": rp.multiplicity, "limit": rp.limit()} for rp in W.removable],
        "saddles": list(W.saddles),
        "scale": W.scale,
    }


def roots_payload(p: ComplexPolynomial, clusters: Sequence[tuple[complex, int]], W: RationalMap | None = None) -> dict:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "roots",
        "polynomial": polynomial_to_json(p),
        "text": format_polynomial(p),
        "degree": p.degree,
        "roots": _points_with_multiplicity(clusters),
    }
    if W is not None:
        payload["map"] = map_summary(W)
    return payload


def trace_summary(trace: LocusTrace, csv_name: str | None = None) -> dict:
    monotone = verify_monotone_gain(trace) if len(trace.points) > 1 else None
    return {
        "origin": trace.origin,
        "branch": trace.branch,
        "terminus": trace.terminus,
        "terminus_zero": trace.terminus_zero,
        "points": len(trace.points),
        "start": trace.points[0].s,
        "end": trace.points[-1].s,
        "gain_start": trace.points[0].gain,
        "gain_end": trace.points[-1].gain,
        "max_phase_residual": max(p.phase_residual for p in trace.points),
        "monotone_gain": trace.monotone_gain,
        "first_violation": trace.first_violation,
        "annotated_violations": monotone.annotated_violations if monotone else 0,
        "unannotated_violations": monotone.unannotated_violations if monotone else 0,
        "saddle_indices": list(trace.saddle_indices),
        "diagnostic": trace.diagnostic,
        "csv": csv_name,
    }


def trace_payload(
    W: RationalMap,
    alpha: float,
    bbox: Bbox,
    traces: Sequence[LocusTrace],
    csv_names: Sequence[str | None],
    scan_distance: float | None,
    scan_resolution: tuple[int, int],
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "trace",
        "alpha": alpha,
        "bbox": bbox.as_list(),
        "map": map_summary(W),
        "traces": [trace_summary(t, name) for t, name in zip(traces, csv_names)],
        "oracle": {"resolution": list(scan_resolution), "hausdorff_distance": scan_distance},
    }


def field_payload(field: GridField, quantity: str, level: float, contours: Sequence[Polyline], alpha: float | None) -> dict:
    finite = field.values[np.isfinite(field.values)]
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "field",
        "quantity": quantity,
        "alpha": alpha,
        "level": level,
        "bbox": field.bbox.as_list(),
        "nx": field.nx,
        "ny": field.ny,
        "min": float(finite.min()) if len(finite) else None,
        "max": float(finite.max()) if len(finite) else None,
        "singular_samples": int(np.count_nonzero(~np.isfinite(field.values))),
        "contours": polylines_to_json(contours),
    }


def region_to_json(region: Region, include_boundary: bool = True) -> dict:
    payload = {"id": region.id, "cell_count": len(region.cells), "contains": list(region.contains)}
    if include_boundary:
        payload["boundary"] = polylines_to_json(region.boundary)
    return payload


def case_header(case: SmaleCase) -> dict:
    return {
        "polynomial": polynomial_to_json(case.f),
        "text": format_polynomial(case.f),
        "degree": case.degree,
        "critical_points": [{"theta": c, "multiplicity": m} for c, m in case.critical_points],
    }


def regions_payload(case: SmaleCase, bbox: Bbox, resolution: tuple[int, int], regions: Sequence[Sequence[Region]]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "smale-regions",
        **case_header(case),
        "per_theta": [
            {"theta": theta, "regions": [region_to_json(r) for r in found]}
            for theta, found in zip(case.thetas(), regions)
        ],
        "config": {"bbox": bbox.as_list(), "resolution": list(resolution)},
    }


def extremal_payload(case: SmaleCase, bbox: Bbox, resolution: tuple[int, int], s: complex, value: float) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "smale-extremal",
        **case_header(case),
        "extremal": {"s": s, "value": value},
        "config": {"bbox": bbox.as_list(), "resolution": list(resolution)},
    }


def audit_to_json(report: SmaleAuditReport, include_boundary: bool = True) -> dict:
    per_theta = []
    for audit in report.per_theta:
        regions = []
        for region, verdict in zip(audit.regions, audit.verdicts):
            entry = region_to_json(region, include_boundary)
            entry.update({
                "contains_zero": verdict.contains_zero,
                "touches_bbox": verdict.touches_bbox,
                "status": verdict.status,
            })
            regions.append(entry)
        per_theta.append({
            "theta": audit.theta,
            "multiplicity": audit.multiplicity,
            "limit_at_theta": audit.limit_at_theta,
            "theta_in_region": audit.theta_in_region,
            "neighborhood_below_one": audit.neighborhood_below_one,
            "regions": regions,
            "regions_without_critical_points": audit.regions_without_critical_points,
            "inside_samples": audit.inside_samples,
            "outside_samples": audit.outside_samples,
            "boundary_nodes_excluded": audit.boundary_nodes_excluded,
            "quotient_gt1_inside": audit.quotient_gt1_inside,
            "quotient_le1_outside": audit.quotient_le1_outside,
        })
    s, value = report.extremal
    return {
        "polynomial": polynomial_to_json(report.f),
        "text": format_polynomial(report.f),
        "degree": report.f.degree,
        "critical_points": [{"theta": c, "multiplicity": m} for c, m in report.critical_points],
        "per_theta": per_theta,
        "counterexamples": [
            {"s": c.s, "i": c.i, "quotient": c.quotient, "claim": c.claim} for c in report.counterexamples
        ],
        "quantifiers": {
            "samples": report.quantifiers.samples,
            "forall_le1": report.quantifiers.forall_le1,
            "min_le1": report.quantifiers.min_le1,
        },
        "extremal": {"s": s, "value": value},
        "config": {
            "bbox": report.bbox.as_list(),
            "resolution": list(report.resolution),
            "n_samples": report.n_samples,
            "seed": report.seed,
        },
    }


def audit_payload(report: SmaleAuditReport) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": "smale-audit", **audit_to_json(report)}


def instance_verdict(audit: dict) -> str:
    statuses = [r["status"] for theta in audit["per_theta"] for r in theta["regions"]]
    if STATUS_UNRESOLVED in statuses:
        return "unresolved-regions"
    if audit["counterexamples"]:
        return "counterexamples"
    return "consistent"


def summarize_batch(instances: Sequence[dict]) -> dict:
    counts = {
        "instances": len(instances),
        "failed": 0,
        "consistent": 0,
        "counterexamples": 0,
        "unresolved-regions": 0,
    }
    regions = {STATUS_CONTAINS_ZERO: 0, STATUS_CLIPPED: 0, STATUS_GRID_ARTIFACT: 0, STATUS_UNRESOLVED: 0}
    claims = {"theta_in_region": 0, "neighborhood_below_one": 0, "critical_points": 0}
    counterexamples = []
    for index, instance in enumerate(instances):
        if instance["verdict"] == "failed":
            counts["failed"] += 1
            continue
        counts[instance["verdict"]] += 1
        audit = instance["audit"]
        for theta in audit["per_theta"]:
            claims["critical_points"] += 1
            claims["theta_in_region"] += int(theta["theta_in_region"])
            claims["neighborhood_below_one"] += int(theta["neighborhood_below_one"])
            for region in theta["regions"]:
                regions[region["status"]] += 1
        counterexamples.extend({"instance": index, **c} for c in audit["counterexamples"])
    return {"verdicts": counts, "regions": regions, "claims": claims, "counterexamples": counterexamples}


def batch_payload(config: dict, instances: Sequence[dict]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "sweep",
        "config": config,
        "summary": summarize_batch(instances),
        "instances": list(instances),
    }


def error_payload(command: str, error: Exception) -> dict:
    detail: dict = {}
    for attribute in ("iterates", "residuals", "text", "position"):
        if hasattr(error, attribute):
            detail[attribute] = getattr(error, attribute)
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "error": type(error).__name__,
        "message": str(error),
        "detail": detail,
    }
