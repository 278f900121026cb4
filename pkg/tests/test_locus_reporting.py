import json
import math
import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "scripts"))

from locus_models import AT_INFINITY, Bbox, GridField, LocusPoint, LocusTrace, RootFindingError
from locus_reporting import (
    dumps,
    error_payload,
    field_csv,
    instance_verdict,
    summarize_batch,
    to_jsonable,
    trace_csv,
)


def make_trace() -> LocusTrace:
    points = (LocusPoint(-1 + 0.001j, 0.0005, 0.0), LocusPoint(0.1 + 1j, 1.0, 1e-12))
    return LocusTrace(alpha=math.pi / 2, points=points, origin="pole:0", branch=0, terminus="zero")


def make_audit(statuses=("contains-zero",), counterexamples=()) -> dict:
    return {
        "per_theta": [
            {
                "theta_in_region": False,
                "neighborhood_below_one": False,
                "regions": [{"status": status} for status in statuses],
            }
        ],
        "counterexamples": list(counterexamples),
    }


class JsonTests(unittest.TestCase):
    def test_non_finite_and_complex_values(self):
        value = {"a": math.inf, "b": -math.inf, "c": 1 + 2j, "d": AT_INFINITY, "e": (np.float64(0.5), np.int64(3))}
        self.assertEqual(to_jsonable(value), {"a": "inf", "b": "-inf", "c": [1.0, 2.0], "d": "inf", "e": [0.5, 3]})
        self.assertEqual(to_jsonable(float("nan")), "nan")

    def test_arrays_become_lists(self):
        self.assertEqual(to_jsonable(np.array([[1.0, 2.0]])), [[1.0, 2.0]])
        self.assertIs(to_jsonable(np.bool_(True)), True)

    def test_dumps_uses_shortest_round_trip_floats(self):
        text = dumps({"x": 0.1 + 0.2, "y": math.inf})
        self.assertTrue(text.endswith("\n"))
        self.assertIn("0.30000000000000004", text)
        self.assertEqual(json.loads(text), {"x": 0.30000000000000004, "y": "inf"})


class CsvTests(unittest.TestCase):
    def test_trace_csv(self):
        lines = trace_csv(make_trace()).splitlines()
        self.assertEqual(lines[0], "sigma,t,gain,phase_residual")
        self.assertEqual(lines[1], "-1.0,0.001,0.0005,0.0")
        self.assertEqual(len(lines), 3)

    def test_field_csv_header_and_rows(self):
        field = GridField(Bbox(-1.0, 1.0, -2.0, 2.0), 2, 3, np.array([[0.0, 1.0], [2.0, 3.0], [4.0, math.inf]]))
        lines = field_csv(field).splitlines()
        self.assertEqual(lines[0], "# bbox=-1.0,1.0,-2.0,2.0 nx=2 ny=3 row-major from t_min")
        self.assertEqual(lines[1], "0.0,1.0")
        self.assertEqual(lines[3], "4.0,inf")


class BatchTests(unittest.TestCase):
    def test_instance_verdicts(self):
        self.assertEqual(instance_verdict(make_audit()), "consistent")
        self.assertEqual(instance_verdict(make_audit(counterexamples=[{"claim": "inside"}])), "counterexamples")
        self.assertEqual(
            instance_verdict(make_audit(("unresolved",), [{"claim": "inside"}])),
            "unresolved-regions",
        )

    def test_summary_counts(self):
        instances = [
            {"verdict": "consistent", "audit": make_audit(("contains-zero", "clipped-by-bbox"))},
            {"verdict": "failed", "error": "RootFindingError"},
            {
                "verdict": "counterexamples",
                "audit": make_audit(("grid-artifact",), [{"s": [0.0, 1.0], "i": 0, "quotient": 1.5, "claim": "outside"}]),
            },
        ]
        summary = summarize_batch(instances)
        self.assertEqual(summary["verdicts"]["instances"], 3)
        self.assertEqual(summary["verdicts"]["failed"], 1)
        self.assertEqual(summary["verdicts"]["consistent"], 1)
        self.assertEqual(summary["verdicts"]["counterexamples"], 1)
        self.assertEqual(
            summary["regions"],
            {"contains-zero": 1, "clipped-by-bbox": 1, "grid-artifact": 1, "unresolved": 0},
        )
        self.assertEqual(summary["claims"]["critical_points"], 2)
        self.assertEqual(summary["counterexamples"][0]["instance"], 2)


class ErrorPayloadTests(unittest.TestCase):
    def test_root_finding_error_detail(self):
        error = RootFindingError("Aberth did not converge", [1 + 1j], [0.5])
        payload = to_jsonable(error_payload("roots", error))
        self.assertEqual(payload["error"], "RootFindingError")
        self.assertEqual(payload["message"], "Aberth did not converge")
        self.assertEqual(payload["detail"], {"iterates": [[1.0, 1.0]], "residuals": [0.5]})


if __name__ == "__main__":
    unittest.main()
