from __future__ import annotations

import argparse
import math
import os
from typing import Sequence

from locus_models import (
    COMMANDS,
    DEFAULT_EXTREMAL_RESOLUTION,
    DEFAULT_N_SAMPLES,
    DEFAULT_RESOLUTION,
    FIELD_QUANTITIES,
    SUPPORTED_FORMATS,
    Bbox,
    InputError,
    RunConfig,
)


# Options whose values may start with '-' (e.g. --num "-1,1"); argparse would read those as flags.
VALUE_OPTIONS = ("--poly", "--num", "--den", "--bbox", "--alpha", "--level", "--degrees")


class ConfigParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise InputError(f"{self.prog}: {message}")


def _join_option_values(argv: Sequence[str]) -> list[str]:
    joined: list[str] = []
    args = list(argv)
    i = 0
    while i < len(args):
        token = args[i]
        if token in VALUE_OPTIONS and i + 1 < len(args):
            joined.append(f"{token}={args[i + 1]}")
            i += 2
            continue
        joined.append(token)
        i += 1
    return joined


def _parse_floats(raw: str, what: str, count: int | None = None) -> list[float]:
    try:
        values = [float(part) for part in raw.split(",")]
    except ValueError:
        raise InputError(f"{what} must be comma-separated numbers, got {raw!r}") from None
    if count is not None and len(values) != count:
        raise InputError(f"{what} needs {count} values, got {len(values)}")
    if not all(math.isfinite(v) for v in values):
        raise InputError(f"{what} must be finite, got {raw!r}")
    return values


def _parse_bbox(raw: str | None) -> Bbox | None:
    if not raw:
        return None
    return Bbox(*_parse_floats(raw, "bbox", 4))


def _parse_resolution(raw: str | None, command: str) -> tuple[int, int]:
    if not raw:
        default = DEFAULT_EXTREMAL_RESOLUTION if command == "smale-extremal" else DEFAULT_RESOLUTION
        return default, default
    try:
        parts = [int(part) for part in raw.split(",")]
    except ValueError:
        raise InputError(f"resolution must be N or NX,NY, got {raw!r}") from None
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2 or min(parts) < 2:
        raise InputError(f"resolution components must be >= 2, got {raw!r}")
    return parts[0], parts[1]


def _parse_formats(raw: str | None) -> tuple[str, ...]:
    if not raw:
        return SUPPORTED_FORMATS
    formats: list[str] = []
    for name in (part.strip().lower() for part in raw.split(",") if part.strip()):
        if name not in SUPPORTED_FORMATS:
            raise InputError(f"unsupported format {name!r}; choose from {', '.join(SUPPORTED_FORMATS)}")
        if name not in formats:
            formats.append(name)
    return tuple(formats)


def _parse_degrees(raw: str) -> tuple[int, int]:
    try:
        parts = [int(part) for part in raw.split(",")]
    except ValueError:
        raise InputError(f"degrees must be LO,HI, got {raw!r}") from None
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2 or parts[0] < 2 or parts[0] > parts[1]:
        raise InputError(f"degrees must satisfy 2 <= LO <= HI, got {raw!r}")
    return parts[0], parts[1]


def _threads_from_env() -> int:
    try:
        return max(1, int(os.environ.get("LOCUSLAB_THREADS", "1")))
    except ValueError:
        return 1


def build_parser() -> ConfigParser:
    parser = ConfigParser(prog="locuslab", description="Root-locus tracing and Smale quotient audits.")
    commands = parser.add_subparsers(dest="command", required=True)

    def common(sub: ConfigParser) -> None:
        sub.add_argument("--bbox", help="sigma_min,sigma_max,t_min,t_max (default: square of half-width 2x scene scale)")
        sub.add_argument("--resolution", help="N or NX,NY grid samples")
        sub.add_argument("--seed", type=int, default=0)
        sub.add_argument("--out-dir", default=None)
        sub.add_argument("--formats", help="comma-separated subset of json,csv,svg")
        sub.add_argument("--quiet", action="store_true")

    roots = commands.add_parser("roots", help="clustered roots of a polynomial, or zeros/poles of N/D")
    roots.add_argument("--poly")
    roots.add_argument("--num")
    roots.add_argument("--den", default="1")
    common(roots)

    trace = commands.add_parser("trace", help="trace every alpha locus of N/D")
    trace.add_argument("--num", required=True)
    trace.add_argument("--den", default="1")
    trace.add_argument("--alpha", type=float, required=True, help="locus phase in radians")
    common(trace)

    field = commands.add_parser("field", help="sample a scalar field of N/D and extract contours")
    field.add_argument("--num", required=True)
    field.add_argument("--den", default="1")
    field.add_argument("--quantity", choices=FIELD_QUANTITIES, default="modulus")
    field.add_argument("--alpha", type=float, help="phase for --quantity phase-residual")
    field.add_argument("--level", type=float, default=1.0)
    common(field)

    for name in ("smale-audit", "smale-regions", "smale-extremal"):
        sub = commands.add_parser(name)
        sub.add_argument("--poly", required=True, help="ascending coefficients, e.g. 0,-4,0,0,1")
        sub.add_argument("--n-samples", type=int, default=DEFAULT_N_SAMPLES)
        common(sub)

    sweep = commands.add_parser("sweep", help="audit a batch of seeded random polynomials")
    sweep.add_argument("--count", type=int, default=50)
    sweep.add_argument("--degrees", default="2,6")
    sweep.add_argument("--coeff-box", type=float, default=1.0)
    sweep.add_argument("--n-samples", type=int, default=DEFAULT_N_SAMPLES)
    common(sweep)
    return parser


def load_config(argv: Sequence[str] | None = None) -> RunConfig:
    args = build_parser().parse_args(_join_option_values(argv if argv is not None else []))
    command = args.command
    if command not in COMMANDS:
        raise InputError(f"unknown command {command!r}")
    if args.seed < 0:
        raise InputError(f"seed must be a nonnegative integer, got {args.seed}")

    poly = getattr(args, "poly", None)
    num = getattr(args, "num", None)
    alpha = getattr(args, "alpha", None)
    quantity = getattr(args, "quantity", "modulus")
    if command == "roots" and not (poly or num):
        raise InputError("roots needs --poly or --num")
    if command == "field" and quantity == "phase-residual" and alpha is None:
        raise InputError("--quantity phase-residual needs --alpha")
    if alpha is not None and not math.isfinite(alpha):
        raise InputError("alpha must be finite")

    n_samples = getattr(args, "n_samples", DEFAULT_N_SAMPLES)
    if n_samples < 1:
        raise InputError(f"n-samples must be >= 1, got {n_samples}")
    count = getattr(args, "count", 1)
    if count < 1:
        raise InputError(f"count must be >= 1, got {count}")
    coeff_box = getattr(args, "coeff_box", 1.0)
    if not (math.isfinite(coeff_box) and coeff_box > 0):
        raise InputError(f"coeff-box must be positive, got {coeff_box}")

    return RunConfig(
        command=command,
        poly=poly,
        num=num,
        den=getattr(args, "den", None),
        bbox=_parse_bbox(args.bbox),
        resolution=_parse_resolution(args.resolution, command),
        alpha=alpha,
        seed=args.seed,
        out_dir=args.out_dir or os.environ.get("LOCUSLAB_OUT_DIR", "out"),
        formats=_parse_formats(args.formats),
        quantity=quantity,
        level=getattr(args, "level", 1.0),
        n_samples=n_samples,
        count=count,
        degree_range=_parse_degrees(getattr(args, "degrees", "2,6")),
        coeff_box=coeff_box,
        threads=_threads_from_env(),
        quiet=args.quiet,
    )
