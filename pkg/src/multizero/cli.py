"""Command-line front end.

Exit status: 0 on success, 2 when the multiplicity search hit ``--max-order``
without terminating (the zero may not be isolated), 1 on any error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .breadth_one import DEFAULT_STAGE_CAP as B1_STAGE_CAP
from .breadth_one import DEFAULT_TOL as B1_TOL
from .breadth_one import BreadthError, breadth_one_multiplicity
from .deflation import (DEFAULT_STAGE_CAP, DEFAULT_THETA_J, DEFAULT_TOL, DeflationError,
                        cluster_search, depth_deflate)
from .dual_space import DEFAULT_MAX_ORDER, DualFunctional, display_basis, multiplicity_structure
from .expr import ExprError, load_system, render_system
from .jets import jet_truncate
from .macaulay import column_label, dump_macaulay
from .numrank import DEFAULT_THETA


def parse_complex(text: str) -> complex:
    """``a``, ``bi``, ``a+bi`` or ``a-bi`` (``j`` also accepted)."""
    t = text.strip().replace(" ", "")
    if not t:
        raise ValueError("empty coordinate")
    if t.endswith("i"):
        t = t[:-1] + "j"
        if t in ("j", "+j", "-j"):
            t = t.replace("j", "1j")
    try:
        return complex(t)
    except ValueError:
        raise ValueError(f"cannot read {text!r} as a complex number") from None


def parse_point(text: str) -> np.ndarray:
    return np.array([parse_complex(p) for p in text.split(",")], dtype=complex)


def read_point_file(path) -> np.ndarray:
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    return np.array([parse_complex(ln) for ln in lines if ln], dtype=complex)


def fmt_complex(z: complex, digits: int = 16) -> str:
    z = complex(z)
    re, im = z.real, z.imag
    if im == 0:
        return f"{re:.{digits}g}"
    if re == 0:
        return f"{im:.{digits}g}i"
    return f"{re:.{digits}g}{im:+.{digits}g}i"


def fmt_point(x, digits: int = 16) -> str:
    return "(" + ", ".join(fmt_complex(v, digits) for v in x) + ")"


def fmt_functional(c: DualFunctional, digits: int = 10, eps: float = 1e-12) -> str:
    parts = []
    for j, a in c.terms.items():
        a = complex(a)
        a = complex(a.real if abs(a.real) > eps else 0.0, a.imag if abs(a.imag) > eps else 0.0)
        if a == 0:
            continue
        label = column_label(j)
        if abs(a - 1) <= eps:
            parts.append(("+", label))
        elif abs(a + 1) <= eps:
            parts.append(("-", label))
        elif a.imag == 0:
            sign = "-" if a.real < 0 else "+"
            parts.append((sign, f"{abs(a.real):.{digits}g}*{label}"))
        else:
            parts.append(("+", f"({fmt_complex(a, digits)})*{label}"))
    if not parts:
        return "0"
    head = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    return " ".join([head] + [f"{s} {p}" for s, p in parts[1:]])


def _point(args, s: int) -> np.ndarray:
    if args.at is not None and args.at_file is not None:
        raise ValueError("give either --at or --at-file, not both")
    if args.at is not None:
        x = parse_point(args.at)
    elif args.at_file is not None:
        x = read_point_file(args.at_file)
    else:
        raise ValueError("a point is required (--at or --at-file)")
    if len(x) != s:
        raise ValueError(f"point has {len(x)} coordinates, system has {s} variables")
    return x


def _positive(name: str):
    def conv(text):
        v = float(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return v
    return conv


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multizero",
                                description="Multiplicity structure and refinement of multiple zeros.")
    p.add_argument("--version", action="version", version=f"multizero {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, default_format="text"):
        sp.add_argument("system", help="system file (first line 'vars ...')")
        sp.add_argument("--at", help="point as comma-separated a+bi values; use --at=-1,... for a leading minus")
        sp.add_argument("--at-file", help="file with one coordinate per line")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", choices=["text", "json", "csv"], default=default_format)
        sp.add_argument("-o", "--output", help="write the report here instead of stdout")

    m = sub.add_parser("multiplicity", help="multiplicity, Hilbert function and dual basis")
    common(m)
    m.add_argument("--theta", type=_positive("theta"), default=DEFAULT_THETA)
    m.add_argument("--max-order", type=_positive_int, default=DEFAULT_MAX_ORDER)
    m.add_argument("--dump-macaulay", metavar="DIR", help="write S_<order>.csv files here")

    d = sub.add_parser("deflate", help="refine a multiple zero by depth-deflation")
    common(d)
    d.add_argument("--theta-j", type=_positive("theta-j"), default=DEFAULT_THETA_J)
    d.add_argument("--tol", type=_positive("tol"), default=DEFAULT_TOL)
    d.add_argument("--stage-cap", type=_positive_int, default=DEFAULT_STAGE_CAP)

    b = sub.add_parser("breadth1", help="dual basis at a breadth-one zero")
    common(b)
    b.add_argument("--theta", type=_positive("theta"), default=DEFAULT_THETA)
    b.add_argument("--tol", type=_positive("tol"), default=B1_TOL)
    b.add_argument("--stage-cap", type=_positive_int, default=B1_STAGE_CAP)
    b.add_argument("--border", choices=["kernel", "random"], default="kernel",
                   help="bordering row: the Jacobian null vector or a seeded random vector")

    c = sub.add_parser("cluster", help="find all zeros in a polydisc")
    common(c)
    c.add_argument("--radius", type=_positive("radius"), required=True)
    c.add_argument("--n-starts", type=_positive_int, default=500)
    c.add_argument("--tol", type=_positive("tol"), default=1e-10)

    j = sub.add_parser("jet", help="truncated Taylor polynomial system")
    common(j)
    j.add_argument("--order", type=int, required=True)
    return p


def _header(args) -> dict:
    return {"version": __version__, "command": args.command, "seed": args.seed}


def _cmd_multiplicity(args, system, x):
    res = multiplicity_structure(system, x, theta=args.theta, max_order=args.max_order,
                                 seed=args.seed, keep_matrices=bool(args.dump_macaulay)
                                 or args.format == "csv")
    if args.dump_macaulay:
        dump_macaulay(res.matrices, args.dump_macaulay)
    code = 0 if res.terminated else 2
    if args.format == "json":
        return {**_header(args), "theta": args.theta, "max_order": args.max_order,
                **res.to_json()}, code
    if args.format == "csv":
        return res.matrices[-1], code
    lines = [res.summary(), f"theta {args.theta:g}, seed {args.seed}, version {__version__}",
             "dual basis:"]
    lines += [f"  {fmt_functional(c)}" for c in res.display_basis()]
    lines += [f"warning: {w}" for w in res.warnings]
    return "\n".join(lines), code


def _cmd_deflate(args, system, x):
    res = depth_deflate(system, x, theta_j=args.theta_j, tol=args.tol, seed=args.seed,
                        stage_cap=args.stage_cap)
    if args.format == "json":
        return {**_header(args), **res.to_json()}, 0
    cond = res.condition
    lines = [f"stages {res.stages}, zero {fmt_point(res.zero)}, "
             f"error estimate {cond.error_estimate:.2e}",
             f"residual {cond.residual:.2e}, condition {cond.kappa:.3e}, "
             f"nullities {res.nullities}",
             f"theta_j {args.theta_j:g}, tol {args.tol:g}, seed {args.seed}, version {__version__}"]
    lines += [f"warning: {w}" for w in res.warnings]
    return "\n".join(lines), 0


def _cmd_breadth1(args, system, x):
    res = breadth_one_multiplicity(system, x, seed=args.seed, tol=args.tol, theta=args.theta,
                                   stage_cap=args.stage_cap, b=args.border)
    if args.format == "json":
        return {**_header(args), "tol": args.tol, "border": args.border, **res.to_json()}, 0
    lines = [res.summary(), f"tol {args.tol:g}, border {args.border}, seed {args.seed}, "
             f"version {__version__}", "dual basis:"]
    lines += [f"  {fmt_functional(c)}" for c in display_basis(res.expansions)]
    lines += [f"warning: {w}" for w in res.warnings]
    return "\n".join(lines), 0


def _cmd_cluster(args, system, x):
    zeros = cluster_search(system, x, args.radius, n_starts=args.n_starts, seed=args.seed,
                           tol=args.tol)
    if args.format == "json":
        return {**_header(args), "radius": args.radius, "n_starts": args.n_starts,
                "tol": args.tol, "count": len(zeros),
                "zeros": [{"x": [{"re": float(v.real), "im": float(v.imag)} for v in z.x],
                           "residual": float(z.residual), "hits": z.hits} for z in zeros]}, 0
    lines = [f"{len(zeros)} zeros within radius {args.radius:g} "
             f"({args.n_starts} starts, seed {args.seed}, version {__version__})"]
    lines += [f"  {fmt_point(z.x)}  residual {z.residual:.1e}  hits {z.hits}" for z in zeros]
    return "\n".join(lines), 0


def _cmd_jet(args, system, x):
    if args.order < 0:
        raise ValueError("--order must be nonnegative")
    poly = jet_truncate(system, x, args.order)
    if args.format == "json":
        return {**_header(args), "order": args.order, "system": render_system(poly)}, 0
    return render_system(poly), 0


COMMANDS = {"multiplicity": _cmd_multiplicity, "deflate": _cmd_deflate,
            "breadth1": _cmd_breadth1, "cluster": _cmd_cluster, "jet": _cmd_jet}


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format == "csv" and args.command != "multiplicity":
        print("error: --format csv is only available for 'multiplicity'", file=sys.stderr)
        return 1
    try:
        system = load_system(args.system)
        x = _point(args, system.s)
        report, code = COMMANDS[args.command](args, system, x)
    except (OSError, ExprError, ValueError, ArithmeticError, DeflationError,
            BreadthError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if isinstance(report, dict):
        text = json.dumps(report, indent=2, default=_json_default, allow_nan=False) + "\n"
    elif isinstance(report, str):
        text = report + "\n"
    else:
        text = None
    try:
        if text is None:
            if args.output:
                report.to_csv(args.output)
            else:
                report.to_csv(stdout)
        elif args.output:
            Path(args.output).write_text(text)
        else:
            stdout.write(text)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))
