"""Command-line driver: every module as a subcommand, deterministic reports.

Reports are JSON (floats fixed at 17 significant digits, keys sorted) or CSV
for the tabular subcommands; identical argv and seeds give byte-identical
output.  Exit codes: 0 success, 1 usage error, 2 domain error (the report
carries the module error name).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import selftest as _selftest
from .bernoulli import hankel_det
from .errors import SubstratError
from .groups import group_dimensions, group_from_file, parse_builtin
from .heat import heat_space_lattice
from .kernel import (
    bump_multiplier,
    heatcap_multiplier,
    kernel_ft,
    table_multiplier,
    threshold_report,
)
from .oscillatory import (
    OmegaQuery,
    chi_for_certificate,
    fit_power_law,
    omega,
    stationary_prediction,
    theta_for_certificate,
)
from .phase import find_critical
from .quadrature import QuadratureGrid


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError("non-finite value in report")
    return f"{x:.17g}"


def canonical_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            items.append(f'{inner}"{key}": {canonical_json(obj[key], indent + 1)}')
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{canonical_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, complex):
        return canonical_json({"re": obj.real, "im": obj.imag}, indent)
    if isinstance(obj, np.ndarray):
        return canonical_json(obj.tolist(), indent)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        import json as _json

        return _json.dumps(obj)
    raise TypeError(f"unsupported report value of type {type(obj)}")


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    if not text.endswith("\n"):
        sys.stdout.write("\n")


def _load_group(args):
    if getattr(args, "builtin", None):
        return parse_builtin(args.builtin)
    return group_from_file(args.file)


def _add_group_source(parser):
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", help="builtin name, e.g. heisenberg:1, "
                                       "htype:4,3, free2step:3, rotfam:1,2")
    src.add_argument("--file", help="path to a JSON group definition file")


def _parse_floats(text: str) -> np.ndarray:
    return np.array([float(p) for p in text.split(",") if p != ""])


def _multiplier_from_spec(spec: str):
    name, _, args = spec.partition(":")
    params = [p for p in args.split(",") if p] if args else []
    if name == "heatcap":
        z = float(params[0]) if params else 1.0
        kmax = float(params[1]) if len(params) > 1 else 40.0
        return heatcap_multiplier(z=z, kmax=kmax)
    if name == "bump":
        return bump_multiplier(float(params[0]), float(params[1]))
    if name == "table":
        return table_multiplier(params[0])
    raise UsageError(f"unknown multiplier family '{name}'")


def _build_parser() -> _Parser:
    parser = _Parser(prog="substrat",
                     description="sub-Laplacian spectral toolkit on 2-step "
                                 "stratified groups")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("SUBSTRAT_THREADS", "1")),
                        help="worker cap (computations are single-process "
                             "numpy; recorded only)")
    parser.add_argument("--out", help="also write the report to this path")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p_group = sub.add_parser("group", help="group inspection")
    group_sub = p_group.add_subparsers(dest="group_command", parser_class=_Parser)
    p_info = group_sub.add_parser("info", help="dimensions of a group")
    _add_group_source(p_info)

    p_heat = sub.add_parser("heat", help="heat kernel values as CSV")
    _add_group_source(p_heat)
    p_heat.add_argument("--z", default="1.0", help="time parameter RE[,IM]")
    p_heat.add_argument("--x", help="comma-separated first-layer point")
    p_heat.add_argument("--u", help="comma-separated central point")
    p_heat.add_argument("--xmax", type=float, default=2.0)
    p_heat.add_argument("--xn", type=int, default=5)
    p_heat.add_argument("--umax", type=float, default=1.0)
    p_heat.add_argument("--un", type=int, default=5)
    p_heat.add_argument("--nodes", type=int, default=128,
                        help="quadrature nodes per dual axis")

    p_phase = sub.add_parser("phase", help="phase-function tools")
    phase_sub = p_phase.add_subparsers(dest="phase_command", parser_class=_Parser)
    p_crit = phase_sub.add_parser("find-critical",
                                  help="certify a nondegenerate critical point")
    _add_group_source(p_crit)
    p_crit.add_argument("--seed", type=int, default=0)
    p_hankel = phase_sub.add_parser("hankel", help="exact Hankel determinant")
    p_hankel.add_argument("--m", type=int, required=True)
    p_hankel.add_argument("--s", type=int, required=True)

    p_osc = sub.add_parser("osc", help="oscillatory kernel checks")
    osc_sub = p_osc.add_subparsers(dest="osc_command", parser_class=_Parser)
    p_verify = osc_sub.add_parser("verify",
                                  help="stationary-phase verification sweep")
    _add_group_source(p_verify)
    p_verify.add_argument("--t", default="8,16,32,64",
                          help="comma-separated dilation times, increasing")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--emit-plot", help="write (t, error) data file")

    p_kernel = sub.add_parser("kernel", help="multiplier kernel tools")
    kernel_sub = p_kernel.add_subparsers(dest="kernel_command", parser_class=_Parser)
    p_ft = kernel_sub.add_parser("ft", help="kernel Fourier transform value")
    _add_group_source(p_ft)
    p_ft.add_argument("--F", required=True,
                      help="multiplier family: heatcap:z,Kmax | bump:a,b | "
                           "table:file.csv")
    p_ft.add_argument("--xi", required=True, help="comma-separated xi")
    p_ft.add_argument("--mu", required=True, help="comma-separated mu")

    p_thr = sub.add_parser("threshold", help="smoothness threshold report")
    _add_group_source(p_thr)
    p_thr.add_argument("--h", type=int, help="override the detected degree")
    p_thr.add_argument("--samples", type=int, default=200)
    p_thr.add_argument("--seed", type=int, default=0)

    p_self = sub.add_parser("selftest", help="run the acceptance criteria")
    p_self.add_argument("--level", choices=("quick", "full"), default="quick")
    return parser


def _cmd_group(args) -> str:
    if args.group_command != "info":
        raise UsageError("usage: substrat group info --builtin NAME | --file PATH")
    g = _load_group(args)
    d1, d2, d, q = group_dimensions(g)
    return canonical_json({"d1": d1, "d2": d2, "d": d, "Q": q})


def _cmd_heat(args) -> str:
    g = _load_group(args)
    z_parts = _parse_floats(args.z)
    z = complex(z_parts[0], z_parts[1] if len(z_parts) > 1 else 0.0)
    if args.x is not None and args.u is not None:
        xs = _parse_floats(args.x).reshape(1, -1)
        us = _parse_floats(args.u).reshape(1, -1)
    else:
        ax = np.linspace(-args.xmax, args.xmax, args.xn)
        au = np.linspace(-args.umax, args.umax, args.un)
        xs = np.stack(np.meshgrid(*([ax] * g.d1), indexing="ij"),
                      axis=-1).reshape(-1, g.d1)
        us = np.stack(np.meshgrid(*([au] * g.d2), indexing="ij"),
                      axis=-1).reshape(-1, g.d2)
    vals = heat_space_lattice(g, z, xs, us,
                              QuadratureGrid(nodes_per_axis=args.nodes))
    header = [f"x{i + 1}" for i in range(g.d1)] \
        + [f"u{i + 1}" for i in range(g.d2)] + ["re_p", "im_p"]
    lines = [",".join(header)]
    for i, x in enumerate(xs):
        for j, u in enumerate(us):
            val = vals[i, j]
            row = [_fmt_float(c) for c in x] + [_fmt_float(c) for c in u] \
                + [_fmt_float(val.real), _fmt_float(val.imag)]
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _cmd_phase(args) -> str:
    if args.phase_command == "hankel":
        det = hankel_det(args.m, args.s)
        return canonical_json({
            "m": args.m, "s": args.s,
            "rational": f"{det.numerator}/{det.denominator}",
            "decimal": float(det),
        })
    if args.phase_command == "find-critical":
        g = _load_group(args)
        cert = find_critical(g, seed=args.seed)
        doc = cert.to_dict()
        doc["seed"] = args.seed
        return canonical_json(doc)
    raise UsageError("usage: substrat phase {find-critical | hankel} ...")


def _cmd_osc(args) -> str:
    if args.osc_command != "verify":
        raise UsageError("usage: substrat osc verify --builtin NAME ...")
    g = _load_group(args)
    ts = [float(t) for t in args.t.split(",") if t]
    cert = find_critical(g, seed=args.seed)
    chi = chi_for_certificate(g, cert)
    theta = theta_for_certificate(g, cert)
    expo = g.Q - g.d / 2.0
    rows = []
    samples = []
    pred_abs = 0.0
    for t in ts:
        om = omega(g, OmegaQuery(t=t, y=cert.y0, v=cert.v0, chi=chi, theta=theta))
        pred = stationary_prediction(g, t, cert.y0, cert.v0, chi, theta, cert)
        err = abs(t ** expo * om - pred)
        pred_abs = abs(pred)
        rows.append((t, om, pred_abs, err))
        samples.append((t, err))
    lines = ["t,re_omega,im_omega,abs_prediction,error"]
    for t, om, pa, err in rows:
        lines.append(",".join([_fmt_float(t), _fmt_float(om.real),
                               _fmt_float(om.imag), _fmt_float(pa),
                               _fmt_float(err)]))
    fit = fit_power_law(samples) if len(samples) >= 3 else None
    if fit is not None:
        lines.append(f"# fitted_error_exponent={_fmt_float(fit.exponent)} "
                     f"intercept={_fmt_float(fit.intercept)} "
                     f"max_residual={_fmt_float(fit.max_residual)}")
    if args.emit_plot:
        with open(args.emit_plot, "w", encoding="utf-8") as fh:
            fh.write("# t error\n")
            for t, err in samples:
                fh.write(f"{_fmt_float(t)} {_fmt_float(err)}\n")
    return "\n".join(lines) + "\n"


def _cmd_kernel(args) -> str:
    if args.kernel_command != "ft":
        raise UsageError("usage: substrat kernel ft --builtin NAME ...")
    g = _load_group(args)
    F = _multiplier_from_spec(args.F)
    val = kernel_ft(g, F, _parse_floats(args.xi), _parse_floats(args.mu))
    return canonical_json({"F": F.name, "re": val.real, "im": val.imag})


def _cmd_threshold(args) -> str:
    g = _load_group(args)
    rep = threshold_report(g, h=args.h, samples=args.samples, seed=args.seed)
    return canonical_json({
        "h": rep.h, "h0": rep.h0, "bound": rep.bound,
        "q_half": g.Q / 2.0, "sample_check": rep.sample_check,
    })


def _cmd_selftest(args) -> tuple[str, bool]:
    report = _selftest.run_selftest(args.level)
    return canonical_json(report), bool(report["passed"])


def dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if args.command == "group":
            text = _cmd_group(args)
        elif args.command == "heat":
            text = _cmd_heat(args)
        elif args.command == "phase":
            text = _cmd_phase(args)
        elif args.command == "osc":
            text = _cmd_osc(args)
        elif args.command == "kernel":
            text = _cmd_kernel(args)
        elif args.command == "threshold":
            text = _cmd_threshold(args)
        elif args.command == "selftest":
            text, ok = _cmd_selftest(args)
            _emit(text, args.out)
            return 0 if ok else 2
        else:
            raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        parser.print_usage(sys.stderr)
        return 1
    except SubstratError as exc:
        sys.stdout.write(canonical_json({"error": exc.name,
                                         "message": str(exc)}) + "\n")
        return 2
    _emit(text, args.out)
    return 0


def entrypoint():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
