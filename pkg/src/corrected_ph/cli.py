"""Command line interface: ``solve``, ``inspect`` and ``validate``.

Exit codes: 0 success, 1 failed validation, 2 unstable model, 3 repeated
root or pole, 4 inversion, Newton or quadrature failure, 5 invalid
configuration, 6 any other analysis error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .analysis import AnalysisResult, run_analysis, run_checks
from .config import AnalysisConfig, load_config
from .exceptions import ConfigInvalid, Unstable, WorkloadError
from .inversion import InversionSettings

CSV_HEADER = ["t", "exact", "ph", "corrected_ph", "rel_err_ph", "rel_err_corrected"]


def format_value(v: float | None, full: bool = False) -> str:
    """Six decimals, or two-digit scientific notation below 1e-5."""
    if v is None:
        return ""
    if full:
        return repr(float(v))
    if v != 0 and abs(v) < 1e-5:
        return f"{v:.2e}"
    return f"{v:.6f}"


def write_csv(res: AnalysisResult, stream, full: bool = False) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in res.rows:
        w.writerow([f"{r.t:g}", format_value(r.exact, full), format_value(r.ph, full),
                    format_value(r.corrected_ph, full), format_value(r.rel_err_ph, full),
                    format_value(r.rel_err_corrected, full)])


def _c(z) -> str:
    z = complex(z)
    if abs(z) < 5e-13:
        return "0"
    return f"{z.real:.6f}" if abs(z.imag) < 1e-12 else f"{z.real:.6f}{z.imag:+.6f}i"


def report(res: AnalysisResult) -> str:
    b = res.base
    lines = [f"load            {res.load:.6f}",
             f"base load       {res.base_load:.6f}",
             f"roots           {', '.join(_c(r) for r in b.roots)}",
             f"u               {', '.join(_c(x) for x in b.u)}  (cond {b.transform.cond:.3g})",
             f"P(V = 0)        {_c(b.atom)}"]
    dec = res.decomposition
    if dec is not None:
        lines.append(f"coefficients    residual {dec.residual:.2e}, {dec.rank}/{dec.n_columns} columns"
                     f"{' (augmented basis)' if dec.augmented else ''}")
        for name, vals in dec.coeffs.items():
            if len(vals):
                lines.append(f"  {name:<10} {', '.join(_c(v) for v in vals)}")
    return "\n".join(lines)


def _jsonable(z):
    z = np.asarray(z)
    if np.iscomplexobj(z):
        return {"re": z.real.tolist(), "im": z.imag.tolist()}
    return z.tolist()


def inspect_stage(res: AnalysisResult, what: str) -> dict:
    b = res.base
    cm = b.cm
    if what == "roots":
        return {"roots": _jsonable(b.roots),
                "residuals": [abs(cm.det_at(r)) if i else 0.0 for i, r in enumerate(b.roots)],
                "a_vecs": _jsonable(b.a_vecs)}
    if what == "u":
        return {"u": _jsonable(b.u), "cond": b.transform.cond, "atom": _jsonable(b.atom)}
    if what == "coeffs":
        dec = res.decomposition
        if dec is None:
            return {"coeffs": None, "note": "eps = 0: no correction"}
        return {"coeffs": {k: _jsonable(v) for k, v in dec.coeffs.items()},
                "residual": dec.residual, "rank": dec.rank, "columns": dec.n_columns,
                "cond": dec.cond, "augmented": dec.augmented, "prefactor": dec.prefactor}
    w = b.wlst
    return {"num_roots": _jsonable(b.transform.num_roots), "den_roots": _jsonable(b.transform.den_roots),
            "num": _jsonable(w.num.coeffs), "den": _jsonable(w.den.coeffs),
            "limit_at_infinity": _jsonable(w.limit_at_infinity())}


def _apply_flags(cfg: AnalysisConfig, args) -> AnalysisConfig:
    inv = cfg.inversion
    if getattr(args, "inversion", None) or getattr(args, "terms", None):
        inv = InversionSettings(args.inversion or inv.algorithm, args.terms or inv.terms)
    return cfg.with_overrides(inversion=inv)


def cmd_solve(args) -> int:
    cfg = _apply_flags(load_config(args.config), args)
    res = run_analysis(cfg, with_exact=False if args.no_exact else None)
    out = args.output or cfg.output_path
    if out:
        with open(out, "w", newline="") as fh:
            write_csv(res, fh, args.full_precision)
        print(report(res))
    else:
        write_csv(res, sys.stdout, args.full_precision)
        print(report(res), file=sys.stderr)
    return 0


def cmd_inspect(args) -> int:
    cfg = _apply_flags(load_config(args.config), args)
    res = run_analysis(cfg, with_exact=False, decompose=args.what == "coeffs")
    print(json.dumps(inspect_stage(res, args.what), indent=2))
    return 0


def cmd_validate(args) -> int:
    cfg = _apply_flags(load_config(args.config), args)
    res = run_analysis(cfg, with_exact=True)
    checks = run_checks(res)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="corrected-ph", description="Workload tails of MAP/G/1 queues "
                                "with phase-type plus heavy-tailed service.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON analysis configuration")
        sp.add_argument("--inversion", choices=["euler", "talbot"], help="inversion algorithm")
        sp.add_argument("--terms", type=int, help="inversion terms (>= 10)")

    sp = sub.add_parser("solve", help="compute the tail table and write CSV")
    common(sp)
    sp.add_argument("--output", help="CSV path (stdout when omitted)")
    sp.add_argument("--no-exact", action="store_true", help="skip the reference column")
    sp.add_argument("--full-precision", action="store_true", help="print all digits")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("inspect", help="dump an intermediate stage as JSON")
    common(sp)
    sp.add_argument("--what", choices=["roots", "u", "coeffs", "transform"], required=True)
    sp.set_defaults(func=cmd_inspect)

    sp = sub.add_parser("validate", help="run the cross-check suite")
    common(sp)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.terms is not None and args.terms < 10:
            raise ConfigInvalid("--terms must be at least 10")
        return args.func(args)
    except Unstable as exc:
        print(f"error: {exc} (margin {exc.margin:.6g})", file=sys.stderr)
        return exc.exit_code
    except WorkloadError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
