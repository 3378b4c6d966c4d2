"""Command-line entry point: ``tropkp <command> [options]``.

Exit codes: 0 success, 1 invalid input, 2 precision exhausted, 3 a check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .bundled import EXAMPLES, Example, example_from_document, load_example
from .component_data import ComponentDataError, _parse_complex
from .degeneration import convergence_report
from .graph_core import CurveError, cycle_basis, genus, parse_tropical_curve
from .riemann_theta import PrecisionError, ThetaError
from .tau_kp import TauError, kp_residual, parse_grid, tau_expsum, u_grid
from .tropical_period import is_positive_definite, period_matrix, symbolic_period_matrix
from .tropical_theta import delaunay_set, maximal_elements, verify_max_form_decomposition

EXIT_OK, EXIT_INPUT, EXIT_PRECISION, EXIT_CHECK = 0, 1, 2, 3
DEFAULT_S = "1e-1,1e-2,1e-3,1e-4,1e-5"


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# output


def _plain(obj):
    """JSON-ready copy with a fixed number format (15 significant digits)."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, Fraction):
        return str(obj.numerator) if obj.denominator == 1 else f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_plain(float(obj.real)), _plain(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return float(f"{x:.15g}")
    return obj


def _emit(payload, rows: list[dict] | None, args) -> None:
    if args.format == "csv":
        if rows is None:
            raise InputError(f"command {args.command!r} has no tabular output; use --format json")
        buf = io.StringIO()
        keys = list(rows[0].keys()) if rows else []
        writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: json.dumps(_plain(v)) if isinstance(v, (list, tuple, dict)) else _plain(v)
                             for k, v in r.items()})
        text = buf.getvalue()
    else:
        text = json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# input


def _read_json(path: str, label: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"{label}: cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{label}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _document(args) -> dict:
    if args.example:
        if args.input:
            raise InputError("--example and --input are mutually exclusive")
        return {"example": args.example}
    if not args.input:
        raise InputError("--input (or --example) is required")
    doc = _read_json(args.input, "--input")
    if not isinstance(doc, dict):
        raise InputError("--input: document must be a JSON object")
    if "curve" not in doc:
        doc = {"curve": doc}
    if args.components:
        doc["components"] = _read_json(args.components, "--components")
    return doc


def _curve_only(args):
    doc = _document(args)
    if "example" in doc:
        ex = load_example(doc["example"])
        return ex.curve, ex.alpha
    curve = parse_tropical_curve(doc["curve"])
    alpha = tuple(Fraction(str(a)) for a in doc.get("alpha", [])) or None
    return curve, alpha


def _example(args) -> Example:
    doc = _document(args)
    if "example" in doc:
        ex = load_example(doc["example"], order=max(4, args.order))
    else:
        if "components" not in doc:
            raise InputError("component data needed: pass --components or a combined --input document")
        ex = example_from_document(doc, Path(args.input).stem, order=max(4, args.order))
    if args.alpha is not None:
        ex.alpha = _alpha(args.alpha, ex.basis.rank)
    if args.c is not None:
        ex.c = _cvec(args.c, ex.data.genus, "--c")
    if args.z is not None:
        ex.z = _cvec(args.z, ex.data.genus, "--z")
    return ex


def _alpha(text: str, n: int) -> tuple[Fraction, ...]:
    try:
        vals = tuple(Fraction(p.strip()) for p in text.split(",") if p.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"--alpha: {exc}") from exc
    if len(vals) != n:
        raise InputError(f"--alpha: expected {n} entries, got {len(vals)}")
    return vals


def _cvec(text: str, n: int, flag: str) -> np.ndarray:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if len(parts) != n:
        raise InputError(f"{flag}: expected {n} entries, got {len(parts)}")
    return np.array([_parse_complex(p, f"{flag}[{i}]") for i, p in enumerate(parts)], dtype=complex)


def _floats(text: str, flag: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise InputError(f"{flag}: {exc}") from exc


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args):
    curve, _ = _curve_only(args)
    basis = cycle_basis(curve)
    B = period_matrix(curve, basis)
    h1, g = genus(curve)
    payload = {
        "genus": [h1, g],
        "basis": {"edge_ids": list(basis.edge_ids), "matrix": basis.matrix.tolist(),
                  "chords": list(basis.chords), "tree": sorted(basis.tree)},
        "period_matrix": B.to_json(),
        "symbolic_period_matrix": symbolic_period_matrix(basis).to_json(),
        "positive_definite": is_positive_definite(B.entries),
    }
    return payload, None


def _alpha_for(args, curve, default):
    n = cycle_basis(curve).rank
    if args.alpha is not None:
        return _alpha(args.alpha, n)
    if default is not None:
        return default
    raise InputError("--alpha is required")


def cmd_troptheta(args):
    curve, default = _curve_only(args)
    alpha = _alpha_for(args, curve, default)
    D = delaunay_set(period_matrix(curve, cycle_basis(curve)), alpha)
    return {"alpha": list(alpha), "value": D.value}, None


def cmd_delaunay(args):
    curve, default = _curve_only(args)
    alpha = _alpha_for(args, curve, default)
    D = delaunay_set(period_matrix(curve, cycle_basis(curve)), alpha)
    rows = [{"point": list(p)} for p in D.points]
    return {"alpha": list(alpha), "value": D.value, "points": [list(p) for p in D.points]}, rows


def cmd_maximal(args):
    curve, default = _curve_only(args)
    alpha = _alpha_for(args, curve, default)
    basis = cycle_basis(curve)
    B_sym = symbolic_period_matrix(basis)
    report = verify_max_form_decomposition(B_sym, curve.lengths, alpha)
    maxi = maximal_elements(B_sym, alpha, args.radius) if args.radius else report.maximal
    forms = [{"form": m.form.to_json(), "witnesses": [list(w) for w in m.witnesses],
              "value": m.value_at(curve.lengths)} for m in maxi.forms]
    payload = {
        "alpha": list(alpha),
        "maximal_forms": forms,
        "search_radius": maxi.radius,
        "stable": maxi.stable,
        "theta": report.theta,
        "achieving": [{"form": m.form.to_json(), "witnesses": [list(w) for w in m.witnesses]}
                      for m in report.achieving],
        "checks": report.checks,
    }
    if not report.passed:
        payload["error"] = "decomposition check failed"
    rows = [{"form": f["form"], "witnesses": f["witnesses"], "value": f["value"]} for f in forms]
    return payload, rows


def cmd_limit_theta(args):
    ex = _example(args)
    s_list = _floats(args.s or DEFAULT_S, "--s")
    rep = convergence_report(ex.family, ex.data, ex.alpha, ex.z, s_list, args.tol)
    payload = {"alpha": list(ex.alpha), "z": ex.z, "rows": rep.rows, "monotone": rep.monotone}
    return payload, rep.rows


def _spec(args, ex: Example):
    kind = args.kind
    kw = {"times": args.order, "tol": min(args.tol, 1e-12)}
    if kind == "family":
        s_vals = _floats(args.s or "1e-5", "--s")
        if len(s_vals) != 1:
            raise InputError("--s: a family tau takes a single s")
        kw.update(s=s_vals[0], regularized=args.regularized)
    elif kind == "component":
        report = verify_max_form_decomposition(ex.B_sym, ex.curve.lengths, ex.alpha)
        if not 0 <= args.form < len(report.achieving):
            raise InputError(f"--form: choose 0..{len(report.achieving) - 1}")
        kw.update(form=report.achieving[args.form])
    return ex.spec(kind, **kw)


def cmd_tau(args):
    ex = _example(args)
    spec = _spec(args, ex)
    t = _cvec(args.t, len(args.t.split(",")), "--t") if args.t else np.zeros(spec.times)
    T = np.zeros((1, spec.times), dtype=complex)
    if len(t) > spec.times:
        raise InputError(f"--t: at most {spec.times} times")
    T[0, :len(t)] = t
    es = tau_expsum(spec, T)
    logv, size = es.log_value(T)
    return {"kind": spec.kind, "t": T[0], "tau": complex(np.exp(logv[0])), "log_tau": complex(logv[0]),
            "relative_size": float(size[0])}, None


def cmd_u_grid(args):
    ex = _example(args)
    spec = _spec(args, ex)
    grid = parse_grid(args.grid)
    pts, u, ok = u_grid(spec, grid)
    rows = [{"x": p[0], "t2": p[1], "t3": p[2], "u_re": float(np.real(v)), "u_im": float(np.imag(v)),
             "ok": bool(o)} for p, v, o in zip(pts, u, ok)]
    return {"grid": {k: list(v) for k, v in grid.items()}, "points": rows}, rows


def cmd_kp_residual(args):
    ex = _example(args)
    spec = _spec(args, ex)
    rep = kp_residual(spec, parse_grid(args.grid))
    payload = rep.to_json()
    return payload, [payload | {"grid": json.dumps(payload["grid"])}]


def cmd_verify(args):
    from .verification import run_acceptance

    results = run_acceptance()
    rows = [{"check": r.name, "passed": r.passed, "seconds": r.seconds, "budget": r.budget} for r in results]
    payload = {"checks": [dict(row, details=r.details) for row, r in zip(rows, results)],
               "passed": all(r.passed for r in results)}
    for r in results:
        print(r.line, file=sys.stderr)
    return payload, rows


COMMANDS = {
    "analyze": (cmd_analyze, "genus, cycle basis and tropical period matrices"),
    "troptheta": (cmd_troptheta, "tropical theta value at alpha"),
    "delaunay": (cmd_delaunay, "lattice points attaining the tropical theta value"),
    "maximal": (cmd_maximal, "maximal objective forms and the decomposition check"),
    "limit-theta": (cmd_limit_theta, "convergence of the regularised theta limit"),
    "tau": (cmd_tau, "tau function value"),
    "u-grid": (cmd_u_grid, "KP potential u on a grid"),
    "kp-residual": (cmd_kp_residual, "KP equation residual on a grid"),
    "verify": (cmd_verify, "run the acceptance checks on the bundled examples"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tropkp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--input", help="curve JSON, or a combined document with curve and components")
        p.add_argument("--components", help="component JSON (node points, base point, tau)")
        p.add_argument("--example", choices=EXAMPLES, help="use a bundled configuration")
        p.add_argument("--alpha", help="comma-separated rationals, e.g. 1/2,1/3")
        p.add_argument("--c", help="tau base point, comma-separated complex numbers (vertex blocks first)")
        p.add_argument("--z", help="theta argument for limit-theta")
        p.add_argument("--s", help=f"comma-separated s values (default {DEFAULT_S})")
        p.add_argument("--t", help="time vector for tau")
        p.add_argument("--kind", choices=("limit", "family", "component"), default="limit")
        p.add_argument("--regularized", action="store_true",
                       help="family tau: shift the argument and multiply by s^Theta")
        p.add_argument("--form", type=int, default=0, help="index of the achieving form for --kind component")
        p.add_argument("--radius", type=int, default=0, help="box radius for the maximal-form search")
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--order", type=int, default=4, help="number of active times")
        p.add_argument("--grid", help="x:-2:2:11,t2:-2:2:11,t3:-2:2:11")
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not args.tol > 0:
        print("error: --tol must be positive", file=sys.stderr)
        return EXIT_INPUT
    fn = COMMANDS[args.command][0]
    try:
        payload, rows = fn(args)
        _emit(payload, rows, args)
    except (PrecisionError, OverflowError) as exc:
        print(f"precision error: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (InputError, CurveError, ComponentDataError, TauError, ThetaError, ValueError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if isinstance(payload, dict) and (payload.get("passed") is False or "error" in payload):
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
