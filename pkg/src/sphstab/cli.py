"""Command-line front end.

Exit codes: 0 when everything certified, 2 when a certification check
failed, 1 on usage or input errors.  Results are rendered completely in
memory and written atomically, so a failing run never leaves a partial file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .cells import HypothesisError, delone_complex, tiling_volume_check
from .densities import build_orthoscheme, delta, delta_cap_ratio, regular_params, simplex_bound
from .experiment import MODES, ExperimentConfig, perturb, rng_for, run_experiment
from .io import InputError, Packing, dumps_packing, load_packing
from .lemmas import (
    KNOWN_ERRATA,
    check_geometric_inequalities,
    proof_constant_checks,
    verify_volume_lemmas,
)
from .lpbound import (
    CertificateError,
    LPCertificate,
    StructuralViolation,
    lemma_certificate,
    lp_bound,
    parse_polynomial,
)
from .polytopes import generate, parse_kind, validate_packing
from .recovery import recover

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2

log = logging.getLogger("sphstab")


class UsageError(Exception):
    pass


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, Fraction):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=1, default=_json_default) + "\n"


def _table_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    cols = list(dict.fromkeys(k for r in rows for k in r))
    w = csv.DictWriter(buf, cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(v, default=_json_default) if isinstance(v, (dict, list)) else v
                    for k, v in r.items()})
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    path = Path(out)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _render(args, payload, rows: list[dict] | None = None) -> str:
    if args.format == "csv":
        if rows is None:
            raise UsageError(f"{args.command} has no tabular output; use --format json")
        return _table_csv(rows)
    return _dumps(payload)


def _parse_floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"expected a list of numbers, got {text!r}") from None
    if not vals:
        raise UsageError("expected at least one number")
    return vals


def _kind(args) -> tuple[str, int]:
    if args.kind is None:
        raise UsageError("--kind is required")
    try:
        return parse_kind(args.kind, args.dim)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _single_eps(args, default: float | None = None) -> float:
    if args.eps is None:
        if default is None:
            raise UsageError("--eps is required")
        return default
    vals = _parse_floats(args.eps)
    if len(vals) != 1 or vals[0] < 0:
        raise UsageError("--eps takes one nonnegative value here")
    return vals[0]


# Subcommands.

def cmd_gen_polytope(args) -> int:
    spec = generate(*_kind(args))
    meta = {"kind": spec.kind, "label": spec.label, "f0": spec.f0,
            "c_P": spec.c_P, "eps_P": spec.eps_P}
    packing = Packing(np.array(spec.vertices), spec.phi, 0.0, meta)
    if args.format == "csv":
        rows = [dict(zip([f"x{i}" for i in range(spec.dim)], p)) for p in packing.points.tolist()]
        _emit(_table_csv(rows), args.out)
    else:
        _emit(dumps_packing(packing) + "\n", args.out)
    return EXIT_OK


def cmd_perturb(args) -> int:
    spec = generate(*_kind(args))
    eps = _single_eps(args)
    X = perturb(spec, eps, mode=args.mode, rng=rng_for(args.seed))
    rep = validate_packing(X, spec.phi, eps, n_samples=2000, seed=args.seed)
    meta = {"kind": spec.kind, "label": spec.label, "seed": args.seed, "mode": args.mode,
            "min_separation": rep.min_distance, "exploratory": eps > spec.eps_P}
    _emit(dumps_packing(Packing(X, spec.phi, eps, meta)) + "\n", args.out)
    return EXIT_OK if rep.separation_ok else EXIT_FAIL


def cmd_recover(args) -> int:
    packing = load_packing(args.input)
    kind = args.kind or packing.meta.get("kind")
    if kind is None:
        raise UsageError("--kind is required (the packing has no meta.kind)")
    try:
        kind, d = parse_kind(kind, packing.dimension)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if d != packing.dimension:
        raise InputError(f"{kind} needs dimension {d}, packing has {packing.dimension}", "dimension")
    eps = _single_eps(args, packing.eps)
    if eps is None:
        raise UsageError("--eps is required (the packing has no eps)")
    res = recover(packing.points, kind, d, eps)
    payload = res.to_dict()
    rows = [{"point": i, "vertex": int(j), "deviation": float(dv)}
            for i, (j, dv) in enumerate(zip(res.matching, res.deviations))]
    _emit(_render(args, payload, rows), args.out)
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_delone(args) -> int:
    packing = load_packing(args.input)
    cx = delone_complex(packing.points)
    payload = cx.to_dict()
    payload["equidistance_error"] = cx.equidistance_error()
    if args.volumes:
        payload["cell_volumes"] = cx.cell_volumes().tolist()
        payload["tiling_relative_error"] = tiling_volume_check(cx)
    rows = [{"cell": i, "vertices": c.tolist(), "circumradius": float(r)}
            for i, (c, r) in enumerate(zip(cx.cells, cx.circumradii))]
    _emit(_render(args, payload, rows), args.out)
    return EXIT_OK


def cmd_density(args) -> int:
    if args.t is not None:
        t = _parse_floats(args.t)
        label = "custom"
    else:
        if args.kind is None:
            raise UsageError("give --t or --kind")
        spec = generate(*_kind(args))
        sigma = spec.phi if args.sigma is None else args.sigma
        t = list(regular_params(spec.dim, sigma))
        label = spec.label
    try:
        theta = build_orthoscheme(t)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if theta.dim > 4:
        raise UsageError("density is implemented for d <= 4")
    d = theta.dim
    value = delta(theta, check=False)
    alt = delta_cap_ratio(theta) if d >= 3 else value
    agree = abs(alt - value) <= 1e-7 * abs(value)
    payload = {"label": label, "d": d, "t": list(theta.params), "volume": theta.volume(),
               "delta": value, "delta_cap_ratio": alt, "agree": agree}
    if args.kind is not None and args.t is None:
        payload["simplex_bound"] = simplex_bound(d, t[0])
        payload["f0"] = spec.f0
    _emit(_render(args, payload, [payload]), args.out)
    return EXIT_OK if agree else EXIT_FAIL


def cmd_lp_bound(args) -> int:
    if args.lemma is not None:
        n = args.lemma
        s = Fraction(args.s) if args.s is not None else Fraction(9, 10 * (2 * n * n - n))
        cert = lemma_certificate(n, s)
        d, expr = n, "(t+1)(t-s)"
    else:
        if args.poly is None or args.dim is None:
            raise UsageError("give --poly and --dim, or --lemma N")
        s = Fraction(args.s) if args.s is not None else Fraction(0)
        try:
            coeffs = parse_polynomial(args.poly, s)
        except (SyntaxError, ValueError) as exc:
            raise UsageError(f"cannot parse polynomial: {exc}") from None
        cert = LPCertificate.from_monomial(args.dim, coeffs, s)
        d, expr = args.dim, args.poly
    try:
        value = lp_bound(cert)
    except CertificateError as exc:
        payload = {"d": d, "polynomial": expr, "s": str(s), "valid": False, "error": str(exc)}
        _emit(_render(args, payload, [payload]), args.out)
        return EXIT_FAIL
    payload = {"d": d, "polynomial": expr, "s": str(s), "valid": True,
               "bound": str(value) if isinstance(value, Fraction) else value,
               "bound_float": float(value), "floor": math.floor(value)}
    _emit(_render(args, payload, [payload]), args.out)
    return EXIT_OK


def cmd_verify_lemmas(args) -> int:
    rows = []
    if args.kind is None or parse_kind(args.kind)[0] in ("icosahedron", "cell600"):
        targets = [generate("icosahedron"), generate("cell600")]
        if args.kind is not None:
            targets = [t for t in targets if t.kind == parse_kind(args.kind)[0]]
        for spec in targets:
            rows += [dict(r.as_dict(), group=spec.label)
                     for r in verify_volume_lemmas(spec.phi, spec.dim)]
    else:
        raise UsageError("verify-lemmas takes --kind icosahedron or --kind cell600")
    for r in proof_constant_checks():
        rows.append(dict(r.as_dict(), group="constants", erratum=r.lemma in KNOWN_ERRATA))
    for c in check_geometric_inequalities(args.samples, args.seed):
        rows.append(dict(c.as_dict(), group="random"))
    failures = [r for r in rows if not r["pass"] and not r.get("erratum")]
    payload = {"rows": rows, "failures": len(failures),
               "errata": sorted(r["lemma"] for r in rows if r.get("erratum"))}
    _emit(_render(args, payload, rows), args.out)
    return EXIT_FAIL if failures else EXIT_OK


def cmd_experiment(args) -> int:
    kind, d = _kind(args)
    eps = _parse_floats(args.eps) if args.eps else [1e-7, 1e-6, 1e-5]
    try:
        config = ExperimentConfig(kind, d, tuple(eps), args.seeds, args.seed, args.mode,
                                  args.out, args.jobs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = run_experiment(config)
    text = result.to_csv() if args.format == "csv" else _dumps(result.to_dict())
    _emit(text, args.out)
    return EXIT_OK if result.all_passed else EXIT_FAIL


COMMANDS = {
    "gen-polytope": cmd_gen_polytope,
    "perturb": cmd_perturb,
    "recover": cmd_recover,
    "delone": cmd_delone,
    "density": cmd_density,
    "lp-bound": cmd_lp_bound,
    "verify-lemmas": cmd_verify_lemmas,
    "experiment": cmd_experiment,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kind", help="simplex, crosspolytope, icosahedron or cell600")
    common.add_argument("--dim", type=int, help="ambient dimension d")
    common.add_argument("--eps", help="perturbation angle(s), comma separated")
    common.add_argument("--seed", type=int, default=0, help="base RNG seed")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="sphstab",
                                description="Stability of simplicial regular polytope packings.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-polytope", parents=[common], help="regular polytope as packing JSON")
    sp = sub.add_parser("perturb", parents=[common], help="perturbed polytope as packing JSON")
    sp.add_argument("--mode", choices=MODES, default="tangent-uniform")
    sp = sub.add_parser("recover", parents=[common], help="recover the nearby regular polytope")
    sp.add_argument("input", help="packing JSON file")
    sp = sub.add_parser("delone", parents=[common], help="Delone complex of a packing")
    sp.add_argument("input", help="packing JSON file")
    sp.add_argument("--volumes", action="store_true", help="also compute cell volumes")
    sp = sub.add_parser("density", parents=[common], help="orthoscheme density Delta")
    sp.add_argument("--t", help="orthoscheme parameters t_1,...,t_{d-1}")
    sp.add_argument("--sigma", type=float, help="regular parameters r_j(sigma) (default phi_P)")
    sp = sub.add_parser("lp-bound", parents=[common], help="linear programming bound")
    sp.add_argument("--poly", help="polynomial in t, e.g. 't*(t+1)'")
    sp.add_argument("--s", help="threshold s (rational accepted, e.g. 9/130)")
    sp.add_argument("--lemma", type=int, metavar="N", help="use (t+1)(t-s) in dimension N")
    sp = sub.add_parser("verify-lemmas", parents=[common], help="inequality grids and random checks")
    sp.add_argument("--samples", type=int, default=1000)
    sp = sub.add_parser("experiment", parents=[common], help="perturb/recover sweep")
    sp.add_argument("--seeds", type=int, default=50, help="number of seeds per eps")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--mode", choices=MODES, default="tangent-uniform")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InputError) as exc:
        err = exc.as_dict() if isinstance(exc, InputError) else {"error": "usage", "message": str(exc)}
        sys.stderr.write(json.dumps(err) + "\n")
        return EXIT_INPUT
    except (HypothesisError, StructuralViolation, CertificateError, ArithmeticError) as exc:
        # The input is well formed but violates a hypothesis being certified.
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return EXIT_FAIL
    except ValueError as exc:
        sys.stderr.write(json.dumps({"error": "input", "message": str(exc)}) + "\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
