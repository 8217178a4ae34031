"""Command-line front end: JSON in, JSON reports out.

Exit codes: 0 when every check passes, 1 when a check fails (the report says
which), 2 for unusable input.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import catalog, certify, convexotonic, gallery, generic, jsonio, pencil
from .errors import FreeSpectraError, InputError
from .util import make_rng

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _load(path: str):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None


def _matrix(path: str, key: str):
    obj = _load(path)
    if isinstance(obj, dict):
        if key not in obj:
            raise InputError(f"{path}: expected key {key!r}")
        obj = obj[key]
    return jsonio.decode_matrix(obj, f"{path}:{key}")


def _tuple(path: str, key: str):
    obj = _load(path)
    if isinstance(obj, dict):
        if key not in obj:
            raise InputError(f"{path}: expected key {key!r}")
        obj = obj[key]
    return jsonio.decode_tuple(obj, f"{path}:{key}")


def _complex(text: str) -> complex:
    t = text.strip().replace(" ", "")
    if "j" not in t:
        t = t.replace("i", "j")
    if t in ("j", "+j", "-j"):
        t = t.replace("j", "1j")
    try:
        return complex(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _report(args, inputs, passed: bool, residuals: dict, result=None) -> dict:
    return {"command": args.command, "inputs_digest": jsonio.digest(inputs), "seed": args.seed,
            "verdict": "pass" if passed else "fail", "residuals": residuals, "result": result}


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify_xi(args):
    Xi = jsonio.xi_from_json(_load(args.xi), args.xi)
    rep = convexotonic.is_convexotonic(Xi, args.tol or convexotonic.CONVEX_TOL)
    result = {"g": Xi.shape[0]}
    if rep.passed:
        nil = convexotonic.nilpotency_and_degree(Xi)
        result.update({"nilpotent": nil.nilpotent, "nilpotency_order": nil.order, "polynomial_degree": nil.degree_p})
    return _report(args, Xi, rep.passed, {"convexotonic": rep.max_residual}, result)


def cmd_structure(args):
    obj = _load(args.input)
    if not isinstance(obj, dict) or "R" not in obj:
        raise InputError(f"{args.input}: expected an object with key 'R' (and optionally 'E')")
    R = jsonio.decode_tuple(obj["R"], f"{args.input}:R")
    E = jsonio.decode_tuple(obj["E"], f"{args.input}:E") if "E" in obj else R
    Xi = convexotonic.structure_matrices(E, R, tol=args.tol or 1e-8)
    rep = convexotonic.is_convexotonic(Xi, 1e-9)
    return _report(args, [E, R], True, {"convexotonic": rep.max_residual},
                   {"Xi": Xi, "convexotonic": rep.passed})


def cmd_eval(args):
    X = _tuple(args.point, "X")
    if (args.xi is None) == (args.A is None):
        raise InputError("give exactly one of --xi or --A")
    if args.xi is not None:
        Xi = jsonio.xi_from_json(_load(args.xi), args.xi)
        if X.shape[0] != Xi.shape[0]:
            raise InputError(f"{args.point}: point has {X.shape[0]} entries, map needs {Xi.shape[0]}")
        Y = convexotonic.map_eval(Xi, X, inverse=args.inverse)
        return _report(args, [Xi, X, args.inverse], True, {}, {"value": Y})
    A = jsonio.pencil_from_json(_load(args.A), args.A)
    P = pencil.Pencil(A)
    L = pencil.eval_pencil(P, X)
    m = pencil.membership(P, X, args.tol or pencil.BOUNDARY_TOL)
    return _report(args, [A, X], True, {}, {"L": L, "membership": m.status, "min_eig": m.min_eig})


def cmd_inverse_check(args):
    Xi = jsonio.xi_from_json(_load(args.xi), args.xi)
    rep = convexotonic.verify_inverse_pair(Xi, N=args.degree or 8, samples=args.samples or 100, seed=args.seed)
    return _report(args, [Xi, args.degree, args.samples], rep.passed,
                   {"series": rep.series_residual, "roundtrip": rep.roundtrip_residual}, rep)


def cmd_catalog(args):
    if args.action == "list":
        return _report(args, "list", True, {}, catalog.list_entries())
    if not args.id:
        raise InputError("catalog get needs an entry id")
    params = {}
    if args.alpha is not None:
        params["alpha"] = args.alpha
    if args.v is not None:
        params["v"] = [_complex(t) for t in args.v.split(",")]
    if args.g is not None:
        params["g"] = args.g
    entry = catalog.get(args.id, **params)
    return _report(args, [args.id, params], True, {"closed_form": entry.closed_form_residual}, entry)


def _certify_suite(A, C, W0, args, N=None) -> tuple[bool, dict, dict]:
    fock = args.fock_order if args.fock_order is not None else 4
    N = max(N or args.degree or 5, fock)
    # one extra degree so the coefficient formulas can be checked through |a| = N
    cert = certify.build_certificate(A, C, W0, N=N + 1)
    tol = args.tol or 1e-10
    rel = certify.verify_relations(cert, N=N, tol=tol)
    nil = certify.verify_on_nilpotents(cert, fock, seed=args.seed, tol=tol)
    smp = certify.verify_on_samples(cert, samples=args.samples or 100, seed=args.seed)
    coef = certify.check_coefficients(cert, N)
    ext = certify.extract_convexotonic(A, C)
    passed = rel.passed and nil.passed and smp.passed and coef.passed
    res = {"relations": rel.max_residual, "nilpotent": nil.max_residual, "samples": smp.max_residual,
           "coefficients": coef.max_residual}
    out = {"degree": N, "fock_order": fock, "relations": rel, "nilpotent": nil, "samples": smp,
           "coefficients": coef, "extraction": ext}
    return passed, res, out


def cmd_certify(args):
    A = jsonio.pencil_from_json(_load(args.A), args.A)
    C = _matrix(args.C, "C")
    W0 = _matrix(args.W0, "W0") if args.W0 else None
    passed, res, out = _certify_suite(A, C, W0, args)
    return _report(args, [A, C, W0, args.degree, args.fock_order, args.samples], passed, res, out)


def cmd_generic(args):
    A = jsonio.pencil_from_json(_load(args.A), args.A)
    budget = args.budget
    if args.mode == "sv":
        rep = generic.check_sv_generic(A, probe_budget=budget, seed=args.seed)
    elif args.mode == "eig":
        rep = generic.check_eig_star_generic(A, budget=budget, seed=args.seed)
    else:
        rep = generic.check_star_generic(A, budget=budget, seed=args.seed)
    return _report(args, [A, args.mode, budget], rep.witnessed, {}, rep)


def cmd_pair(args):
    entry = catalog.get(args.algebra)
    rng = make_rng(args.seed)
    d = entry.R.shape[1]
    C = gallery.unitary_with_margin(rng, d, args.margin)
    spec = gallery.build_pair(entry.R, C, margin=args.margin, provenance=f"{entry.id}, seed {args.seed}")
    passed, res, out = _certify_suite(spec.A, spec.C, spec.W0, args)
    xi_res = float(np.abs(out["extraction"].Xi - entry.Xi).max()) if out["extraction"].ok else np.inf
    res["xi_roundtrip"] = xi_res
    passed = passed and xi_res < 1e-10
    out["pair"] = spec
    return _report(args, [args.algebra, args.margin], passed, res, out)


def cmd_pq(args):
    if args.p22_mode == "identity":
        P22 = gallery.EXAMPLE_P22
    else:
        Pi = gallery.EXAMPLE_P12.conj().T @ gallery.EXAMPLE_P12 + gallery.EXAMPLE_P21 @ gallery.EXAMPLE_P21.conj().T
        P22 = args.alpha1 * gallery.EXAMPLE_Q + args.alpha3 * Pi
    fam = gallery.pq_build(gallery.EXAMPLE_Q, gallery.EXAMPLE_P12, gallery.EXAMPLE_P21, P22, seed=args.seed)
    m = gallery.pq_map(fam, args.gamma, boundary_points=args.samples or 50, seed=args.seed)
    bres = m.boundary["max_abs_lambda_min"]
    passed = bres < 1e-7
    res = {"extraction": m.extraction_residual, "boundary": bres}
    out = {"family": fam, "map": m, "c_condition": gallery.c_condition(fam)}
    if args.phi is not None:
        s = gallery.pq_automorphism(fam, args.phi)
        ab = gallery.automorphism_boundary_check(fam, args.phi, seed=args.seed)
        res["automorphism_boundary"] = ab
        passed = passed and ab < 1e-7
        out["automorphism"] = s
    return _report(args, [args.gamma, args.p22_mode, args.alpha1, args.alpha3, args.phi, args.samples],
                   passed, res, out)


def cmd_bounded(args):
    A = jsonio.pencil_from_json(_load(args.A), args.A)
    rep = pencil.boundedness_evidence(pencil.Pencil(A), samples=args.samples or 1000, seed=args.seed)
    return _report(args, [A, args.samples], rep.verdict == "bounded-evidence", {"min_margin": rep.min_margin}, rep)


def cmd_hereditary(args):
    obj = _load(args.cert)
    where = args.cert
    if not isinstance(obj, dict) or "A" not in obj or "h" not in obj:
        raise InputError(f"{where}: expected an object with keys 'A' and 'h'")
    A = jsonio.pencil_from_json(obj, where)
    h = jsonio.hereditary_from_json(obj["h"], f"{where}:h")
    squares = tuple(jsonio.series_from_json(s, f"{where}:squares[{i}]") for i, s in enumerate(obj.get("squares", [])))
    weights = tuple(jsonio.series_from_json(s, f"{where}:weights[{i}]") for i, s in enumerate(obj.get("weights", [])))
    cert = certify.HereditaryCertificate(A, h, squares, weights)
    rep = certify.verify_hereditary(cert, tol=args.tol or 1e-12, samples=args.samples or 20, seed=args.seed)
    return _report(args, obj, rep.valid, {"coefficients": rep.max_residual}, rep)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--degree", type=int, default=None)
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--fock-order", type=int, default=None)
    common.add_argument("--format", choices=["json"], default="json")

    ap = argparse.ArgumentParser(prog="freespectra", description="Free spectrahedra toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-xi", parents=[common], help="check a convexotonic tuple")
    p.add_argument("xi")
    p.set_defaults(func=cmd_verify_xi)

    p = sub.add_parser("structure", parents=[common], help="structure matrices of a module basis")
    p.add_argument("input")
    p.set_defaults(func=cmd_structure)

    p = sub.add_parser("eval", parents=[common], help="evaluate a convexotonic map or a pencil")
    p.add_argument("--xi")
    p.add_argument("--A")
    p.add_argument("--point", required=True)
    p.add_argument("--inverse", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inverse-check", parents=[common], help="check p and q are inverse")
    p.add_argument("--xi", required=True)
    p.set_defaults(func=cmd_inverse_check)

    p = sub.add_parser("catalog", parents=[common], help="list or fetch catalog entries")
    p.add_argument("action", choices=["list", "get"])
    p.add_argument("id", nargs="?")
    p.add_argument("--alpha", type=float)
    p.add_argument("--v", help="comma separated complex entries")
    p.add_argument("--g", type=int)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("certify", parents=[common], help="verify a one-term certificate")
    p.add_argument("--A", required=True)
    p.add_argument("--C", required=True)
    p.add_argument("--W0")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("generic", parents=[common], help="search genericity witnesses")
    p.add_argument("--A", required=True)
    p.add_argument("--mode", choices=["sv", "eig", "star"], default="sv")
    p.add_argument("--budget", type=int, default=500)
    p.set_defaults(func=cmd_generic)

    p = sub.add_parser("pair", parents=[common], help="build and verify a spectrahedral pair")
    p.add_argument("--algebra", required=True)
    p.add_argument("--margin", type=float, default=0.1)
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("pq", parents=[common], help="P-Q family map and automorphisms")
    p.add_argument("--gamma", type=_complex, default=-1)
    p.add_argument("--p22-mode", choices=["identity", "span"], default="identity")
    p.add_argument("--alpha1", type=float, default=0.0)
    p.add_argument("--alpha3", type=float, default=1.0)
    p.add_argument("--phi", type=_complex)
    p.set_defaults(func=cmd_pq)

    p = sub.add_parser("bounded", parents=[common], help="randomized boundedness evidence")
    p.add_argument("--A", required=True)
    p.set_defaults(func=cmd_bounded)

    p = sub.add_parser("hereditary", parents=[common], help="verify a hereditary certificate")
    p.add_argument("cert")
    p.set_defaults(func=cmd_hereditary)
    return ap


def run(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_PASS
    try:
        report = args.func(args)
    except InputError as e:
        out.write(jsonio.dumps({"command": args.command, "verdict": "input-error", "error": str(e)}) + "\n")
        return EXIT_INPUT
    except FreeSpectraError as e:
        out.write(jsonio.dumps({"command": args.command, "verdict": "fail", "error": f"{type(e).__name__}: {e}"})
                  + "\n")
        return EXIT_FAIL
    out.write(jsonio.dumps(report) + "\n")
    return EXIT_PASS if report["verdict"] == "pass" else EXIT_FAIL


def main() -> None:
    sys.exit(run())
