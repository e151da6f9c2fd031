"""Command-line front end: ``feketelab <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .equidist import (QuadratureRule, builtin, equidist_error, inferred_constants,
                       integrate_mu_f, verify_bound)
from .errors import BudgetError, FeketeError, InvalidInput, NumericFailure
from .fekete import EnergyStudy, c_z, energy_direct, point_label
from .nonarch import PadicBall, gauss_green, gromov_check, rational_coeffs, vf_padic
from .parser import parse_map
from .potential import GreenEvaluator
from .projline import ProjPoint, sphere_point
from .pullback import MAX_ATOMS, PreimageTree
from .ratmap import HomLift, resultant

HEADER = "# feketelab v1"


def fmt(x: float) -> str:
    return f"{x:.17g}"


def _csv(header: list[str], rows: list[list[str]]) -> str:
    lines = [HEADER, ",".join(header)] + [",".join(r) for r in rows]
    return "\n".join(lines) + "\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidInput(f"usage: {message}")


def _point(text: str) -> ProjPoint:
    return ProjPoint.parse(text)


def _study(args, k_max: int) -> EnergyStudy:
    F = parse_map(args.map)
    G = GreenEvaluator(F)
    return EnergyStudy(G, _point(args.point), k_max, max_atoms=args.max_atoms)


# ---------------------------------------------------------------------------

def cmd_energy(args) -> str:
    reports = _study(args, args.kmax).reports()
    if args.out == "json":
        payload = {"map": args.map, "point": args.point,
                   "reports": [r.to_dict() for r in reports]}
        return json.dumps(payload, sort_keys=True) + "\n"
    from .fekete import EnergyReport
    return _csv(list(EnergyReport.CSV_FIELDS), [r.csv_row().split(",") for r in reports])


def cmd_bounds(args) -> str:
    rows = []
    for r in _study(args, args.kmax).reports():
        rows.append([str(r.k), fmt(r.energy_direct), fmt(r.lower_bound), fmt(r.upper_bound),
                     fmt(r.lower_margin), fmt(r.upper_margin), "1" if r.sandwich_ok else "0",
                     fmt(r.C_f_est), fmt(r.C_fa), "|".join(r.flags)])
    return _csv(["k", "energy", "lower", "upper", "lower_margin", "upper_margin", "ok",
                 "C_f_est", "C_fa", "flags"], rows)


def cmd_equidist(args) -> str:
    F = parse_map(args.map)
    G = GreenEvaluator(F)
    phi = builtin(args.phi)
    tree = PreimageTree(F, _point(args.point), args.kmax, args.max_atoms)
    mu = integrate_mu_f(G, phi, QuadratureRule.of_size(args.quad))
    norm = phi.norm()
    rows, ratios = [], []
    Ds = tree.D_seq()
    for k in range(args.kmin, args.kmax + 1):
        err, qerr = equidist_error(G, tree[k], phi, mu=mu)
        E = energy_direct(G, tree[k])
        chk = verify_bound(err, E, F.d, k, Ds[k - 1], norm)
        ratios.append(chk.ratio)
        rows.append([str(k), fmt(err), fmt(E), fmt(chk.frl_bound), None,
                     fmt(chk.rate), fmt(chk.ratio), fmt(qerr)])
    for row, c in zip(rows, inferred_constants(ratios)):
        row[4] = fmt(c)
    return _csv(["k", "error", "energy", "bound", "inferred_C", "rate", "ratio", "quad_error"], rows)


def cmd_pullback(args) -> str:
    F = parse_map(args.map)
    tree = PreimageTree(F, _point(args.point), args.k, args.max_atoms)
    nu = tree[args.k]
    text = nu.to_csv()
    if args.dump:
        with open(args.dump, "w", encoding="utf-8") as fh:
            fh.write(text)
    eta, D = nu.eta_and_D()
    summary = {"k": args.k, "atoms": len(nu), "mass": nu.mass, "eta": eta, "D": D,
               "flags": nu.flags}
    return json.dumps(summary, sort_keys=True) + "\n"


def scan_cells(n: int):
    """Equal-area partition: n bands uniform in cos(theta), 2n cells per band."""
    for i in range(n):
        x = -1 + (2 * i + 1) / n
        for j in range(2 * n):
            yield x, (j + 0.5) * math.pi / n


def cmd_scan(args) -> str:
    F = parse_map(args.map)
    G = GreenEvaluator(F)
    rows = []
    for x, phi in scan_cells(args.grid):
        a = sphere_point(x, phi)
        st = EnergyStudy(G, a, args.k, max_atoms=args.max_atoms)
        r = st.report(args.k)
        rows.append([fmt(x), fmt(phi), point_label(a), fmt(r.energy_direct),
                     fmt(r.proximity_max), "|".join(r.flags)])
    return _csv(["x", "phi", "point", "energy", "proximity_max", "flags"], rows)


def _load_lift(text: str) -> dict:
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"lift is neither a file nor JSON: {exc.msg}") from exc


def cmd_nonarch(args) -> str:
    F = HomLift.from_json(_load_lift(args.lift))
    P = rational_coeffs(F.exact[0])
    Q = rational_coeffs(F.exact[1])
    gg = gauss_green(P, Q, args.prime, args.kmax)
    out = gg.to_dict()
    d = F.d
    # |E_f(k, S_can)| = |Phi_f(S_can, S_can)| / d^k, in units of log p
    out["energy_gauss_logp"] = [str(gg.phi_self.q / d ** k) for k in range(1, args.kmax + 1)]
    return json.dumps(out, sort_keys=True) + "\n"


def selftest_cases():
    """Closed-form checks on the z^2 family; yields (name, ok, detail)."""
    log2 = math.log(2)
    F = parse_map("z^2")
    G = GreenEvaluator(F)
    st = EnergyStudy(G, ProjPoint.from_affine(1), 8)
    for r in st.reports():
        want = r.k * 2.0 ** -r.k * log2
        yield (f"energy z^2 a=1 k={r.k}", abs(r.energy_direct - want) < 1e-9 and r.route_ok,
               f"{fmt(r.energy_direct)} vs {fmt(want)}")
        yield (f"sandwich z^2 a=1 k={r.k}", r.sandwich_ok, f"{fmt(r.lower_bound)} <= {fmt(r.upper_bound)}")
    st0 = EnergyStudy(G, ProjPoint.from_affine(0), 6)
    yield ("eta z^2 a=0", st0.etas == [2 ** k for k in range(1, 7)], str(st0.etas))
    yield ("energy z^2 a=0", abs(st0.report(6).energy_cz) < 1e-12, fmt(st0.report(6).energy_cz))
    for z in (0.0, 0.5, 1.0, 2.0, 3 + 4j):
        p = ProjPoint.from_affine(z)
        want = math.log(max(abs(z), 1)) - 0.5 * math.log(1 + abs(z) ** 2)
        yield (f"g_F z^2 at {z}", abs(G.green_gF(p) - want) < 1e-10, fmt(G.green_gF(p)))
    yield ("Phi_f(2, inf) = -log 2", abs(G.phi_f(ProjPoint.from_affine(2), ProjPoint.infinity()) + log2) < 1e-10, "")
    yield ("B(z^2) = log 4", abs(G.bifurcation - 2 * log2) < 1e-10, fmt(G.bifurcation))
    yield ("f#(2) = 20/17", abs(G.chordal_derivative(ProjPoint.from_affine(2)) - 20 / 17) < 1e-12, "")
    yield ("c_1(z^2) = log 2", abs(c_z(G, ProjPoint.from_affine(1)) - log2) < 1e-10, "")
    yield ("c_2(z^2) = 0", abs(c_z(G, ProjPoint.from_affine(2))) < 1e-10, "")
    N = parse_map("(z^2+1)/(2*z)")
    yield ("Res(X^2, Y^2) = 1", resultant(F) == 1, "")
    yield ("Res(X^2+Y^2, 2XY) = 4", resultant(N) == 4, "")
    yield ("V_F 2-adic = log 2", str(vf_padic([1, 0, 1], [0, 2, 0], 2)) == "1", "")
    lhs, rhs = gromov_check(PadicBall(3, 0, 2), PadicBall(3, 1, 1))
    yield ("Gromov identity p=3", lhs == rhs and str(lhs) == "0", "")


def cmd_selftest(args) -> str:
    lines = []
    failed = 0
    for name, ok, detail in selftest_cases():
        failed += not ok
        lines.append(f"{'PASS' if ok else 'FAIL'} {name}" + (f" ({detail})" if detail else ""))
    lines.append(f"selftest: {len(lines) - failed} passed, {failed} failed")
    out = "\n".join(lines) + "\n"
    if failed:
        sys.stdout.write(out)
        raise NumericFailure(f"selftest: {failed} checks failed")
    return out


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="feketelab", description="Fekete energies of iterated preimages.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(s, kname="--kmax"):
        s.add_argument("--map", required=True, help="rational map in z, e.g. 'z^2+i'")
        s.add_argument("--point", required=True, help="initial point: complex literal or 'inf'")
        s.add_argument(kname, type=int, required=True)
        s.add_argument("--max-atoms", type=int, default=MAX_ATOMS)

    s = sub.add_parser("energy", help="energy reports per k")
    common(s)
    s.add_argument("--out", choices=("csv", "json"), default="csv")
    s.set_defaults(fn=cmd_energy)

    s = sub.add_parser("bounds", help="two-sided estimate with margins")
    common(s)
    s.set_defaults(fn=cmd_bounds)

    s = sub.add_parser("equidist", help="equidistribution error table")
    common(s)
    s.add_argument("--phi", required=True, help="re, im, height, chordal2@W or bump@LO:HI")
    s.add_argument("--kmin", type=int, default=1)
    s.add_argument("--quad", type=int, default=128, help="Gauss-Legendre nodes in cos(theta)")
    s.set_defaults(fn=cmd_equidist)

    s = sub.add_parser("pullback", help="atoms of the k-th preimage measure")
    common(s, "--k")
    s.add_argument("--dump", help="write the atom CSV here")
    s.set_defaults(fn=cmd_pullback)

    s = sub.add_parser("scan", help="energy over an equal-area grid of initial points")
    s.add_argument("--map", required=True)
    s.add_argument("--grid", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--max-atoms", type=int, default=MAX_ATOMS)
    s.set_defaults(fn=cmd_scan)

    s = sub.add_parser("nonarch", help="exact p-adic kernel report")
    s.add_argument("--lift", required=True, help="JSON file or inline JSON {d, P, Q}")
    s.add_argument("--prime", type=int, required=True)
    s.add_argument("--kmax", type=int, required=True)
    s.set_defaults(fn=cmd_nonarch)

    s = sub.add_parser("selftest", help="closed-form oracle suite")
    s.set_defaults(fn=cmd_selftest)
    return p


EXIT = {InvalidInput: 2, NumericFailure: 3, BudgetError: 4}


def _exit_code(exc: FeketeError) -> int:
    for cls, code in EXIT.items():
        if isinstance(exc, cls):
            return code
    return 2


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        for name in ("kmax", "k", "grid"):
            if getattr(args, name, 1) is not None and getattr(args, name, 1) < 1:
                raise InvalidInput(f"--{name} must be >= 1")
        out = args.fn(args)
    except FeketeError as exc:
        sys.stderr.write(f"feketelab: error: {type(exc).__name__}: {' '.join(str(exc).split())}\n")
        return _exit_code(exc)
    except (ZeroDivisionError, OverflowError, FloatingPointError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"feketelab: error: NumericFailure: {' '.join(str(exc).split())}\n")
        return 3
    sys.stdout.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
