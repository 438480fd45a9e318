"""``planarlab`` command line: one subcommand per module, JSON/CSV outputs and run manifests.

Exit codes: 0 success, 1 numeric failure, 2 bad input, 3 resource cap.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, NumericFailure, ResourceError

EXIT_OK, EXIT_NUMERIC, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3


class Output:
    """Result payload plus optional CSV rows and extra files."""

    def __init__(self, data, rows=None, header=None, files=None, failed=False):
        self.data = data
        self.rows = rows
        self.header = header
        self.files = files or {}
        self.failed = failed


# -- JSON helpers --------------------------------------------------------------------

def jsonable(v):
    if hasattr(v, "to_json"):
        return jsonable(v.to_json())
    if dataclasses.is_dataclass(v) and not isinstance(v, type):
        return {f.name: jsonable(getattr(v, f.name)) for f in dataclasses.fields(v)}
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, np.ndarray):
        return jsonable(v.tolist())
    if isinstance(v, int) and abs(v) > 2 ** 53:
        return str(v)
    return v


def dumps(data, pretty=False) -> str:
    return json.dumps(jsonable(data), indent=2 if pretty else None, sort_keys=True)


def _table(rows, header) -> str:
    cells = [[str(h) for h in header]] + [[_fmt(c) for c in r] for r in rows]
    w = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w[i]) for i, c in enumerate(r)) for r in cells)


def _fmt(c):
    if isinstance(c, float):
        return f"{c:.10g}"
    return str(c)


def _pretty(data, indent=0) -> str:
    pad = "  " * indent
    if isinstance(data, dict):
        lines = []
        for k, v in data.items():
            if isinstance(v, (dict, list)) and v and not all(isinstance(x, (int, float, str)) for x in v):
                lines.append(f"{pad}{k}:")
                lines.append(_pretty(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
        return "\n".join(lines)
    if isinstance(data, list):
        return "\n".join(_pretty(x, indent) if isinstance(x, (dict, list)) else f"{pad}- {x}" for x in data)
    return f"{pad}{data}"


# -- argument parsing helpers --------------------------------------------------------

def floats(text: str) -> list[float]:
    try:
        return [float(Fraction(t.strip())) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"cannot parse number list {text!r}") from exc


def fractions(text: str) -> list[Fraction]:
    try:
        return [Fraction(t.strip()) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"cannot parse number list {text!r}") from exc


def grid(text: str) -> list[float]:
    """``a:b:n`` (n evenly spaced points) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise DomainError(f"grid must be a:b:n, got {text!r}")
        a, b = (float(Fraction(p)) for p in parts[:2])
        n = int(parts[2])
        if n < 1:
            raise DomainError("grid needs at least one point")
        return [float(v) for v in np.linspace(a, b, n)]
    return floats(text)


def box_arg(text: str) -> list[tuple[Fraction, Fraction]]:
    """``lo,hi;lo,hi`` per dimension."""
    out = []
    for part in text.split(";"):
        v = fractions(part)
        if len(v) != 2 or not v[0] < v[1]:
            raise DomainError(f"bad box side {part!r}")
        out.append((v[0], v[1]))
    return out


def _load_json(path: str, inputs: dict):
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc}") from exc
    inputs[str(p)] = hashlib.sha256(raw).hexdigest()
    try:
        return json.loads(raw)
    except ValueError as exc:
        raise DomainError(f"{path} is not valid JSON: {exc}") from exc


def _expr(text: str, names=("x", "y")):
    from .algebra import RationalFn
    r = RationalFn.parse(text, names)
    if r.den.degree() == 0:
        return r.num * (1 / Fraction(r.den.constant_term()))
    return r


def planar_field(args, inputs):
    """Field from --builtin, --system file or --P/--Q expressions."""
    from .flow import VectorField, VectorField2
    if getattr(args, "builtin", None):
        from .builtins import builtin_field
        vf = builtin_field(args.builtin)
    elif getattr(args, "system", None):
        vf = VectorField.from_json(_load_json(args.system, inputs))
    elif getattr(args, "P", None) and getattr(args, "Q", None):
        vf = VectorField2.parse(args.P, args.Q)
    else:
        raise DomainError("give a field with --builtin, --system or --P/--Q")
    if vf.dim != 2:
        raise DomainError("this subcommand needs a planar field")
    return vf


def _field_meta(vf):
    return {"name": vf.name, "degree": vf.degree, "monomials": vf.monomial_count}


def _section(args):
    from .cycles import Section
    return Section(tuple(floats(args.origin)), tuple(floats(args.direction)))


def _add_field_args(p):
    p.add_argument("--builtin", help="named system, e.g. loud:-1/2,1/2 or chessboard")
    p.add_argument("--system", help="field JSON file")
    p.add_argument("--P", help="first component, e.g. '-y + x*(1-x^2-y^2)'")
    p.add_argument("--Q", help="second component")
    p.add_argument("--origin", default="0,0", help="section base point")
    p.add_argument("--direction", default="1,0", help="section direction")


# -- subcommands ------------------------------------------------------------------------

def cmd_cycles(args, inputs):
    from .cycles import find_cycles
    vf = planar_field(args, inputs)
    scan = find_cycles(vf, _section(args), grid(args.grid), tol=args.tol or 1e-12,
                       max_time=args.max_time, escape_norm=args.escape_norm)
    data = {"field": _field_meta(vf), **scan.to_json()}
    rows = [(s.r, s.Pi, s.T) for s in scan.samples]
    return Output(data, rows, ("r", "Pi", "T"))


def cmd_melnikov(args, inputs):
    from .cycles import MelnikovSpec, melnikov_direct, melnikov_poly, melnikov_spec_for
    if args.target:
        spec = melnikov_spec_for(args.k, args.l, floats(args.target))
    else:
        if args.a is None or args.b is None:
            raise DomainError("give --target or both --a and --b")
        spec = MelnikovSpec(args.k, args.l, tuple(floats(args.a)), tuple(floats(args.b)))
    mp = melnikov_poly(spec, tol=args.tol or 1e-12)
    levels = grid(args.levels) if args.levels else []
    rows = []
    for h in levels:
        row = [h, mp(h)]
        if args.direct:
            row.append(melnikov_direct(spec, h))
        rows.append(tuple(row))
    header = ("h", "M", "M_direct") if args.direct else ("h", "M")
    data = {"k": spec.k, "l": spec.l, "a": list(spec.a), "b": list(spec.b), "coefficients": list(mp.c),
            "rho2_roots": mp.positive_roots(), "level_roots": mp.level_roots(),
            "cycle_bound": (spec.n + spec.m) // 2, "table": [dict(zip(header, r)) for r in rows]}
    return Output(data, rows, header)


def cmd_abel(args, inputs):
    from .scalar import PeriodicScalarEq, RigidParams, count_periodic, rigid_lyapunov, rigid_to_scalar
    extra = {}
    if args.rigid:
        vals = floats(args.rigid)
        if len(vals) != 6:
            raise DomainError("--rigid needs a,b,c,d,e,f")
        p = RigidParams(*vals)
        eq = rigid_to_scalar(p.F())
        extra["lyapunov"] = dict(zip(("V1", "V3", "V5"), rigid_lyapunov(p)))
    elif args.equation:
        eq = PeriodicScalarEq.from_json(_load_json(args.equation, inputs))
    else:
        raise DomainError("give --rigid a,b,c,d,e,f or --equation file.json")
    lo, hi = floats(args.range)
    res = count_periodic(eq, (lo, hi), args.grid)
    sols = [{"rho": s.rho, "multiplier": s.multiplier, "classification": s.classification}
            for s in res.solutions]
    data = {"count": len(res), "continuum": res.continuum, "solutions": sols,
            "blowups": [list(b) for b in res.blowups], **extra}
    return Output(data, [(s["rho"], s["multiplier"], s["classification"]) for s in sols],
                  ("rho", "multiplier", "classification"))


def cmd_dulac(args, inputs):
    from .dulac import DulacInstance, certify_dulac
    if not (args.V and args.P and args.Q):
        raise DomainError("dulac needs --V, --P and --Q")
    inst = DulacInstance(_expr(args.V), _expr(args.P), _expr(args.Q), Fraction(args.s),
                         _expr(args.factor) if args.factor else None,
                         _expr(args.cofactor) if args.cofactor else None)
    box = box_arg(args.box)
    v = certify_dulac(inst, box, args.depth)
    data = {**v.to_json(), "box": [[str(a), str(b)] for a, b in box], "depth": args.depth}
    return Output(data)


def cmd_period(args, inputs):
    from .cycles import critical_periods, period_scan
    vf = planar_field(args, inputs)
    ps = period_scan(vf, _section(args), grid(args.grid), tol=args.tol or 1e-12, max_time=args.max_time)
    try:
        critical = critical_periods(ps).to_json()
    except DomainError as exc:      # too few closed orbits to locate zeros of T'
        critical = {"count": None, "reason": str(exc)}
    data = {"field": _field_meta(vf), "samples": [{"s": s, "T": T} for s, T in zip(ps.s, ps.T)],
            "excluded": [list(e) for e in ps.excluded], "critical": critical}
    return Output(data, list(zip(ps.s, ps.T)), ("s", "T"))


def _pwl_system(args, inputs):
    from .builtins import builtin
    from .pwl import PwlSystem, chebyshev_system
    if args.system:
        return PwlSystem.from_json(_load_json(args.system, inputs))
    if args.builtin:
        s = builtin(args.builtin)
        if not isinstance(s, PwlSystem):
            raise DomainError(f"builtin {args.builtin!r} is not a piecewise system")
        return s
    return chebyshev_system(args.n, Fraction(args.eps))


def cmd_pwl(args, inputs):
    from .pwl import crossing_cycles, pwl_integrate
    sys_ = _pwl_system(args, inputs)
    if args.action == "cycles":
        lo, hi = floats(args.range)
        scan = crossing_cycles(sys_, (lo, hi), args.grid, tol=args.tol or 1e-12)
        data = {"system": sys_.to_json(), "count": len(scan), **scan.to_json()}
        rows = [(c.point[0], c.point[1], c.pi_prime, c.pi_prime_fd, c.classification, c.period) for c in scan]
        return Output(data, rows, ("x", "y", "pi_prime", "pi_prime_fd", "classification", "period"))
    x0 = floats(args.x0)
    tr = pwl_integrate(sys_, x0, (0.0, args.t), tol=args.tol or 1e-12)
    data = {"status": tr.status, "t_final": tr.t_final, "y_final": list(tr.y_final),
            "crossings": [{"t": e.t, "point": list(e.state)} for e in tr.events]}
    return Output(data, files={"trajectory.csv": tr.to_csv()})


def cmd_stability(args, inputs):
    from .stability import jury, mc_probability, my_verify, routh_hurwitz
    if args.action == "mc":
        b = mc_probability(args.order, args.kind, args.trials, args.seed, args.workers)
        return Output(b.to_json(), [(b.n, b.kind, b.trials, b.successes, b.estimate, b.stderr)],
                      ("n", "kind", "trials", "successes", "estimate", "stderr"))
    if args.action == "check":
        if not args.coeffs:
            raise DomainError("check needs --coeffs (ascending)")
        c = fractions(args.coeffs)
        data = {"coeffs": [str(x) for x in c], "hurwitz": routh_hurwitz(c), "schur": jury(c)}
        return Output(data)
    rep = my_verify(args.n, args.samples, seed=args.seed)
    return Output(rep.to_json(), failed=not rep.ok)


def cmd_fewnomial(args, inputs):
    from .algebra import SparsePoly, casas_alvero, descartes_bound
    if args.action == "descartes":
        p = SparsePoly.parse(args.poly, ("x",))
        return Output({"poly": str(p), "bound": descartes_bound(p)})
    if args.action == "casas":
        p = SparsePoly.parse(args.poly, ("x",))
        v = casas_alvero(p, args.modulus)
        data = {"poly": str(p), "modulus": args.modulus,
                "verdict": "Shares" if v.shares else "FailsAt", "fails_at": v.fails_at,
                "witnesses": [[str(c) for c in w] for w in v.witnesses]}
        return Output(data)
    from .interval import Box, census_positive, krawczyk_unique, poincare_miranda
    polys = _poly_system(args, inputs)
    if args.action == "census":
        box = box_arg(args.box) if args.box else [(Fraction(1, 100), Fraction(2))] * len(polys)
        rep = census_positive(polys, Box.from_exact(box), depth=args.depth)
        data = rep.to_json()
        data["roots"] = [list(r) for r in rep.roots]
        return Output(data, [tuple(r) for r in rep.roots], tuple(f"x{i}" for i in range(len(polys))))
    if not args.box:
        raise DomainError("certify needs --box")
    B = Box.from_exact(box_arg(args.box))
    k = krawczyk_unique(polys, B)
    pm = poincare_miranda(polys, B)
    return Output({"krawczyk": k.to_json(), "miranda": pm.to_json()}, failed=not (k.unique or pm.certified))


def _poly_system(args, inputs):
    from .algebra import SparsePoly
    if args.builtin:
        from .builtins import builtin
        s = builtin(args.builtin)
        if not isinstance(s, list):
            s = list(getattr(s, "components", []))
        return s
    if not args.system:
        raise DomainError("give --builtin or --system")
    data = _load_json(args.system, inputs)
    if isinstance(data, list):
        return [SparsePoly.from_json(d) for d in data]
    kind = data.get("kind", "polynomial")
    if kind.startswith("builtin:"):
        from .builtins import builtin
        return list(builtin(kind.split(":", 1)[1]))
    return [SparsePoly.from_json(d) for d in data.get("components", data.get("polys", []))]


def cmd_geometry(args, inputs):
    from .geometry import (PonceletConfig, Triangle, billiard_trajectory, conjugacy_diagnostic,
                           fagnano_orbit, rotation_number)
    if args.action in ("fagnano", "billiard"):
        v = floats(args.triangle)
        if len(v) != 6:
            raise DomainError("--triangle needs x1,y1,x2,y2,x3,y3")
        tri = Triangle((v[0], v[1]), (v[2], v[3]), (v[4], v[5]))
        if args.action == "fagnano":
            fo = fagnano_orbit(tri)
            data = {"feet": [list(f) for f in fo.feet], "closure_residual": fo.closure_residual,
                    "reflection_residual": fo.reflection_residual}
            return Output(data, [tuple(f) for f in fo.feet], ("x", "y"))
        path = billiard_trajectory(tri, tuple(floats(args.start)), tuple(floats(args.dir)), args.bounces)
        data = {"status": path.status, "points": [list(p) for p in path.points]}
        return Output(data, [tuple(p) for p in path.points], ("x", "y"))
    cfg = PonceletConfig(args.n, args.m, args.inner_radius)
    if args.action == "rotation":
        p0 = tuple(floats(args.p0)) if args.p0 else None
        r = rotation_number(cfg, p0, args.iterations)
        return Output(r.to_json())
    rep = conjugacy_diagnostic(cfg, iterations=args.iterations)
    return Output(rep.to_json())


def cmd_seq(args, inputs):
    from .seq import (LYNESS, DifferenceEquation, difference_periodicity, persistence,
                      persistence_chain, reverse_add_steps, singmaster_count, smallest_with_persistence)
    a = args.action
    if a == "persistence":
        if args.sweep:
            t = smallest_with_persistence(args.sweep, args.limit, args.base)
            return Output({"smallest": t}, sorted(t.items()), ("m", "n"))
        _need(args.n, "--n")
        return Output({"n": args.n, "base": args.base, "persistence": persistence(args.n, args.base),
                       "chain": persistence_chain(args.n, args.base)})
    if a == "lychrel":
        if args.table:
            rows = [(n, reverse_add_steps(n, args.base, args.cap).steps) for n in range(1, args.table + 1)]
            return Output({"table": [{"n": n, "h": h} for n, h in rows], "cap": args.cap}, rows, ("n", "h"))
        _need(args.n, "--n")
        r = reverse_add_steps(args.n, args.base, args.cap)
        return Output({"n": args.n, "base": args.base, "cap": args.cap, **r.to_json()},
                      [(args.n, r.steps, r.status)], ("n", "steps", "status"))
    if a == "singmaster":
        _need(args.n, "--n")
        c = singmaster_count(args.n)
        return Output({"N": args.n, "count": c}, [(args.n, c)], ("N", "count"))
    if args.spec:
        eq = DifferenceEquation.from_json(_load_json(args.spec, inputs))
    elif args.named:
        if args.named not in LYNESS:
            raise DomainError(f"unknown recurrence {args.named!r}; choose from {sorted(LYNESS)}")
        eq = LYNESS[args.named]
    else:
        raise DomainError("diffeq needs --spec or --named")
    if args.unfold > 1:
        eq = DifferenceEquation.unfold(eq, args.unfold)
    v = difference_periodicity(eq, args.trials, args.horizon, args.seed)
    return Output({"equation": eq.to_json(), **v.to_json()})


def _need(v, flag):
    if v is None:
        raise DomainError(f"{flag} is required")


def cmd_moments(args, inputs):
    from .algebra import SparsePoly, moments
    names = tuple(args.vars.split(","))
    f = SparsePoly.parse(args.f, names)
    ms = moments(f, args.m_max)
    return Output({"f": str(f), "moments": [str(m) for m in ms]},
                  [(i + 1, str(m)) for i, m in enumerate(ms)], ("m", "M_m"))


def cmd_loewner(args, inputs):
    from .algebra import SparsePoly, loewner_field
    from .flow import field_index
    lf = loewner_field(SparsePoly.parse(args.f), args.n)
    data = {"f": str(lf.f), "n": lf.n, "P": str(lf.components[0]), "Q": str(lf.components[1]),
            "degenerate": lf.degenerate}
    if not lf.degenerate:
        try:
            data["index"] = field_index(lf.field, (0.0, 0.0), args.radius)
        except NumericFailure as exc:
            data["index"] = None
            data["index_error"] = str(exc)
    return Output(data)


def cmd_verify(args, inputs):
    from .acceptance import run
    nums = [int(x) for x in args.criteria.split(",")] if args.criteria else None
    echo = (lambda s: print(s, file=sys.stderr)) if args.out is None and not args.pretty else None
    results = run(nums, seed=args.seed, workers=args.workers, echo=echo)
    rows = [(r.number, r.title, "PASS" if r.passed else "FAIL", round(r.seconds, 2)) for r in results]
    data = {"passed": sum(r.passed for r in results), "total": len(results),
            "criteria": [r.to_json() for r in results]}
    return Output(data, rows, ("criterion", "title", "result", "seconds"),
                  failed=not all(r.passed for r in results))


# -- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--out", default=None, help="directory for outputs and the run manifest")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--pretty", action="store_true", help="human-readable table on stdout")

    ap = argparse.ArgumentParser(prog="planarlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"planarlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("cycles", cmd_cycles, "limit cycles from a Poincare return map")
    _add_field_args(p)
    p.add_argument("--grid", default="0.1:2:20")
    p.add_argument("--max-time", type=float, default=100.0)
    p.add_argument("--escape-norm", type=float, default=1e8)

    p = add("melnikov", cmd_melnikov, "first-order Melnikov function of a homogeneous perturbation")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--a", help="a_1..a_(2k-1)")
    p.add_argument("--b", help="b_1..b_(2l-1)")
    p.add_argument("--target", help="c_0..c_(k+l-1) of the desired polynomial in rho^2")
    p.add_argument("--levels", help="energy levels h (a:b:n or list)")
    p.add_argument("--direct", action="store_true", help="also integrate M(h) along the level curve")

    p = add("abel", cmd_abel, "periodic solutions of a periodic polynomial scalar equation")
    p.add_argument("--rigid", help="a,b,c,d,e,f of the rigid system")
    p.add_argument("--equation", help="PeriodicScalarEq JSON file")
    p.add_argument("--range", default="-1,1")
    p.add_argument("--grid", type=int, default=41)

    p = add("dulac", cmd_dulac, "certify a Dulac function")
    p.add_argument("--V")
    p.add_argument("--P")
    p.add_argument("--Q")
    p.add_argument("--s", default="-1")
    p.add_argument("--factor")
    p.add_argument("--cofactor")
    p.add_argument("--box", default="-5,5;-5,5")
    p.add_argument("--depth", type=int, default=14)

    p = add("period", cmd_period, "period function of a center")
    _add_field_args(p)
    p.add_argument("--grid", default="0.1:1:10")
    p.add_argument("--max-time", type=float, default=1000.0)

    p = add("pwl", cmd_pwl, "piecewise linear systems with a switching curve")
    p.add_argument("action", choices=("cycles", "trajectory"))
    p.add_argument("--builtin")
    p.add_argument("--system")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--eps", default="1/1000")
    p.add_argument("--range", default="0.01,1.2")
    p.add_argument("--grid", type=int, default=240)
    p.add_argument("--x0", default="1,0.5")
    p.add_argument("--t", type=float, default=20.0)

    p = add("stability", cmd_stability, "Routh-Hurwitz / Jury statistics and Markus-Yamabe check")
    p.add_argument("action", choices=("mc", "check", "markus-yamabe"))
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--kind", default="diff")
    p.add_argument("--trials", type=int, default=10**6)
    p.add_argument("--coeffs")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--samples", type=int, default=100)

    p = add("fewnomial", cmd_fewnomial, "certified root counts and root-sharing predicates")
    p.add_argument("action", choices=("census", "certify", "descartes", "casas"))
    p.add_argument("--builtin")
    p.add_argument("--system")
    p.add_argument("--box", help="lo,hi;lo,hi")
    p.add_argument("--depth", type=int, default=14)
    p.add_argument("--poly", help="univariate polynomial in x")
    p.add_argument("--modulus", type=int)

    p = add("geometry", cmd_geometry, "triangle billiards and Poncelet maps")
    p.add_argument("action", choices=("fagnano", "billiard", "rotation", "conjugacy"))
    p.add_argument("--triangle", default="0,0,4,0,1,3")
    p.add_argument("--start", default="1,1")
    p.add_argument("--dir", default="1,0.3")
    p.add_argument("--bounces", type=int, default=10)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--inner-radius", type=float, default=1.0)
    p.add_argument("--p0")
    p.add_argument("--iterations", type=int, default=1000)

    p = add("seq", cmd_seq, "digit products, reverse-and-add, Pascal counts, recurrences")
    p.add_argument("action", choices=("persistence", "lychrel", "singmaster", "diffeq"))
    p.add_argument("--n", type=int)
    p.add_argument("--base", type=int, default=10)
    p.add_argument("--cap", type=int, default=1000)
    p.add_argument("--sweep", type=int, help="smallest n with persistence 1..SWEEP")
    p.add_argument("--limit", type=int, default=10**6)
    p.add_argument("--table", type=int, help="reverse-and-add steps for n = 1..TABLE")
    p.add_argument("--spec")
    p.add_argument("--named")
    p.add_argument("--unfold", type=int, default=1)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--horizon", type=int, default=200)

    p = add("moments", cmd_moments, "exact moments of a polynomial over the unit cube")
    p.add_argument("--f", required=True)
    p.add_argument("--vars", default="x,y")
    p.add_argument("--m-max", type=int, default=3)

    p = add("loewner", cmd_loewner, "Loewner vector field and its index at the origin")
    p.add_argument("--f", required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--radius", type=float, default=1.0)

    p = add("verify-paper", cmd_verify, "run the reproduction suite")
    p.add_argument("--criteria", help="comma list of criterion numbers")
    return ap


# -- manifest and dispatch ------------------------------------------------------------

def _now():
    return datetime.now(timezone.utc).isoformat()


def _params(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(c) if isinstance(c, float) else c for c in r])
    return buf.getvalue()


def dispatch(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    out_dir = Path(args.out) if args.out else None
    inputs: dict = {}
    manifest = {"tool": "planarlab", "version": __version__, "subcommand": args.command,
                "parameters": jsonable(_params(args)), "seed": args.seed, "started": _now(),
                "finished": None, "status": "running", "inputs": inputs, "outputs": [], "result": None}
    if out_dir:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            print(f"error: cannot create {out_dir}: {exc}", file=sys.stderr)
            return EXIT_INPUT
        (out_dir / "manifest.json").write_text(dumps(manifest, True))
    code, out, err = EXIT_OK, None, None
    try:
        res = args.func(args, inputs)
        if args.format == "csv" and res.rows is None:
            raise DomainError(f"{args.command} has no CSV form; use --format json")
        out = res
        if out.failed:
            code = EXIT_NUMERIC
    except ResourceError as exc:
        code, err = EXIT_RESOURCE, exc
    except NumericFailure as exc:
        code, err = EXIT_NUMERIC, exc
    except (DomainError, ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
        code, err = EXIT_INPUT, exc
    if err is not None:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        manifest["error"] = f"{type(err).__name__}: {err}"
    if out is not None:
        text = _csv(out.rows, out.header) if args.format == "csv" else dumps(out.data, True) + "\n"
        if out_dir:
            name = "result.csv" if args.format == "csv" else "result.json"
            (out_dir / name).write_text(text)
            manifest["outputs"].append(name)
            for fname, content in out.files.items():
                (out_dir / fname).write_text(content)
                manifest["outputs"].append(fname)
        if args.pretty:
            print(_table(out.rows, out.header) if out.rows is not None else _pretty(jsonable(out.data)))
        elif not out_dir:
            sys.stdout.write(text)
        manifest["result"] = jsonable(out.data)
        manifest["result_digest"] = hashlib.sha256(dumps(out.data).encode()).hexdigest()
    manifest["status"] = {EXIT_OK: "ok", EXIT_NUMERIC: "numeric-failure", EXIT_INPUT: "bad-input",
                          EXIT_RESOURCE: "resource-cap"}[code]
    manifest["exit_code"] = code
    manifest["finished"] = _now()
    if out_dir:
        (out_dir / "manifest.json").write_text(dumps(manifest, True))
    return code


def main(argv=None):
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
