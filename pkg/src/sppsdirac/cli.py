"""Config-driven command line driver.

    sppsdirac solve problem.ini [--out-dir DIR] [--verbose] [--check]

A problem file has the sections ``[problem] [mesh] [coefficients] [boundary]
[solver] [output]``. Complex numbers are written ``1.5-2i`` or ``[1.5, -2]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 partial results.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import re
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .bessel import BesselProblem, bessel_eigenvalues, prepare
from .dirac_core import (
    COEFF_NAMES,
    DiracSystem,
    NonConvergenceError,
    formal_powers,
    particular_solution,
    spps_endpoint,
    spps_solution,
)
from .expr import ExprError, parse_coeff_expr
from .hydrogenic import (
    HydrogenicModel,
    EnergyPoint,
    energy_levels,
    exterior_solution,
    interior_formal_powers,
    interior_system,
    matching_determinant,
    SPEED_OF_LIGHT,
)
from .numerics import GridFn, make_mesh
from .spectral import (
    BoundaryCondition,
    EigenPair,
    EigenResult,
    ShiftStrategy,
    adaptive_shift_sweep,
    eigen_window,
    initial_window,
    shift_system,
)

log = logging.getLogger("sppsdirac")

KINDS = ("dirac", "bessel", "hydrogenic")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PARTIAL = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


_CPLX = re.compile(
    r"^\s*(?P<re>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?"
    r"(?:\s*(?P<im>[+-]\s*(?:(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?)\s*i)?\s*$"
)


def parse_complex(text: str) -> complex:
    """``"1.5"``, ``"2i"``, ``"1-2.5i"``, ``"[1, -2.5]"``."""
    t = text.strip()
    if t.startswith("["):
        if not t.endswith("]"):
            raise ConfigError(f"unterminated complex pair {text!r}")
        parts = [p.strip() for p in t[1:-1].split(",")]
        if len(parts) != 2:
            raise ConfigError(f"complex pair needs two entries: {text!r}")
        try:
            return complex(float(parts[0]), float(parts[1]))
        except ValueError:
            raise ConfigError(f"bad complex pair {text!r}") from None
    m = re.fullmatch(r"\s*([+-]?)\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*i\s*", t)
    if m and t:
        mag = float(m.group(2)) if m.group(2) else 1.0
        return complex(0.0, -mag if m.group(1) == "-" else mag)
    m = _CPLX.match(t)
    if not m or not t or (m.group("re") is None and m.group("im") is None):
        raise ConfigError(f"cannot read complex number {text!r}")
    re_ = float(m.group("re")) if m.group("re") else 0.0
    im = 0.0
    if m.group("im") is not None:
        s = m.group("im").replace(" ", "")
        im = float(s + "1") if s in "+-" else float(s)
    return complex(re_, im)


def format_complex(z: complex) -> str:
    z = complex(z)
    return f"[{z.real!r}, {z.imag!r}]"


@dataclass
class SolverSpec:
    N: int = 100
    want: int = 10
    sigma: Optional[float] = None
    tau0: Optional[float] = None
    dilations: tuple = (0.9, 1.0, 1.1)
    steps: int = 100
    shift: complex = 0j
    tol_match: float = 1e-6
    max_residual: float = 1e-5
    # hydrogenic only
    Ebar0: float = 137.0
    window: Optional[tuple] = None
    scan: int = 2000

    @property
    def strategy(self) -> Optional[ShiftStrategy]:
        if self.sigma is None:
            return None
        tau0 = self.tau0 if self.tau0 is not None else self.sigma / 2
        return ShiftStrategy(self.sigma, tau0, tuple(self.dilations), self.steps)


@dataclass
class OutputSpec:
    csv: str = "eigenvalues.csv"
    json: str = "summary.json"
    wavefunctions: int = 0


@dataclass
class ProblemSpec:
    kind: str
    name: str = "problem"
    a: Optional[float] = None
    M: int = 10001
    kappa: Optional[Fraction] = None
    l: Optional[Fraction] = None
    Z: Optional[int] = None
    R_atom: Optional[float] = None
    c: float = SPEED_OF_LIGHT
    coefficients: dict = field(default_factory=dict)
    alpha1: complex = 1 + 0j
    alpha2: complex = 0j
    gamma1: complex = 0j
    gamma2: complex = 0j
    solver: SolverSpec = field(default_factory=SolverSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        prob = {"kind": self.kind, "name": self.name}
        for key in ("kappa", "l", "Z", "R_atom"):
            v = getattr(self, key)
            if v is not None:
                prob[key] = str(v) if not isinstance(v, float) else repr(v)
        if self.kind == "hydrogenic":
            prob["c"] = repr(self.c)
        cp["problem"] = prob
        mesh = {"M": str(self.M)}
        if self.a is not None:
            mesh["a"] = repr(self.a)
        cp["mesh"] = mesh
        cp["coefficients"] = dict(self.coefficients)
        cp["boundary"] = {k: format_complex(getattr(self, k))
                          for k in ("alpha1", "alpha2", "gamma1", "gamma2")}
        sv = {}
        for f in fields(SolverSpec):
            v = getattr(self.solver, f.name)
            if v is None:
                continue
            if f.name == "shift":
                sv[f.name] = format_complex(v)
            elif f.name in ("dilations", "window"):
                sv[f.name] = ", ".join(repr(float(t)) for t in v)
            else:
                sv[f.name] = repr(v)
        cp["solver"] = sv
        cp["output"] = {k: str(v) for k, v in asdict(self.output).items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _float(sec, key, default=None):
    if key not in sec:
        return default
    try:
        return float(sec[key])
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} = {sec[key]!r} is not a number") from None


def _int(sec, key, default=None):
    if key not in sec:
        return default
    try:
        return int(sec[key])
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} = {sec[key]!r} is not an integer") from None


def _frac(sec, key):
    if key not in sec:
        return None
    try:
        return Fraction(sec[key].strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"[{sec.name}] {key} = {sec[key]!r} is not a rational number") from None


def _floats(sec, key):
    if key not in sec:
        return None
    try:
        return tuple(float(t) for t in sec[key].split(","))
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} must be a comma separated list of numbers") from None


ALLOWED_COEFFS = {
    "dirac": set(COEFF_NAMES),
    "bessel": {"q_B", "r"},
    "hydrogenic": set(),
}


def parse_spec(text: str) -> ProblemSpec:
    """Read a problem file; raises :class:`ConfigError` on any inconsistency."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e)) from None
    for sec in cp.sections():
        if sec not in ("problem", "mesh", "coefficients", "boundary", "solver", "output"):
            raise ConfigError(f"unknown section [{sec}]")
    if "problem" not in cp or "kind" not in cp["problem"]:
        raise ConfigError("missing [problem] kind")
    P = cp["problem"]
    kind = P["kind"].strip()
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {', '.join(KINDS)}, got {kind!r}")
    empty = configparser.SectionProxy(cp, "DEFAULT")

    def sec(name):
        return cp[name] if name in cp else empty

    Ms, Cs, Bs, Ss, Os = (sec(n) for n in ("mesh", "coefficients", "boundary", "solver", "output"))
    spec = ProblemSpec(kind=kind, name=P.get("name", "problem").strip())
    spec.kappa = _frac(P, "kappa")
    spec.l = _frac(P, "l")
    spec.Z = _int(P, "Z")
    spec.R_atom = _float(P, "R_atom")
    spec.c = _float(P, "c", SPEED_OF_LIGHT)
    spec.a = _float(Ms, "a")
    spec.M = _int(Ms, "M", 10001)
    spec.coefficients = {k: v.strip() for k, v in Cs.items()} if "coefficients" in cp else {}
    for key in ("alpha1", "alpha2", "gamma1", "gamma2"):
        if key in Bs:
            setattr(spec, key, parse_complex(Bs[key]))

    sv = SolverSpec()
    sv.N = _int(Ss, "N", sv.N)
    sv.want = _int(Ss, "want", sv.want)
    sv.sigma = _float(Ss, "sigma")
    sv.tau0 = _float(Ss, "tau0")
    sv.dilations = _floats(Ss, "dilations") or sv.dilations
    sv.steps = _int(Ss, "steps", sv.steps)
    if "shift" in Ss:
        sv.shift = parse_complex(Ss["shift"])
    sv.tol_match = _float(Ss, "tol_match", sv.tol_match)
    sv.max_residual = _float(Ss, "max_residual", sv.max_residual)
    sv.Ebar0 = _float(Ss, "Ebar0", sv.Ebar0)
    sv.window = _floats(Ss, "window")
    sv.scan = _int(Ss, "scan", sv.scan)
    spec.solver = sv
    out = OutputSpec()
    out.csv = Os.get("csv", out.csv).strip()
    out.json = Os.get("json", out.json).strip()
    out.wavefunctions = _int(Os, "wavefunctions", 0)
    spec.output = out
    validate(spec)
    return spec


def validate(spec: ProblemSpec) -> None:
    k = spec.kind
    if k == "dirac" and spec.kappa is None:
        raise ConfigError("dirac problems need [problem] kappa")
    if k == "bessel" and spec.l is None:
        raise ConfigError("bessel problems need [problem] l")
    if k == "hydrogenic":
        if spec.Z is None or spec.kappa is None:
            raise ConfigError("hydrogenic problems need [problem] Z and kappa")
    elif spec.a is None:
        raise ConfigError("[mesh] a is required")
    if spec.a is not None and not spec.a > 0:
        raise ConfigError("[mesh] a must be positive")
    if spec.M < 6 or (spec.M - 1) % 5 != 0:
        raise ConfigError(f"[mesh] M = {spec.M} violates the block rule: need M >= 6 and (M-1) % 5 == 0")
    extra = set(spec.coefficients) - ALLOWED_COEFFS[k]
    if extra:
        raise ConfigError(f"unknown coefficients for {k}: {', '.join(sorted(extra))}")
    for name, src in spec.coefficients.items():
        try:
            parse_coeff_expr(src)
        except ExprError as e:
            raise ConfigError(f"[coefficients] {name}: {e}") from None
    if abs(spec.alpha1) + abs(spec.alpha2) == 0:
        raise ConfigError("boundary condition needs |alpha1| + |alpha2| != 0")
    sv = spec.solver
    if sv.N < 3:
        raise ConfigError("[solver] N must be at least 3")
    if sv.want < 1:
        raise ConfigError("[solver] want must be positive")
    if sv.sigma is not None:
        try:
            sv.strategy
        except ValueError as e:
            raise ConfigError(f"[solver] {e}") from None
    if sv.window is not None and len(sv.window) != 2:
        raise ConfigError("[solver] window needs two values")
    if spec.output.wavefunctions < 0:
        raise ConfigError("[output] wavefunctions must be >= 0")


# running


@dataclass
class Row:
    lam: complex
    residual: float
    shift: complex
    stable: bool
    extra: dict = field(default_factory=dict)


@dataclass
class Report:
    kind: str
    rows: list
    incomplete: bool
    wavefunctions: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def max_residual(self) -> float:
        return max((r.residual for r in self.rows), default=0.0)

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "count": len(self.rows),
            "stable": sum(r.stable for r in self.rows),
            "incomplete": self.incomplete,
            "max_residual": self.max_residual,
            "files": self.files,
        }


def _coeff(spec: ProblemSpec, mesh, name: str, default) -> GridFn:
    src = spec.coefficients.get(name)
    if src is None:
        return GridFn.constant(mesh, default)
    return parse_coeff_expr(src).to_gridfn(mesh)


def dirac_system(spec: ProblemSpec) -> DiracSystem:
    mesh = make_mesh(spec.a, spec.M)
    defaults = {"p1": 1.0, "p2": 0.0, "q": 0.0, "r11": 1.0, "r12": 0.0, "r21": 0.0, "r22": 1.0}
    return DiracSystem(spec.kappa, *(_coeff(spec, mesh, n, defaults[n]) for n in COEFF_NAMES))


def bessel_problem(spec: ProblemSpec) -> BesselProblem:
    mesh = make_mesh(spec.a, spec.M)
    return BesselProblem(spec.l, _coeff(spec, mesh, "q_B", 0.0), _coeff(spec, mesh, "r", 1.0),
                         spec.alpha1, spec.alpha2)


def eigenfunction(sys: DiracSystem, lam: complex, shift: complex, N: int):
    """``(u, v)`` of ``sys`` at ``lam`` from formal powers centred at ``shift``."""
    s = shift_system(sys, shift)
    fp = formal_powers(s, particular_solution(s), N)
    u, v = spps_solution(fp, lam - shift)
    if s.gauge_log is not None:
        w = np.exp(s.gauge_log.values())
        return u.values() * w, v.values() * w
    return u.values(), v.values()


def run_dirac(spec: ProblemSpec) -> Report:
    sys_ = dirac_system(spec)
    sv = spec.solver
    bc = BoundaryCondition(spec.alpha1, spec.alpha2, spec.gamma1, spec.gamma2)
    base = shift_system(sys_, sv.shift) if sv.shift else sys_
    fp = initial_window(base, sv.N)
    pairs, _ = eigen_window(fp, bc, sv.tol_match, sv.max_residual)
    res = EigenResult()
    res.merge(pairs)
    res.shifts.append(fp.system.shift)
    if len(res) < sv.want and sv.strategy is not None:
        res = adaptive_shift_sweep(sys_, bc, sv.strategy, sv.want, sv.N, sv.tol_match,
                                   sv.max_residual, fp0=fp)
    pairs = list(res)[: sv.want]
    rows = [Row(p.lam, p.residual, p.shift, p.stable) for p in pairs]
    rep = Report("dirac", rows, len(rows) < sv.want)
    for i, p in enumerate(pairs[: spec.output.wavefunctions]):
        u, v = eigenfunction(sys_, p.lam, p.shift, sv.N)
        rep.wavefunctions[i + 1] = (sys_.mesh.x, u, v)
    return rep


def run_bessel(spec: ProblemSpec) -> Report:
    prob = bessel_problem(spec)
    sv = spec.solver
    found = bessel_eigenvalues(prob, sv.N, sv.want, sv.strategy, sv.tol_match, sv.max_residual)
    rows = [Row(e.lam, e.residual, e.shift, e.residual <= sv.max_residual,
                {"sqrt_lambda_re": e.omega.real}) for e in found]
    rep = Report("bessel", rows, len(rows) < sv.want)
    if spec.output.wavefunctions:
        sysD = prepare(prob).system
        for i, e in enumerate(found[: spec.output.wavefunctions]):
            u, v = eigenfunction(sysD, e.Lambda, e.shift, sv.N)
            rep.wavefunctions[i + 1] = (sysD.mesh.x, u, v)
    return rep


def run_hydrogenic(spec: ProblemSpec) -> Report:
    kw = {} if spec.R_atom is None else {"R_atom": spec.R_atom}
    model = HydrogenicModel(spec.Z, spec.kappa, c=spec.c, **kw)
    sv = spec.solver
    lev = energy_levels(model, sv.Ebar0, sv.window, sv.want, sv.scan, sv.N, spec.M)
    base = interior_system(model, spec.M)
    rows = []
    fps = {}
    for e, Eb, sh in zip(lev.binding, lev.Ebar, lev.shifts):
        if sh not in fps:
            fps[sh] = interior_formal_powers(model, sh, sv.N, system=base)
        fp = fps[sh]
        E = EnergyPoint(model, e)
        d = matching_determinant(model, E, fp)
        Ft, Gt = spps_endpoint(fp, _interior_lambda(model, fp, E))
        F, G = exterior_solution(model, E, model.R_atom)
        scale = abs(Ft * G) + abs(F * Gt)
        rows.append(Row(complex(Eb), float(abs(d) / scale), complex(sh), True, {"E_minus_mc2": e}))
    rep = Report("hydrogenic", rows, lev.incomplete)
    for i, (e, sh) in enumerate(zip(lev.binding[: spec.output.wavefunctions],
                                    lev.shifts[: spec.output.wavefunctions])):
        rep.wavefunctions[i + 1] = hydrogenic_wavefunction(model, e, fps[sh])
    return rep


def _interior_lambda(model, fp, E) -> float:
    return (model.M - fp.system.shift.real) - E.M_minus


def hydrogenic_wavefunction(model: HydrogenicModel, e: float, fp, outer: int = 400,
                            rho_max: float = 40.0):
    """Large and small components ``(F, G)`` on ``[0, x_max]``, continuous at ``R_atom``."""
    E = EnergyPoint(model, e)
    u, v = spps_solution(fp, _interior_lambda(model, fp, E))
    x_in = fp.system.mesh.x
    Fi, Gi = u.values(), v.values()
    F_R, G_R = exterior_solution(model, E, model.R_atom)
    # scale the exterior pair onto the interior one at the radius
    k = (Fi[-1] * F_R + Gi[-1] * G_R) / (F_R * F_R + G_R * G_R)
    x_max = max(rho_max / (2 * E.k), 2 * model.R_atom)
    x_out = np.linspace(model.R_atom, x_max, outer + 1)[1:]
    Fo, Go = exterior_solution(model, E, x_out)
    x = np.concatenate([x_in, x_out])
    return x, np.concatenate([Fi, k * Fo]), np.concatenate([Gi, k * Go])


RUNNERS = {"dirac": run_dirac, "bessel": run_bessel, "hydrogenic": run_hydrogenic}


def run_problem(spec: ProblemSpec) -> Report:
    t0 = time.perf_counter()
    rep = RUNNERS[spec.kind](spec)
    rep.seconds = time.perf_counter() - t0
    return rep


def write_outputs(spec: ProblemSpec, rep: Report, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    extra = {"bessel": ["sqrt_lambda_re"], "hydrogenic": ["E_minus_mc2"]}.get(spec.kind, [])
    path = out_dir / spec.output.csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "lambda_re", "lambda_im", "residual", "shift_re", "shift_im", "stable", *extra])
        for n, r in enumerate(rep.rows, 1):
            w.writerow([n, repr(r.lam.real), repr(r.lam.imag), f"{r.residual:.6e}",
                        repr(r.shift.real), repr(r.shift.imag), str(r.stable).lower(),
                        *(repr(float(r.extra[k])) for k in extra)])
    rep.files.append(str(path))
    for n, (x, u, v) in rep.wavefunctions.items():
        p = out_dir / f"{Path(spec.output.csv).stem}_wave_{n}.csv"
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        np.savetxt(p, np.column_stack([x, u.real, u.imag, v.real, v.imag]), delimiter=",",
                   header="x,u_re,u_im,v_re,v_im", comments="", fmt="%.17g")
        rep.files.append(str(p))
    jpath = out_dir / spec.output.json
    rep.files.append(str(jpath))
    with open(jpath, "w") as fh:
        json.dump(rep.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# self checks


def run_checks(spec: ProblemSpec) -> list:
    """Invariant checks on a parsed problem; returns ``(name, ok, detail)`` tuples."""
    out = []
    again = parse_spec(spec.to_text())
    out.append(("config round trip", again == spec, ""))
    if spec.kind == "hydrogenic":
        kw = {} if spec.R_atom is None else {"R_atom": spec.R_atom}
        try:
            m = HydrogenicModel(spec.Z, spec.kappa, c=spec.c, **kw)
            out.append(("model constraints", True, f"xi = {m.xi:.6g}, eta = {m.eta:.6g}"))
            V = m.V(np.array([m.R_atom * (1 - 1e-12), m.R_atom * (1 + 1e-12)]))
            out.append(("potential continuity", abs(V[0] - V[1]) < 1e-9, f"{V}"))
        except ValueError as e:
            out.append(("model constraints", False, str(e)))
        return out
    mesh = make_mesh(spec.a, spec.M)
    for name, src in spec.coefficients.items():
        try:
            g = parse_coeff_expr(src).to_gridfn(mesh)
            out.append((f"coefficient {name} finite", True, f"exponent {g.exponent}"))
        except ValueError as e:
            out.append((f"coefficient {name} finite", False, str(e)))
    try:
        if spec.kind == "dirac":
            s = dirac_system(spec)
            s.check_c3()
        else:
            s = prepare(bessel_problem(spec)).system
        out.append(("system admissible", True, ""))
        fp = initial_window(s, 3)
        out.append(("non-vanishing seed", True, f"shift {fp.system.shift}"))
    except (ValueError, ZeroDivisionError, ArithmeticError) as e:
        out.append(("system admissible", False, str(e)))
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="sppsdirac",
                                 description="Spectral problems for radial Dirac systems by SPPS.")
    sub = ap.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("solve", help="solve the problem described by a config file")
    sp.add_argument("config", type=Path)
    sp.add_argument("--out-dir", type=Path, default=Path("."))
    sp.add_argument("--verbose", "-v", action="store_true")
    sp.add_argument("--check", action="store_true",
                    help="run invariant self-checks on the parsed problem instead of solving")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        spec = parse_spec(args.config.read_text())
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.check:
        ok = True
        for name, good, detail in run_checks(spec):
            ok &= good
            print(f"{'ok  ' if good else 'FAIL'} {name}" + (f": {detail}" if detail else ""))
        return EXIT_OK if ok else EXIT_NUMERIC

    try:
        rep = run_problem(spec)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergenceError, ArithmeticError, ValueError, ZeroDivisionError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    write_outputs(spec, rep, args.out_dir)
    log.info("%d eigenvalues in %.1f s, max residual %.2e", len(rep.rows), rep.seconds,
             rep.max_residual)
    for f in rep.files:
        print(f)
    if rep.incomplete:
        print(f"partial result: {len(rep.rows)} of {spec.solver.want} eigenvalues", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
