"""Radial Dirac system, seed solutions, formal powers and the SPPS sum.

The system on ``(0, a]`` is::

    v' + p1 u + (kappa/x + q) v = lam (r11 u + r12 v)
   -u' + (kappa/x + q) u + p2 v = lam (r21 u + r22 v)

Formal powers are stored divided by ``n!`` (``X[n] = Xhat[n] / n!``) so that
the SPPS sum is a plain power series and nothing overflows for large ``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator, Optional

import numba
import numpy as np
from scipy.special import gammainc, gammaln

from .numerics import (
    GridFn,
    Mesh,
    VanishingDivisorError,
    as_exponent,
    cumulative_integral,
    lincomb,
)

__all__ = [
    "DiracSystem",
    "SeedSolution",
    "FormalPowers",
    "NonConvergenceError",
    "NonVanishing",
    "seed_solution_free",
    "mu_constant",
    "particular_solution",
    "solve_regular",
    "formal_powers",
    "spps_solution",
    "spps_endpoint",
    "bound_constants",
    "tail_bound",
    "residual",
    "check_nonvanishing",
]

COEFF_NAMES = ("p1", "p2", "q", "r11", "r12", "r21", "r22")


class NonConvergenceError(ArithmeticError):
    def __init__(self, msg: str, ratio: float):
        self.ratio = ratio
        super().__init__(f"{msg} (last term ratio {ratio:.3g})")


def _coerce(mesh: Mesh, c) -> GridFn:
    if isinstance(c, GridFn):
        if c.mesh is not mesh:
            raise ValueError("coefficient sampled on a different mesh")
        return c
    if callable(c):
        return GridFn.from_callable(mesh, c)
    return GridFn.constant(mesh, c)


@dataclass(frozen=True, eq=False)
class DiracSystem:
    """Coefficients of the radial Dirac system on a common mesh.

    ``shift`` and ``gauge_log`` are set by :func:`sppsdirac.spectral.shift_system`:
    a solution ``U`` of the shifted system maps back as ``Y = exp(gauge_log) U``.
    """

    kappa: Fraction
    p1: GridFn
    p2: GridFn
    q: GridFn
    r11: GridFn
    r12: GridFn
    r21: GridFn
    r22: GridFn
    shift: complex = 0j
    gauge_log: Optional[GridFn] = None

    def __post_init__(self):
        object.__setattr__(self, "kappa", as_exponent(self.kappa))
        if self.kappa < Fraction(1, 2):
            raise ValueError(f"kappa must be >= 1/2, got {self.kappa}")
        mesh = self.p1.mesh
        for name in COEFF_NAMES:
            if getattr(self, name).mesh is not mesh:
                raise ValueError(f"coefficient {name} is on a different mesh")
        if self.q.exponent <= -1:
            raise ValueError(f"q ~ x^{self.q.exponent} is too singular (need > -1)")
        for name in ("p1", "p2", "r12", "r21", "r22"):
            if getattr(self, name).exponent < 0 and not getattr(self, name).is_zero():
                raise ValueError(f"coefficient {name} must be bounded at the origin")
        if self.r11.exponent < 0:
            beta = self.r11.exponent
            if beta <= -2 or 2 * self.kappa + beta <= 0:
                raise ValueError(f"r11 ~ x^{beta} too singular for kappa={self.kappa}")

    @classmethod
    def build(cls, mesh: Mesh, kappa, p1=1.0, p2=0.0, q=0.0, r11=1.0, r12=0.0,
              r21=0.0, r22=1.0) -> "DiracSystem":
        """Build from constants, callables of ``x`` or :class:`GridFn` objects."""
        return cls(kappa, *(_coerce(mesh, c) for c in (p1, p2, q, r11, r12, r21, r22)))

    @property
    def mesh(self) -> Mesh:
        return self.p1.mesh

    @property
    def a(self) -> float:
        return self.mesh.a

    @property
    def q_growth(self):
        """``(c_q, alpha)`` with ``|q| <= c_q x**alpha``, or None when q is bounded."""
        if self.q.exponent >= 0:
            return None
        return float(np.max(np.abs(self.q.samples))), float(self.q.exponent)

    @property
    def r11_growth(self):
        if self.r11.exponent >= 0:
            return None
        return float(np.max(np.abs(self.r11.samples))), float(self.r11.exponent)

    @property
    def symmetric_R(self) -> bool:
        return np.array_equal(self.r12.values(), self.r21.values())

    def at0(self, name: str) -> complex:
        c = getattr(self, name)
        if c.exponent > 0:
            return 0j
        if c.exponent < 0 and not c.is_zero():
            raise ValueError(f"{name} is singular at the origin")
        return complex(c.samples[0])

    def check_c3(self):
        if self.at0("p1") == 0:
            raise ValueError("p1(0) = 0: apply a spectral shift first")


@dataclass(frozen=True, eq=False)
class SeedSolution:
    """Solution ``(f, g)`` of the homogeneous system with ``f ~ x^kappa``."""

    f: GridFn
    g: GridFn
    kappa: Fraction
    mu0: complex
    terms: int = 0
    tail: float = 0.0


@dataclass(frozen=True, eq=False)
class FormalPowers:
    """Scaled formal powers ``X[n] = Xhat[n]/n!`` and ``Y[n] = Yhat[n]/n!``."""

    system: DiracSystem
    seed: SeedSolution
    N: int
    x_exp: list
    y_exp: list
    xs: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)
    x_end: np.ndarray = field(repr=False)
    y_end: np.ndarray = field(repr=False)

    def X(self, n: int) -> GridFn:
        return GridFn(self.system.mesh, self.xs[n], self.x_exp[n])

    def Y(self, n: int) -> GridFn:
        return GridFn(self.system.mesh, self.ys[n], self.y_exp[n])

    def Xhat(self, n: int) -> GridFn:
        return self.X(n) * math.factorial(n)

    def Yhat(self, n: int) -> GridFn:
        return self.Y(n) * math.factorial(n)

    def truncated(self, N: int) -> "FormalPowers":
        if N > self.N:
            raise ValueError(f"only {self.N} formal powers available")
        return replace(self, N=N, x_exp=self.x_exp[: N + 1], y_exp=self.y_exp[: N + 1],
                       xs=self.xs[: N + 1], ys=self.ys[: N + 1],
                       x_end=self.x_end[: N + 1], y_end=self.y_end[: N + 1])


def seed_solution_free(sys: DiracSystem) -> tuple[GridFn, GridFn]:
    """``f0 = x^kappa``, ``g0 = -x^(-kappa) int_0^x t^(2 kappa) p1``."""
    mesh, k = sys.mesh, sys.kappa
    f0 = GridFn.constant(mesh, 1.0, k)
    integrand = GridFn(mesh, sys.p1.samples, 2 * k + sys.p1.exponent)
    G = cumulative_integral(integrand)
    g0 = GridFn(mesh, -G.samples, G.exponent - k)
    return f0, g0


def mu_constant(lam: complex, sys: DiracSystem) -> complex:
    """Leading coefficient of ``v ~ mu x^(kappa+1)`` for the regular solution."""
    return (lam * sys.at0("r11") - sys.at0("p1")) / (2 * sys.kappa + 1)


def _nz(c: GridFn):
    return None if c.is_zero() else c


def _terms(sys: DiracSystem, f: GridFn, g: GridFn) -> Iterator[tuple]:
    """Yield ``(eX, X, eY, Y)`` for n = 0, 1, 2, ... (scaled by 1/n!)."""
    mesh = sys.mesh
    sf = f.samples
    bad = np.flatnonzero(sf[1:] == 0)
    if bad.size or sf[0] == 0:
        i = int(bad[0]) + 1 if bad.size else 0
        raise VanishingDivisorError(i, float(mesh.x[i]))
    ef, eg = f.exponent, g.exponent
    r11, r12, r21, r22, p2 = (_nz(getattr(sys, n)) for n in ("r11", "r12", "r21", "r22", "p2"))

    def prod(*pairs):
        if any(p is None for p in pairs):
            return None
        e = sum(p[0] for p in pairs)
        s = pairs[0][1]
        for p in pairs[1:]:
            s = s * p[1]
        return e, s

    def gf(c):
        return None if c is None else (c.exponent, c.samples)

    F = (ef, sf)
    Gs = (eg, g.samples)
    inv_f = (-ef, 1.0 / sf)
    # A = f r11 + g r21, B = f r12 + g r22
    A = [t for t in (prod(F, gf(r11)), prod(Gs, gf(r21))) if t is not None]
    B = [t for t in (prod(F, gf(r12)), prod(Gs, gf(r22))) if t is not None]
    C = prod(inv_f, gf(r21))
    D = prod(inv_f, gf(r22))
    E = prod(inv_f, inv_f, gf(p2))
    GoF = (eg - ef, g.samples / sf)

    eX, X = ef, sf.astype(complex)
    eY, Y = eg, g.samples.astype(complex)
    while True:
        yield eX, X, eY, Y
        zt = [(eX + e, X * s) for e, s in A] + [(eY + e, Y * s) for e, s in B]
        ez, z = lincomb(mesh, zt)
        W = cumulative_integral(GridFn(mesh, z, ez))
        eW, Ws = W.exponent, W.samples
        xt = []
        if C is not None:
            xt.append((eX + C[0], -X * C[1]))
        if D is not None:
            xt.append((eY + D[0], -Y * D[1]))
        if E is not None:
            xt.append((eW + E[0], Ws * E[1]))
        ei, integ = lincomb(mesh, xt)
        Ix = cumulative_integral(GridFn(mesh, integ, ei))
        eX, X = ef + Ix.exponent, sf * Ix.samples
        eY, Y = lincomb(mesh, [(eW - ef, Ws / sf), (GoF[0] + eX, GoF[1] * X)])


def _end(mesh: Mesh, e, s) -> complex:
    return complex(mesh.a ** float(e) * s[-1])


def _sup(mesh: Mesh, e, s) -> float:
    return float(np.max(np.abs(s * mesh.pow(e))[1:]))


def solve_regular(sys: DiracSystem, f: GridFn, g: GridFn, lam: complex = 1.0,
                  N_max: int = 200, tol: float = 1e-16):
    """Sum the SPPS series of ``sys`` from seed ``(f, g)`` at ``lam`` until a term's
    sup-norm drops below ``tol * ||sum||``.

    Returns ``(u, v, terms, last_term_norm)``.
    """
    mesh = sys.mesh
    sum_f = np.zeros(mesh.M, dtype=complex)
    sum_g = np.zeros(mesh.M, dtype=complex)
    cf = np.zeros(mesh.M, dtype=complex)
    cg = np.zeros(mesh.M, dtype=complex)
    norms = []
    ef_min, eg_min = f.exponent, None
    p = 1.0 + 0j
    n = 0
    gen = _terms(sys, f, g)
    for n, (eX, X, eY, Y) in enumerate(gen):
        if n == 1:
            eg_min = min(g.exponent, eY)
            sum_g = sum_g * mesh.pow(g.exponent - eg_min)
            cg = cg * mesh.pow(g.exponent - eg_min)
        e_g = eg_min if eg_min is not None else g.exponent
        if eX < ef_min or eY < e_g:
            raise ArithmeticError("series term has a lower power of x than the seed")
        tx = p * X * mesh.pow(eX - ef_min)
        ty = p * Y * mesh.pow(eY - e_g)
        _neumaier(sum_f, cf, tx)
        _neumaier(sum_g, cg, ty)
        nrm = abs(p) * max(_sup(mesh, eX, X), _sup(mesh, eY, Y))
        norms.append(nrm)
        total = max(_sup(mesh, ef_min, sum_f + cf), _sup(mesh, e_g, sum_g + cg))
        if n > 0 and nrm <= tol * total:
            break
        if n >= N_max:
            ratio = norms[-1] / norms[-2] if norms[-2] else float("inf")
            if norms[-1] > 1e-10 * total:
                raise NonConvergenceError(f"series not converged after {N_max} terms", ratio)
            break
        p *= lam
        if p == 0:
            break
    gen.close()
    e_g = eg_min if eg_min is not None else g.exponent
    return GridFn(mesh, sum_f + cf, ef_min), GridFn(mesh, sum_g + cg, e_g), n + 1, norms[-1]


def particular_solution(sys: DiracSystem, N_p: int = 200, tol: float = 1e-16) -> SeedSolution:
    """Regular solution of the homogeneous system (``lam = 0``).

    The ``q`` and ``p2`` terms are moved to the right-hand side; the seed
    ``(x^kappa, g0)`` is corrected by the series of the rewritten system at
    ``lam = 1``.  Summation stops when a term's sup-norm is below
    ``tol * ||sum||`` or after ``N_p`` terms.
    """
    sys.check_c3()
    mesh = sys.mesh
    f0, g0 = seed_solution_free(sys)
    zero = GridFn.constant(mesh, 0.0)
    mq = -sys.q
    k = sys.kappa
    mu0 = -sys.at0("p1") / (2 * k + 1)
    if mq.is_zero() and sys.p2.is_zero():
        return SeedSolution(f0, g0, k, mu0, 1, 0.0)
    aux = DiracSystem(k, sys.p1, zero, zero, zero, mq, mq, -sys.p2)
    f, g, terms, tail = solve_regular(aux, f0, g0, 1.0, N_p, tol)
    return SeedSolution(f, g, k, mu0, terms, tail)


def _neumaier(s: np.ndarray, c: np.ndarray, t: np.ndarray) -> None:
    """In-place compensated addition ``s + c += t`` (Neumaier)."""
    new = s + t
    big = np.abs(s) >= np.abs(t)
    c += np.where(big, (s - new) + t, (t - new) + s)
    s[...] = new


def formal_powers(sys: DiracSystem, seed: SeedSolution, N: int) -> FormalPowers:
    """Formal powers up to order ``N`` (one cumulative integral per Z and per X step)."""
    mesh = sys.mesh
    xs = np.empty((N + 1, mesh.M), dtype=complex)
    ys = np.empty((N + 1, mesh.M), dtype=complex)
    xe, ye = [], []
    gen = _terms(sys, seed.f, seed.g)
    for n in range(N + 1):
        eX, X, eY, Y = next(gen)
        xs[n], ys[n] = X, Y
        xe.append(eX)
        ye.append(eY)
    gen.close()
    a = mesh.a
    x_end = np.array([a ** float(e) for e in xe]) * xs[:, -1]
    y_end = np.array([a ** float(e) for e in ye]) * ys[:, -1]
    return FormalPowers(sys, seed, N, xe, ye, xs, ys, x_end, y_end)


@numba.njit(cache=True)
def _series_kernel(rows, x, steps, lam):
    # compensated sum over n of lam^n x^(d_n) rows[n] with d_0 = 0, d_n - d_{n-1} = steps[n]
    N1, M = rows.shape
    s = np.zeros(M, dtype=np.complex128)
    c = np.zeros(M, dtype=np.complex128)
    t = np.ones(M, dtype=np.complex128)
    for n in range(N1):
        st = steps[n]
        for j in range(M):
            if n > 0:
                if st == 1.0:
                    t[j] = t[j] * lam * x[j]
                elif st == 0.0:
                    t[j] = t[j] * lam
                else:
                    t[j] = t[j] * lam * x[j] ** st
            term = t[j] * rows[n, j]
            sj = s[j]
            new = sj + term
            # Neumaier correction, separately on real and imaginary parts
            if abs(sj.real) >= abs(term.real):
                cr = (sj.real - new.real) + term.real
            else:
                cr = (term.real - new.real) + sj.real
            if abs(sj.imag) >= abs(term.imag):
                ci = (sj.imag - new.imag) + term.imag
            else:
                ci = (term.imag - new.imag) + sj.imag
            c[j] += complex(cr, ci)
            s[j] = new
    return s + c


def _series(mesh: Mesh, exps, rows, lam: complex) -> GridFn:
    e0 = exps[0]
    if min(exps) < e0:
        raise ValueError("formal power exponents must not decrease")
    steps = np.array([0.0] + [float(b - a) for a, b in zip(exps[:-1], exps[1:])])
    return GridFn(mesh, _series_kernel(rows, mesh.x, steps, complex(lam)), e0)


def spps_solution(fp: FormalPowers, lam: complex) -> tuple[GridFn, GridFn]:
    """``u = sum lam^n X[n]``, ``v = sum lam^n Y[n]`` in ascending ``n``."""
    mesh = fp.system.mesh
    ex = fp.x_exp
    ey = fp.y_exp
    u = _series(mesh, ex, fp.xs, lam)
    v = _series(mesh, ey, fp.ys, lam)
    return u, v


def spps_endpoint(fp: FormalPowers, lam: complex) -> tuple[complex, complex]:
    """``(u(a), v(a))`` of the truncated SPPS sum."""
    pw = lam ** np.arange(fp.N + 1)
    return complex(np.sum(pw * fp.x_end)), complex(np.sum(pw * fp.y_end))


def bound_constants(sys: DiracSystem, seed: SeedSolution) -> dict:
    """Constants of the formal-power growth estimate ``|Xhat[n]| <= c1 M^n x^(n+kappa)``."""
    mesh, k = sys.mesh, sys.kappa
    x = mesh.x[1:]
    f = seed.f.values()[1:]
    g = seed.g.values()[1:]
    c1t = max(np.max(np.abs(f) / x ** float(k)), np.max(np.abs(g) / x ** float(k + 1)))
    p2 = np.abs(sys.p2.values()[1:])
    c2t = np.max(np.maximum(1.0, np.sqrt(p2)) * x ** float(k) / np.abs(f))
    c2t = max(c2t, np.max(x ** float(k) / np.abs(f)))
    c3 = max(float(np.max(np.abs(getattr(sys, n).values()[1:]))) for n in ("r11", "r12", "r21", "r22"))
    if any(getattr(sys, n).exponent < 0 and not getattr(sys, n).is_zero() for n in ("r11", "r12", "r21", "r22")):
        c3 = float("inf")
    a = mesh.a
    at = max(1.0, a)
    c1, c2 = max(c1t, 1.0), max(c2t, 1.0)
    MZ = c1 * c3 * (1 + at) ** 2
    MX = c1 * c2 * c3 * ((1 + at) + c1 * c2 * (1 + at) ** 2 * a)
    Mb = c2 * MZ + c1 * c2 * at * MX
    out = dict(c1=c1, c2=c2, c3=c3, a_tilde=at, M_Z=MZ, M_X=MX, M=Mb)
    if sys.q_growth is not None:
        cq, alpha = sys.q_growth
        cp = float(np.max(np.abs(sys.p2.values())))
        MZq = c1 * (2 * cq + cp * at ** (1 - alpha))
        MXq = c1 * c2 * (cq + cp * at ** (1 - alpha))
        out.update(c_q=cq, alpha=alpha, c_p=cp, M_Zq=MZq, M_Xq=MXq, M_q=c2 * MZq + c1 * c2 * MXq)
    return out


def tail_bound(sys: DiracSystem, seed: SeedSolution, lam: complex, N: int) -> float:
    """Majorant ``sum_{n>N} |lam|^n/n! c1 M^n a^(n+kappa)`` of the truncated SPPS tail."""
    if lam == 0:
        return 0.0
    c = bound_constants(sys, seed)
    a = sys.a
    z = abs(lam) * c["M"] * a
    if not math.isfinite(z):
        return float("inf")
    # sum_{n>N} z^n/n! = e^z P(N+1, z)
    p = gammainc(N + 1, z)
    if p == 0.0:
        # deep underflow: leading term dominates
        logt = (N + 1) * math.log(z) - gammaln(N + 2)
        return c["c1"] * a ** float(sys.kappa) * math.exp(logt)
    logv = z + math.log(p)
    if logv > 700:
        return float("inf")
    return c["c1"] * a ** float(sys.kappa) * math.exp(logv)


def _d1(y: np.ndarray, h: float) -> np.ndarray:
    d = np.full_like(y, np.nan)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    return d


def _residual_at(sys: DiracSystem, lam: complex, U, V, base: int, stride: int, layer: int) -> float:
    # U, V sampled on every ``base``-th node; differences over ``stride`` of those
    mesh = sys.mesh
    step = base * stride
    h = mesh.h * step
    x = mesh.x[::step]
    U, V = U[::stride], V[::stride]
    sl = slice(layer, len(x) - layer)
    vals = {n: getattr(sys, n).values()[::step][sl] for n in COEFF_NAMES}
    k = float(sys.kappa)
    xs = x[sl]
    du, dv = _d1(U, h)[sl], _d1(V, h)[sl]
    Us, Vs = U[sl], V[sl]
    e1 = dv + vals["p1"] * Us + (k / xs + vals["q"]) * Vs - lam * (vals["r11"] * Us + vals["r12"] * Vs)
    e2 = -du + (k / xs + vals["q"]) * Us + vals["p2"] * Vs - lam * (vals["r21"] * Us + vals["r22"] * Vs)
    return float(max(np.max(np.abs(e1)), np.max(np.abs(e2))))


def _residual_values(sys, lam, U, V, base, layer, strides, min_nodes) -> float:
    # scale of the unshifted problem, so the value does not depend on the shift
    nrm = (1 + abs(sys.shift + lam)) * (np.max(np.abs(U)) + np.max(np.abs(V)))
    best = np.inf
    for st in strides:
        if st % base:
            continue
        if (sys.mesh.M - 1) // st + 1 < max(min_nodes, 2 * layer + 1):
            break
        best = min(best, _residual_at(sys, lam, U, V, base, st // base, layer))
    return float(best / nrm)


RESIDUAL_STRIDES = (1, 2, 4, 8, 16, 32)


def residual(sys: DiracSystem, lam: complex, u: GridFn, v: GridFn, layer: int = 5,
             strides=RESIDUAL_STRIDES, min_nodes: int = 64) -> float:
    """Normalized sup-norm residual of both equations by 4th-order finite differences.

    The difference step is taken as every ``s``-th node for each ``s`` in
    ``strides`` (while at least ``min_nodes`` nodes remain) and the smallest
    value is returned: a small step amplifies rounding noise of ``u, v`` and a
    large one adds truncation error, so the minimum is the sharpest estimate.
    """
    return _residual_values(sys, lam, u.values(), v.values(), 1, layer, strides, min_nodes)


class SubsampledSeries:
    """SPPS sums and residuals on every ``base``-th node of the mesh.

    Candidate screening only needs the residual at the coarser difference
    steps, so evaluating the series on a subset of nodes gives the same value
    for those steps at a fraction of the cost.
    """

    def __init__(self, fp: FormalPowers, base: int = 4, min_nodes: int = 64):
        mesh = fp.system.mesh
        if (mesh.M - 1) // (8 * base) + 1 < min_nodes:
            base = 1
        self.fp, self.base, self.min_nodes = fp, base, min_nodes
        x = mesh.x[::base]
        self.mesh = Mesh(mesh.a, len(x), x) if base > 1 else mesh
        self.xs = np.ascontiguousarray(fp.xs[:, ::base])
        self.ys = np.ascontiguousarray(fp.ys[:, ::base])

    def solution(self, lam: complex) -> tuple[GridFn, GridFn]:
        """``(u, v)`` on the coarse mesh (every ``base``-th node)."""
        fp = self.fp
        out = []
        for exps, rows in ((fp.x_exp, self.xs), (fp.y_exp, self.ys)):
            steps = np.array([0.0] + [float(b - a) for a, b in zip(exps[:-1], exps[1:])])
            out.append(GridFn(self.mesh, _series_kernel(rows, self.mesh.x, steps, complex(lam)), exps[0]))
        return out[0], out[1]

    def values(self, lam: complex) -> tuple[np.ndarray, np.ndarray]:
        u, v = self.solution(lam)
        return u.values(), v.values()

    def residual(self, lam: complex, layer: int = 5, strides=RESIDUAL_STRIDES) -> float:
        U, V = self.values(lam)
        return _residual_values(self.fp.system, lam, U, V, self.base, layer, strides, self.min_nodes)


@dataclass(frozen=True)
class NonVanishing:
    ok: bool
    zero_near: Optional[int] = None

    def __bool__(self):
        return self.ok


def check_nonvanishing(f: GridFn, eps_zero: float = 1e-12, eps_dip: float = 1e-6) -> NonVanishing:
    """Check that the smooth part of ``f`` stays away from zero on ``(0, a]``.

    Flags a node where ``|f~|`` is below ``eps_zero * ||f~||``, or a near-zero
    dip: a local minimum of ``|f~|`` below ``eps_dip * ||f~||``, either at a
    node or inside a segment whose linear interpolant turns closest to zero
    between its end nodes (a sign change of a real function).  The reported
    node is the one closest to the estimated crossing.
    """
    s = f.samples
    scale = float(np.max(np.abs(s)))
    if scale == 0:
        return NonVanishing(False, 1)
    tiny = np.flatnonzero(np.abs(s[1:]) <= eps_zero * scale)
    first_tiny = int(tiny[0]) + 1 if tiny.size else None
    a, b = s[1:-1], s[2:]
    d = b - a
    dd = np.abs(d) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(dd > 0, -np.real(np.conj(a) * d) / dd, 0.0)
    inner = (t > 0) & (t < 1)
    dist = np.abs(a + np.clip(t, 0.0, 1.0) * d)
    seg = np.flatnonzero(inner & (dist <= eps_dip * scale))
    m = np.abs(s)
    loc = np.flatnonzero((m[1:-1] <= m[:-2]) & (m[1:-1] <= m[2:]) & (m[1:-1] <= eps_dip * scale)) + 1
    first_dip = None
    if seg.size:
        j = int(seg[0])
        first_dip = j + 1 + (1 if t[j] > 0.5 else 0)
    if loc.size and loc[0] >= 1 and (first_dip is None or loc[0] < first_dip):
        first_dip = int(loc[0])
    cands = [i for i in (first_tiny, first_dip) if i is not None]
    if not cands:
        return NonVanishing(True)
    return NonVanishing(False, min(cands))
