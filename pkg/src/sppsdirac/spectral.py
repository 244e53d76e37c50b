"""Spectral shifts, truncated characteristic polynomials, polynomial roots and
the adaptive multi-shift eigenvalue sweep."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numba
import numpy as np

from .dirac_core import (
    DiracSystem,
    FormalPowers,
    SeedSolution,
    SubsampledSeries,
    check_nonvanishing,
    formal_powers,
    particular_solution,
    residual,
    spps_solution,
)
from .numerics import GridFn, cumulative_integral

__all__ = [
    "BoundaryCondition",
    "CharPoly",
    "ShiftStrategy",
    "EigenPair",
    "EigenResult",
    "shift_system",
    "reseed",
    "characteristic_poly",
    "trust_radius",
    "poly_roots",
    "filter_spurious",
    "candidate_score",
    "tau_star",
    "eigen_window",
    "adaptive_shift_sweep",
]

log = logging.getLogger(__name__)

TRUST_TOL = 1e-8
MERGE_TOL = 1e-6


@dataclass(frozen=True)
class BoundaryCondition:
    """``(alpha1 + lam*gamma1) u(a) + (alpha2 + lam*gamma2) v(a) = 0``.

    ``gamma1 = gamma2 = 0`` gives the plain condition ``(alpha1, alpha2) Y(a) = 0``.
    """

    alpha1: complex
    alpha2: complex
    gamma1: complex = 0j
    gamma2: complex = 0j

    def __post_init__(self):
        if abs(self.alpha1) + abs(self.alpha2) == 0:
            raise ValueError("boundary condition needs |alpha1| + |alpha2| != 0")

    @property
    def lambda_dependent(self) -> bool:
        return self.gamma1 != 0 or self.gamma2 != 0

    def __call__(self, lam: complex, u_a: complex, v_a: complex) -> complex:
        return (self.alpha1 + lam * self.gamma1) * u_a + (self.alpha2 + lam * self.gamma2) * v_a


@dataclass(frozen=True)
class CharPoly:
    """``Delta_N(L) = sum coeffs[n] L^n`` in the shifted parameter ``L = lam - shift``."""

    coeffs: np.ndarray
    shift: complex
    trust_radius: float

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, L):
        return np.polynomial.polynomial.polyval(L, self.coeffs)


@dataclass(frozen=True)
class ShiftStrategy:
    sigma: float
    tau0: float
    dilations: tuple = (0.9, 1.0, 1.1)
    steps: int = 100

    def __post_init__(self):
        A = tuple(float(b) for b in self.dilations)
        object.__setattr__(self, "dilations", A)
        if not 0 < abs(self.tau0) < abs(self.sigma):
            raise ValueError("need 0 < |tau0| < |sigma|")
        if list(A) != sorted(A) or A[0] <= 0 or len(set(A)) != len(A):
            raise ValueError("dilations must be positive and strictly ascending")
        if 1.0 not in A:
            raise ValueError("dilations must contain 1")


@dataclass(frozen=True)
class EigenPair:
    lam: complex
    residual: float
    stable: bool
    shift: complex


@dataclass
class EigenResult:
    pairs: list = field(default_factory=list)
    incomplete: bool = False
    shifts: list = field(default_factory=list)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([p.lam for p in self.pairs])

    def merge(self, other: Sequence[EigenPair], tol: float = MERGE_TOL) -> None:
        """Add pairs, keeping the lower-residual copy of near-duplicates."""
        for p in other:
            for i, q in enumerate(self.pairs):
                if abs(p.lam - q.lam) <= tol * (1 + abs(p.lam)):
                    if p.residual < q.residual:
                        self.pairs[i] = p
                    break
            else:
                self.pairs.append(p)
        self.pairs.sort(key=lambda p: (abs(p.lam), p.lam.real, p.lam.imag))


def _gauge_log(sys: DiracSystem, lam0: complex) -> Optional[GridFn]:
    t = sys.r21 - sys.r12
    if t.is_zero() or lam0 == 0:
        return None
    T = cumulative_integral(t.with_exponent(0) if t.exponent > 0 else t)
    return GridFn(T.mesh, T.values() * (-lam0 / 2), 0)


def shift_system(sys: DiracSystem, lam0: complex) -> DiracSystem:
    """System in ``L = lam - lam0``: ``P -> P - lam0 R`` (plus the gauge correction
    ``-(lam0/2) B tr(BR)`` when R is not symmetric).

    The result always refers to the unshifted base system: shifting an already
    shifted system composes the shifts.
    """
    lam0 = complex(lam0)
    if lam0 == 0:
        return sys
    base_shift = sys.shift
    if sys.p1.exponent == 0 and sys.r11.exponent >= 0:
        p10 = sys.at0("p1") - lam0 * sys.at0("r11")
        if p10 == 0:
            raise ValueError(
                f"p1(0) - lam0 r11(0) = 0 for lam0 = {lam0}; take a nearby shift instead"
            )
    p1 = sys.p1 - sys.r11 * lam0
    p2 = sys.p2 - sys.r22 * lam0
    sym = sys.r12 + sys.r21
    q = sys.q if sym.is_zero() else sys.q - sym * (lam0 / 2)
    gl = _gauge_log(sys, lam0)
    if sys.gauge_log is not None:
        gl = sys.gauge_log if gl is None else sys.gauge_log + gl
    return DiracSystem(sys.kappa, p1, p2, q, sys.r11, sys.r12, sys.r21, sys.r22,
                       shift=base_shift + lam0, gauge_log=gl)


def reseed(fp: FormalPowers, target: DiracSystem) -> SeedSolution:
    """Seed for ``target`` from the SPPS solution of ``fp`` at the target's shift."""
    src = fp.system
    L = target.shift - src.shift
    u, v = spps_solution(fp, L)
    if src.gauge_log is not None or target.gauge_log is not None:
        z = np.zeros(src.mesh.M, dtype=complex)
        d = (src.gauge_log.values() if src.gauge_log is not None else z) - (
            target.gauge_log.values() if target.gauge_log is not None else z)
        w = np.exp(d)
        u = GridFn(u.mesh, u.samples * w, u.exponent)
        v = GridFn(v.mesh, v.samples * w, v.exponent)
    k = target.kappa
    mu0 = -target.at0("p1") / (2 * k + 1)
    return SeedSolution(u, v, k, mu0, fp.N + 1, 0.0)


def trust_radius(coeffs: np.ndarray, tol: float = TRUST_TOL, tail: int = 3) -> float:
    """Largest ``r`` with ``sum_{n>N-tail} |c_n| r^n <= tol * max_n |c_n| r^n``.

    The last ``tail`` terms stand in for the truncated remainder.
    """
    c = np.abs(np.asarray(coeffs))
    N = len(c) - 1
    with np.errstate(divide="ignore"):
        lc = np.log(c)
    if not np.isfinite(lc).any() or N < tail:
        return 0.0
    finite = np.isfinite(lc)
    n = np.arange(N + 1)
    logr = np.linspace(-20, 20, 8001)
    terms = np.where(finite[None, :], lc[None, :] + n[None, :] * logr[:, None], -np.inf)
    top = terms.max(axis=1)
    tl = terms[:, N - tail + 1:]
    tmax = tl.max(axis=1)
    tail_log = tmax + np.log(np.sum(np.exp(tl - tmax[:, None]), axis=1))
    ok = tail_log - top <= np.log(tol)
    if not ok.any():
        return 0.0
    # largest r such that every smaller grid radius is also ok
    bad = np.flatnonzero(~ok)
    first_ok = np.flatnonzero(ok)[0]
    later_bad = bad[bad > first_ok]
    idx = (later_bad[0] - 1) if later_bad.size else len(logr) - 1
    return float(np.exp(logr[idx]))


def characteristic_poly(fp: FormalPowers, bc: BoundaryCondition) -> CharPoly:
    """Coefficients of ``Delta_N`` in the shifted parameter of ``fp``."""
    lam0 = fp.system.shift
    a1 = bc.alpha1 + lam0 * bc.gamma1
    a2 = bc.alpha2 + lam0 * bc.gamma2
    c = a1 * fp.x_end + a2 * fp.y_end
    if bc.lambda_dependent:
        c = np.append(c, 0j)
        c[1:] += bc.gamma1 * fp.x_end + bc.gamma2 * fp.y_end
    c = np.asarray(c, dtype=complex)
    return CharPoly(c, lam0, trust_radius(c[: fp.N + 1]))


# -- polynomial roots --------------------------------------------------------

def _newton_polygon_guesses(c: np.ndarray) -> np.ndarray:
    """Initial approximations on circles from the upper convex hull of log|c_n|."""
    N = len(c) - 1
    with np.errstate(divide="ignore"):
        lc = np.log(np.abs(c))
    pts = [(n, lc[n]) for n in range(N + 1) if np.isfinite(lc[n])]
    hull: list = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    z = []
    rng = np.random.default_rng(12345)
    for (x1, y1), (x2, y2) in zip(hull[:-1], hull[1:]):
        k = x2 - x1
        r = np.exp((y1 - y2) / k)
        theta = 2 * np.pi * np.arange(k) / k + 2 * np.pi * x1 / N + 0.4 + rng.uniform(0, 0.1)
        z.extend(r * np.exp(1j * theta))
    return np.array(z, dtype=complex)


@numba.njit(cache=True)
def _ratio(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Newton correction ``p(z)/p'(z)`` evaluated stably for |z| <= 1 and |z| > 1."""
    N = len(c) - 1
    out = np.empty_like(z)
    for i in range(z.size):
        zi = z[i]
        if abs(zi) <= 1:
            p = c[N]
            dp = 0j
            for k in range(N - 1, -1, -1):
                dp = dp * zi + p
                p = p * zi + c[k]
            out[i] = p / dp if dp != 0 else np.nan
        else:
            # reversed polynomial in w = 1/z
            w = 1 / zi
            q = c[0]
            dq = 0j
            for k in range(1, N + 1):
                dq = dq * w + q
                q = q * w + c[k]
            den = N - w * dq / q if q != 0 else np.nan
            out[i] = zi / den if den != 0 else np.nan
    return out


def _aberth(c: np.ndarray, maxiter: int = 1000):
    N = len(c) - 1
    z = _newton_polygon_guesses(c)
    done = np.zeros(N, dtype=bool)
    eps = np.finfo(float).eps
    for _ in range(maxiter):
        act = ~done
        if not act.any():
            break
        r = _ratio(c, z[act])
        diff = z[act][:, None] - z[None, :]
        idx = np.flatnonzero(act)
        diff[np.arange(idx.size), idx] = np.inf
        s = np.sum(1.0 / diff, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = r / (1 - r * s)
        corr = np.where(np.isfinite(corr), corr, 0.0)
        z[act] -= corr
        done[idx[np.abs(corr) <= 4 * eps * np.abs(z[act])]] = True
    return z, done.all()


def _polish(c: np.ndarray, z: np.ndarray, steps: int = 3) -> np.ndarray:
    pz = np.abs(np.polynomial.polynomial.polyval(z, c))
    for _ in range(steps):
        r = _ratio(c, z)
        cand = z - np.where(np.isfinite(r), r, 0)
        pc = np.abs(np.polynomial.polynomial.polyval(cand, c))
        better = pc < pz
        z = np.where(better, cand, z)
        pz = np.where(better, pc, pz)
    return z


def _cluster(z: np.ndarray, radius: float) -> np.ndarray:
    """Replace clusters of nearly coincident roots by their centroid."""
    z = z.copy()
    seen = np.zeros(z.size, dtype=bool)
    for i in range(z.size):
        if seen[i]:
            continue
        grp = np.flatnonzero(np.abs(z - z[i]) <= radius * (1 + abs(z[i])))
        if grp.size > 1:
            z[grp] = z[grp].mean()
        seen[grp] = True
    return z


def poly_roots(p, cluster_radius: float = 1e-5) -> np.ndarray:
    """All complex roots of a polynomial (ascending coefficients or :class:`CharPoly`).

    Aberth-Ehrlich iteration from Newton-polygon starting points, falling back
    to companion-matrix eigenvalues if the iteration stalls, then Newton polishing.
    Roots are in the shifted variable and sorted by modulus.
    """
    c = np.asarray(p.coeffs if isinstance(p, CharPoly) else p, dtype=complex)
    nz = np.flatnonzero(np.abs(c) > 1e-300)
    if nz.size == 0:
        raise ValueError("zero polynomial")
    c = c[: nz[-1] + 1]
    nzero = int(nz[0])
    c = c[nzero:]
    if len(c) < 2:
        if nzero == 0:
            raise ValueError("polynomial of degree < 1")
        return np.zeros(nzero, dtype=complex)
    # scale the variable so the coefficients are balanced
    N = len(c) - 1
    s = (abs(c[0]) / abs(c[-1])) ** (1.0 / N)
    cs = c * s ** np.arange(N + 1)
    cs = cs / np.max(np.abs(cs))
    z, ok = _aberth(cs)
    if not ok or not np.all(np.isfinite(z)):
        log.debug("Aberth iteration stalled; using companion matrix")
        z = np.roots(cs[::-1]).astype(complex)
    z = _polish(cs, z)
    z = _cluster(z, cluster_radius)
    z = np.concatenate([np.zeros(nzero, dtype=complex), z * s])
    return z[np.lexsort((z.imag, z.real, np.abs(z)))]


# -- filtering and sweep ------------------------------------------------------

def filter_spurious(roots_N, roots_Nm, p: CharPoly, tol_match: float = 1e-6,
                    residual_fn: Optional[Callable[[complex], float]] = None,
                    max_residual: float = 1e-5, known: Sequence[EigenPair] = ()) -> list:
    """Keep roots (shifted variable) that lie in the trust radius, persist in the
    lower-order polynomial and whose SPPS solution has a small residual.

    A root matching a ``known`` pair computed from a centre at least as close
    reuses that pair's residual instead of evaluating a new solution.
    """
    roots_Nm = np.asarray(roots_Nm)
    out = []
    for L in roots_N:
        if abs(L) > p.trust_radius:
            continue
        if roots_Nm.size == 0 or np.min(np.abs(roots_Nm - L)) > tol_match * (1 + abs(L + p.shift)):
            continue
        lam = L + p.shift
        prev = [q for q in known if abs(q.lam - lam) <= MERGE_TOL * (1 + abs(lam))
                and abs(q.lam - q.shift) <= abs(L)]
        if prev:
            res = prev[0].residual
        else:
            res = residual_fn(L) if residual_fn is not None else 0.0
        if res > max_residual:
            continue
        out.append(EigenPair(complex(L + p.shift), float(res), True, p.shift))
    out.sort(key=lambda e: abs(e.lam - p.shift))
    return out


def candidate_score(u: GridFn, v: GridFn, kappa) -> float:
    """``max(||u||, ||v||, ||x^kappa/u||)``; infinite when ``u`` vanishes."""
    if not check_nonvanishing(u):
        return float("inf")
    d = u.exponent - kappa
    recip = np.abs(1.0 / u.samples)
    if d != 0:
        with np.errstate(divide="ignore", invalid="ignore"):
            recip = recip / u.mesh.pow(d)
        recip = recip[1:]
    return float(max(np.max(np.abs(u.values())), np.max(np.abs(v.values())), np.max(recip)))


def tau_star(sigma: float, tau: float) -> float:
    """Whichever of ``sigma`` and ``tau`` has the smaller absolute value."""
    return sigma if abs(sigma) < abs(tau) else tau


def eigen_window(fp: FormalPowers, bc: BoundaryCondition, tol_match: float = 1e-6,
                 max_residual: float = 1e-5, drop: int = 2,
                 known: Sequence[EigenPair] = (),
                 sub: Optional[SubsampledSeries] = None) -> tuple[list, CharPoly]:
    """Filtered eigenvalues from one shift centre."""
    p = characteristic_poly(fp, bc)
    pm = characteristic_poly(fp.truncated(fp.N - drop), bc)
    rN = poly_roots(p)
    rNm = poly_roots(pm)

    def res(L):
        nonlocal sub
        if sub is None:
            sub = SubsampledSeries(fp)
        return sub.residual(L)

    return filter_spurious(rN, rNm, p, tol_match, res, max_residual, known), p


def initial_window(sys: DiracSystem, N: int, fallback_shift: complex = 1j,
                   N_p: int = 200) -> FormalPowers:
    """Formal powers at ``lam0 = 0``; shifts to ``fallback_shift`` when the seed vanishes."""
    try:
        sys.check_c3()
        seed = particular_solution(sys, N_p)
        ok = check_nonvanishing(seed.f)
    except (ValueError, ZeroDivisionError):
        ok = False
    if not ok:
        log.info("seed vanishes inside (0, a]; retrying with shift %s", fallback_shift)
        sys = shift_system(sys, fallback_shift)
        seed = particular_solution(sys, N_p)
        chk = check_nonvanishing(seed.f)
        if not chk:
            raise ZeroDivisionError(f"seed still vanishes near node {chk.zero_near}")
    return formal_powers(sys, seed, N)


def adaptive_shift_sweep(sys: DiracSystem, bc: BoundaryCondition, strategy: ShiftStrategy,
                         want: int, N: int = 50, tol_match: float = 1e-6,
                         max_residual: float = 1e-5,
                         count: Optional[Callable[[EigenResult], int]] = None,
                         fp0: Optional[FormalPowers] = None) -> EigenResult:
    """Collect eigenvalues with the adaptive complex-shift strategy.

    Step ``n`` tries the candidate shifts ``n*sigma + 1j*beta*tau_{n-1}`` for every
    dilation ``beta``, keeps the best-scored one, and recentres the series at
    ``n*sigma + 1j*tau_star(sigma, tau_n)``.
    """
    count = count or len
    fp = fp0 if fp0 is not None else initial_window(sys, N, 1j * abs(strategy.tau0))
    base = sys
    result = EigenResult()
    sub = SubsampledSeries(fp)
    pairs, _ = eigen_window(fp, bc, tol_match, max_residual, sub=sub)
    result.merge(pairs)
    result.shifts.append(fp.system.shift)
    tau = strategy.tau0
    kappa = sys.kappa
    for n in range(1, strategy.steps + 1):
        if count(result) >= want:
            break
        centre = fp.system.shift
        scores = []
        for beta in strategy.dilations:
            # scored on every few nodes: only sup norms and zeros of u matter
            cand = n * strategy.sigma + 1j * beta * tau
            u, v = sub.solution(cand - centre)
            scores.append(candidate_score(u, v, kappa))
        j = int(np.argmin(scores))
        if not np.isfinite(scores[j]):
            raise ZeroDivisionError(f"all candidate shifts at step {n} give a vanishing solution")
        tau = strategy.dilations[j] * tau
        lam_n = n * strategy.sigma + 1j * tau_star(strategy.sigma, tau)
        target = shift_system(base, lam_n)
        seed = reseed(fp, target)
        fp = formal_powers(target, seed, N)
        sub = SubsampledSeries(fp)
        pairs, _ = eigen_window(fp, bc, tol_match, max_residual, known=result.pairs, sub=sub)
        log.info("shift %d at %s: %d eigenvalues", n, lam_n, len(pairs))
        result.merge(pairs)
        result.shifts.append(lam_n)
    result.incomplete = count(result) < want
    return result
