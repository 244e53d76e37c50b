"""Bound states of a hydrogen-like atom whose nucleus is a uniformly charged ball.

Inside the ball the radial Dirac equation is solved by SPPS around an energy
shift; outside it the Coulomb solution decaying at infinity is written with
Tricomi confluent hypergeometric functions. Energies are zeros of the 2x2
matching determinant at the ball radius.

Atomic units: ``m_e = 1``, ``M = c``, ``Ebar = E / c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .dirac_core import DiracSystem, formal_powers, particular_solution, spps_endpoint
from .numerics import GridFn, make_mesh, as_exponent
from .spectral import shift_system, trust_radius

__all__ = [
    "SPEED_OF_LIGHT",
    "BOHR_ANGSTROM",
    "OXYGEN_RADIUS",
    "HydrogenicModel",
    "EnergyPoint",
    "EnergyLevels",
    "tricomi_u",
    "exterior_solution",
    "interior_system",
    "interior_formal_powers",
    "matching_determinant",
    "energy_levels",
    "calibrate_radius",
]

SPEED_OF_LIGHT = 137.036
# three-digit bohr radius in angstrom; with it the empirical oxygen radius of
# 0.60 angstrom reproduces the reference oxygen levels to ~1e-12
BOHR_ANGSTROM = 0.529
OXYGEN_RADIUS = 0.60 / BOHR_ANGSTROM


@dataclass(frozen=True)
class HydrogenicModel:
    Z: int
    kappa: Fraction
    R_atom: float = OXYGEN_RADIUS
    c: float = SPEED_OF_LIGHT
    alpha_fs: Optional[float] = None

    def __post_init__(self):
        if int(self.Z) != self.Z or self.Z <= 0:
            raise ValueError(f"Z must be a positive integer, got {self.Z}")
        object.__setattr__(self, "kappa", as_exponent(self.kappa))
        if self.alpha_fs is None:
            object.__setattr__(self, "alpha_fs", 1.0 / self.c)
        if not self.R_atom > 0:
            raise ValueError(f"R_atom must be positive, got {self.R_atom}")
        if self.xi >= abs(float(self.kappa)):
            raise ValueError(f"need Z alpha < |kappa| (xi = {self.xi}, kappa = {self.kappa})")
        if self.kappa < Fraction(1, 2):
            raise ValueError("the interior solver needs kappa >= 1/2")

    @property
    def M(self) -> float:
        return self.c

    @property
    def xi(self) -> float:
        return self.Z * self.alpha_fs

    @property
    def eta(self) -> float:
        k = float(self.kappa)
        return math.sqrt(k * k - self.xi ** 2)

    def V(self, x):
        """Potential of the uniformly charged ball, continuous at ``R_atom``."""
        x = np.asarray(x, dtype=float)
        R = self.R_atom
        inner = -(self.xi / (2 * R)) * (3 - x * x / (R * R))
        with np.errstate(divide="ignore"):
            outer = -self.xi / x
        return np.where(x <= R, inner, outer)

    def energy(self, Ebar: float) -> float:
        """``E - m_e c^2`` for a reduced energy ``Ebar``."""
        return self.c * (Ebar - self.M)


@dataclass(frozen=True)
class EnergyPoint:
    """Reduced energy with the derived exterior quantities.

    ``binding = E - m_e c^2`` is kept alongside ``Ebar`` so that
    ``M - Ebar`` is formed without cancellation.
    """

    model: HydrogenicModel
    binding: float
    Ebar: float = field(init=False)
    k: float = field(init=False)

    def __post_init__(self):
        m = self.model
        d = -self.binding / m.c  # M - Ebar
        s = m.M + (m.M - d)  # M + Ebar
        if not (d > 0 and s > 0):
            raise ValueError(f"not a bound-state energy: E - mc^2 = {self.binding}")
        object.__setattr__(self, "Ebar", m.M - d)
        object.__setattr__(self, "k", math.sqrt(d * s))

    @classmethod
    def from_Ebar(cls, model: HydrogenicModel, Ebar: float) -> "EnergyPoint":
        return cls(model, model.energy(Ebar))

    @property
    def M_minus(self) -> float:
        return -self.binding / self.model.c

    @property
    def M_plus(self) -> float:
        return 2 * self.model.M - self.M_minus

    def rho(self, x):
        return 2 * np.asarray(x, dtype=float) * self.k

    @property
    def tau(self) -> float:
        return self.model.xi * self.Ebar / self.k

    @property
    def tau_p(self) -> float:
        return self.model.xi * self.model.M / self.k


def _laplace_u(a: float, b: float, z: float) -> float:
    # U = 1/Gamma(a) int_0^inf e^{-zt} t^{a-1} (1+t)^{b-a-1} dt,  a > 0
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=200)
    I1, e1 = quad(lambda t: math.exp(-z * t) * (1 + t) ** (b - a - 1), 0.0, 1.0,
                  weight="alg", wvar=(a - 1, 0), **opts)
    # tail written relative to t = 1 to keep the exponential scaled
    I2, e2 = quad(lambda t: math.exp(-z * (t - 1)) * t ** (a - 1) * (1 + t) ** (b - a - 1),
                  1.0, np.inf, **opts)
    ez = math.exp(-z)
    val = I1 + ez * I2
    err = e1 + ez * e2
    if not np.isfinite(val) or err > 1e-10 * abs(val):
        raise ArithmeticError(
            f"Laplace integral for U({a}, {b}, {z}) did not converge (estimate {val}, error {err})"
        )
    return val / math.gamma(a)


def tricomi_u(a: float, b: float, z: float) -> float:
    """Confluent hypergeometric function of the second kind ``U(a, b, z)``, ``z > 0``.

    Uses the Laplace integral for ``a >= 1``; for ``a < 1`` the contiguous
    relation ``U(a-1) = -(b - 2a - z) U(a) - a(a - b + 1) U(a+1)`` is run
    downward from ``U(a0), U(a0+1)`` with ``a0`` in ``[1, 2)``. Small positive
    ``a`` would otherwise meet a nearly non-integrable ``t^(a-1)`` weight.
    """
    a, b, z = float(a), float(b), float(z)
    if not z > 0:
        raise ValueError(f"need z > 0, got {z}")
    if a == 0:
        return 1.0
    if a >= 1:
        return _laplace_u(a, b, z)
    n = math.ceil(1 - a)
    a0 = a + n
    u_next, u = _laplace_u(a0 + 1, b, z), _laplace_u(a0, b, z)
    for k in range(n):
        A = a0 - k
        u_next, u = u, -(b - 2 * A - z) * u - A * (A - b + 1) * u_next
    return u


def exterior_solution(model: HydrogenicModel, E: EnergyPoint, x) -> tuple:
    """``(F, G)`` at ``x >= R_atom`` decaying at infinity, normalized by ``c_+ = 1``."""
    if not isinstance(E, EnergyPoint):
        E = EnergyPoint.from_Ebar(model, E)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < model.R_atom * (1 - 1e-14)):
        raise ValueError("exterior solution requested inside the atomic radius")
    eta, tau, tau_p, k = model.eta, E.tau, E.tau_p, float(model.kappa)
    c_minus = (eta * eta - tau * tau) / (k + tau_p)
    F = np.empty(xs.shape)
    G = np.empty(xs.shape)
    for i, rho in enumerate(E.rho(xs)):
        Rp = tricomi_u(eta - tau, 1 + 2 * eta, rho)
        Rm = c_minus * tricomi_u(1 + eta - tau, 1 + 2 * eta, rho)
        w = rho ** eta * math.exp(-rho / 2)
        G[i] = math.sqrt(E.M_minus) * w * (Rp + Rm)
        F[i] = math.sqrt(E.M_plus) * w * (Rp - Rm)
    if np.ndim(x) == 0:
        return float(F[0]), float(G[0])
    return F, G


def interior_system(model: HydrogenicModel, nodes: int = 2001) -> DiracSystem:
    """Interior equations on ``(0, R_atom]`` with ``u = F``, ``v = G``, ``lambda = Ebar``."""
    mesh = make_mesh(model.R_atom, nodes)
    V = GridFn.from_callable(mesh, model.V)
    M = model.M
    p1 = V + GridFn.constant(mesh, M)
    if p1.samples[0] == 0:
        raise ValueError("p1(0) = 0; pre-shift the energy before building the interior system")
    p2 = V - GridFn.constant(mesh, M)
    return DiracSystem.build(mesh, model.kappa, p1=p1, p2=p2, q=0.0, r11=1.0, r22=1.0)


def interior_formal_powers(model: HydrogenicModel, Ebar0: float, N: int = 40,
                           nodes: int = 2001, system: Optional[DiracSystem] = None):
    """Formal powers of the interior system shifted by ``Ebar0``."""
    base = system if system is not None else interior_system(model, nodes)
    sys = shift_system(base, Ebar0)
    return formal_powers(sys, particular_solution(sys), N)


def _interior_radius(fp) -> float:
    return min(trust_radius(fp.x_end), trust_radius(fp.y_end))


def matching_determinant(model: HydrogenicModel, E, fp) -> float:
    """``Ftilde(R) G(R) - F(R) Gtilde(R)`` with the interior pair from SPPS."""
    if not isinstance(E, EnergyPoint):
        E = EnergyPoint.from_Ebar(model, E)
    # Lambda = Ebar - Ebar0 formed from the binding energy to avoid cancellation
    L = (model.M - fp.system.shift.real) - E.M_minus
    Ft, Gt = spps_endpoint(fp, L)
    F, G = exterior_solution(model, E, model.R_atom)
    d = Ft * G - F * Gt
    return d


@dataclass
class EnergyLevels:
    binding: np.ndarray
    Ebar: np.ndarray
    shifts: list
    incomplete: bool

    def __len__(self):
        return len(self.binding)


def energy_levels(model: HydrogenicModel, Ebar0: float = 137.0, window=None, count: int = 10,
                  scan: int = 2000, N: int = 40, nodes: int = 2001, xtol: float = 1e-12,
                  imag_tol: float = 1e-8) -> EnergyLevels:
    """Lowest ``count`` bound-state energies ``E - m_e c^2`` inside ``window``.

    ``window`` is a pair of values of ``E - m_e c^2`` (default: from just above
    the point-nucleus ground state of this ``kappa`` up to zero). The matching
    determinant is scanned on ``scan`` uniform points, sign changes are refined
    by Brent's method to ``xtol`` (in the same units) and roots outside the
    SPPS trust radius are re-polished around a recentred shift.
    """
    if window is None:
        # point Coulomb levels lie below the finite-nucleus ones
        k = float(model.kappa)
        lo = -(model.Z ** 2) / (2 * k * k) * 1.05
        window = (lo, -1e-6 * model.Z ** 2)
    lo, hi = window
    if not (lo < hi < 0):
        raise ValueError(f"window must satisfy lo < hi < 0, got {window}")

    base = interior_system(model, nodes)
    fp = interior_formal_powers(model, Ebar0, N, system=base)
    radius = _interior_radius(fp)

    def det(e, fp=fp):
        d = matching_determinant(model, EnergyPoint(model, e), fp)
        if abs(d.imag) > imag_tol * max(abs(d.real), 1e-300):
            raise ArithmeticError(f"matching determinant not real at E - mc^2 = {e}: {d}")
        return d.real

    grid = np.linspace(lo, hi, scan)
    vals = np.array([det(e) for e in grid])
    levels, ebars, shifts = [], [], []
    for i in range(scan - 1):
        if len(levels) >= count:
            break
        if vals[i] == 0 or np.sign(vals[i]) != np.sign(vals[i + 1]):
            e = brentq(det, grid[i], grid[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps)
            use = Ebar0
            L = EnergyPoint(model, e).Ebar - Ebar0
            if abs(L) > radius:
                # recentre the expansion on the located energy and polish
                use = EnergyPoint(model, e).Ebar
                fp2 = interior_formal_powers(model, use, N, system=base)
                a, b = grid[i], grid[i + 1]
                if np.sign(det(a, fp2)) != np.sign(det(b, fp2)):
                    e = brentq(lambda t: det(t, fp2), a, b, xtol=xtol,
                               rtol=4 * np.finfo(float).eps)
            levels.append(e)
            ebars.append(EnergyPoint(model, e).Ebar)
            shifts.append(use)
    return EnergyLevels(np.array(levels), np.array(ebars), shifts, len(levels) < count)


def calibrate_radius(Z: int, kappa, target: float, level: int = 0, bracket=(0.5, 1.5),
                     tol: float = 1e-13, **kwargs) -> float:
    """Atomic radius for which level ``level`` equals ``target`` (``E - m_e c^2``)."""
    kw = dict(count=level + 1)
    kw.update(kwargs)

    def f(R):
        lev = energy_levels(HydrogenicModel(Z, kappa, R), **kw)
        if len(lev) <= level:
            raise ArithmeticError(f"level {level} not found for R_atom = {R}")
        return lev.binding[level] - target

    return brentq(f, *bracket, xtol=tol)
