"""Perturbed Bessel spectral problems

    -u'' + (l(l+1)/x^2 + q_B(x)) u = omega^2 r(x) u,   alpha1 u(a) + alpha2 u'(a) = 0

reduced to a radial Dirac system in the parameter ``Lambda = omega + 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .dirac_core import (
    DiracSystem,
    FormalPowers,
    check_nonvanishing,
    formal_powers,
    particular_solution,
    residual,
    solve_regular,
    spps_solution,
)
from .numerics import GridFn, Mesh, as_exponent, gridfn_combine
from .spectral import (
    BoundaryCondition,
    EigenResult,
    ShiftStrategy,
    adaptive_shift_sweep,
    characteristic_poly,
    initial_window,
    poly_roots,
)

__all__ = [
    "BesselProblem",
    "BesselEigen",
    "bessel_regular_u0",
    "bessel_to_dirac",
    "bessel_bc_transform",
    "bessel_eigenvalues",
]


@dataclass(frozen=True, eq=False)
class BesselProblem:
    l: Fraction
    q_B: GridFn
    r: GridFn
    alpha1: complex = 1.0
    alpha2: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "l", as_exponent(self.l))
        if self.l < Fraction(-1, 2):
            raise ValueError(f"need l >= -1/2, got {self.l}")
        if self.r.exponent != 0 or self.r.samples[0] == 0:
            raise ValueError("weight r must satisfy r(0) != 0")
        if self.q_B.exponent <= -2:
            raise ValueError("q_B must be O(x^beta) with beta > -2")
        beta = min(self.q_B.exponent, Fraction(0))
        if 2 * (self.l + 1) + beta <= 0:
            raise ValueError("need 2(l+1) + beta > 0")

    @classmethod
    def build(cls, mesh: Mesh, l, q_B=0.0, r=1.0, alpha1=1.0, alpha2=0.0, q_exponent=0):
        def g(c, e=0):
            if isinstance(c, GridFn):
                return c
            if callable(c):
                return GridFn.from_callable(mesh, c, e)
            return GridFn.constant(mesh, c, e)
        return cls(l, g(q_B, q_exponent), g(r), alpha1, alpha2)

    @property
    def kappa(self) -> Fraction:
        return self.l + 1

    @property
    def mesh(self) -> Mesh:
        return self.r.mesh


@dataclass(frozen=True)
class BesselEigen:
    omega: complex
    lam: complex
    residual: float
    shift: complex
    Lambda: complex

    @property
    def sqrt_lambda(self) -> complex:
        return self.omega


def bessel_regular_u0(prob: BesselProblem, N_max: int = 300, tol: float = 1e-16):
    """Regular solution ``u0 ~ x^(l+1)`` of the ``omega = 0`` equation and
    ``v0 = u0' - (l+1) u0 / x``, from the Dirac system

        v0' + u0 + (kappa/x) v0 = (q_B + 1) u0,   -u0' + (kappa/x) u0 + v0 = 0.
    """
    mesh = prob.mesh
    one = GridFn.constant(mesh, 1.0)
    zero = GridFn.constant(mesh, 0.0)
    if prob.q_B.is_zero():
        return GridFn.constant(mesh, 1.0, prob.kappa), GridFn.constant(mesh, 0.0, prob.kappa + 1)
    r11 = prob.q_B + one
    sys = DiracSystem(prob.kappa, one, one, zero, r11, zero, zero, zero)
    seed = particular_solution(sys)
    u0, v0, _, _ = solve_regular(sys, seed.f, seed.g, 1.0, N_max, tol)
    return u0, v0


def bessel_to_dirac(prob: BesselProblem, u0: GridFn, v0: GridFn) -> DiracSystem:
    """Dirac system in ``Lambda = omega + 1`` with ``q_D = v0/u0``."""
    chk = check_nonvanishing(u0)
    if not chk:
        raise ZeroDivisionError(
            f"u0 vanishes near node {chk.zero_near}; shift the u0 construction"
        )
    mesh = prob.mesh
    qD = gridfn_combine("div", v0, u0)
    one = GridFn.constant(mesh, 1.0)
    zero = GridFn.constant(mesh, 0.0)
    return DiracSystem(prob.kappa, prob.r, one, qD, prob.r, zero, zero, one)


def bessel_bc_transform(alpha1: complex, alpha2: complex, u0_a: complex,
                        u0prime_a: complex) -> BoundaryCondition:
    """``(alpha1 + alpha2 u0'(a)/u0(a)) u(a) - omega alpha2 v(a) = 0`` written in
    ``Lambda = omega + 1``."""
    if u0_a == 0:
        raise ZeroDivisionError("u0(a) = 0; shift the u0 construction")
    beta1 = alpha1 + alpha2 * u0prime_a / u0_a
    # -(Lambda - 1) alpha2 v = alpha2 v - Lambda alpha2 v
    return BoundaryCondition(beta1, alpha2, 0j, -alpha2)


def _omega(L: complex, branch: int) -> complex:
    w = branch * (L - 1)
    return complex(w)


def _on_branch(w: complex) -> bool:
    return w.real > 1e-12 or (abs(w.real) <= 1e-12 and w.imag >= 0)


@dataclass
class _Prepared:
    system: DiracSystem
    bc: BoundaryCondition
    u0: GridFn
    v0: GridFn


def prepare(prob: BesselProblem) -> _Prepared:
    u0, v0 = bessel_regular_u0(prob)
    sys = bessel_to_dirac(prob, u0, v0)
    a = prob.mesh.a
    u0a = u0.at_end()
    u0pa = v0.at_end() + float(prob.kappa) / a * u0a
    bc = bessel_bc_transform(prob.alpha1, prob.alpha2, u0a, u0pa)
    return _Prepared(sys, bc, u0, v0)


def bessel_eigenvalues(prob: BesselProblem, N: int = 100, want: int = 10,
                       strategy: Optional[ShiftStrategy] = None, tol_match: float = 1e-6,
                       max_residual: float = 1e-5) -> list:
    """Eigenvalues ``lambda_B = omega^2`` of the perturbed Bessel problem.

    Without ``strategy`` the ``want`` roots of ``Delta_N`` closest to the origin
    are returned (one per ``omega``, taking the branch ``Lambda = 1 - omega``).
    With a strategy the adaptive shift sweep is run; the branch follows the
    sign of ``sigma``.
    """
    pr = prepare(prob)
    branch = -1 if strategy is None or strategy.sigma < 0 else 1
    if strategy is None:
        fp = initial_window(pr.system, N)
        p = characteristic_poly(fp, pr.bc)
        roots = poly_roots(p) + p.shift
        out = []
        for L in roots:
            w = _omega(L, branch)
            if not _on_branch(w):
                continue
            u, v = spps_solution(fp, L - p.shift)
            res = residual(fp.system, L - p.shift, u, v)
            out.append(BesselEigen(w, w * w, res, p.shift, complex(L)))
            if len(out) >= want:
                break
        return out

    def to_bessel(res: EigenResult) -> list:
        out = []
        for e in res:
            w = _omega(e.lam, branch)
            if _on_branch(w):
                out.append(BesselEigen(w, w * w, e.residual, e.shift, e.lam))
        out.sort(key=lambda b: (b.omega.real, b.omega.imag))
        return out

    res = adaptive_shift_sweep(pr.system, pr.bc, strategy, want, N, tol_match, max_residual,
                               count=lambda r: len(to_bessel(r)))
    out = to_bessel(res)
    return out[:want] if len(out) >= want else out
