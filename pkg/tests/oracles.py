"""Independent reference solvers used to produce frozen expected values.

Nothing here imports the package: the shooting method integrates the
second-order equations directly with scipy's adaptive DOP853 integrator.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq


def _series_start(k, q_smooth, q_pole, lam, x0):
    """``(w, w')`` at ``x0`` from ``w = 1 + c1 x + c2 x^2`` for ``q = q_pole/x + q_smooth``."""
    c1 = q_pole / (2 * k)
    c2 = (q_pole * c1 + q_smooth - lam) / (2 + 4 * k)
    return [1 + c1 * x0 + c2 * x0 * x0, c1 + 2 * c2 * x0]


def bessel_shoot(omega, l, qB, a, x0=1e-8, rtol=1e-13, q_pole=0.0):
    """``y(a)`` for ``-y'' + (l(l+1)/x^2 + qB(x)) y = omega^2 y``, ``y ~ x^(l+1)``.

    Integrates ``w = y / x^(l+1)`` which is smooth at the origin:
    ``w'' = -2(l+1)/x w' + (qB - omega^2) w``.  ``q_pole`` is the coefficient
    of a ``1/x`` term in ``qB`` and only affects the starting slope.
    """
    lam = omega * omega
    k = l + 1

    def rhs(x, s):
        w, dw = s
        return [dw, -2 * k / x * dw + (qB(x) - lam) * w]

    sol = solve_ivp(rhs, (x0, a), _series_start(k, qB(x0) - q_pole / x0, q_pole, lam, x0), method="DOP853", rtol=rtol, atol=1e-300)
    return sol.y[0, -1] * a ** k


def bessel_eigs(count, l, qB, a, step=0.05, start=0.2, x0=1e-8, q_pole=0.0):
    """First ``count`` values of ``omega = sqrt(lambda)`` by scan plus Brent refinement."""
    out = []
    w = start
    def shoot(t):
        return bessel_shoot(t, l, qB, a, x0, q_pole=q_pole)

    f_prev = shoot(w)
    while len(out) < count:
        w2 = w + step
        f2 = shoot(w2)
        if np.sign(f2) != np.sign(f_prev):
            out.append(brentq(shoot, w, w2, xtol=1e-15, rtol=1e-15))
        w, f_prev = w2, f2
    return np.array(out)


def dirac_regular(lam, kappa, p1, p2, q, r, a, x0=1e-6, rtol=1e-13, xs=None):
    """Regular solution of the Dirac system by DOP853 from asymptotic data at ``x0``.

    ``r`` is a callable returning ``(r11, r12, r21, r22)``.
    """
    def rhs(x, Y):
        u, v = Y
        r11, r12, r21, r22 = r(x)
        dv = -p1(x) * u - (kappa / x + q(x)) * v + lam * (r11 * u + r12 * v)
        du = (kappa / x + q(x)) * u + p2(x) * v - lam * (r21 * u + r22 * v)
        return [du, dv]

    r11_0 = r(0.0)[0]
    mu = (lam * r11_0 - p1(0.0)) / (2 * kappa + 1)
    Y0 = np.array([x0 ** kappa, mu * x0 ** (kappa + 1)], dtype=complex)
    sol = solve_ivp(rhs, (x0, a), Y0, method="DOP853", rtol=rtol, atol=1e-300,
                    t_eval=xs)
    return sol


def bessel_solution(omega, l, qB, a, xs, x0=1e-8, rtol=1e-13, q_pole=0.0):
    """Regular solution ``y ~ x^(l+1)`` of the perturbed Bessel equation at ``xs``."""
    lam = omega * omega
    k = l + 1

    def rhs(x, s):
        w, dw = s
        return [dw, -2 * k / x * dw + (qB(x) - lam) * w]

    xs = np.asarray(xs, dtype=float)
    sol = solve_ivp(rhs, (x0, a), _series_start(k, qB(x0) - q_pole / x0, q_pole, lam, x0), method="DOP853", rtol=rtol, atol=1e-300,
                    t_eval=xs, dense_output=False)
    return sol.y[0] * xs ** k, (sol.y[1] * xs ** k + k * sol.y[0] * xs ** (k - 1))


def bessel_zeros(nu, count, step=0.25):
    """First ``count`` positive zeros of ``J_nu`` by scanning and bisection in mpmath."""
    import mpmath as mp

    mp.mp.dps = 30
    out = []
    x = mp.mpf(step)
    f_prev = mp.besselj(nu, x)
    while len(out) < count:
        x2 = x + step
        f2 = mp.besselj(nu, x2)
        if f_prev * f2 < 0:
            lo, hi = x, x2
            for _ in range(120):
                mid = (lo + hi) / 2
                if mp.besselj(nu, lo) * mp.besselj(nu, mid) <= 0:
                    hi = mid
                else:
                    lo = mid
            out.append(float((lo + hi) / 2))
        x, f_prev = x2, f2
    return np.array(out)


def hydrogenic_determinant(Z, kappa, R, binding, c=137.036, x0_rel=1e-8, rtol=1e-12):
    """Matching determinant of the finite-nucleus Dirac atom at ``E - m c^2 = binding``.

    Interior: Radau on ``w = F/x^kappa``, ``z = G/x^kappa`` from ``x = x0_rel * R``.
    Exterior: Coulomb solution decaying at infinity through ``mpmath.hyperu``.
    """
    import mpmath as mp

    xi = Z / c
    M = c
    d = -binding / c  # M - Ebar
    s = 2 * M - d  # M + Ebar
    Ebar = M - d

    def V(x):
        return -(xi / (2 * R)) * (3 - x * x / (R * R))

    def rhs(x, Y):
        w, z = Y
        return [(V(x) - s) * z, -2 * kappa / x * z - (V(x) + d) * w]

    def jac(x, Y):
        return [[0.0, V(x) - s], [-(V(x) + d), -2 * kappa / x]]

    x0 = x0_rel * R
    mu = (Ebar - (V(0.0) + M)) / (2 * kappa + 1)
    sol = solve_ivp(rhs, (x0, R), [1.0, mu * x0], method="Radau", jac=jac,
                    rtol=rtol, atol=1e-14)
    Fi, Gi = sol.y[0, -1], sol.y[1, -1]

    mp.mp.dps = 30
    k = mp.sqrt(mp.mpf(d) * s)
    eta = mp.sqrt(mp.mpf(kappa) ** 2 - mp.mpf(xi) ** 2)
    tau = xi * mp.mpf(Ebar) / k
    tau_p = xi * mp.mpf(M) / k
    rho = 2 * R * k
    cm = (eta * eta - tau * tau) / (kappa + tau_p)
    Rp = mp.hyperu(eta - tau, 1 + 2 * eta, rho)
    Rm = cm * mp.hyperu(1 + eta - tau, 1 + 2 * eta, rho)
    Ge = mp.sqrt(d) * (Rp + Rm)
    Fe = mp.sqrt(s) * (Rp - Rm)
    return float(Fi * Ge - Fe * Gi)
