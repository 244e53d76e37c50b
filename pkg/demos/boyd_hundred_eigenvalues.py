# Boyd's equation -y'' - y/x = lam y on (0, 1], y(1) = 0.
# The Coulomb-like 1/x term is singular at the origin; it enters only the
# regular solution used for the reduction, the reduced Dirac system is bounded.
# About three minutes on one core.
import time

import numpy as np

from sppsdirac import BesselProblem, ShiftStrategy, bessel_eigenvalues, make_mesh
from sppsdirac.bessel import prepare

mesh = make_mesh(1.0, 100001)
prob = BesselProblem.build(mesh, 0, -1.0, q_exponent=-1)
pr = prepare(prob)
print("q_D exponent:", pr.system.q.exponent, " q_D(0) =", pr.system.q.values()[0].real)

t = time.perf_counter()
out = bessel_eigenvalues(prob, N=100, want=100, strategy=ShiftStrategy(-6, 3.0, (0.9, 1.0, 1.1)))
print(f"{len(out)} eigenvalues in {time.perf_counter() - t:.0f} s")

w = np.array([e.omega.real for e in out])
res = np.array([e.residual for e in out])
shifts = sorted({e.shift for e in out}, key=lambda z: -z.real)
print("distinct shift centres:", len(shifts), " last:", shifts[-1])

# Coulomb phase at x = 1: k + log(2k)/(2k) + gamma/(2k) = n pi for k = sqrt(lam_n),
# gamma the Euler constant
n = np.arange(1, len(w) + 1)
print("\n  n   sqrt(lam)            sqrt(lam) - n pi   residual")
for k in (1, 2, 5, 10, 20, 50, 100):
    if k <= len(w):
        print(f"{k:4d}   {w[k - 1]:.12f}   {w[k - 1] - k * np.pi:+.8f}        {res[k - 1]:.1e}")
d = (w - n * np.pi) * w + np.log(2 * w) / 2
print("\n(k - n pi) k + log(2k)/2 for n = 96..100:", np.round(d[-5:], 5), " -gamma/2 =", round(-np.euler_gamma / 2, 5))
