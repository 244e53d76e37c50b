# -u'' + ((nu^2 - 1/4)/x^2 + x^2) u = lam u on (0, pi], u(pi) = 0, with nu = 2.
# The equation is reduced to a Dirac system through its regular solution at lam = 0,
# then solved once without a shift and once with the adaptive complex-shift sweep.
import time
from fractions import Fraction

import numpy as np

from sppsdirac import BesselProblem, ShiftStrategy, bessel_eigenvalues, make_mesh
from sppsdirac.bessel import prepare

mesh = make_mesh(np.pi, 100001)
prob = BesselProblem.build(mesh, Fraction(3, 2), lambda x: x ** 2)

# the reduction: q_D = v0/u0 from the regular solution, weight r = 1
pr = prepare(prob)
print("kappa of the reduced system:", pr.system.kappa)
print("q_D near 0 and at pi:", pr.system.q.values()[1], pr.system.q.values()[-1])

# one window around the origin: accuracy decays with the index
t = time.perf_counter()
plain = bessel_eigenvalues(prob, N=100, want=10)
print(f"\nno shift ({time.perf_counter() - t:.1f} s)")
for n, e in enumerate(plain, 1):
    print(f"  {n:2d}  sqrt(lam) = {e.omega.real:.14f}   residual {e.residual:.1e}")

# shifts n*sigma + i*tau_n move the expansion point along with the spectrum
t = time.perf_counter()
swept = bessel_eigenvalues(prob, N=50, want=30, strategy=ShiftStrategy(-2, 1.0, (0.9, 1.0, 1.1)))
print(f"\nadaptive sweep, sigma = -2 ({time.perf_counter() - t:.1f} s)")
for n, e in enumerate(swept, 1):
    if n <= 3 or n % 5 == 0:
        print(f"  {n:2d}  sqrt(lam) = {e.omega.real:.12f}   shift {e.shift:.3f}")

# for large n the spacing of sqrt(lam) tends to pi/a = 1
w = np.array([e.omega.real for e in swept])
print("\nspacing of the last five:", np.round(np.diff(w[-6:]), 6))
