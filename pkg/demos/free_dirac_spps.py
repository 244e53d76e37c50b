# SPPS on the free Dirac system v' + u + v/x = lam u, -u' + u/x + v = lam v on (0, 1].
# Eliminating v gives -u'' = (lam - 1)^2 u, so the regular solution is sin((lam - 1) x)
# and the Dirichlet eigenvalues are lam = 1 +- n pi.
import numpy as np

from sppsdirac import (
    BoundaryCondition,
    DiracSystem,
    characteristic_poly,
    formal_powers,
    make_mesh,
    particular_solution,
    poly_roots,
    residual,
    spps_solution,
)
from sppsdirac.spectral import eigen_window

mesh = make_mesh(1.0, 2001)
sys_ = DiracSystem.build(mesh, 1, p1=1.0, p2=1.0)

# the seed is the regular solution at lam = 0; formal powers expand around it
seed = particular_solution(sys_)
fp = formal_powers(sys_, seed, 60)
print("exponents of X[0..4]:", [str(fp.X(n).exponent) for n in range(5)])

# u at lam = 3.5 is a power series in lam; compare with sin(2.5 x) up to a constant
lam = 3.5
u, v = spps_solution(fp, lam)
x = mesh.x
ref = np.sin((lam - 1) * x)
c = u.values()[-1] / ref[-1]
print("max |u - c sin(2.5 x)|:", np.max(np.abs(u.values() - c * ref)))
print("finite-difference residual:", residual(sys_, lam, u, v))

# the Dirichlet condition u(1) = 0 turns into a polynomial in lam
p = characteristic_poly(fp, BoundaryCondition(1.0, 0.0))
roots = poly_roots(p.coeffs)
inside = roots[np.abs(roots) < p.trust_radius]
print(f"trust radius {p.trust_radius:.2f}, roots inside:")
for r in sorted(inside, key=lambda z: z.real):
    print(f"  {r.real:+.12f}  (lam - 1)/pi = {(r.real - 1) / np.pi:+.10f}")

# roots near the edge drift; the filter keeps those stable under N -> N-2
# with a small SPPS residual
pairs, _ = eigen_window(fp, BoundaryCondition(1.0, 0.0))
print("accepted (lam - 1)/pi:", [f"{(e.lam.real - 1) / np.pi:+.6f}" for e in sorted(pairs, key=lambda e: e.lam.real)])
