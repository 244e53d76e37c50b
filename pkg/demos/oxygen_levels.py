# Hydrogen-like oxygen (Z = 8, kappa = 2) with a uniformly charged nucleus.
# Interior: SPPS around the energy shift Ebar0 = 137. Exterior: Coulomb solution
# decaying at infinity through Tricomi U. Levels are zeros of the 2x2 matching
# determinant at the nuclear radius.
import numpy as np

from sppsdirac.cli import hydrogenic_wavefunction
from sppsdirac.hydrogenic import (
    OXYGEN_RADIUS,
    HydrogenicModel,
    calibrate_radius,
    energy_levels,
    interior_formal_powers,
)

model = HydrogenicModel(8, 2)
print(f"R = {model.R_atom:.10f} bohr, xi = {model.xi:.6f}, eta = {model.eta:.10f}")

lev = energy_levels(model, Ebar0=137.0, count=10)
print("\n  n   E - m c^2")
for n, e in enumerate(lev.binding, 1):
    print(f"{n:4d}   {e:+.13f}")

# the radius is not printed with the reference table; fitting it to the first level
R = calibrate_radius(8, 2, -4.9982701713634)
print(f"\ncalibrated radius {R:.12f} vs 0.60 A / 0.529 = {OXYGEN_RADIUS:.12f}")

# large and small components of the first four levels, continuous at the radius
fp = interior_formal_powers(model, 137.0)
for n, e in enumerate(lev.binding[:4], 1):
    x, F, G = hydrogenic_wavefunction(model, e, fp)
    F, G = F.real, G.real
    nodes = np.count_nonzero(np.diff(np.sign(F[1:][np.abs(F[1:]) > 1e-12 * np.abs(F).max()])))
    print(f"level {n}: F has {nodes} nodes, max |G|/max |F| = {np.abs(G).max() / np.abs(F).max():.2e}")
