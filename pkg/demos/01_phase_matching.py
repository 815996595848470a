"""
Emission cones of a type-II BBO crystal
=======================================

Solve the phase-matching condition for a 351.1 nm pump and look at the two
degenerate cones, their crossing and the angular dispersion.
"""
import math

import numpy as np

from pairsource import EmissionQuery, Polarization, PumpConfig, bbo, solve_emission
from pairsource.phasematch import dtheta_dlambda, emission_cone, intersection_geometry

crystal = bbo()
pump = PumpConfig.reference()
print(f"crystal {crystal.name}, {crystal.length} mm, cut at {math.degrees(crystal.cut_angle):.1f} deg")

# The azimuth is measured from +x, which points away from the optic axis.
# At degeneracy the ordinary and extraordinary cones are mirror images.
phis, th_o = emission_cone(crystal, pump, 0.7022, Polarization.ORDINARY, n_phi=13)
_, th_e = emission_cone(crystal, pump, 0.7022, Polarization.EXTRAORDINARY, n_phi=13)
print("\n  phi [deg]   o-cone [deg]   e-cone [deg]")
for p, a, b in zip(phis, th_o, th_e):
    print(f"  {math.degrees(p):9.1f}   {math.degrees(a):12.4f}   {math.degrees(b):12.4f}")

# The cones cross on the two lines used to collect polarization-entangled pairs.
ci = intersection_geometry(crystal, pump)
print(f"\ncrossing at azimuth +-{math.degrees(ci.azimuth):.2f} deg, "
      f"external angle {math.degrees(ci.polar_angle_ext):.3f} deg, "
      f"tangents meet at {math.degrees(ci.crossing_angle):.2f} deg")

# A single solution carries the full wave vectors.
sol = solve_emission(crystal, pump, EmissionQuery(0.7022, ci.azimuth, Polarization.EXTRAORDINARY))
print("k_p - k_i - k_s =", np.array2string(sol.k_pump - sol.k_idler - sol.k_signal, precision=3))

# Angular dispersion sets how much bandwidth a given aperture accepts.
for pol, phi in [(Polarization.ORDINARY, 0.0), (Polarization.EXTRAORDINARY, 0.0),
                 (Polarization.EXTRAORDINARY, ci.azimuth)]:
    d = dtheta_dlambda(crystal, pump, 0.7022, phi, pol)
    print(f"dtheta/dlambda, {pol.value}-idler at {math.degrees(phi):5.1f} deg: {d:+.4f} deg/nm")
