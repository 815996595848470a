"""
Choosing the collection mode
============================

Match a Gaussian collection mode to the angular spread of a filtered
bandwidth, then image a single-mode fiber onto it.
"""
import math

from pairsource import PumpConfig, bbo
from pairsource.mode_design import design_collection, fiber_conjugation, mode_from_waist

crystal = bbo()
pump = PumpConfig.reference()

# A 4 nm filter with a measured 0.055 deg/nm, trimmed to 0.16 deg to leave
# room for the pump's own divergence.
design = design_collection(crystal, pump, 4.0, margin=0.16 / 0.18685, dispersion=0.055)
print(f"divergence matched to the filter  {math.degrees(design.divergence_raw):.4f} deg")
print(f"divergence chosen                 {math.degrees(design.divergence):.4f} deg")
print(f"target waist                      {design.mode.waist:.1f} um")
print(f"Rayleigh length                   {design.mode.rayleigh_length:.1f} mm")
print(f"pump walk-off over the crystal    {design.walkoff_pump:.1f} um")
if design.walkoff_warning:
    print("note:", design.walkoff_warning)

# The same design from the dispersion computed by the phase-matching solver.
computed = design_collection(crystal, pump, 4.0)
print(f"\ncomputed dispersion {computed.dispersion:.4f} deg/nm gives a {computed.mode.waist:.1f} um waist")

# Fiber imaging: geometric thin lens, then the Gaussian waist-to-waist version.
mode = mode_from_waist(82.0, 0.7022)
for gaussian in (False, True):
    fc = fiber_conjugation(mode.waist, 2.3, 11.0, gaussian=gaussian, wavelength=0.7022)
    kind = "Gaussian" if gaussian else "geometric"
    print(f"{kind:9s}: fiber-lens {fc.object_distance:.3f} mm, lens-waist {fc.image_distance:.1f} mm")
