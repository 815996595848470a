"""Phase matching, fiber-collection design and coincidence analysis for type-II SPDC sources."""
from .crystal_optics import (CrystalSpec, Polarization, SellmeierSet, bbo, index, index_e_theta,
                             load_crystal, refract_external, walkoff_angle, walkoff_displacement)
from .errors import DomainError, FitError, NoPhaseMatchingError
from .phasematch import (EmissionQuery, EmissionSolution, PumpConfig, conjugate_wavelength,
                         dtheta_dlambda, intersection_geometry, momentum_mismatch, solve_emission,
                         sweep_emission)

__version__ = "0.1.0"
