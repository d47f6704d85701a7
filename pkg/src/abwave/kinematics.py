"""Local frequency and wave-vector of a particle moving through potentials.

A particle born at ``r0`` with frequency ``nu0`` and wave-vector ``k0`` sees
the potentials as a medium: at any other point

    nu(r, t) = nu0 + q (phi(r, t) - phi(r0, t0)) / h
    k(r, t)  = k0  + q (A(r, t)   - A(r0, t0))   / hbar
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import NonpositiveWavelength
from .fields import Point, sample
from .units import get_units


@dataclass(frozen=True)
class SourceRef:
    """Birth record of the particle, with the source potentials cached."""

    q: float
    m: float
    r0: Point
    k0: tuple
    nu0: float
    units: object = "reduced"
    A0: tuple = (0.0, 0.0)
    phi0: float = 0.0

    @classmethod
    def create(cls, q, m, r0, k0, nu0, field, units="reduced"):
        r0 = Point(*r0)
        if math.hypot(*k0) <= 0:
            raise ValueError("|k0| must be positive")
        s = sample(field, r0)
        return cls(q, m, r0, (float(k0[0]), float(k0[1])), float(nu0),
                   get_units(units), (s.Ax, s.Az), s.phi)

    @property
    def k0_mag(self):
        return math.hypot(*self.k0)

    @property
    def wavelength(self):
        return 2 * math.pi / self.k0_mag


@dataclass(frozen=True)
class LocalState:
    k: tuple
    nu: float
    at: Point


@dataclass(frozen=True)
class ApparentMass:
    m_sq: float
    #: ``"J^2"`` in SI mode, ``"h^2"`` in reduced mode
    unit: str


def local_frequency(src, field, p):
    p = Point(*p)
    u = get_units(src.units)
    s = sample(field, p)
    return src.nu0 + src.q * (s.phi - src.phi0) / u.h


def local_wavevector(src, field, p):
    p = Point(*p)
    u = get_units(src.units)
    s = sample(field, p)
    return np.array([src.k0[0] + src.q * (s.Ax - src.A0[0]) / u.hbar,
                     src.k0[1] + src.q * (s.Az - src.A0[1]) / u.hbar])


def local_state(src, field, p):
    p = Point(*p)
    k = local_wavevector(src, field, p)
    return LocalState((float(k[0]), float(k[1])), local_frequency(src, field, p), p)


def kg_invariant(src, field, p):
    """(nu h - q phi)^2 - c^2 (hbar k - q A)^2 at ``p``."""
    p = Point(*p)
    u = get_units(src.units)
    s = sample(field, p)
    nu = local_frequency(src, field, p)
    k = local_wavevector(src, field, p)
    energy = nu * u.h - src.q * s.phi
    px = k[0] * u.hbar - src.q * s.Ax
    pz = k[1] * u.hbar - src.q * s.Az
    return energy ** 2 - u.c ** 2 * (px * px + pz * pz)


def kg_residual(src, field, p, eps=1e-300):
    """Relative mismatch of the invariant between ``p`` and the source."""
    here = kg_invariant(src, field, p)
    there = kg_invariant(src, field, src.r0)
    return abs(here - there) / max(abs(there), eps)


def apparent_mass_sq(nu, lam, units="reduced"):
    """(h nu)^2 - (h / lambda)^2 c^2, as inferred without knowledge of the
    local potentials.  Negative values are returned as they are.

    In reduced mode the value is quoted in units of h^2, i.e.
    nu^2 - 1/lambda^2.
    """
    if not lam > 0:
        raise NonpositiveWavelength(f"wavelength must be positive, got {lam}")
    u = get_units(units)
    if u.name == "reduced":
        return ApparentMass(nu * nu - 1.0 / (lam * lam), "h^2")
    return ApparentMass((u.h * nu) ** 2 - (u.h / lam * u.c) ** 2, "J^2")


def predict_inverse_wavelength_shift(B, thickness, q, units="si"):
    """Change of 1/lambda inside a long toroidal solenoid bore: thickness q B / h."""
    if not thickness > 0:
        raise ValueError("thickness must be positive")
    return thickness * q * B / get_units(units).h
