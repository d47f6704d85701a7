"""Unit systems.

Two modes are supported.  ``si`` uses metres, seconds, tesla and coulombs
with the exact SI values of h, e and c.  ``reduced`` sets hbar = q = c = 1
(so h = 2*pi) and measures lengths in units of the source wavelength.
"""

from dataclasses import dataclass
import math

from scipy import constants


@dataclass(frozen=True)
class Units:
    name: str
    h: float
    hbar: float
    c: float
    e: float
    #: unit of length in metres (informational only)
    length_unit: float = 1.0

    @property
    def flux_quantum(self):
        """h/e in the mode's flux unit."""
        return self.h / self.e


SI = Units("si", h=constants.h, hbar=constants.hbar, c=constants.c,
           e=constants.e)
REDUCED = Units("reduced", h=2 * math.pi, hbar=1.0, c=1.0, e=1.0)


def get_units(mode):
    if isinstance(mode, Units):
        return mode
    if mode == "si":
        return SI
    if mode == "reduced":
        return REDUCED
    raise ValueError(f"unknown unit mode {mode!r}")
