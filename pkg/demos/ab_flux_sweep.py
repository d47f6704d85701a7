"""Fringe shift of the two-slit pattern as the enclosed flux grows.

Prints the measured shift (in fringes) next to q*flux/h folded into
(-0.5, 0.5].
"""

import math
from dataclasses import replace

from abwave.analysis import shift_fraction
from abwave.scenarios import builtin, free_reference, run
from abwave.units import REDUCED


def main():
    s = builtin("fig1_1")
    free = run(free_reference(s)).pattern
    print(" q flux/h   expected   measured")
    for ratio in (0.0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 1.0):
        field = replace(s.field, flux=ratio * REDUCED.h / REDUCED.e)
        got = shift_fraction(run(replace(s, field=field)).pattern, free)
        want = ratio - math.ceil(ratio - 0.5)
        print(f"{ratio:9.2f} {want:+10.3f} {got:+10.4f}")


if __name__ == "__main__":
    main()
