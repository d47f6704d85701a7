import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abwave.analysis import (Pattern, metrics, phase_difference, rescale_equivalence,
                             shift_fraction, visibility_sweep)
from abwave.errors import GridMismatch, TooFewFringes
from abwave.propagation import centered_grid
from abwave.scenarios import builtin, run
from abwave.units import SI

XS = centered_grid(0.0, 1500.0, 2048)


def _cos2(period, shift=0.0, xs=XS):
    return Pattern(xs, np.cos(math.pi * (xs - shift) / period) ** 2)


def _fraunhofer(xs=XS, d=50.0, w=5.0, lam_l=5000.0, scale=1.0, shift=0.0):
    x = (xs - shift) * scale
    return Pattern(xs, np.cos(math.pi * d * x / lam_l) ** 2
                   * np.sinc(w * x / lam_l) ** 2)


# ---------------------------------------------------------------------------
# metrics


@pytest.mark.parametrize("period", [40.0, 100.0, 173.3])
def test_cos2_period(period):
    m = metrics(_cos2(period))
    assert abs(m.fringe_spacing - period) < 1e-3 * period


def test_symmetric_pattern_centre():
    m = metrics(_fraunhofer())
    assert abs(m.central_max_x) < 1e-3 * m.fringe_spacing


def test_equal_beams_full_visibility():
    assert metrics(_cos2(100.0)).visibility == pytest.approx(1.0, abs=1e-6)


def test_partial_visibility():
    p = Pattern(XS, 1.0 + 0.5 * np.cos(2 * math.pi * XS / 100.0))
    assert metrics(p).visibility == pytest.approx(0.5, abs=1e-4)


def test_fraunhofer_formula_spacing():
    """Peak-based spacing of the analytic double-slit formula at default sampling."""
    m = metrics(_fraunhofer())
    assert m.fringe_spacing == pytest.approx(100.0, rel=1e-3)


def test_too_few_fringes():
    with pytest.raises(TooFewFringes):
        metrics(Pattern(XS, np.exp(-(XS / 300.0) ** 2)))


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-6, 1e6))
def test_metrics_scale_invariant(c):
    # exact in real arithmetic; the parabola vertex moves by rounding only
    p = _fraunhofer()
    a, b = metrics(p.scaled(c)), metrics(p)
    assert a.n_fringes == b.n_fringes
    for f in ("central_max_x", "fringe_spacing", "visibility"):
        assert getattr(a, f) == pytest.approx(getattr(b, f), rel=1e-12, abs=1e-12)


def test_pattern_rejects_negative_intensity():
    with pytest.raises(ValueError):
        Pattern([0.0, 1.0], [1.0, -1.0])


# ---------------------------------------------------------------------------
# shift_fraction


def test_shift_of_identical_patterns_is_zero():
    p = _cos2(100.0)
    assert shift_fraction(p, p) == pytest.approx(0.0, abs=1e-9)


def test_half_fringe_shift():
    assert abs(shift_fraction(_cos2(100.0, 50.0), _cos2(100.0))) == pytest.approx(
        0.5, abs=1e-3)


@pytest.mark.parametrize("frac", [-0.45, -0.2, 0.1, 0.25, 0.4])
def test_constructed_shift(frac):
    got = shift_fraction(_cos2(100.0, 100.0 * frac), _cos2(100.0))
    assert got == pytest.approx(frac, abs=1e-3)


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.39, 0.39))
def test_shift_antisymmetric(frac):
    a = _fraunhofer(shift=100.0 * frac)
    b = _fraunhofer()
    assert abs(shift_fraction(a, b) + shift_fraction(b, a)) < 1e-6


def test_shift_grid_mismatch():
    with pytest.raises(GridMismatch):
        shift_fraction(_cos2(100.0), _cos2(100.0, xs=centered_grid(0, 1400, 2048)))


# ---------------------------------------------------------------------------
# rescale_equivalence


def test_rescale_identity_is_exact():
    p = _fraunhofer()
    out = rescale_equivalence(p, p)
    assert out["scale"] == 1.0 and out["residual"] == 0.0


def test_rescale_recovers_constructed_stretch():
    a = _fraunhofer()
    b = _fraunhofer(scale=1.0725)  # b(x) = a(1.0725 x)
    out = rescale_equivalence(a, b)
    assert out["scale"] == pytest.approx(1.0725, abs=1e-3)
    assert out["residual"] < 1e-3


def test_rescale_grid_mismatch():
    with pytest.raises(GridMismatch):
        rescale_equivalence(_cos2(100.0), _cos2(100.0, xs=centered_grid(0, 1400, 2048)))


# ---------------------------------------------------------------------------
# sweeps


def test_sweep_single_value_matches_metrics():
    s = builtin("fig1_1")
    rows = visibility_sweep(s, "flux", [s.field.flux])
    assert len(rows) == 1
    assert rows[0]["metrics"] == metrics(run(s).pattern)


def test_sweep_zero_values_identical():
    rows = visibility_sweep(builtin("fig1_1"), "flux", [0.0, 0.0, 0.0], threads=3)
    assert rows[0]["metrics"] == rows[1]["metrics"] == rows[2]["metrics"]


def test_fig1_6_sweep_phase_difference_linear_in_B():
    s = builtin("fig1_6")
    values = [0.0, 0.005, 0.01]
    rows = visibility_sweep(s, "B", values, threads=3)
    assert [r["value"] for r in rows] == values
    diffs = [r["phase_difference"] for r in rows]
    assert diffs[0] < diffs[1] < diffs[2]
    length = s.screen.z - s.apertures[0].z
    base = diffs[0]
    for B, d in zip(values, diffs):
        want = SI.e * B * s.field.thickness / SI.hbar * length
        assert d - base == pytest.approx(want, rel=1e-9, abs=1e-9)


def test_sweep_rejects_unknown_parameter():
    with pytest.raises(ValueError):
        visibility_sweep(builtin("free"), "radius", [1.0])


def test_phase_difference_helper():
    assert phase_difference([{"phase": 1.0}, {"phase": 4.5}]) == 3.5
