import math
from dataclasses import replace

import numpy as np
import pytest

from abwave.analysis import metrics
from abwave.errors import ChannelMismatch, DegenerateGeometry, StationMismatch
from abwave.fields import FluxTube, ToroidBore, Vacuum, superpose
from abwave.kinematics import SourceRef
from abwave.propagation import (AlternativeMinimal, Aperture, LocalWavefront,
                                TopologicalAB, Wavefront, _tree_sum, apply_aperture,
                                centered_grid, combine_channels, emit, huygens_step,
                                path_phase)
from abwave.scenarios import ScreenSpec, builtin, run

MODELS = [LocalWavefront("magnitude"), LocalWavefront("projected"), TopologicalAB(),
          AlternativeMinimal((0, 1))]
MODEL_IDS = ["local-magnitude", "local-projected", "topological", "alternative"]


def _src(field=Vacuum(), r0=(0.0, -100.0, 0.0), k0=(0.0, 2 * math.pi)):
    return SourceRef.create(1.0, 2 * math.pi, r0, k0, math.sqrt(2), field)


def _plane(z=0.0, half=40.0, n=161, src=None):
    src = src or _src()
    xs = centered_grid(0.0, half, n)
    return Wavefront(z, xs, np.ones(n, complex), src)


# ---------------------------------------------------------------------------
# path phases


@pytest.mark.parametrize("model", MODELS, ids=MODEL_IDS)
def test_vacuum_phase_is_free(model):
    src = _src()
    seg = ((1.0, 2.0), (-3.0, 40.0))
    assert path_phase(model, Vacuum(), src, seg) == pytest.approx(
        2 * math.pi * math.hypot(4.0, 38.0), rel=1e-15)


def test_toroid_axial_phase_local_and_topological():
    B, t, L = 0.3, 0.5, 50.0
    bore = ToroidBore((0.0, 100.0), (-5.0, 5.0), B, t, 1.0)
    src = _src(bore, r0=(0.0, -10.0, 0.0))
    seg = ((0.0, 20.0), (0.0, 20.0 + L))
    k0 = 2 * math.pi
    local = path_phase(LocalWavefront("magnitude"), bore, src, seg)
    proj = path_phase(LocalWavefront("projected"), bore, src, seg)
    topo = path_phase(TopologicalAB(), bore, src, seg)
    assert local == pytest.approx((k0 + B * t) * L, rel=1e-14)
    assert abs(local - topo) <= 1e-12 * abs(topo)
    assert abs(local - proj) <= 1e-12 * abs(proj)


def test_projected_differs_from_topological_by_source_term_only():
    field = superpose(FluxTube((3.0, 10.0), 1.0, 2.0),
                      ToroidBore((0.0, 50.0), (-20.0, 20.0), 0.2, 0.5))
    src = _src(field)
    ax, az = src.A0
    assert ax != 0.0  # the tube's tail reaches the source
    rng = np.random.default_rng(3)
    for _ in range(50):
        a, b = rng.uniform(-30, 60, (2, 2))
        p = path_phase(LocalWavefront("projected"), field, src, (a, b))
        t = path_phase(TopologicalAB(), field, src, (a, b))
        want = -(ax * (b[0] - a[0]) + az * (b[1] - a[1]))
        assert abs((p - t) - want) <= 1e-12 * max(1.0, abs(t))


def test_alternative_phase_is_free_inside_a_channel():
    field = FluxTube((0.0, 5.0), 1.0, 3.0)
    src = _src(field)
    seg = ((-4.0, 0.0), (4.0, 10.0))
    assert path_phase(AlternativeMinimal((0,)), field, src, seg) == pytest.approx(
        2 * math.pi * math.hypot(8.0, 10.0), rel=1e-15)


def test_magnitude_reading_sees_transverse_potential():
    # A perpendicular to k0 lengthens |k|: second order, positive
    field = superpose(FluxTube((30.0, 0.0), 1.0, 20.0))
    src = _src(field, r0=(0.0, -200.0, 0.0))
    seg = ((0.0, -10.0), (0.0, 10.0))
    mag = path_phase(LocalWavefront("magnitude"), field, src, seg)
    proj = path_phase(LocalWavefront("projected"), field, src, seg)
    assert mag != proj
    ax = 20.0 / (2 * math.pi * 30.0)  # roughly the transverse |A| near the segment
    assert 0 < mag - proj < 20.0 * ax * ax / (2 * math.pi) * 2


# ---------------------------------------------------------------------------
# apertures


def test_aperture_covering_everything_keeps_wavefront():
    w = _plane()
    out = apply_aperture(w, Aperture(0.0, ((0.0, 1000.0),)))
    assert np.array_equal(out.amps, w.amps)


def test_aperture_missing_the_grid_blocks_everything():
    out = apply_aperture(_plane(), Aperture(0.0, ((500.0, 10.0),)))
    assert not out.amps.any()


def test_two_slit_support_measure():
    w = _plane(half=100.0, n=20001)
    out = apply_aperture(w, Aperture(0.0, ((-25.0, 5.0), (25.0, 5.0))))
    support = np.count_nonzero(out.amps) * w.dx
    assert support == pytest.approx(10.0, abs=2 * w.dx)


def test_aperture_station_mismatch():
    with pytest.raises(StationMismatch):
        apply_aperture(_plane(z=0.0), Aperture(1e-9, ((0.0, 1.0),)))


def test_aperture_validation():
    with pytest.raises(ValueError):
        Aperture(0.0, ((0.0, 5.0), (3.0, 5.0)))
    with pytest.raises(ValueError):
        Aperture(0.0, ((0.0, 0.0),))


def test_wavefront_validation():
    src = _src()
    with pytest.raises(ValueError):
        Wavefront(0.0, [0.0, 1.0, 3.0], [1, 1, 1], src)
    with pytest.raises(ValueError):
        Wavefront(0.0, [0.0, 1.0], [1, np.nan], src)
    with pytest.raises(ValueError):
        Wavefront(0.0, [0.0], [1], src)


def test_centered_grid_is_mirror_symmetric():
    for n in (2047, 2048, 801):
        g = centered_grid(0.0, 1500.0, n)
        assert np.array_equal(g, -g[::-1])


# ---------------------------------------------------------------------------
# Huygens step


def test_zero_input_gives_zero_output():
    w = _plane().with_amps(np.zeros(161))
    out = huygens_step(w, 500.0, centered_grid(0, 100, 51), Vacuum(), TopologicalAB())
    assert not out.amps.any()


@pytest.mark.parametrize("model", MODELS[:3], ids=MODEL_IDS[:3])
def test_huygens_is_linear(model):
    field = superpose(FluxTube((10.0, 200.0), 2.0, 1.3))
    src = _src(field)
    rng = np.random.default_rng(5)
    w1 = _plane(src=src).with_amps(rng.normal(size=161) + 1j * rng.normal(size=161))
    w2 = _plane(src=src).with_amps(rng.normal(size=161) + 1j * rng.normal(size=161))
    a, b = 0.7 - 0.2j, -1.3 + 0.5j
    xs = centered_grid(0, 150, 101)
    lhs = huygens_step(w1.with_amps(a * w1.amps + b * w2.amps), 400.0, xs, field, model)
    rhs = (a * huygens_step(w1, 400.0, xs, field, model).amps
           + b * huygens_step(w2, 400.0, xs, field, model).amps)
    assert np.max(np.abs(lhs.amps - rhs)) <= 1e-12 * np.max(np.abs(rhs))


def test_huygens_thread_count_is_bitwise_irrelevant():
    field = superpose(FluxTube((10.0, 200.0), 2.0, 1.3))
    w = _plane(src=_src(field), n=1001)
    xs = centered_grid(0, 300, 1001)
    one = huygens_step(w, 400.0, xs, field, LocalWavefront(), threads=1).amps
    for n in (2, 4, 8):
        other = huygens_step(w, 400.0, xs, field, LocalWavefront(), threads=n).amps
        assert one.tobytes() == other.tobytes()


def test_huygens_where_mask_zeroes_other_targets():
    w = _plane()
    xs = centered_grid(0, 100, 51)
    mask = np.abs(xs) < 30
    out = huygens_step(w, 500.0, xs, Vacuum(), TopologicalAB(), where=mask)
    assert not out.amps[~mask].any() and out.amps[mask].all()


def test_huygens_near_field_is_degenerate():
    w = _plane(half=40.0, n=161)  # dx = 0.5
    with pytest.raises(DegenerateGeometry):
        huygens_step(w, 4.0, centered_grid(0, 10, 11), Vacuum(), TopologicalAB())


def test_huygens_rejects_upstream_target():
    with pytest.raises(ValueError):
        huygens_step(_plane(z=10.0), 5.0, centered_grid(0, 10, 11), Vacuum(),
                     TopologicalAB())


def test_single_slit_matches_sinc_squared_over_central_lobe():
    w_slit, L = 5.0, 5000.0
    lobe = L / w_slit
    s = replace(builtin("free"), apertures=(Aperture(0.0, ((0.0, w_slit),)),),
                screen=ScreenSpec(L, 1.1 * lobe, 2201))
    p = run(s).pattern
    xs = p.xs
    inten = p.intensity / p.intensity[np.argmin(np.abs(xs))]
    ref = np.sinc(w_slit * xs / L) ** 2
    m = np.abs(xs) < lobe
    rms = math.sqrt(np.mean((inten[m] - ref[m]) ** 2) / np.mean(ref[m] ** 2))
    assert rms < 1e-2


def test_double_slit_fringe_spacing():
    p = run(builtin("free")).pattern
    assert metrics(p).fringe_spacing == pytest.approx(100.0, rel=1e-2)


def test_emitted_vacuum_wave_is_uniform():
    src = _src()
    w = emit(src, centered_grid(0, 50, 11), -100.0, Vacuum(), TopologicalAB())
    assert np.allclose(w.amps, 1.0, atol=1e-15)


# ---------------------------------------------------------------------------
# channels


def _channels(src, n=2):
    rng = np.random.default_rng(9)
    xs = centered_grid(0, 10, 21)
    return [Wavefront(100.0, xs, rng.normal(size=21) + 1j * rng.normal(size=21), src)
            for _ in range(n)]


def test_vacuum_channels_add_plainly():
    src = _src()
    chans = _channels(src)
    model = AlternativeMinimal((0, 1), ((0, ((0, 0), (-5, 50), (0, 100))),
                                        (1, ((0, 0), (5, 50), (0, 100)))))
    out = combine_channels(chans, model, Vacuum(), src)
    assert np.array_equal(out.amps, chans[0].amps + chans[1].amps)


def test_half_quantum_between_channels_gives_pi():
    field = FluxTube((0.0, 50.0), 1.0, math.pi)  # h/(2q) in reduced units
    src = _src(field)
    ones = [Wavefront(100.0, [0.0, 1.0], [1.0, 1.0], src) for _ in range(2)]
    model = AlternativeMinimal((0, 1), ((0, ((0, 0), (-5, 50), (0, 100))),
                                        (1, ((0, 0), (5, 50), (0, 100)))))
    out = combine_channels(ones, model, field, src)
    assert np.max(np.abs(out.amps)) < 1e-12


def test_single_channel_is_identity():
    src = _src()
    chans = _channels(src, 1)
    out = combine_channels(chans, AlternativeMinimal((0,), ((0, ((0, 0), (0, 1))),)),
                           FluxTube((3, 3), 1, 2), src)
    assert np.array_equal(out.amps, chans[0].amps)


def test_channel_mismatch():
    src = _src()
    a, b = _channels(src)
    model = AlternativeMinimal((0, 1), ((0, ((0, 0), (0, 1))), (1, ((0, 0), (0, 1)))))
    with pytest.raises(ChannelMismatch):
        combine_channels([a, replace(b, z=99.0)], model, Vacuum(), src)
    with pytest.raises(ChannelMismatch):
        combine_channels([a], model, Vacuum(), src)
    with pytest.raises(ChannelMismatch):
        combine_channels([a, b], AlternativeMinimal((0, 1)), Vacuum(), src)


def test_tree_sum_is_exact_on_integers_and_order_fixed():
    a = np.arange(1, 1001, dtype=float).reshape(1, -1)
    assert _tree_sum(a)[0] == 500500.0
