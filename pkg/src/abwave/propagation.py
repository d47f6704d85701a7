"""Wavefronts, apertures and Huygens stepping under three path-phase models.

``LocalWavefront``
    potentials act as a medium through the local wave-vector
    k(r) = k0 + q (A(r) - A(r0)) / hbar.  The ``magnitude`` variant treats
    |k(r)| / |k0| as an isotropic refractive index; ``projected`` keeps only
    the component of k along the ray.
``TopologicalAB``
    each open path picks up (q/hbar) times the integral of A.dl.
``AlternativeMinimal``
    free propagation inside each declared channel; channel phases are
    attached only when channels are combined.

All phases are computed relative to the centre-to-centre reference path of a
step, so that absolute phases of order 1e4 rad never enter the exponentials.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
import math
from typing import NamedTuple

import numpy as np

from .errors import ChannelMismatch, DegenerateGeometry, StationMismatch
from .fields import (ToroidBore, UniformScalar, Vacuum, _segment_frame,
                     split_gauge)
from .units import get_units

_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)

# targets per work block; fixed so results never depend on the thread count
_BLOCK_ELEMENTS = 1 << 16


# ---------------------------------------------------------------------------
# data types


class Slit(NamedTuple):
    center: float
    width: float


@dataclass(frozen=True)
class Aperture:
    z: float
    slits: tuple

    def __post_init__(self):
        slits = tuple(Slit(float(c), float(w)) for c, w in self.slits)
        object.__setattr__(self, "slits", slits)
        if any(s.width <= 0 for s in slits):
            raise ValueError("slit widths must be positive")
        ordered = sorted(slits)
        for a, b in zip(ordered[:-1], ordered[1:]):
            if a.center + a.width / 2 >= b.center - b.width / 2:
                raise ValueError("slits overlap")

    def mask(self, xs, slit_indices=None):
        xs = np.asarray(xs, float)
        keep = np.zeros(xs.shape, bool)
        for i, s in enumerate(self.slits):
            if slit_indices is None or i in slit_indices:
                keep |= np.abs(xs - s.center) <= s.width / 2
        return keep

    @property
    def span(self):
        lo = min(s.center - s.width / 2 for s in self.slits)
        hi = max(s.center + s.width / 2 for s in self.slits)
        return lo, hi


@dataclass(frozen=True)
class Wavefront:
    z: float
    xs: np.ndarray
    amps: np.ndarray
    src: object

    def __post_init__(self):
        xs = np.asarray(self.xs, float)
        amps = np.asarray(self.amps, complex)
        if xs.ndim != 1 or len(xs) < 2 or xs.shape != amps.shape:
            raise ValueError("xs and amps must be 1-D, equal length, >= 2")
        d = np.diff(xs)
        if np.any(d <= 0):
            raise ValueError("xs must be strictly increasing")
        if np.max(np.abs(d - d.mean())) > 1e-9 * abs(d.mean()):
            raise ValueError("xs must be uniformly spaced")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "amps", amps)

    @property
    def dx(self):
        return (self.xs[-1] - self.xs[0]) / (len(self.xs) - 1)

    @property
    def intensity(self):
        return np.abs(self.amps) ** 2

    def with_amps(self, amps):
        return Wavefront(self.z, self.xs, amps, self.src)


def centered_grid(center, half_extent, samples):
    """Uniform grid that is exactly mirror-symmetric about ``center``."""
    step = 2.0 * half_extent / (samples - 1)
    return center + (np.arange(samples) - (samples - 1) / 2) * step


@dataclass(frozen=True)
class LocalWavefront:
    local_variant: str = "magnitude"

    def __post_init__(self):
        if self.local_variant not in ("magnitude", "projected"):
            raise ValueError("local_variant must be magnitude or projected")

    @property
    def label(self):
        return f"local/{self.local_variant}"


@dataclass(frozen=True)
class TopologicalAB:
    label = "topological"


@dataclass(frozen=True)
class AlternativeMinimal:
    """``channels[i]`` is the channel id of slit i.  ``paths`` optionally maps
    channel ids to representative polylines as ``((id, ((x, z), ...)), ...)``;
    missing paths are generated by the scenario runner."""

    channels: tuple = ()
    paths: tuple = ()
    label = "alternative"

    def channel_ids(self):
        seen = []
        for c in self.channels:
            if c not in seen:
                seen.append(c)
        return seen

    def path_for(self, channel):
        for cid, poly in self.paths:
            if cid == channel:
                return poly
        return None


class Segment(NamedTuple):
    start: tuple
    end: tuple


# ---------------------------------------------------------------------------
# path phases


def _source_potentials(field, src, t):
    ax, az, _ = field.sample(src.r0[0], src.r0[1], src.r0[2] if len(src.r0) > 2 else t)
    return float(ax), float(az)


def potential_phase(model, field, src, x0, z0, x1, z1, t=0.0):
    """Path phase minus the free part |k0| * length, vectorised over segments."""
    u = get_units(src.units)
    coupling = src.q / u.hbar
    x0, z0, x1, z1 = np.broadcast_arrays(*[np.asarray(v, float)
                                           for v in (x0, z0, x1, z1)])
    if isinstance(model, AlternativeMinimal):
        return np.zeros(x0.shape)
    if isinstance(model, TopologicalAB):
        return coupling * field.line_integral(x0, z0, x1, z1, t)
    if model.local_variant == "projected":
        a0x, a0z = _source_potentials(field, src, t)
        return coupling * (field.line_integral(x0, z0, x1, z1, t)
                           - a0x * (x1 - x0) - a0z * (z1 - z0))
    return _magnitude_phase(field, src, coupling, x0, z0, x1, z1, t)


def _magnitude_phase(field, src, coupling, x0, z0, x1, z1, t):
    physical, gauges = split_gauge(field)
    out = np.zeros(x0.shape)
    # pure-gauge parts contribute the phase q S / hbar, referred to the source
    r0x, r0z = src.r0[0], src.r0[1]
    for g in gauges:
        gx, gz = g.grad(r0x, r0z, t)
        out += coupling * (g.value(x1, z1, t) - g.value(x0, z0, t)
                           - float(gx) * (x1 - x0) - float(gz) * (z1 - z0))
    if isinstance(physical, (Vacuum, UniformScalar)):
        return out
    k0 = np.array(src.k0, float)
    k0_mag = math.hypot(*k0)
    kx, kz = k0 / k0_mag
    a0x, a0z = _source_potentials(physical, src, t)
    _, _, length = _segment_frame(x0, z0, x1, z1)
    # first order: component of k - k0 along k0, in closed form
    along = physical.projected_integral(x0, z0, x1, z1, kx, kz, t)
    out += coupling * (along - (a0x * kx + a0z * kz) * length)
    axial_only = kx == 0 and all(isinstance(c, (ToroidBore, UniformScalar))
                                 for c in physical.components())
    if not axial_only:
        out += _transverse_excess(physical, k0, coupling, (a0x, a0z),
                                  x0, z0, x1, z1, t)
    return out


def _transverse_excess(field, k0, coupling, a0, x0, z0, x1, z1, t):
    """Integral of |k0 + dk| - |k0| - khat.dk along each segment.

    Second order in dk; evaluated by 8-point Gauss-Legendre on pieces split
    at the field's breakpoints.
    """
    ux, uz, length = _segment_frame(x0, z0, x1, z1)
    cuts = [np.zeros_like(length), length]
    for b in field.breakpoints(x0, z0, x1, z1):
        cuts.append(np.clip(b, 0.0, length))
    cuts = np.sort(np.stack(cuts, axis=-1), axis=-1)
    sa, sb = cuts[..., :-1], cuts[..., 1:]
    half = 0.5 * (sb - sa)
    s = (0.5 * (sa + sb))[..., None] + half[..., None] * _GL8_X
    w = half[..., None] * _GL8_W
    ax, az, _ = field.sample(x0[..., None, None] + s * ux[..., None, None],
                             z0[..., None, None] + s * uz[..., None, None], t)
    k0_mag = math.hypot(*k0)
    dkx = coupling * (ax - a0[0])
    dkz = coupling * (az - a0[1])
    kx = k0[0] + dkx
    kz = k0[1] + dkz
    kmag = np.hypot(kx, kz)
    along = (dkx * k0[0] + dkz * k0[1]) / k0_mag
    dk2 = dkx * dkx + dkz * dkz
    excess = (2 * along * k0_mag + dk2) / (kmag + k0_mag)
    g = (dk2 - along * excess) / (kmag + k0_mag)
    return (g * w).sum(axis=(-1, -2))


def path_phase(model, field, src, seg, t=0.0):
    """Accumulated phase along one straight segment, in radians."""
    (xa, za), (xb, zb) = seg[0][:2], seg[1][:2]
    free = math.hypot(src.k0[0], src.k0[1]) * math.hypot(xb - xa, zb - za)
    return free + float(potential_phase(model, field, src, xa, za, xb, zb, t))


def emission_phase(model, field, src, xs, z, t=0.0):
    """Phase profile of the emitted wavefront along the source line.

    The phase gradient follows the local wave-vector, so every sample carries
    the phase accumulated from the birth point ``r0``.  Vacuum gives a
    uniform plane wave.
    """
    xs = np.asarray(xs, float)
    r0x, r0z = src.r0[0], src.r0[1]
    free = src.k0[0] * (xs - r0x) + src.k0[1] * (z - r0z)
    if isinstance(model, AlternativeMinimal):
        return free
    emit_model = model
    if isinstance(model, LocalWavefront):
        emit_model = LocalWavefront("projected")
    return free + potential_phase(emit_model, field, src,
                                  np.full_like(xs, r0x), np.full_like(xs, r0z),
                                  xs, np.full_like(xs, z), t)


def emit(src, xs, z, field, model, t=0.0):
    phase = emission_phase(model, field, src, xs, z, t)
    return Wavefront(z, xs, np.cos(phase) + 1j * np.sin(phase), src)


# ---------------------------------------------------------------------------
# aperture and stepping


def apply_aperture(w, a, slit_indices=None):
    """Zero every sample outside the (selected) slits of ``a``."""
    if abs(w.z - a.z) > 1e-12:
        raise StationMismatch(f"wavefront at z={w.z!r}, aperture at z={a.z!r}")
    return w.with_amps(np.where(a.mask(w.xs, slit_indices), w.amps, 0))


def _tree_sum(a):
    """Pairwise sum over the last axis with a fixed bracketing."""
    while a.shape[-1] > 1:
        n = a.shape[-1]
        if n % 2:
            a = np.concatenate([a, np.zeros(a.shape[:-1] + (1,), a.dtype)], axis=-1)
            n += 1
        a = a[..., : n // 2] + a[..., n // 2:]
    return a[..., 0]


def _nodes_per_segment(field, model):
    if isinstance(model, LocalWavefront) and model.local_variant == "magnitude":
        physical, _ = split_gauge(field)
        n_breaks = len(physical.breakpoints(0.0, 0.0, 1.0, 1.0))
        return 8 * (n_breaks + 1)
    return 4


def huygens_step(w, target_z, target_xs, field, model, t=0.0, where=None,
                 threads=1):
    """Propagate ``w`` to the line ``z = target_z`` with the 2-D kernel.

    psi(b) = sum_j psi_j exp(i phase(j -> b)) / sqrt(dist(j, b)) * dx

    ``where`` restricts evaluation to a subset of targets (others are zero).
    Work is split into fixed-size blocks, each summed with a fixed pairwise
    bracketing, so the output is bit-identical for any ``threads``.
    """
    target_xs = np.asarray(target_xs, float)
    if not target_z > w.z:
        raise ValueError("target station must lie downstream of the wavefront")
    src = w.src
    k0 = math.hypot(*src.k0)
    active = np.flatnonzero(w.amps != 0)
    out = np.zeros(target_xs.shape, complex)
    if where is None:
        where = np.ones(target_xs.shape, bool)
    targets = np.flatnonzero(where)
    if len(active) == 0 or len(targets) == 0:
        return Wavefront(target_z, target_xs, out, src)

    dz = target_z - w.z
    xs_src = w.xs[active]
    xt_all = target_xs[targets]
    gap = max(0.0, xs_src.min() - xt_all.max(), xt_all.min() - xs_src.max())
    if math.hypot(gap, dz) < 10 * w.dx:
        raise DegenerateGeometry(
            f"closest source-target distance {math.hypot(gap, dz):.3g} is below "
            f"10 sample spacings ({10 * w.dx:.3g})")

    xc_src = 0.5 * (w.xs[0] + w.xs[-1])
    xc_tgt = 0.5 * (target_xs[0] + target_xs[-1])
    dxr = xc_tgt - xc_src
    ref_excess = dxr * dxr / (math.hypot(dxr, dz) + dz)
    ref_pot = float(potential_phase(model, field, src, xc_src, w.z, xc_tgt,
                                    target_z, t))
    amps = w.amps[active] * w.dx

    rows = max(1, _BLOCK_ELEMENTS // (len(active) * _nodes_per_segment(field, model)))
    blocks = [targets[i:i + rows] for i in range(0, len(targets), rows)]

    def work(idx):
        xt = target_xs[idx][:, None]
        dx = xt - xs_src[None, :]
        dist = np.sqrt(dx * dx + dz * dz)
        # dist - L_ref computed without cancellation
        excess = dx * dx / (dist + dz) - ref_excess
        pot = potential_phase(model, field, src, xs_src[None, :], w.z, xt,
                              target_z, t) - ref_pot
        phase = k0 * excess + pot
        terms = amps[None, :] * (np.cos(phase) + 1j * np.sin(phase)) / np.sqrt(dist)
        return _tree_sum(terms)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, blocks))
    else:
        results = [work(b) for b in blocks]
    for idx, vals in zip(blocks, results):
        out[idx] = vals
    return Wavefront(target_z, target_xs, out, src)


def combine_channels(channels, model, field, src, t=0.0, paths=None):
    """Sum per-channel wavefronts with their representative-path phases.

    Channel c gets exp(i q/hbar (I_c - I_0)) where I_c is the integral of
    A.dl along its representative polyline (``paths`` overrides the model's).
    """
    if not channels:
        raise ChannelMismatch("no channels to combine")
    first = channels[0]
    for ch in channels[1:]:
        if ch.z != first.z or not np.array_equal(ch.xs, first.xs) or ch.src != first.src:
            raise ChannelMismatch("channels must share station, grid and source")
    ids = model.channel_ids()
    if len(ids) != len(channels):
        raise ChannelMismatch(f"{len(channels)} wavefronts for {len(ids)} channels")
    if paths is None:
        paths = [model.path_for(c) for c in ids]
    if any(p is None for p in paths):
        raise ChannelMismatch("every channel needs a representative path")
    coupling = src.q / get_units(src.units).hbar
    integrals = []
    for poly in paths:
        pts = np.asarray(poly, float)
        integrals.append(float(np.sum(field.line_integral(
            pts[:-1, 0], pts[:-1, 1], pts[1:, 0], pts[1:, 1], t))))
    total = np.zeros_like(first.amps)
    for ch, integral in zip(channels, integrals):
        dphi = coupling * (integral - integrals[0])
        total = total + ch.amps * complex(math.cos(dphi), math.sin(dphi))
    return first.with_amps(total)
