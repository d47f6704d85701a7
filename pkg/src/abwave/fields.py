"""Analytic electromagnetic potentials in the (x, z) simulation plane.

Every model exposes three vectorised methods:

``sample(x, z, t)``
    returns ``(Ax, Az, phi)`` arrays.
``line_integral(x0, z0, x1, z1, t)``
    the closed-form value of the integral of A.dl along straight segments.
``projected_integral(x0, z0, x1, z1, ex, ez, t)``
    the integral of A.e ds along straight segments for a fixed direction e.

The closed forms are what the propagation code uses.  The module-level
:func:`line_integral_A` is an independent adaptive-Simpson route working only
from ``sample``; tests check the two against each other.

Flux tubes are perpendicular to the plane.  Their vector potential circulates
counter-clockwise in (x, z), so a counter-clockwise loop around a tube of flux
``flux`` integrates to ``+flux``.
"""

from dataclasses import dataclass, field, replace
import math
from typing import NamedTuple

import numpy as np

from .errors import OpenPathError, QuadratureNonConvergence
from .units import SI, get_units

_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


class Point(NamedTuple):
    x: float
    z: float
    t: float = 0.0


class PotentialSample(NamedTuple):
    Ax: float
    Az: float
    phi: float

    @property
    def A(self):
        return np.array([self.Ax, self.Az])


def _segment_frame(x0, z0, x1, z1):
    dx = np.asarray(x1, float) - x0
    dz = np.asarray(z1, float) - z0
    length = np.hypot(dx, dz)
    safe = np.where(length > 0, length, 1.0)
    return dx / safe, dz / safe, length


# ---------------------------------------------------------------------------
# gauge functions


@dataclass(frozen=True)
class Constant:
    c: float = 0.0

    def value(self, x, z, t=0.0):
        return np.full(np.broadcast(np.asarray(x), np.asarray(z)).shape,
                       float(self.c))

    def grad(self, x, z, t=0.0):
        zero = np.zeros(np.broadcast(np.asarray(x), np.asarray(z)).shape)
        return zero, zero.copy()

    def dt(self, x, z, t=0.0):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(z)).shape)

    def negated(self):
        return Constant(-self.c)


@dataclass(frozen=True)
class Linear:
    """S = a . (r - origin)."""

    a: tuple = (0.0, 0.0)
    origin: tuple = (0.0, 0.0)

    def value(self, x, z, t=0.0):
        return (self.a[0] * (np.asarray(x, float) - self.origin[0])
                + self.a[1] * (np.asarray(z, float) - self.origin[1]))

    def grad(self, x, z, t=0.0):
        shape = np.broadcast(np.asarray(x), np.asarray(z)).shape
        return np.full(shape, float(self.a[0])), np.full(shape, float(self.a[1]))

    def dt(self, x, z, t=0.0):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(z)).shape)

    def negated(self):
        return Linear((-self.a[0], -self.a[1]), self.origin)


@dataclass(frozen=True)
class GaussianBump:
    center: tuple = (0.0, 0.0)
    width: float = 1.0
    height: float = 1.0

    def value(self, x, z, t=0.0):
        rx = np.asarray(x, float) - self.center[0]
        rz = np.asarray(z, float) - self.center[1]
        return self.height * np.exp(-(rx * rx + rz * rz) / (2 * self.width ** 2))

    def grad(self, x, z, t=0.0):
        rx = np.asarray(x, float) - self.center[0]
        rz = np.asarray(z, float) - self.center[1]
        s = self.height * np.exp(-(rx * rx + rz * rz) / (2 * self.width ** 2))
        w2 = self.width ** 2
        return -s * rx / w2, -s * rz / w2

    def dt(self, x, z, t=0.0):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(z)).shape)

    def negated(self):
        return GaussianBump(self.center, self.width, -self.height)


@dataclass(frozen=True)
class TimeLinear:
    """S = rate * t, spatially uniform."""

    rate: float = 0.0

    def value(self, x, z, t=0.0):
        return np.full(np.broadcast(np.asarray(x), np.asarray(z)).shape,
                       self.rate * t)

    def grad(self, x, z, t=0.0):
        zero = np.zeros(np.broadcast(np.asarray(x), np.asarray(z)).shape)
        return zero, zero.copy()

    def dt(self, x, z, t=0.0):
        return np.full(np.broadcast(np.asarray(x), np.asarray(z)).shape,
                       float(self.rate))

    def negated(self):
        return TimeLinear(-self.rate)


GAUGE_TYPES = (Constant, Linear, GaussianBump, TimeLinear)


# ---------------------------------------------------------------------------
# field models


class FieldModel:
    """Base class; subclasses are frozen dataclasses."""

    def sample(self, x, z, t=0.0):
        raise NotImplementedError

    def line_integral(self, x0, z0, x1, z1, t=0.0):
        raise NotImplementedError

    def projected_integral(self, x0, z0, x1, z1, ex, ez, t=0.0):
        raise NotImplementedError

    def field_free(self, x, z):
        """True where the curl of A vanishes."""
        return np.ones(np.broadcast(np.asarray(x), np.asarray(z)).shape, bool)

    def breakpoints(self, x0, z0, x1, z1):
        """Arc-length positions where the potential changes quickly."""
        return []

    def components(self):
        return [self]


def _zeros_like(*arrays):
    return np.zeros(np.broadcast(*[np.asarray(a) for a in arrays]).shape)


@dataclass(frozen=True)
class Vacuum(FieldModel):
    def sample(self, x, z, t=0.0):
        zero = _zeros_like(x, z)
        return zero, zero.copy(), zero.copy()

    def line_integral(self, x0, z0, x1, z1, t=0.0):
        return _zeros_like(x0, z0, x1, z1)

    def projected_integral(self, x0, z0, x1, z1, ex, ez, t=0.0):
        return _zeros_like(x0, z0, x1, z1, ex, ez)

    def components(self):
        return []


@dataclass(frozen=True)
class FluxTube(FieldModel):
    """Infinitely long solenoid of radius ``radius`` carrying ``flux``.

    Inside, A_theta = flux * rho / (2 pi R^2); outside, flux / (2 pi rho).
    """

    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    flux: float = 0.0

    def sample(self, x, z, t=0.0):
        rx = np.asarray(x, float) - self.center[0]
        rz = np.asarray(z, float) - self.center[1]
        rho2 = rx * rx + rz * rz
        R2 = self.radius ** 2
        scale = np.where(rho2 < R2, 1.0 / R2,
                         1.0 / np.where(rho2 > 0, rho2, 1.0))
        k = self.flux / (2 * math.pi) * scale
        return -k * rz, k * rx, np.zeros_like(rho2)

    def _pieces(self, x0, z0, x1, z1):
        ux, uz, length = _segment_frame(x0, z0, x1, z1)
        rx = np.asarray(x0, float) - self.center[0]
        rz = np.asarray(z0, float) - self.center[1]
        # along-line coordinate a and signed offset p of the start point
        a = rx * ux + rz * uz
        p = -rx * uz + rz * ux
        # normal direction n = J u = (-uz, ux) so that r0 = a u + p n
        u1, u2 = a, a + length
        R = self.radius
        h = np.sqrt(np.maximum(R * R - p * p, 0.0))
        inside = np.abs(p) < R
        lo = np.where(inside, -h, np.inf)
        hi = np.where(inside, h, np.inf)
        # exterior before the chord, chord, exterior after the chord
        e1a, e1b = u1, np.minimum(u2, lo)
        ca, cb = np.maximum(u1, lo), np.minimum(u2, hi)
        e2a, e2b = np.maximum(u1, hi), u2
        e1b = np.maximum(e1b, e1a)
        cb = np.maximum(cb, ca)
        e2a = np.minimum(e2a, e2b)
        ca = np.where(inside, ca, 0.0)
        cb = np.where(inside, cb, 0.0)
        return ux, uz, p, ((e1a, e1b), (ca, cb), (e2a, e2b))

    def projected_integral(self, x0, z0, x1, z1, ex, ez, t=0.0):
        ux, uz, p, (e1, c, e2) = self._pieces(x0, z0, x1, z1)
        ex = np.asarray(ex, float)
        ez = np.asarray(ez, float)
        # A.e = flux/(2 pi) (r . f) / rho^2 with f = J^T e = (ez, -ex)
        fx, fz = ez, -ex
        uf = ux * fx + uz * fz
        nf = -uz * fx + ux * fz
        total = self._exterior(uf, nf, p, *e1) + self._exterior(uf, nf, p, *e2)
        ca, cb = c
        R2 = self.radius ** 2
        chord = (uf * 0.5 * (cb * cb - ca * ca) + nf * p * (cb - ca)) / R2
        return self.flux / (2 * math.pi) * (total + chord)

    @staticmethod
    def _exterior(uf, nf, p, ua, ub):
        r2a = ua * ua + p * p
        r2b = ub * ub + p * p
        with np.errstate(divide="ignore", invalid="ignore"):
            log_term = np.where(ub > ua, 0.5 * np.log(r2b / r2a), 0.0)
        ang = np.arctan2(p * (ub - ua), ua * ub + p * p)
        return uf * log_term + nf * ang

    def line_integral(self, x0, z0, x1, z1, t=0.0):
        ux, uz, _ = _segment_frame(x0, z0, x1, z1)
        return self.projected_integral(x0, z0, x1, z1, ux, uz, t)

    def field_free(self, x, z):
        rx = np.asarray(x, float) - self.center[0]
        rz = np.asarray(z, float) - self.center[1]
        return rx * rx + rz * rz > self.radius ** 2

    def breakpoints(self, x0, z0, x1, z1):
        ux, uz, length = _segment_frame(x0, z0, x1, z1)
        rx = self.center[0] - np.asarray(x0, float)
        rz = self.center[1] - np.asarray(z0, float)
        s_star = rx * ux + rz * uz
        p = np.abs(-rx * uz + rz * ux)
        spread = 2 * np.maximum(p, self.radius)
        return [s_star - spread, s_star, s_star + spread]


@dataclass(frozen=True)
class FluxTubePair(FieldModel):
    """Two tubes; :meth:`opposite` builds the usual equal-and-opposite pair."""

    tubes: tuple = ()

    @classmethod
    def opposite(cls, center_a, center_b, radius, flux):
        return cls((FluxTube(tuple(center_a), radius, flux),
                    FluxTube(tuple(center_b), radius, -flux)))

    def components(self):
        return list(self.tubes)

    def sample(self, x, z, t=0.0):
        return _sum_samples(self.tubes, x, z, t)

    def line_integral(self, x0, z0, x1, z1, t=0.0):
        return sum(tb.line_integral(x0, z0, x1, z1, t) for tb in self.tubes)

    def projected_integral(self, x0, z0, x1, z1, ex, ez, t=0.0):
        return sum(tb.projected_integral(x0, z0, x1, z1, ex, ez, t)
                   for tb in self.tubes)

    def field_free(self, x, z):
        return np.logical_and.reduce([tb.field_free(x, z) for tb in self.tubes])

    def breakpoints(self, x0, z0, x1, z1):
        return [b for tb in self.tubes for b in tb.breakpoints(x0, z0, x1, z1)]


def _window(u, lo, hi, ramp):
    """1 on [lo+ramp, hi-ramp], cosine ramps to 0 at lo and hi, 0 outside."""
    u = np.asarray(u, float)
    out = ((u >= lo) & (u <= hi)).astype(float)
    if ramp > 0:
        up = (u >= lo) & (u < lo + ramp)
        down = (u > hi - ramp) & (u <= hi)
        out = np.where(up, 0.5 - 0.5 * np.cos(math.pi * (u - lo) / ramp), out)
        out = np.where(down, 0.5 - 0.5 * np.cos(math.pi * (u - hi) / ramp), out)
    return out


def _window_antiderivative(u, lo, hi, ramp):
    u = np.asarray(u, float)
    if ramp <= 0:
        return np.clip(u, lo, hi) - lo
    r = ramp
    c = r / math.pi
    up = 0.5 * (u - lo) - 0.5 * c * np.sin(math.pi * (u - lo) / r)
    flat = u - lo - 0.5 * r
    down = (hi - lo - 1.5 * r) + 0.5 * (u - hi + r) - 0.5 * c * np.sin(
        math.pi * (u - hi) / r)
    out = np.where(u < lo, 0.0, up)
    out = np.where(u >= lo + r, flat, out)
    out = np.where(u > hi - r, down, out)
    return np.where(u > hi, hi - lo - r, out)


def _window_piece(u_mid, lo, hi, ramp):
    """Coefficients (a, b, omega, edge) with w = a + b cos(omega (u - edge))."""
    inside = (u_mid >= lo) & (u_mid <= hi)
    a = inside.astype(float)
    b = np.zeros_like(a)
    omega = np.zeros_like(a)
    edge = np.zeros_like(a)
    if ramp > 0:
        w = math.pi / ramp
        up = (u_mid >= lo) & (u_mid < lo + ramp)
        down = (u_mid > hi - ramp) & (u_mid <= hi)
        ramped = up | down
        a = np.where(ramped, 0.5, a)
        b = np.where(ramped, -0.5, b)
        omega = np.where(ramped, w, omega)
        edge = np.where(up, lo, np.where(down, hi, edge))
    return a, b, omega, edge


def _cos_integral(ds, theta_mid, rate):
    """Integral of cos(rate*(s - s_mid) + theta_mid) over an interval ds."""
    return ds * np.cos(theta_mid) * np.sinc(rate * ds / (2 * math.pi))


@dataclass(frozen=True)
class ToroidBore(FieldModel):
    """Field-free bore of an elongated toroidal solenoid.

    Inside the bore A is axial with magnitude ``B * thickness``; it blends to
    zero across ``edge_ramp`` at every edge of the rectangle
    ``[x_lo, x_hi] x [z_lo, z_hi]``.  ``edge_ramp=None`` selects 1% of the
    axial length.
    """

    z_extent: tuple = (0.0, 1.0)
    x_extent: tuple = (-1.0, 1.0)
    B: float = 0.0
    thickness: float = 0.0
    edge_ramp: float = None

    def __post_init__(self):
        if self.edge_ramp is None:
            object.__setattr__(self, "edge_ramp",
                               0.01 * (self.z_extent[1] - self.z_extent[0]))

    @property
    def strength(self):
        return self.B * self.thickness

    def _ramps(self):
        r = self.edge_ramp
        rz = min(r, 0.5 * (self.z_extent[1] - self.z_extent[0]))
        rx = min(r, 0.5 * (self.x_extent[1] - self.x_extent[0]))
        return rx, rz

    def weight(self, x, z):
        rx, rz = self._ramps()
        return (_window(x, *self.x_extent, rx) * _window(z, *self.z_extent, rz))

    def sample(self, x, z, t=0.0):
        w = self.weight(x, z)
        return np.zeros_like(w), self.strength * w, np.zeros_like(w)

    def _weight_integral(self, x0, z0, x1, z1):
        """Integral of the weight along each segment, in arc length."""
        rx, rz = self._ramps()
        x0 = np.asarray(x0, float)
        z0 = np.asarray(z0, float)
        ux, uz, length = _segment_frame(x0, z0, x1, z1)
        x0, z0, ux, uz, length = np.broadcast_arrays(x0, z0, ux, uz, length)
        breaks = [np.zeros_like(length), length]
        for u0, du, (lo, hi), r in ((x0, ux, self.x_extent, rx),
                                    (z0, uz, self.z_extent, rz)):
            safe = np.where(du != 0, du, 1.0)
            for e in (lo, lo + r, hi - r, hi):
                s = np.where(du != 0, (e - u0) / safe, 0.0)
                breaks.append(np.clip(s, 0.0, length))
        br = np.sort(np.stack(breaks, axis=-1), axis=-1)
        sa, sb = br[..., :-1], br[..., 1:]
        ds = sb - sa
        sm = 0.5 * (sa + sb)
        xm = x0[..., None] + sm * ux[..., None]
        zm = z0[..., None] + sm * uz[..., None]
        a1, b1, w1, e1 = _window_piece(xm, *self.x_extent, rx)
        a2, b2, w2, e2 = _window_piece(zm, *self.z_extent, rz)
        r1 = w1 * ux[..., None]
        r2 = w2 * uz[..., None]
        t1 = w1 * (xm - e1)
        t2 = w2 * (zm - e2)
        total = (a1 * a2 * ds
                 + a1 * b2 * _cos_integral(ds, t2, r2)
                 + a2 * b1 * _cos_integral(ds, t1, r1)
                 + 0.5 * b1 * b2 * (_cos_integral(ds, t1 + t2, r1 + r2)
                                    + _cos_integral(ds, t1 - t2, r1 - r2)))
        return total.sum(axis=-1)

    def _flat_or_clear(self, x0, x1):
        rx, _ = self._ramps()
        xmin = np.minimum(x0, x1)
        xmax = np.maximum(x0, x1)
        flat = (xmin >= self.x_extent[0] + rx) & (xmax <= self.x_extent[1] - rx)
        clear = (xmax <= self.x_extent[0]) | (xmin >= self.x_extent[1])
        return flat, clear

    def line_integral(self, x0, z0, x1, z1, t=0.0):
        # depends on the z end points only when x stays in the flat band, so
        # segments sharing end stations give bit-identical values
        x0, z0, x1, z1 = np.broadcast_arrays(*[np.asarray(v, float)
                                               for v in (x0, z0, x1, z1)])
        _, rz = self._ramps()
        flat, clear = self._flat_or_clear(x0, x1)
        fast = self.strength * (_window_antiderivative(z1, *self.z_extent, rz)
                                - _window_antiderivative(z0, *self.z_extent, rz))
        out = np.where(flat, fast, 0.0)
        slow = ~(flat | clear)
        if np.any(slow):
            _, uz, _ = _segment_frame(x0[slow], z0[slow], x1[slow], z1[slow])
            out[slow] = self.strength * uz * self._weight_integral(
                x0[slow], z0[slow], x1[slow], z1[slow])
        return out

    def projected_integral(self, x0, z0, x1, z1, ex, ez, t=0.0):
        x0, z0, x1, z1, ex, ez = np.broadcast_arrays(
            *[np.asarray(v, float) for v in (x0, z0, x1, z1, ex, ez)])
        return self.strength * ez * self._weight_integral(x0, z0, x1, z1)

    def field_free(self, x, z):
        rx, rz = self._ramps()
        x = np.asarray(x, float)
        z = np.asarray(z, float)
        in_x = (x >= self.x_extent[0] + rx) & (x <= self.x_extent[1] - rx)
        in_z = (z >= self.z_extent[0] + rz) & (z <= self.z_extent[1] - rz)
        out_x = (x < self.x_extent[0]) | (x > self.x_extent[1])
        out_z = (z < self.z_extent[0]) | (z > self.z_extent[1])
        return (in_x & in_z) | out_x | out_z


@dataclass(frozen=True)
class UniformScalar(FieldModel):
    """phi = V + ramp * t inside ``region`` (x_lo, x_hi, z_lo, z_hi) or
    everywhere when ``region`` is None.  Carries no vector potential."""

    V: float = 0.0
    ramp: float = 0.0
    region: tuple = None

    def sample(self, x, z, t=0.0):
        zero = _zeros_like(x, z)
        phi = np.full_like(zero, self.V + self.ramp * t)
        if self.region is not None:
            x_lo, x_hi, z_lo, z_hi = self.region
            x = np.asarray(x, float)
            z = np.asarray(z, float)
            inside = (x >= x_lo) & (x <= x_hi) & (z >= z_lo) & (z <= z_hi)
            phi = np.where(inside, phi, 0.0)
        return zero, zero.copy(), phi

    def line_integral(self, x0, z0, x1, z1, t=0.0):
        return _zeros_like(x0, z0, x1, z1)

    def projected_integral(self, x0, z0, x1, z1, ex, ez, t=0.0):
        return _zeros_like(x0, z0, x1, z1, ex, ez)


@dataclass(frozen=True)
class PureGauge(FieldModel):
    """A = grad S, phi = -dS/dt."""

    gauge: object = Constant(0.0)

    def sample(self, x, z, t=0.0):
        gx, gz = self.gauge.grad(x, z, t)
        return gx, gz, -self.gauge.dt(x, z, t)

    def line_integral(self, x0, z0, x1, z1, t=0.0):
        return self.gauge.value(x1, z1, t) - self.gauge.value(x0, z0, t)

    def projected_integral(self, x0, z0, x1, z1, ex, ez, t=0.0):
        g = self.gauge
        if isinstance(g, (Constant, TimeLinear)):
            return _zeros_like(x0, z0, x1, z1, ex, ez)
        _, _, length = _segment_frame(x0, z0, x1, z1)
        if isinstance(g, Linear):
            return (g.a[0] * np.asarray(ex) + g.a[1] * np.asarray(ez)) * length
        return _gauss_projected(self, x0, z0, x1, z1, ex, ez, t)


@dataclass(frozen=True)
class Superposition(FieldModel):
    parts: tuple = ()

    def components(self):
        return [c for p in self.parts for c in p.components()]

    def sample(self, x, z, t=0.0):
        return _sum_samples(self.parts, x, z, t)

    def line_integral(self, x0, z0, x1, z1, t=0.0):
        out = _zeros_like(x0, z0, x1, z1)
        for p in self.parts:
            out = out + p.line_integral(x0, z0, x1, z1, t)
        return out

    def projected_integral(self, x0, z0, x1, z1, ex, ez, t=0.0):
        out = _zeros_like(x0, z0, x1, z1, ex, ez)
        for p in self.parts:
            out = out + p.projected_integral(x0, z0, x1, z1, ex, ez, t)
        return out

    def field_free(self, x, z):
        out = super().field_free(x, z)
        for p in self.parts:
            out = out & p.field_free(x, z)
        return out

    def breakpoints(self, x0, z0, x1, z1):
        return [b for p in self.parts for b in p.breakpoints(x0, z0, x1, z1)]


def _sum_samples(parts, x, z, t):
    ax = _zeros_like(x, z)
    az = ax.copy()
    phi = ax.copy()
    for p in parts:
        px, pz, pp = p.sample(x, z, t)
        ax = ax + px
        az = az + pz
        phi = phi + pp
    return ax, az, phi


def _gauss_projected(model, x0, z0, x1, z1, ex, ez, t, pieces=16):
    x0, z0, x1, z1, ex, ez = np.broadcast_arrays(
        *[np.asarray(v, float) for v in (x0, z0, x1, z1, ex, ez)])
    ux, uz, length = _segment_frame(x0, z0, x1, z1)
    edges = np.linspace(0.0, 1.0, pieces + 1)
    nodes = ((edges[:-1, None] + edges[1:, None]) / 2
             + (edges[1:, None] - edges[:-1, None]) / 2 * _GL8_X).ravel()
    weights = np.tile(_GL8_W / (2 * pieces), pieces)
    s = length[..., None] * nodes
    ax, az, _ = model.sample(x0[..., None] + s * ux[..., None],
                             z0[..., None] + s * uz[..., None], t)
    f = ax * ex[..., None] + az * ez[..., None]
    return length * (f * weights).sum(axis=-1)


# ---------------------------------------------------------------------------
# composition helpers


def superpose(*models):
    parts = []
    for m in models:
        if isinstance(m, Vacuum):
            continue
        if isinstance(m, Superposition):
            parts.extend(m.parts)
        else:
            parts.append(m)
    if not parts:
        return Vacuum()
    return Superposition(tuple(parts))


def apply_gauge(model, g):
    """Gauge-transformed copy: A -> A + grad S, phi -> phi - dS/dt."""
    return superpose(model, PureGauge(g))


def split_gauge(model):
    """Separate pure-gauge parts from the rest.

    Returns ``(physical, gauges)`` where ``gauges`` is a list of gauge
    functions whose sum makes up the remainder of ``model``.
    """
    if isinstance(model, PureGauge):
        return Vacuum(), [model.gauge]
    if isinstance(model, Superposition):
        phys, gauges = [], []
        for p in model.parts:
            ph, gs = split_gauge(p)
            phys.append(ph)
            gauges.extend(gs)
        return superpose(*phys), gauges
    return model, []


def has_vector_potential(model):
    return not isinstance(model, (Vacuum, UniformScalar)) and any(
        not isinstance(c, UniformScalar) for c in model.components())


def sample(model, p):
    """Potentials at a single :class:`Point`."""
    t = p.t if hasattr(p, "t") else 0.0
    ax, az, phi = model.sample(float(p[0]), float(p[1]), t)
    return PotentialSample(float(ax), float(az), float(phi))


# ---------------------------------------------------------------------------
# adaptive quadrature route


def _adaptive_simpson(f, rtol, max_depth):
    # pre-split so symmetric integrands cannot fake convergence
    n0 = 4
    grid = np.linspace(0.0, 1.0, 2 * n0 + 1)
    vals = [f(s) for s in grid]
    scale = sum(abs(v) for v in vals) / len(vals)
    stack = []
    for i in range(n0):
        a, m, b = grid[2 * i], grid[2 * i + 1], grid[2 * i + 2]
        fa, fm, fb = vals[2 * i], vals[2 * i + 1], vals[2 * i + 2]
        whole = (b - a) / 6 * (fa + 4 * fm + fb)
        stack.append((a, b, fa, fm, fb, whole, rtol * scale / n0, 0))
    total = 0.0
    comp = 0.0
    while stack:
        a, b, fa, fm, fb, whole, tol, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6 * (fa + 4 * flm + fm)
        right = (b - m) / 6 * (fm + 4 * frm + fb)
        err = left + right - whole
        if abs(err) <= 15 * tol or (b - a) < 1e-15:
            y = left + right + err / 15 - comp
            tmp = total + y
            comp = (tmp - total) - y
            total = tmp
            continue
        if depth + 1 > max_depth:
            raise QuadratureNonConvergence(
                f"refinement stalled at depth {max_depth} on [{a:.6g}, {b:.6g}] "
                "of a path segment")
        stack.append((a, m, fa, flm, fm, left, tol / 2, depth + 1))
        stack.append((m, b, fm, frm, fb, right, tol / 2, depth + 1))
    return total


def line_integral_A(model, path, t=0.0, rtol=1e-9, max_depth=40):
    """Integral of A.dl along a polyline by per-segment adaptive Simpson.

    Raises QuadratureNonConvergence when a segment cannot be resolved to
    ``rtol`` within ``max_depth`` bisections (a discontinuity on the path).
    """
    pts = [tuple(p)[:2] for p in path]
    if len(pts) < 2:
        raise ValueError("path needs at least two points")
    total = 0.0
    for (xa, za), (xb, zb) in zip(pts[:-1], pts[1:]):
        dx, dz = xb - xa, zb - za
        if dx == 0 and dz == 0:
            continue

        def f(s, xa=xa, za=za, dx=dx, dz=dz):
            ax, az, _ = model.sample(xa + s * dx, za + s * dz, t)
            return float(ax) * dx + float(az) * dz

        total += _adaptive_simpson(f, rtol, max_depth)
    return total


def closed_path_phase_factor(model, loop, q, t=0.0, units=SI, tol=1e-12):
    """exp(i q/hbar loop-integral of A.dl) for a closed polyline.

    With the (+,-,-,-) metric, A_mu dx^mu = phi dt - A.dx, so the covariant
    factor exp(-i q/hbar oint A_mu dx^mu) reduces to this spatial form for a
    loop at fixed time.
    """
    units = get_units(units)
    pts = [tuple(p)[:2] for p in loop]
    if len(pts) < 3 or math.hypot(pts[0][0] - pts[-1][0],
                                  pts[0][1] - pts[-1][1]) > tol:
        raise OpenPathError("loop must end where it starts")
    phase = q / units.hbar * line_integral_A(model, pts, t)
    return complex(math.cos(phase), math.sin(phase))


def with_parameter(model, param, value):
    """Copy of ``model`` with the first matching field parameter replaced.

    ``param`` is one of ``B``, ``thickness`` (toroid bores) or ``flux``
    (flux tubes; a tube pair keeps its opposite orientation).
    """
    done = [False]

    def walk(m):
        if done[0]:
            return m
        if isinstance(m, ToroidBore) and param in ("B", "thickness"):
            done[0] = True
            return replace(m, **{param: value})
        if isinstance(m, FluxTube) and param == "flux":
            done[0] = True
            return replace(m, flux=value)
        if isinstance(m, FluxTubePair) and param == "flux":
            done[0] = True
            a, b = m.tubes
            sign = -1.0 if a.flux * b.flux < 0 else 1.0
            return FluxTubePair((replace(a, flux=value),
                                 replace(b, flux=sign * value)))
        if isinstance(m, Superposition):
            return Superposition(tuple(walk(p) for p in m.parts))
        return m

    out = walk(model)
    if not done[0]:
        raise ValueError(f"field has no parameter {param!r}")
    return out
