"""Fringe metrics and pattern comparisons."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, replace
import math

import numpy as np

from .errors import GridMismatch, TooFewFringes

#: fraction of the screen analysed, centred on x = 0
WINDOW_FRACTION = 0.6
#: peaks below this fraction of the window maximum are ignored
PEAK_FLOOR = 1e-6

_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass
class Pattern:
    xs: np.ndarray
    intensity: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, float)
        self.intensity = np.asarray(self.intensity, float)
        if self.xs.shape != self.intensity.shape:
            raise ValueError("xs and intensity differ in length")
        if np.any(self.intensity < 0):
            raise ValueError("intensity must be nonnegative")

    def scaled(self, c):
        return Pattern(self.xs, c * self.intensity, dict(self.meta))


@dataclass(frozen=True)
class PatternMetrics:
    central_max_x: float
    fringe_spacing: float
    visibility: float
    n_fringes: int


def analysis_window(xs, fraction=WINDOW_FRACTION):
    xs = np.asarray(xs)
    center = 0.5 * (xs[0] + xs[-1])
    half = 0.5 * (xs[-1] - xs[0]) * fraction
    return np.abs(xs - center) <= half * (1 + 1e-12)


def _parabolic(y, i):
    """Vertex offset (in samples) and height of the parabola through i-1, i, i+1."""
    a, b, c = y[i - 1], y[i], y[i + 1]
    denom = a - 2 * b + c
    if denom == 0:
        return 0.0, b
    off = 0.5 * (a - c) / denom
    return off, b - 0.25 * (a - c) * off


def _extrema(y, sign):
    """Interior strict local maxima (sign=+1) or minima (sign=-1).

    A flat top of exactly two samples counts once, at its left sample; the
    parabola through it then puts the vertex half a sample to the right.
    This keeps the centre peak of a symmetric pattern on an even grid.
    """
    s = sign * y
    mid = s[1:-1]
    strict = (mid > s[:-2]) & (mid > s[2:])
    flat = np.zeros_like(strict)
    flat[:-1] = (mid[:-1] > s[:-3]) & (mid[:-1] == s[2:-1]) & (s[2:-1] > s[3:])
    return np.flatnonzero(strict | flat) + 1


def find_peaks(xs, y):
    """Interpolated positions and heights of the local maxima above the floor."""
    idx = _extrema(y, +1)
    if len(idx) == 0:
        return np.array([]), np.array([])
    idx = idx[y[idx] >= PEAK_FLOOR * y.max()]
    dx = xs[1] - xs[0]
    pos, height = [], []
    for i in idx:
        off, h = _parabolic(y, i)
        pos.append(xs[i] + off * dx)
        height.append(h)
    return np.array(pos), np.array(height)


def metrics(p):
    """Peak-based metrics over the central window of the screen."""
    win = analysis_window(p.xs)
    xs = p.xs[win]
    y = p.intensity[win]
    pos, height = find_peaks(xs, y)
    if len(pos) < 3:
        raise TooFewFringes(f"found {len(pos)} maxima, need at least 3")
    spacing = float(np.median(np.diff(pos)))
    central = float(pos[np.argmax(height)])
    i_max = float(height.max())
    lows = _extrema(y, -1)
    if len(lows):
        i_min = min(_parabolic(y, i)[1] for i in lows)
    else:
        i_min = float(y.min())
    i_min = max(i_min, 0.0)
    vis = (i_max - i_min) / (i_max + i_min) if i_max + i_min > 0 else 0.0
    return PatternMetrics(central, spacing, float(min(max(vis, 0.0), 1.0)),
                          len(pos))


def _check_grids(a, b):
    if a.xs.shape != b.xs.shape or not np.allclose(a.xs, b.xs, rtol=0,
                                                   atol=1e-9 * abs(a.xs[1] - a.xs[0])):
        raise GridMismatch("patterns are sampled on different grids")


def shift_fraction(a, b):
    """Displacement of ``a`` relative to ``b`` in fringes, in (-0.5, 0.5].

    Taken from the peak of the cyclic cross-correlation of the mean-removed
    intensities, refined by a parabola; the fringe spacing comes from ``b``.
    """
    _check_grids(a, b)
    dx = a.xs[1] - a.xs[0]
    spacing = metrics(b).fringe_spacing
    ya = a.intensity - a.intensity.mean()
    yb = b.intensity - b.intensity.mean()
    n = len(ya)
    # corr[m] = sum_n yb[n] ya[n + m]  (cyclic); peaks at the lag of a
    corr = np.fft.irfft(np.conj(np.fft.rfft(yb)) * np.fft.rfft(ya), n)
    reach = int(math.ceil(0.5 * spacing / dx)) + 2
    lags = np.arange(-reach, reach + 1)
    vals = corr[lags % n]
    j = int(np.argmax(vals))
    j = min(max(j, 1), len(vals) - 2)
    off, _ = _parabolic(vals, j)
    lag = (lags[j] + off) * dx
    frac = lag / spacing
    frac = frac - math.floor(frac + 0.5)
    if frac <= -0.5:
        frac += 1.0
    return float(frac)


def _rescale_residual(xs, yb, a, s, win):
    ya = np.interp(s * xs[win], a.xs, a.intensity / a.intensity[win].max())
    diff = ya - yb
    return math.sqrt(np.mean(diff * diff) / np.mean(yb * yb))


def rescale_equivalence(a, b, lo=0.8, hi=1.25, coarse=91, tol=1e-9):
    """Best ``s`` such that a(s x) matches b(x), and the relative RMS left.

    ``b`` is taken to be ``a`` with its abscissae stretched by ``s``, so a
    pattern whose fringes are 7% narrower than ``b`` gives ``s`` near 0.93.

    Both patterns are normalised to their window maximum.  A coarse scan
    brackets the minimum, golden-section search refines it; ``s = 1`` is
    returned when it is at least as good as the refined value.
    """
    _check_grids(a, b)
    win = analysis_window(b.xs)
    yb = b.intensity[win] / b.intensity[win].max()

    def res(s):
        return _rescale_residual(b.xs, yb, a, s, win)

    grid = np.linspace(lo, hi, coarse)
    vals = [res(s) for s in grid]
    k = int(np.argmin(vals))
    x0 = grid[max(k - 1, 0)]
    x3 = grid[min(k + 1, coarse - 1)]
    x1 = x3 - _GOLDEN * (x3 - x0)
    x2 = x0 + _GOLDEN * (x3 - x0)
    f1, f2 = res(x1), res(x2)
    while x3 - x0 > tol:
        if f1 < f2:
            x3, x2, f2 = x2, x1, f1
            x1 = x3 - _GOLDEN * (x3 - x0)
            f1 = res(x1)
        else:
            x0, x1, f1 = x1, x2, f2
            x2 = x0 + _GOLDEN * (x3 - x0)
            f2 = res(x2)
    best = 0.5 * (x0 + x3)
    fbest = res(best)
    f_one = res(1.0)
    if f_one <= fbest:
        best, fbest = 1.0, f_one
    return {"scale": float(best), "residual": float(fbest)}


def phase_difference(diagnostics):
    """Accumulated phase of the last slit minus the first, from run diagnostics."""
    return diagnostics[-1]["phase"] - diagnostics[0]["phase"]


def visibility_sweep(s, param, values, threads=1):
    """Metrics of ``s`` re-run at each value of a field parameter.

    Rows come back in the order of ``values``; each carries the parameter
    value, the pattern metrics and the slit-to-slit phase difference.
    """
    from .fields import with_parameter
    from .scenarios import run

    if param not in ("B", "flux", "thickness"):
        raise ValueError("param must be B, flux or thickness")

    def row(v):
        scen = replace(s, field=with_parameter(s.field, param, v))
        result = run(scen)
        return {"value": v, "metrics": metrics(result.pattern),
                "phase_difference": phase_difference(result.diagnostics)}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(row, values))
    return [row(v) for v in values]
