"""Catalog of interferometer experiments and the pipeline that runs them.

A run emits a line source at the source station, steps the wavefront through
each aperture with :func:`huygens_step`, and records the screen intensity.
Builtins:

``free``       two slits, no potentials (reference)
``fig1_1``     flux tube in the wall between the slits
``fig1_2``     the same tube plus an opposite returning-flux tube outside
``fig1_3``     opposite tube pair (dipole) in front of the slits
``fig1_4``     the dipole with separation and distance doubled
``fig1_5``     toroidal-solenoid bore covering the region after the slits
``fig1_6``     bore covering only the right-hand channel
``scalar_vt``  uniform scalar potential ramping in time everywhere
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, replace
import math

import numpy as np
from scipy import constants

from .analysis import Pattern
from .errors import UnknownScenario, ValidationError
from .fields import (Constant, FluxTube, FluxTubePair, GaussianBump, Linear,
                     TimeLinear, ToroidBore, UniformScalar, Vacuum, apply_gauge,
                     superpose)
from .kinematics import SourceRef, local_frequency
from .propagation import (AlternativeMinimal, Aperture, LocalWavefront,
                          TopologicalAB, apply_aperture, centered_grid,
                          combine_channels, emit, huygens_step, path_phase)
from .units import get_units

BUILTINS = ("free", "fig1_1", "fig1_2", "fig1_3", "fig1_4", "fig1_5", "fig1_6",
            "scalar_vt")
GAUGES = ("constant", "linear", "bump", "timelinear")
COVERAGES = ("all_except_source", "after_slit", "slit_and_source", "slit_only",
             "source_only")

#: electron wavelength used by the SI toroid scenarios, metres (0.03 angstrom)
SI_WAVELENGTH = 0.03e-10


@dataclass(frozen=True)
class SourceSpec:
    wavelength: float = 1.0
    charge: float = 1.0
    mass: float = 2 * math.pi
    nu0: float = math.sqrt(2.0)
    x: float = 0.0
    z: float = -2000.0
    t0: float = 0.0
    half_extent: float = 500.0
    samples: int = 2048


@dataclass(frozen=True)
class ScreenSpec:
    z: float = 5000.0
    half_extent: float = 1500.0
    samples: int = 2048


@dataclass(frozen=True)
class Scenario:
    name: str
    unit_mode: str = "reduced"
    source: SourceSpec = SourceSpec()
    apertures: tuple = ()
    aperture_samples: int = 801
    field: object = Vacuum()
    screen: ScreenSpec = ScreenSpec()
    model: object = TopologicalAB()
    coverage: str = None
    t: float = 0.0

    @property
    def units(self):
        return get_units(self.unit_mode)


@dataclass
class ScenarioResult:
    pattern: Pattern
    model_used: str
    field_summary: str
    diagnostics: list = dc_field(default_factory=list)


# ---------------------------------------------------------------------------
# construction


def default_source(unit_mode="reduced", scale=1.0):
    """Source spec with the default geometry scaled by ``scale``."""
    u = get_units(unit_mode)
    if u.name == "si":
        lam = SI_WAVELENGTH
        mass = constants.m_e
        p = u.h / lam
        nu0 = math.sqrt((p * u.c) ** 2 + (mass * u.c ** 2) ** 2) / u.h
        return SourceSpec(wavelength=lam, charge=u.e, mass=mass, nu0=nu0,
                          z=-2000.0 * scale, half_extent=500.0 * scale)
    return SourceSpec()


def _two_slit_aperture(scale, separation=50.0, width=5.0):
    return Aperture(0.0, ((-separation / 2 * scale, width * scale),
                          (separation / 2 * scale, width * scale)))


def toroid_for_coverage(coverage, scale, source_z, aperture_z, screen_z,
                        B=0.01, thickness=0.01):
    """Toroid bore placed according to one of the five coverage variants."""
    m = 100.0 * scale
    extents = {
        "all_except_source": (source_z + m, screen_z + m),
        "after_slit": (aperture_z, screen_z + m),
        "slit_and_source": (source_z - m, aperture_z + m),
        "slit_only": (aperture_z - m, aperture_z + m),
        "source_only": (source_z - m, source_z + m),
    }
    if coverage not in extents:
        raise ValidationError("coverage", f"unknown coverage {coverage!r}")
    # transversely the bore reaches past the screen edge
    return ToroidBore(extents[coverage], (-2000.0 * scale, 2000.0 * scale),
                      B, thickness)


def builtin(name, coverage=None):
    """A fully parameterised builtin scenario.

    ``coverage`` re-places the toroid of ``fig1_5`` per one of the five
    coverage variants (default ``after_slit``).
    """
    if name not in BUILTINS:
        raise UnknownScenario(f"unknown scenario {name!r}; choose from "
                              + ", ".join(BUILTINS))
    if coverage is not None and name != "fig1_5":
        raise ValidationError("coverage", "coverage variants apply to fig1_5 only")
    if name in ("fig1_5", "fig1_6"):
        scale = SI_WAVELENGTH
        src = default_source("si", scale)
        screen = ScreenSpec(5000.0 * scale, 1500.0 * scale, 2048)
        ap = _two_slit_aperture(scale)
        if name == "fig1_5":
            coverage = coverage or "after_slit"
            bore = toroid_for_coverage(coverage, scale, src.z, ap.z, screen.z)
            return Scenario(name, "si", src, (ap,), field=bore, screen=screen,
                            model=LocalWavefront("magnitude"), coverage=coverage)
        bore = ToroidBore((-10.0 * scale, screen.z + 100.0 * scale),
                          (0.0, 2000.0 * scale), 0.01, 0.01, 5.0 * scale)
        return Scenario(name, "si", src, (ap,), field=bore, screen=screen,
                        model=LocalWavefront("magnitude"))

    u = get_units("reduced")
    half = 0.5 * u.flux_quantum
    ap = _two_slit_aperture(1.0)
    if name == "free":
        return Scenario(name, apertures=(ap,))
    if name == "fig1_1":
        return Scenario(name, apertures=(ap,),
                        field=FluxTube((0.0, 0.0), 5.0, half))
    if name == "fig1_2":
        pair = FluxTubePair((FluxTube((0.0, 0.0), 5.0, half),
                             FluxTube((-75.0, 0.0), 5.0, -half)))
        return Scenario(name, apertures=(ap,), field=pair)
    if name == "fig1_3":
        pair = FluxTubePair.opposite((10.0, -300.0), (-10.0, -300.0), 3.0, half)
        return Scenario(name, apertures=(ap,), field=pair,
                        model=LocalWavefront("magnitude"))
    if name == "fig1_4":
        pair = FluxTubePair.opposite((20.0, -600.0), (-20.0, -600.0), 3.0, half)
        return Scenario(name, apertures=(ap,), field=pair,
                        model=LocalWavefront("magnitude"))
    # scalar_vt
    return Scenario(name, apertures=(ap,), field=UniformScalar(0.5, 0.25),
                    model=LocalWavefront("magnitude"))


def gauge_catalog(s, name):
    """One of the four test gauges, sized for the scenario's units and geometry.

    Strengths are set by hbar/q so the induced phases are of order one
    radian.  ``linear`` vanishes at the source point; ``bump`` sits between
    the source and the first aperture.
    """
    u = s.units
    phase_unit = u.hbar / (s.source.charge or 1.0)
    k0 = 2 * math.pi / s.source.wavelength
    lam = s.source.wavelength
    if name == "constant":
        return Constant(1.7 * phase_unit)
    if name == "linear":
        a = 0.05 * k0 * phase_unit
        return Linear((0.6 * a, 0.8 * a), (s.source.x, s.source.z))
    if name == "bump":
        zc = 0.5 * (s.source.z + s.apertures[0].z)
        return GaussianBump((0.0, zc), 200.0 * lam, 3.0 * phase_unit)
    if name == "timelinear":
        return TimeLinear(0.5 * phase_unit)
    raise ValidationError("gauge", f"unknown gauge {name!r}; choose from "
                          + ", ".join(GAUGES))


def gauge_deviation(s, name, threads=1):
    """Largest intensity change caused by a catalog gauge, relative to the
    peak intensity of the untransformed run."""
    base = run(s, threads=threads).pattern.intensity
    moved = run(replace(s, field=apply_gauge(s.field, gauge_catalog(s, name))),
                threads=threads).pattern.intensity
    return float(np.max(np.abs(moved - base)) / np.max(base))


def free_reference(s):
    """The same experiment with every potential removed."""
    return replace(s, name=f"{s.name}_free", field=Vacuum(), coverage=None)


def with_model(s, model):
    """Swap the path-phase model; ``alternative`` gets one channel per slit."""
    if isinstance(model, str):
        model = make_model(model, s)
    return replace(s, model=model)


def make_model(kind, s=None, local_variant="magnitude"):
    if kind == "local":
        return LocalWavefront(local_variant)
    if kind == "topological":
        return TopologicalAB()
    if kind == "alternative":
        n = len(s.apertures[-1].slits) if s is not None and s.apertures else 2
        return AlternativeMinimal(tuple(range(n)))
    raise ValidationError("model", f"unknown model {kind!r}")


def validate(s):
    if not s.apertures:
        raise ValidationError("apertures", "at least one aperture is required")
    zs = [a.z for a in s.apertures]
    if any(b <= a for a, b in zip(zs[:-1], zs[1:])):
        raise ValidationError("apertures", "aperture stations must increase")
    if not s.source.z < zs[0]:
        raise ValidationError("source.z", "source must lie upstream of the apertures")
    if not s.screen.z > zs[-1]:
        raise ValidationError("screen.z", "screen must lie beyond every aperture")
    if s.screen.samples < 64:
        raise ValidationError("screen.samples", "need at least 64 samples")
    if s.source.samples < 2 or s.aperture_samples < 2:
        raise ValidationError("samples", "grids need at least two samples")
    if s.source.wavelength <= 0:
        raise ValidationError("source.wavelength", "must be positive")
    if s.coverage is not None:
        if s.coverage not in COVERAGES:
            raise ValidationError("coverage", f"unknown coverage {s.coverage!r}")
        if not any(isinstance(c, ToroidBore) for c in s.field.components()):
            raise ValidationError("coverage", "coverage needs a toroid bore field")
    if isinstance(s.model, AlternativeMinimal):
        if len(s.apertures) != 1:
            raise ValidationError("model", "alternative model needs exactly one aperture")
        if len(s.model.channels) != len(s.apertures[0].slits):
            raise ValidationError("model.channels",
                                  "every slit must be assigned to exactly one channel")
    return s


# ---------------------------------------------------------------------------
# running


def make_source(s, field=None):
    spec = s.source
    k0 = 2 * math.pi / spec.wavelength
    return SourceRef.create(spec.charge, spec.mass, (spec.x, spec.z, spec.t0),
                            (0.0, k0), spec.nu0,
                            s.field if field is None else field, s.unit_mode)


def aperture_grid(s, a):
    lo, hi = a.span
    half = 0.5 * (hi - lo) * 1.02
    return centered_grid(0.5 * (lo + hi), half, s.aperture_samples)


def _representative_path(s, src, slit_indices):
    ap = s.apertures[0]
    xc = float(np.mean([ap.slits[i].center for i in slit_indices]))
    return ((src.r0[0], src.r0[1]), (xc, ap.z), (0.0, s.screen.z))


def run(s, t=None, threads=1):
    validate(s)
    t = s.t if t is None else t
    field = s.field
    model = s.model
    src = make_source(s)
    xs = centered_grid(s.source.x, s.source.half_extent, s.source.samples)
    w = emit(src, xs, s.source.z, field, model, t)
    for a in s.apertures:
        grid = aperture_grid(s, a)
        w = huygens_step(w, a.z, grid, field, model, t, where=a.mask(grid),
                         threads=threads)
        w = apply_aperture(w, a)
    screen_xs = centered_grid(0.0, s.screen.half_extent, s.screen.samples)
    if isinstance(model, AlternativeMinimal):
        ap = s.apertures[0]
        waves, paths = [], []
        for cid in model.channel_ids():
            members = [i for i, c in enumerate(model.channels) if c == cid]
            part = apply_aperture(w, ap, members)
            waves.append(huygens_step(part, s.screen.z, screen_xs, field, model,
                                      t, threads=threads))
            paths.append(model.path_for(cid) or _representative_path(s, src, members))
        w = combine_channels(waves, model, field, src, t, paths=paths)
    else:
        w = huygens_step(w, s.screen.z, screen_xs, field, model, t, threads=threads)
    pattern = Pattern(screen_xs, np.abs(w.amps) ** 2,
                      {"scenario": s.name, "model": model.label})
    return ScenarioResult(pattern, model.label, summarize_field(field),
                          slit_diagnostics(s, src, t))


def slit_diagnostics(s, src=None, t=0.0):
    """Phase accumulated along the axial line from each slit to the screen."""
    src = src or make_source(s)
    ap = s.apertures[-1]
    length = s.screen.z - ap.z
    out = []
    for i, slit in enumerate(ap.slits):
        phase = path_phase(s.model, s.field, src,
                           ((slit.center, ap.z), (slit.center, s.screen.z)), t)
        out.append({"slit": i, "center": slit.center, "phase": phase,
                    "phase_per_length": phase / length})
    return out


def run_time_series(s, ts, threads=1):
    """One result per time; the potentials are re-sampled at each t."""
    return [run(s, t=t, threads=threads) for t in ts]


def run_many(scenarios, threads=1):
    """Run independent scenarios; results come back in input order."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, scenarios))
    return [run(s) for s in scenarios]


def summarize_field(field):
    parts = field.components() if not isinstance(field, Vacuum) else []
    if not parts:
        return "vacuum"
    return "; ".join(type(p).__name__ for p in parts)
