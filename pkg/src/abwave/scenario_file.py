"""Plain-text scenario files.

A file has five sections.  Keys are case-sensitive and unknown keys are
rejected; ``#`` starts a comment.  Floats are written with ``repr`` so an
exported scenario parses back to an equal object::

    [source]
    name = free
    unit_mode = reduced          # or si
    wavelength = 1.0
    charge = 1.0
    mass = 6.283185307179586
    nu0 = 1.4142135623730951
    x = 0.0
    z = -2000.0
    t0 = 0.0
    half_extent = 500.0
    samples = 2048

    [apertures]
    samples = 801
    aperture = 0.0 : -25.0 5.0, 25.0 5.0     # z : centre width, ...

    [field]                      # empty means vacuum; several lines superpose
    flux_tube = x z radius flux
    tube_pair = x z radius flux, x z radius flux
    toroid = z_lo z_hi x_lo x_hi B thickness edge_ramp
    scalar = V ramp [x_lo x_hi z_lo z_hi]
    gauge = constant c | linear ax az ox oz | bump cx cz width height | timelinear rate
    coverage = after_slit

    [screen]
    z = 5000.0
    half_extent = 1500.0
    samples = 2048
    time = 0.0

    [model]
    kind = local                 # local, topological or alternative
    local_variant = magnitude
    channels = 0 1               # alternative only: channel id per slit
    path = 0 : x z, x z, ...     # alternative only, optional
"""

from dataclasses import fields as dc_fields

from .errors import ParseError, ValidationError
from .fields import (Constant, FluxTube, FluxTubePair, GaussianBump, Linear,
                     PureGauge, Superposition, TimeLinear, ToroidBore,
                     UniformScalar, Vacuum)
from .propagation import (AlternativeMinimal, Aperture, LocalWavefront,
                          TopologicalAB)
from .scenarios import COVERAGES, Scenario, ScreenSpec, SourceSpec, validate

SECTIONS = ("source", "apertures", "field", "screen", "model")

_SOURCE_KEYS = {f.name for f in dc_fields(SourceSpec)} | {"name", "unit_mode"}
_SINGLE = {
    "source": _SOURCE_KEYS,
    "apertures": {"samples"},
    "field": {"coverage"},
    "screen": {"z", "half_extent", "samples", "time"},
    "model": {"kind", "local_variant", "channels"},
}
_REPEATED = {
    "apertures": {"aperture"},
    "field": {"flux_tube", "tube_pair", "toroid", "scalar", "gauge"},
    "model": {"path"},
}
_REQUIRED = {
    "source": {"unit_mode", "wavelength", "z"},
    "screen": {"z"},
    "model": {"kind"},
}
_INT_KEYS = {"samples"}


def _fmt(v):
    return repr(float(v))


# ---------------------------------------------------------------------------
# export


def _field_lines(field):
    if isinstance(field, Vacuum):
        return []
    parts = field.parts if isinstance(field, Superposition) else (field,)
    out = []
    for p in parts:
        if isinstance(p, FluxTube):
            out.append("flux_tube = " + " ".join(
                _fmt(v) for v in (*p.center, p.radius, p.flux)))
        elif isinstance(p, FluxTubePair):
            out.append("tube_pair = " + ", ".join(
                " ".join(_fmt(v) for v in (*t.center, t.radius, t.flux))
                for t in p.tubes))
        elif isinstance(p, ToroidBore):
            out.append("toroid = " + " ".join(_fmt(v) for v in (
                *p.z_extent, *p.x_extent, p.B, p.thickness, p.edge_ramp)))
        elif isinstance(p, UniformScalar):
            vals = [p.V, p.ramp] + (list(p.region) if p.region is not None else [])
            out.append("scalar = " + " ".join(_fmt(v) for v in vals))
        elif isinstance(p, PureGauge):
            out.append("gauge = " + _gauge_text(p.gauge))
        else:
            raise ValidationError("field", f"cannot export {type(p).__name__}")
    return out


def _gauge_text(g):
    if isinstance(g, Constant):
        return f"constant {_fmt(g.c)}"
    if isinstance(g, Linear):
        return "linear " + " ".join(_fmt(v) for v in (*g.a, *g.origin))
    if isinstance(g, GaussianBump):
        return "bump " + " ".join(_fmt(v) for v in (*g.center, g.width, g.height))
    if isinstance(g, TimeLinear):
        return f"timelinear {_fmt(g.rate)}"
    raise ValidationError("field", f"cannot export gauge {type(g).__name__}")


def export_scenario(s):
    """Scenario file text for ``s``."""
    src = s.source
    lines = ["[source]", f"name = {s.name}", f"unit_mode = {s.unit_mode}"]
    for f in dc_fields(SourceSpec):
        v = getattr(src, f.name)
        lines.append(f"{f.name} = {v if f.name in _INT_KEYS else _fmt(v)}")
    lines += ["", "[apertures]", f"samples = {s.aperture_samples}"]
    for a in s.apertures:
        slits = ", ".join(f"{_fmt(sl.center)} {_fmt(sl.width)}" for sl in a.slits)
        lines.append(f"aperture = {_fmt(a.z)} : {slits}")
    lines += ["", "[field]"] + _field_lines(s.field)
    if s.coverage is not None:
        lines.append(f"coverage = {s.coverage}")
    sc = s.screen
    lines += ["", "[screen]", f"z = {_fmt(sc.z)}",
              f"half_extent = {_fmt(sc.half_extent)}",
              f"samples = {sc.samples}", f"time = {_fmt(s.t)}"]
    lines += ["", "[model]"]
    m = s.model
    if isinstance(m, LocalWavefront):
        lines += ["kind = local", f"local_variant = {m.local_variant}"]
    elif isinstance(m, TopologicalAB):
        lines.append("kind = topological")
    else:
        lines += ["kind = alternative",
                  "channels = " + " ".join(str(c) for c in m.channels)]
        for cid, poly in m.paths:
            pts = ", ".join(f"{_fmt(x)} {_fmt(z)}" for x, z in poly)
            lines.append(f"path = {cid} : {pts}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# parse


def _floats(text, line, count=None, what="values"):
    try:
        vals = [float(v) for v in text.split()]
    except ValueError:
        raise ParseError(line, f"expected numbers in {what}, got {text!r}") from None
    if count is not None and len(vals) not in (
            count if isinstance(count, tuple) else (count,)):
        raise ParseError(line, f"{what} needs {count} numbers, got {len(vals)}")
    return vals


def _int(text, line, key):
    try:
        return int(text)
    except ValueError:
        raise ParseError(line, f"{key} must be an integer, got {text!r}") from None


def _tokenize(text):
    """Section -> {key: [(value, line), ...]} with strict key checks."""
    out = {name: {} for name in SECTIONS}
    seen = set()
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                raise ParseError(n, f"malformed section header {body!r}")
            section = body[1:-1].strip()
            if section not in SECTIONS:
                raise ParseError(n, f"unknown section [{section}]")
            if section in seen:
                raise ParseError(n, f"section [{section}] appears twice")
            seen.add(section)
            continue
        if section is None:
            raise ParseError(n, "key outside of any section")
        if "=" not in body:
            raise ParseError(n, f"expected key = value, got {body!r}")
        key, value = (p.strip() for p in body.split("=", 1))
        if key in _SINGLE.get(section, ()):
            if key in out[section]:
                raise ParseError(n, f"duplicate key {key!r} in [{section}]")
        elif key not in _REPEATED.get(section, ()):
            raise ParseError(n, f"unknown key {key!r} in [{section}]")
        out[section].setdefault(key, []).append((value, n))
    missing = [s for s in SECTIONS if s not in seen]
    if missing:
        raise ParseError(len(text.splitlines()) or 1,
                         "missing section(s) " + ", ".join(f"[{m}]" for m in missing))
    for section, keys in _REQUIRED.items():
        for key in sorted(keys):
            if key not in out[section]:
                raise ParseError(len(text.splitlines()) or 1,
                                 f"[{section}] requires key {key!r}")
    return out


def _one(sec, key, default=None):
    v = sec.get(key)
    return v[0] if v else (default, None)


def _parse_source(sec):
    kw = {}
    for f in dc_fields(SourceSpec):
        if f.name in sec:
            value, n = sec[f.name][0]
            kw[f.name] = (_int(value, n, f.name) if f.name in _INT_KEYS
                          else _floats(value, n, 1, f.name)[0])
    return SourceSpec(**kw)


def _parse_gauge(value, n):
    kind, _, rest = value.partition(" ")
    if kind == "constant":
        return Constant(*_floats(rest, n, 1, "constant gauge"))
    if kind == "linear":
        v = _floats(rest, n, 4, "linear gauge")
        return Linear((v[0], v[1]), (v[2], v[3]))
    if kind == "bump":
        v = _floats(rest, n, 4, "bump gauge")
        return GaussianBump((v[0], v[1]), v[2], v[3])
    if kind == "timelinear":
        return TimeLinear(*_floats(rest, n, 1, "timelinear gauge"))
    raise ParseError(n, f"unknown gauge {kind!r}")


def _parse_field(sec):
    entries = sorted((n, key, value) for key, vals in sec.items()
                     if key != "coverage" for value, n in vals)
    parts = []
    for n, key, value in entries:
        if key == "flux_tube":
            v = _floats(value, n, 4, "flux_tube")
            parts.append(FluxTube((v[0], v[1]), v[2], v[3]))
        elif key == "tube_pair":
            halves = value.split(",")
            if len(halves) != 2:
                raise ParseError(n, "tube_pair needs two comma-separated tubes")
            tubes = []
            for h in halves:
                v = _floats(h, n, 4, "tube_pair tube")
                tubes.append(FluxTube((v[0], v[1]), v[2], v[3]))
            parts.append(FluxTubePair(tuple(tubes)))
        elif key == "toroid":
            v = _floats(value, n, 7, "toroid")
            parts.append(ToroidBore((v[0], v[1]), (v[2], v[3]), v[4], v[5], v[6]))
        elif key == "scalar":
            v = _floats(value, n, (2, 6), "scalar")
            parts.append(UniformScalar(v[0], v[1],
                                       tuple(v[2:]) if len(v) == 6 else None))
        elif key == "gauge":
            parts.append(PureGauge(_parse_gauge(value, n)))
    if not parts:
        return Vacuum()
    if len(parts) == 1:
        return parts[0]
    return Superposition(tuple(parts))


def _parse_aperture(value, n):
    z_text, sep, rest = value.partition(":")
    if not sep:
        raise ParseError(n, "aperture needs 'z : centre width, ...'")
    z = _floats(z_text, n, 1, "aperture z")[0]
    slits = []
    for chunk in rest.split(","):
        c, w = _floats(chunk, n, 2, "slit")
        slits.append((c, w))
    try:
        return Aperture(z, tuple(slits))
    except ValueError as exc:
        raise ParseError(n, str(exc)) from None


def _parse_model(sec):
    kind, n = _one(sec, "kind")
    if kind == "topological":
        allowed = {"kind"}
    elif kind == "local":
        allowed = {"kind", "local_variant"}
    elif kind == "alternative":
        allowed = {"kind", "channels", "path"}
    else:
        raise ParseError(n, f"unknown model kind {kind!r}")
    for key, vals in sec.items():
        if key not in allowed:
            raise ParseError(vals[0][1], f"key {key!r} does not apply to model {kind}")
    if kind == "topological":
        return TopologicalAB()
    if kind == "local":
        variant, vn = _one(sec, "local_variant", "magnitude")
        try:
            return LocalWavefront(variant)
        except ValueError as exc:
            raise ParseError(vn, str(exc)) from None
    ch_text, cn = _one(sec, "channels")
    if ch_text is None:
        raise ParseError(n, "alternative model requires 'channels'")
    channels = tuple(_int(c, cn, "channels") for c in ch_text.split())
    paths = []
    for value, pn in sec.get("path", []):
        cid_text, sep, rest = value.partition(":")
        if not sep:
            raise ParseError(pn, "path needs 'id : x z, x z, ...'")
        pts = tuple(tuple(_floats(p, pn, 2, "path point")) for p in rest.split(","))
        if len(pts) < 2:
            raise ParseError(pn, "path needs at least two points")
        paths.append((_int(cid_text.strip(), pn, "path id"), pts))
    return AlternativeMinimal(channels, tuple(paths))


def parse_scenario(text):
    """Scenario from file text; validated before it is returned."""
    sec = _tokenize(text)
    src = sec["source"]
    name, _ = _one(src, "name", "custom")
    mode, mn = _one(src, "unit_mode")
    if mode not in ("si", "reduced"):
        raise ParseError(mn, f"unit_mode must be si or reduced, got {mode!r}")
    source = _parse_source(src)

    ap = sec["apertures"]
    ap_samples, an = _one(ap, "samples", "801")
    apertures = tuple(_parse_aperture(v, n) for v, n in ap.get("aperture", []))

    field = _parse_field(sec["field"])
    coverage, cn = _one(sec["field"], "coverage")
    if coverage is not None and coverage not in COVERAGES:
        raise ParseError(cn, f"unknown coverage {coverage!r}")

    scr = sec["screen"]
    screen_kw = {}
    for key in ("z", "half_extent"):
        if key in scr:
            value, n = scr[key][0]
            screen_kw[key] = _floats(value, n, 1, key)[0]
    if "samples" in scr:
        value, n = scr["samples"][0]
        screen_kw["samples"] = _int(value, n, "samples")
    time_text, tn = _one(scr, "time", "0.0")
    t = _floats(time_text, tn, 1, "time")[0]

    s = Scenario(name, mode, source, apertures, _int(ap_samples, an, "samples"),
                 field, ScreenSpec(**screen_kw), _parse_model(sec["model"]),
                 coverage, t)
    return validate(s)
