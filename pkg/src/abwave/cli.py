"""Command-line entry point: ``abwave <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 gauge check
above tolerance.
"""

import argparse
import math
import os
import sys
from dataclasses import replace

import numpy as np

from .analysis import metrics, visibility_sweep
from .errors import AbwaveError, ParseError, UnknownScenario, ValidationError
from .kinematics import predict_inverse_wavelength_shift
from .scenario_file import export_scenario, parse_scenario
from .scenarios import (BUILTINS, GAUGES, SI_WAVELENGTH, builtin, gauge_deviation,
                        make_model, run)
from .units import get_units

CSV_MAGIC = "# abwave v1"
GAUGE_TOLERANCE = 1e-6
ASCII_COLUMNS = 64
ASCII_ROWS = 16

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_GAUGE = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _threads_default():
    raw = os.environ.get("ABWAVE_THREADS", "1")
    try:
        return int(raw)
    except ValueError:
        return -1


def build_parser():
    p = _Parser(prog="abwave", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_args(sp):
        sp.add_argument("--scenario", required=True,
                        help="builtin name or path to a scenario file")
        sp.add_argument("--model", choices=("local", "topological", "alternative"))
        sp.add_argument("--local-variant", choices=("magnitude", "projected"),
                        default="magnitude")
        sp.add_argument("--coverage", help="toroid placement for fig1_5")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--out", help="output file (default: standard output)")

    sp = sub.add_parser("simulate", help="run one scenario and write its pattern")
    scenario_args(sp)
    sp.add_argument("--ascii", action="store_true",
                    help="also draw the pattern on standard output")

    sp = sub.add_parser("sweep", help="re-run a scenario over a field parameter")
    scenario_args(sp)
    sp.add_argument("--param", required=True, choices=("B", "flux", "thickness"))
    sp.add_argument("--from", dest="start", type=float, required=True)
    sp.add_argument("--to", dest="stop", type=float, required=True)
    sp.add_argument("--steps", type=int, required=True)

    sp = sub.add_parser("gauge-check", help="compare a run with its gauge transform")
    scenario_args(sp)
    sp.add_argument("--gauge", required=True, choices=GAUGES)

    sp = sub.add_parser("predict-shift", help="wavelength change in a toroid bore")
    sp.add_argument("--B", type=float, required=True, help="field in tesla")
    sp.add_argument("--thickness", type=float, required=True, help="metres")
    sp.add_argument("--lambda0", type=float, default=SI_WAVELENGTH, help="metres")

    sp = sub.add_parser("compare-models", help="run all three path-phase models")
    scenario_args(sp)

    sp = sub.add_parser("list-scenarios", help="list builtins or export one")
    sp.add_argument("--export", metavar="NAME",
                    help="print the scenario file of a builtin")
    return p


# ---------------------------------------------------------------------------
# helpers


def load_scenario(spec, coverage=None):
    if spec in BUILTINS:
        return builtin(spec, coverage)
    if not os.path.isfile(spec):
        raise UnknownScenario(f"{spec!r} is neither a builtin nor a file")
    with open(spec, encoding="utf-8") as fh:
        s = parse_scenario(fh.read())
    if coverage is not None:
        raise ValidationError("coverage", "--coverage applies to builtins only")
    return s


def _configure(args):
    threads = args.threads if args.threads is not None else _threads_default()
    if threads < 1:
        raise ValidationError("threads", "thread count must be a positive integer")
    s = load_scenario(args.scenario, args.coverage)
    if args.model is not None:
        s = replace(s, model=make_model(args.model, s, args.local_variant))
    return s, threads


def _num(v):
    return repr(float(v))


def _metrics_lines(pattern, prefix=""):
    try:
        m = metrics(pattern)
    except AbwaveError as exc:
        return [f"# {prefix}metrics_error={type(exc).__name__}: {exc}"]
    return [f"# {prefix}central_max_x={_num(m.central_max_x)}",
            f"# {prefix}fringe_spacing={_num(m.fringe_spacing)}",
            f"# {prefix}visibility={_num(m.visibility)}",
            f"# {prefix}n_fringes={m.n_fringes}"]


def pattern_csv(s, result):
    """CSV text for one run: metadata, header, rows, metrics footer."""
    p = result.pattern
    lines = [CSV_MAGIC, f"# scenario={s.name}", f"# unit_mode={s.unit_mode}",
             f"# model={result.model_used}", f"# field={result.field_summary}",
             "x,intensity"]
    lines += [f"{_num(x)},{_num(i)}" for x, i in zip(p.xs, p.intensity)]
    lines += _metrics_lines(p)
    return "\n".join(lines) + "\n"


def read_pattern_csv(text):
    """(xs, intensity, footer dict) from a CSV written by ``simulate``."""
    rows, meta = [], {}
    lines = text.splitlines()
    if not lines or lines[0] != CSV_MAGIC:
        raise ValueError("not an abwave CSV")
    for line in lines[1:]:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        elif line and line[0] not in "x":
            rows.append([float(v) for v in line.split(",")])
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1], meta


def ascii_pattern(xs, intensity, columns=ASCII_COLUMNS, rows=ASCII_ROWS):
    """Bar chart of the pattern, one column per bin (bin maximum)."""
    bins = np.array_split(np.asarray(intensity, float), columns)
    heights = np.array([b.max() if len(b) else 0.0 for b in bins])
    top = heights.max()
    level = np.zeros(columns, int) if top <= 0 else np.rint(heights / top * rows).astype(int)
    out = []
    for r in range(rows, 0, -1):
        out.append("".join("#" if h >= r else " " for h in level).rstrip())
    out.append("-" * columns)
    out.append(f"{xs[0]:<{columns // 2}.4g}{xs[-1]:>{columns - columns // 2}.4g}")
    return "\n".join(out) + "\n"


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args):
    s, threads = _configure(args)
    result = run(s, threads=threads)
    _emit(pattern_csv(s, result), args.out)
    if args.ascii:
        sys.stdout.write(ascii_pattern(result.pattern.xs, result.pattern.intensity))
    return EXIT_OK


def cmd_sweep(args):
    s, threads = _configure(args)
    if args.steps < 1:
        raise ValidationError("steps", "need at least one step")
    values = (np.linspace(args.start, args.stop, args.steps) if args.steps > 1
              else np.array([args.start]))
    rows = visibility_sweep(s, args.param, [float(v) for v in values], threads)
    lines = [CSV_MAGIC, f"# scenario={s.name}", f"# model={s.model.label}",
             f"# param={args.param}",
             f"{args.param},central_max_x,fringe_spacing,visibility,n_fringes,"
             "phase_difference"]
    for r in rows:
        m = r["metrics"]
        lines.append(",".join([_num(r["value"]), _num(m.central_max_x),
                               _num(m.fringe_spacing), _num(m.visibility),
                               str(m.n_fringes), _num(r["phase_difference"])]))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_gauge_check(args):
    s, threads = _configure(args)
    dev = gauge_deviation(s, args.gauge, threads)
    ok = dev < GAUGE_TOLERANCE
    text = (f"scenario={s.name} model={s.model.label} gauge={args.gauge} "
            f"max_relative_deviation={dev:.3e} {'ok' if ok else 'FAIL'}\n")
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_GAUGE


def _sci(v, digits=6):
    mant, exp = f"{v:.{digits - 1}e}".split("e")
    return f"{mant}e{int(exp)}"


def cmd_predict_shift(args):
    if not args.lambda0 > 0:
        raise ValidationError("lambda0", "must be positive")
    shift = predict_inverse_wavelength_shift(args.B, args.thickness,
                                             get_units("si").e, "si")
    rel = shift * args.lambda0
    new_lambda = args.lambda0 / (1 + rel)
    sys.stdout.write(
        f"delta_inverse_wavelength = {_sci(shift)} per m\n"
        f"relative change of 1/lambda at lambda0 = {args.lambda0:g} m: {100 * rel:.2f}%\n"
        f"wavelength inside the bore = {new_lambda:.6g} m "
        f"({100 * (new_lambda / args.lambda0 - 1):+.2f}%)\n")
    return EXIT_OK


def cmd_compare_models(args):
    s, threads = _configure(args)
    kinds = ("local", "topological", "alternative")
    results = [run(replace(s, model=make_model(k, s, args.local_variant)),
                   threads=threads) for k in kinds]
    labels = [r.model_used.replace("/", "_") for r in results]
    xs = results[0].pattern.xs
    lines = [CSV_MAGIC, f"# scenario={s.name}", f"# unit_mode={s.unit_mode}",
             "x," + ",".join(f"intensity_{lab}" for lab in labels)]
    for i, x in enumerate(xs):
        lines.append(",".join([_num(x)] + [_num(r.pattern.intensity[i])
                                           for r in results]))
    for lab, r in zip(labels, results):
        lines += _metrics_lines(r.pattern, prefix=f"{lab}.")
    ref = results[1].pattern.intensity
    peak = ref.max()
    for lab, r in zip(labels, results):
        if r is results[1]:
            continue
        diff = np.max(np.abs(r.pattern.intensity - ref)) / peak if peak > 0 else math.inf
        lines.append(f"# {lab}.max_relative_difference_vs_topological={_num(diff)}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_list_scenarios(args):
    if args.export:
        sys.stdout.write(export_scenario(builtin(args.export)))
        return EXIT_OK
    for name in BUILTINS:
        s = builtin(name)
        sys.stdout.write(f"{name:10s} {s.unit_mode:8s} {s.model.label}\n")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "gauge-check": cmd_gauge_check,
    "predict-shift": cmd_predict_shift,
    "compare-models": cmd_compare_models,
    "list-scenarios": cmd_list_scenarios,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ParseError, ValidationError, UnknownScenario, OSError) as exc:
        sys.stderr.write(f"abwave: invalid input: {exc}\n")
        return EXIT_INVALID
    except (AbwaveError, ValueError, FloatingPointError) as exc:
        sys.stderr.write(f"abwave: numerical error: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
