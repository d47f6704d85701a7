"""Where the bore sits matters: run the five coverage variants under both
phase rules and compare fringe spacing with the field-free pattern."""

from abwave.analysis import metrics
from abwave.scenarios import COVERAGES, builtin, free_reference, run, with_model


def main():
    free = metrics(run(free_reference(builtin("fig1_5")), threads=4).pattern)
    print(f"{'coverage':18s} {'topological':>12s} {'local':>12s}   (spacing / free spacing)")
    for cov in COVERAGES:
        s = builtin("fig1_5", coverage=cov)
        row = []
        for kind in ("topological", "local"):
            m = metrics(run(with_model(s, kind), threads=4).pattern)
            row.append(m.fringe_spacing / free.fringe_spacing)
        print(f"{cov:18s} {row[0]:12.5f} {row[1]:12.5f}")


if __name__ == "__main__":
    main()
