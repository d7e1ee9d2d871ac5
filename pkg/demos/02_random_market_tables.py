"""Random-market comparison tables.

Draws iid uniform preferences and priorities, runs RM / TTC / DA over
many replications, and prints the two standard tables: rank summary
statistics, and the share of students pushed past a set of rank
cutoffs.  With the default settings this takes a few seconds; bump N
and REPS for the full-size experiment.
"""

import math

from schoolmatch import ExperimentConfig, run_experiment

N = 100
REPS = 200
SEED = 42

thresholds = (1.0, 2.0, math.log(N), 0.1 * N, 0.25 * N, 0.5 * N)
config = ExperimentConfig(
    n=N,
    replications=REPS,
    master_seed=SEED,
    mechanisms=("RM", "TTC", "DA"),
    thresholds=thresholds,
)
report = run_experiment(config)

print(__doc__)
print(f"n={N}, {REPS} replications, master seed {SEED}\n")

header = f"{'':12s}" + "".join(f"{m:>10s}" for m in config.mechanisms)
print(header)
for row, attr, fmt in (
    ("mean rank", "mean", "{:10.2f}"),
    ("max rank", "max_mean", "{:10.1f}"),
    ("variance", "variance", "{:10.1f}"),
    ("envy share", "envy_share", "{:10.3f}"),
):
    cells = "".join(
        fmt.format(getattr(report.summaries[m], attr)) for m in config.mechanisms
    )
    print(f"{row:12s}{cells}")

print("\npercent of students with rank worse than m:")
labels = ["1", "2", "log n", "0.1 n", "0.25 n", "0.5 n"]
print(f"{'m':12s}" + "".join(f"{m:>10s}" for m in config.mechanisms))
for i, label in enumerate(labels):
    cells = "".join(
        f"{100 * report.summaries[m].threshold_share[i]:10.1f}"
        for m in config.mechanisms
    )
    print(f"{label:12s}{cells}")

print(
    "\nReading: RM keeps nearly everyone inside their top few choices;"
    "\nTTC sends a tail of students deep into their list (its max rank"
    "\ngrows with n, not log n), and DA sits in between on the tail but"
    "\nassigns the average student a log(n)-ish rank."
)
