"""Append-only per-iteration run records shared by all pipeline stages."""

import csv

COLUMNS = [
    "stage", "iteration", "J", "vol_frac", "C", "delta",
    "lam", "Lam", "alpha", "gamma", "seconds",
]

# columns excluded from determinism comparisons
TIMING_COLUMNS = {"seconds"}


class RunHistory:
    def __init__(self):
        self._rows = []

    def append(self, **fields):
        stage = fields.get("stage")
        it = fields.get("iteration")
        for row in reversed(self._rows):
            if row["stage"] == stage:
                if it is not None and row["iteration"] >= it:
                    raise ValueError("iteration indices must increase within a stage")
                break
        self._rows.append(dict(fields))

    @property
    def rows(self):
        return tuple(self._rows)

    def __len__(self):
        return len(self._rows)

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(COLUMNS)
            for row in self._rows:
                w.writerow([_fmt(row.get(c)) for c in COLUMNS])


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))
