"""Time-series container shared by the evolution drivers and the
decay-analysis routines."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["RunHistory", "HistoryRecorder"]


@dataclass
class RunHistory:
    """Sampled observables of one run: times, named scalar series,
    optional full state snapshots, and the config echo."""

    t: np.ndarray
    series: dict
    snapshots: list = field(default_factory=list)  # (t, state) pairs
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        if self.t.size > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("sample times must be strictly increasing")
        for name, vals in self.series.items():
            vals = np.asarray(vals, dtype=float)
            if vals.shape != self.t.shape:
                raise ValueError(f"series {name!r} length mismatch")
            if not np.all(np.isfinite(vals)):
                raise ValueError(f"series {name!r} contains non-finite entries")
            self.series[name] = vals

    def column(self, name) -> np.ndarray:
        return self.series[name]

    def to_csv(self, path, columns=None):
        names = list(self.series) if columns is None else list(columns)
        data = np.column_stack([self.t] + [self.series[n] for n in names])
        np.savetxt(path, data, delimiter=",", header=",".join(["t"] + names), comments="")


class HistoryRecorder:
    """Append-only collector used while a run is in progress."""

    def __init__(self, names):
        self._names = list(names)
        self._t = []
        self._rows = {n: [] for n in self._names}
        self.snapshots = []

    def record(self, t, **values):
        self._t.append(float(t))
        for n in self._names:
            self._rows[n].append(float(values[n]))

    def snapshot(self, t, state):
        self.snapshots.append((float(t), state))

    def freeze(self, meta=None) -> RunHistory:
        return RunHistory(
            t=np.array(self._t),
            series={n: np.array(v) for n, v in self._rows.items()},
            snapshots=self.snapshots,
            meta=dict(meta or {}),
        )
