"""Trajectory containers and paired snapshot matrices.

A trajectory is an ordered sequence of states sampled at a fixed interval.
Pairing it with itself at a lag of ``n`` steps produces the two snapshot
matrices ``X`` and ``Y`` whose columns are states separated by the lag
time; all estimators consume data in that column-wise form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Format string giving lossless decimal round-trips for float64.
FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class Trajectory:
    """States sampled at a fixed interval.

    Attributes
    ----------
    states : (n, d) ndarray
        One state per row.
    step : float
        Sampling interval in time units, > 0.
    """

    states: np.ndarray
    step: float

    def __post_init__(self):
        arr = np.asarray(self.states, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"states must be a non-empty (n, d) array, got shape {arr.shape}")
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        object.__setattr__(self, "states", arr)

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class DataPairs:
    """Paired snapshot matrices ``X`` and ``Y`` separated by one lag time.

    Attributes
    ----------
    X, Y : (d, m) ndarray
        Snapshots as columns; column ``i`` of ``Y`` is the state observed
        one lag time after column ``i`` of ``X``.
    lag_time : float
        Physical lag between paired columns, > 0.
    lag_steps : int or None
        Lag in sampling steps when the pairs came from a trajectory.
    """

    X: np.ndarray
    Y: np.ndarray
    lag_time: float
    lag_steps: int | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if X.shape != Y.shape:
            raise ValueError(f"X shape {X.shape} does not match Y shape {Y.shape}")
        if not self.lag_time > 0:
            raise ValueError(f"lag_time must be positive, got {self.lag_time}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def d(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]


def pairs_from_trajectory(traj: Trajectory, lag_steps: int) -> DataPairs:
    """Pair a trajectory with itself shifted by ``lag_steps`` samples.

    With states ``z_0 .. z_{n-1}``, ``X`` holds ``z_0 .. z_{m-1}`` and ``Y``
    holds ``z_lag .. z_{lag+m-1}`` where ``m = n - lag_steps``.
    """
    if lag_steps < 1:
        raise ValueError(f"lag_steps must be >= 1, got {lag_steps}")
    n = len(traj)
    m = n - lag_steps
    if m < 1:
        raise ValueError(
            f"trajectory of length {n} is too short for lag_steps={lag_steps} "
            f"(needs at least {lag_steps + 1} states)"
        )
    X = traj.states[:m].T.copy()
    Y = traj.states[lag_steps : lag_steps + m].T.copy()
    return DataPairs(X=X, Y=Y, lag_time=lag_steps * traj.step, lag_steps=lag_steps)


def pairs_from_snapshots(xs, ys, lag_time: float) -> DataPairs:
    """Assemble pairs from explicit snapshot lists, column-wise in order.

    Each element of ``xs``/``ys`` is one d-dimensional state; scalars are
    treated as 1-D states.
    """
    X = np.asarray(xs, dtype=float)
    Y = np.asarray(ys, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"snapshot counts differ: {X.shape[0]} vs {Y.shape[0]}")
    if X.shape != Y.shape:
        raise ValueError(f"snapshot dimensions differ: {X.shape[1]} vs {Y.shape[1]}")
    return DataPairs(X=X.T.copy(), Y=Y.T.copy(), lag_time=lag_time)


def concat(a: DataPairs, b: DataPairs) -> DataPairs:
    """Concatenate two pair sets column-wise.

    Pairing each trajectory separately and concatenating the results avoids
    the spurious pairs a naive end-to-end join of raw trajectories would
    create across the seam.
    """
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    if a.lag_time != b.lag_time:
        raise ValueError(f"lag_time mismatch: {a.lag_time} vs {b.lag_time}")
    lag_steps = a.lag_steps if a.lag_steps == b.lag_steps else None
    return DataPairs(
        X=np.hstack([a.X, b.X]),
        Y=np.hstack([a.Y, b.Y]),
        lag_time=a.lag_time,
        lag_steps=lag_steps,
    )


def load_trajectory_csv(path, step: float) -> Trajectory:
    """Read a trajectory from CSV: one state per line, comma-separated.

    Lines starting with ``#`` are treated as headers and skipped; blank
    lines are ignored. Parse failures report the 1-based line number.
    """
    rows: list[list[float]] = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = text.split(",")
            try:
                row = [float(f) for f in fields]
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric field in {text!r}") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(
                    f"{path}: line {lineno}: expected {width} fields, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return Trajectory(states=np.asarray(rows), step=step)


def save_trajectory_csv(traj: Trajectory, path) -> None:
    """Write a trajectory as CSV at full float64 precision."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in traj.states:
            fh.write(",".join(FLOAT_FORMAT % v for v in row))
            fh.write("\n")
