"""Shared time-marching driver for both solvers.

The loop is adaptive: each step takes the stability-limited dt, clipped so
that requested snapshot times and the horizon T are landed on exactly.
Snapshot times are how an epsilon sweep puts every run on one shared time
grid.  A non-finite state aborts the march and returns the partial record
flagged incomplete.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

__all__ = ["IntegrationError", "Trajectory", "advance"]

_TIME_ATOL = 1e-12


class IntegrationError(RuntimeError):
    """Raised when a step produces non-finite fields; carries a snapshot."""

    def __init__(self, message: str, state: Any = None):
        super().__init__(message)
        self.state = state


@dataclass
class Trajectory:
    """Observer time series plus full-state snapshots from one run."""

    times: list[float] = field(default_factory=list)
    records: list[Any] = field(default_factory=list)
    snapshot_times: list[float] = field(default_factory=list)
    snapshots: list[Any] = field(default_factory=list)
    extra: dict[str, list[float]] = field(default_factory=dict)
    steps: int = 0
    complete: bool = True
    warnings: list[str] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        """Extract one observer column as an array."""
        return np.array([getattr(rec, name) for rec in self.records])

    @property
    def time_array(self) -> np.ndarray:
        return np.array(self.times)


def advance(
    state: Any,
    T: float,
    dt_fn: Callable[[Any], float],
    step_fn: Callable[[Any, float], Any],
    observe_fn: Callable[[Any], Any],
    observer_cadence: int = 1,
    snapshot_times: np.ndarray | None = None,
    observers: dict[str, Callable[[Any], float]] | None = None,
    copy_fn: Callable[[Any], Any] | None = None,
) -> Trajectory:
    """March ``state`` to time T, recording diagnostics and snapshots.

    observe_fn builds one diagnostics record from the current state; it runs
    at t = 0, every ``observer_cadence`` steps, at every snapshot time, and
    at T.  ``observers`` are optional extra named scalar callbacks recorded
    alongside.  Snapshots deep-copy the state via ``copy_fn``.
    """
    if T < 0.0:
        raise ValueError("T must be nonnegative")
    if observer_cadence < 1:
        raise ValueError("observer_cadence must be >= 1")
    traj = Trajectory()
    observers = observers or {}
    for name in observers:
        traj.extra[name] = []

    pending = []
    if snapshot_times is not None:
        pending = sorted(float(t) for t in np.asarray(snapshot_times).ravel())

    def record(s: Any) -> None:
        traj.times.append(s.t)
        traj.records.append(observe_fn(s))
        for name, fn in observers.items():
            traj.extra[name].append(float(fn(s)))

    def snapshot_if_due(s: Any) -> None:
        while pending and s.t >= pending[0] - _TIME_ATOL:
            pending.pop(0)
            traj.snapshot_times.append(s.t)
            traj.snapshots.append(copy_fn(s) if copy_fn is not None else s)

    record(state)
    snapshot_if_due(state)

    since_obs = 0
    while state.t < T - _TIME_ATOL:
        dt = dt_fn(state)
        if not np.isfinite(dt) or dt <= 0.0:
            traj.complete = False
            traj.warnings.append(f"non-positive dt {dt} at t={state.t}")
            return traj
        dt = min(dt, T - state.t)
        if pending:
            dt = min(dt, max(pending[0] - state.t, _TIME_ATOL))
        try:
            state = step_fn(state, dt)
        except IntegrationError as err:
            traj.complete = False
            traj.warnings.append(f"integration failed at t={state.t}: {err}")
            return traj
        traj.steps += 1
        since_obs += 1
        due_snapshot = bool(pending) and state.t >= pending[0] - _TIME_ATOL
        at_end = state.t >= T - _TIME_ATOL
        if since_obs >= observer_cadence or due_snapshot or at_end:
            record(state)
            since_obs = 0
        snapshot_if_due(state)
    return traj
