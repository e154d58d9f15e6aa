"""Continuous dynamical-system kernel.

Fixed-step RK4 flows, grid-sampled basins of attraction and the two
adversarial perturbation channels: additive state offsets and additive
environment offsets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DivergenceError, DomainError, ResamplingRequiredError

# Cell labels that are not attractor indices.
UNRESOLVED = -1
BOUNDARY = -2

DIVERGENCE_NORM = 1e9


def constant_environment(value) -> Callable[[float], np.ndarray]:
    beta = np.atleast_1d(np.asarray(value, dtype=float))
    return lambda t: beta


def piecewise_constant(breakpoints: Sequence[float], values: Sequence) -> Callable[[float], np.ndarray]:
    """Environment schedule holding ``values[k]`` on ``[breakpoints[k], breakpoints[k+1])``.

    ``breakpoints`` must start at 0 and be strictly increasing; the last
    value holds forever.
    """
    bp = np.asarray(breakpoints, dtype=float)
    if len(bp) != len(values) or len(bp) == 0:
        raise ValueError("need one value per breakpoint")
    if bp[0] != 0.0 or np.any(np.diff(bp) <= 0):
        raise ValueError("breakpoints must start at 0 and increase strictly")
    vals = [np.atleast_1d(np.asarray(v, dtype=float)) for v in values]

    def schedule(t: float) -> np.ndarray:
        k = int(np.searchsorted(bp, t, side="right")) - 1
        return vals[max(k, 0)]

    return schedule


@dataclass(frozen=True)
class DynamicalSystem:
    """``dx/dt = f(x, beta(t))`` on an ``n``-dimensional state space.

    ``f`` takes a state vector and an environment vector and returns the
    derivative. If ``vectorized`` is set, ``f`` must also accept a batch of
    states with shape ``(m, n)`` and return derivatives of the same shape;
    basin estimation then integrates all grid cells at once.
    """

    dimension: int
    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    environment: Callable[[float], np.ndarray] = field(default_factory=lambda: constant_environment(0.0))
    vectorized: bool = False

    def __post_init__(self):
        if self.dimension < 1:
            raise DomainError("dimension must be >= 1")

    def derivative(self, x: np.ndarray, t: float = 0.0) -> np.ndarray:
        return np.asarray(self.f(x, self.environment(t)), dtype=float)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dt: float

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim == 1:
            self.states = self.states[:, None]
        if len(self.times) != len(self.states):
            raise ValueError("one timestamp per state required")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("timestamps must increase strictly")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class StatePerturbation:
    """Additive state offset ``gamma(x)``.

    ``schedule`` is ``"every"`` or a collection of step indices (step 0 is
    the initial state).
    """

    gamma: Callable[[np.ndarray], np.ndarray]
    schedule: str | frozenset = "every"

    def active(self, step: int) -> bool:
        if isinstance(self.schedule, str):
            if self.schedule != "every":
                raise ValueError(f"unknown schedule {self.schedule!r}")
            return True
        return step in self.schedule

    @classmethod
    def at_steps(cls, gamma, steps: Iterable[int]) -> "StatePerturbation":
        return cls(gamma, frozenset(int(s) for s in steps))


@dataclass(frozen=True)
class DynamicsPerturbation:
    """Additive environment offset ``lambda(x, beta)``."""

    lam: Callable[[np.ndarray, np.ndarray], np.ndarray]


def _check_inputs(system: DynamicalSystem, x0, T: float, dt: float) -> np.ndarray:
    if not dt > 0:
        raise DomainError("dt must be positive")
    if not T >= 0:
        raise DomainError("T must be non-negative")
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if x.shape != (system.dimension,):
        raise DomainError(f"initial state has shape {x.shape}, expected ({system.dimension},)")
    if not np.all(np.isfinite(x)):
        raise DomainError("initial state must be finite")
    return x


def _step_sizes(T: float, dt: float) -> list[float]:
    n = int(np.floor(T / dt + 1e-9))
    steps = [dt] * n
    rest = T - n * dt
    if rest > 1e-12 * max(1.0, T):
        steps.append(rest)
    return steps


def _rk4(field_fn, x, t, h):
    k1 = field_fn(x, t)
    k2 = field_fn(x + 0.5 * h * k1, t + 0.5 * h)
    k3 = field_fn(x + 0.5 * h * k2, t + 0.5 * h)
    k4 = field_fn(x + h * k3, t + h)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _run(field_fn, x, T, dt, pre_step=None) -> Trajectory:
    times = [0.0]
    t = 0.0
    if pre_step is not None:
        x = pre_step(0, x)
    states = [x.copy()]

    def checked(xs, ts):
        d = np.asarray(field_fn(xs, ts), dtype=float)
        if not np.all(np.isfinite(d)):
            raise DivergenceError(f"non-finite derivative at t={ts:g}", states[-1].copy(), times[-1])
        return d

    for k, h in enumerate(_step_sizes(T, dt), start=1):
        x = _rk4(checked, x, t, h)
        t = min(k * dt, T)
        if pre_step is not None:
            x = pre_step(k, x)
        times.append(t)
        states.append(x.copy())
    times[-1] = T if len(times) > 1 else 0.0
    return Trajectory(np.array(times), np.array(states), dt)


def integrate_flow(system: DynamicalSystem, x0, T: float, dt: float) -> Trajectory:
    """Integrate the flow from ``x0`` over ``[0, T]`` with fixed-step RK4.

    The last state approximates the time-T flow map applied to ``x0``.
    Raises :class:`DivergenceError` if a derivative evaluates non-finite.
    """
    x = _check_inputs(system, x0, T, dt)
    return _run(lambda xs, t: system.f(xs, system.environment(t)), x, T, dt)


def apply_state_perturbation(system: DynamicalSystem, x0, pert: StatePerturbation,
                             T: float, dt: float) -> Trajectory:
    """Flow where the state is replaced by ``x + gamma(x)`` at scheduled steps.

    The perturbation is applied before the vector field is evaluated from
    that step, and the recorded state is the perturbed one.
    """
    x = _check_inputs(system, x0, T, dt)

    def perturb(step, xs):
        if pert.active(step):
            return xs + np.asarray(pert.gamma(xs), dtype=float)
        return xs

    return _run(lambda xs, t: system.f(xs, system.environment(t)), x, T, dt, pre_step=perturb)


def apply_dynamics_perturbation(system: DynamicalSystem, x0, pert: DynamicsPerturbation,
                                T: float, dt: float) -> Trajectory:
    x = _check_inputs(system, x0, T, dt)

    def field_fn(xs, t):
        beta = system.environment(t)
        return system.f(xs, beta + np.asarray(pert.lam(xs, beta), dtype=float))

    return _run(field_fn, x, T, dt)


def finite_difference(traj: Trajectory) -> np.ndarray:
    """Central differences inside, second-order one-sided at the ends."""
    if len(traj) < 2:
        return np.zeros_like(traj.states)
    edge = 2 if len(traj) >= 3 else 1
    return np.gradient(traj.states, traj.times, axis=0, edge_order=edge)


def trajectory_deviation(a: Trajectory, b: Trajectory) -> float:
    """Largest Euclidean gap between the time derivatives of two trajectories."""
    if len(a) != len(b) or a.dt != b.dt or not np.array_equal(a.times, b.times):
        raise ResamplingRequiredError(
            f"trajectories sampled differently (len {len(a)} vs {len(b)}, dt {a.dt} vs {b.dt}); resample first")
    if a.states.shape != b.states.shape:
        raise ResamplingRequiredError("state dimensions differ")
    gap = finite_difference(a) - finite_difference(b)
    return float(np.max(np.linalg.norm(gap, axis=1))) if len(gap) else 0.0


def attack_succeeds(achieved: Trajectory, desired: Trajectory, eps: float) -> bool:
    """Trajectory-tracking success test; ``eps`` has no default on purpose."""
    return trajectory_deviation(achieved, desired) < eps


@dataclass
class BasinMap:
    bounds: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]
    labels: np.ndarray
    attractors: list[np.ndarray]

    @property
    def boundary(self) -> set[tuple[int, ...]]:
        return {tuple(int(i) for i in idx) for idx in np.argwhere(self.labels == BOUNDARY)}

    def cell_centers(self, axis: int) -> np.ndarray:
        lo, hi = self.bounds[axis]
        n = self.resolution[axis]
        return lo + (np.arange(n) + 0.5) * (hi - lo) / n

    def basin(self, k: int) -> set[tuple[int, ...]]:
        return {tuple(int(i) for i in idx) for idx in np.argwhere(self.labels == k)}

    def label_at(self, point) -> int:
        idx = []
        for axis, x in enumerate(np.atleast_1d(point)):
            lo, hi = self.bounds[axis]
            n = self.resolution[axis]
            idx.append(int(np.clip(np.floor((x - lo) / (hi - lo) * n), 0, n - 1)))
        return int(self.labels[tuple(idx)])


def _batched_field(system: DynamicalSystem):
    if system.vectorized:
        return lambda xs, t: np.asarray(system.f(xs, system.environment(t)), dtype=float)

    def field_fn(xs, t):
        beta = system.environment(t)
        return np.array([system.f(x, beta) for x in xs], dtype=float)

    return field_fn


def _settle(field_fn, pts: np.ndarray, horizon: float, dt: float):
    """Integrate a batch; return final states, last step lengths and a live mask."""
    x = pts.copy()
    prev = x.copy()
    live = np.ones(len(x), dtype=bool)
    t = 0.0
    for h in _step_sizes(horizon, dt):
        prev = x.copy()
        with np.errstate(all="ignore"):
            nxt = _rk4(field_fn, x, t, h)
        bad = ~np.all(np.isfinite(nxt), axis=1) | (np.linalg.norm(np.nan_to_num(nxt, nan=np.inf), axis=1) > DIVERGENCE_NORM)
        live &= ~bad
        x = np.where(live[:, None], nxt, x)
        t += h
    moved = np.linalg.norm(x - prev, axis=1)
    return x, moved, live


def estimate_basins(system: DynamicalSystem, bounds, resolution, horizon: float,
                    tol: float, dt: float = 0.01) -> BasinMap:
    """Label a regular grid of cell centres by the attractor each one reaches.

    A cell converges when its last integration step moves less than ``tol``.
    End points within ``10 * tol`` of each other are merged into one
    attractor; attractors that do not recapture slightly perturbed copies of
    themselves (saddles, repellers) are discarded and their cells stay
    UNRESOLVED. Cells whose neighbourhood touches two different basins are
    relabelled BOUNDARY.
    """
    n = system.dimension
    if n > 3:
        raise DomainError("grid basin estimation supports at most 3 dimensions")
    if n == 1 and np.ndim(bounds) == 1:
        bounds = [bounds]
    if np.ndim(resolution) == 0:
        resolution = [int(resolution)] * n
    bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
    resolution = tuple(int(r) for r in resolution)
    if len(bounds) != n or len(resolution) != n:
        raise DomainError("need bounds and resolution for every dimension")
    if any(r < 2 for r in resolution):
        raise DomainError("resolution must be >= 2 per axis")
    if any(hi <= lo for lo, hi in bounds):
        raise DomainError("empty bounds")

    axes = [lo + (np.arange(r) + 0.5) * (hi - lo) / r for (lo, hi), r in zip(bounds, resolution)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    field_fn = _batched_field(system)

    ends, moved, live = _settle(field_fn, pts, horizon, dt)
    converged = live & (moved < tol)

    attractors: list[np.ndarray] = []
    raw = np.full(len(pts), UNRESOLVED, dtype=int)
    for i in np.flatnonzero(converged):
        for k, a in enumerate(attractors):
            if np.linalg.norm(ends[i] - a) < 10 * tol:
                raw[i] = k
                break
        else:
            attractors.append(ends[i].copy())
            raw[i] = len(attractors) - 1

    # Stability probe: nudge each candidate along every axis and see if it comes back.
    cell = min((hi - lo) / r for (lo, hi), r in zip(bounds, resolution))
    delta = 1e-2 * cell
    keep = []
    for a in attractors:
        probes = np.array([a + s * delta * e for e in np.eye(n) for s in (1.0, -1.0)])
        p_end, _, p_live = _settle(field_fn, probes, horizon, dt)
        keep.append(bool(np.all(p_live) and np.all(np.linalg.norm(p_end - a, axis=1) < 10 * tol + delta * 1e-3)))
    remap = {}
    stable = []
    for k, ok in enumerate(keep):
        if ok:
            remap[k] = len(stable)
            stable.append(attractors[k])
    labels = np.array([remap.get(k, UNRESOLVED) if k >= 0 else UNRESOLVED for k in raw], dtype=int)
    labels = labels.reshape(resolution)

    final = labels.copy()
    for idx in itertools.product(*(range(r) for r in resolution)):
        seen = set()
        if labels[idx] >= 0:
            seen.add(int(labels[idx]))
        for axis in range(n):
            for step in (-1, 1):
                j = list(idx)
                j[axis] += step
                if 0 <= j[axis] < resolution[axis]:
                    lab = int(labels[tuple(j)])
                    if lab >= 0:
                        seen.add(lab)
        if len(seen) >= 2:
            final[idx] = BOUNDARY
    return BasinMap(bounds, resolution, final, stable)
