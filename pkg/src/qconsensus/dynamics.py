"""Consensus master equation: generator action, exact propagation, spectra.

Without a Hamiltonian the generator only moves each density-matrix entry
within its operator-space component, so it is block diagonal there and every
block is propagated with its own small matrix exponential.  With a
Hamiltonian the full ``4^n`` vectorized generator is exponentiated.
Vectorization stacks columns: ``vec(A X B) = (B^T kron A) vec(X)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import ResourceError, ValidationError
from .graphs import basis_map, cut_flows, operator_component_labels
from .perm import PermSet, closure
from .qstate import (
    _mat,
    conjugate,
    group_average,
    n_qubits,
    partial_trace_to_qubit,
    trace_distance,
)

MAX_BLOCK_QUBITS = 8
MAX_DENSE_QUBITS = 5
MAX_SPECTRAL_QUBITS = 6
DEFAULT_DWELL = 1e-3


@dataclass(frozen=True)
class HamiltonianSpec:
    """Network Hamiltonian built from a single-qubit Hermitian ``base``.

    ``kind="direct_sum"`` is ``sum_i I..I (x) H0 (x) I..I``; ``"tensor_product"``
    is ``H0 (x) ... (x) H0``.
    """

    kind: str
    base: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        base = np.array(self.base, dtype=complex)
        problems = []
        if self.kind not in ("direct_sum", "tensor_product"):
            problems.append(f"unknown Hamiltonian kind {self.kind!r}")
        if base.shape != (2, 2):
            problems.append(f"base must be 2x2, got shape {base.shape}")
        elif np.max(np.abs(base - base.conj().T)) > 1e-12:
            problems.append("base is not Hermitian")
        if not self.hbar > 0:
            problems.append("hbar must be positive")
        if problems:
            raise ValidationError(problems, what="Hamiltonian")
        base.setflags(write=False)
        object.__setattr__(self, "base", base)

    def matrix(self, n: int) -> np.ndarray:
        if self.kind == "tensor_product":
            h = np.ones((1, 1), dtype=complex)
            for _ in range(n):
                h = np.kron(h, self.base)
            return h
        h = np.zeros((2**n, 2**n), dtype=complex)
        for i in range(n):
            h += np.kron(np.kron(np.eye(2**i), self.base), np.eye(2 ** (n - i - 1)))
        return h

    def propagator(self, t: float, n: int | None = None) -> np.ndarray:
        """``exp(-i H t / hbar)`` for the network (or for one qubit if ``n`` is None)."""
        h = self.base if n is None else self.matrix(n)
        w, v = np.linalg.eigh(h)
        return (v * np.exp(-1j * w * t / self.hbar)) @ v.conj().T


@dataclass(frozen=True)
class GeneratorSpec:
    perms: PermSet
    weights: tuple = ()
    hamiltonian: HamiltonianSpec | None = None

    def __post_init__(self):
        perms = self.perms if isinstance(self.perms, PermSet) else PermSet(self.perms)
        object.__setattr__(self, "perms", perms)
        w = self.weights
        if isinstance(w, Mapping):
            w = tuple(float(w.get(p, 1.0)) for p in perms)
        elif len(w) == 0:
            w = (1.0,) * len(perms)
        else:
            w = tuple(float(x) for x in w)
        if len(w) != len(perms):
            raise ValidationError(f"{len(w)} weights for {len(perms)} permutations")
        if any(not x > 0 for x in w):
            raise ValidationError("weights must be strictly positive")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.perms.n

    @property
    def total_weight(self) -> float:
        return float(sum(self.weights))

    def without_hamiltonian(self) -> "GeneratorSpec":
        return GeneratorSpec(self.perms, self.weights)


def _as_generator(g) -> GeneratorSpec:
    return g if isinstance(g, GeneratorSpec) else GeneratorSpec(g)


def apply_generator(rho, g: GeneratorSpec) -> np.ndarray:
    """Right-hand side ``d rho / dt`` of the master equation."""
    g = _as_generator(g)
    a = _mat(rho)
    if n_qubits(a) != g.n:
        raise ValueError(f"state has {n_qubits(a)} qubits, generator acts on {g.n}")
    out = np.zeros_like(a)
    for w, p in zip(g.weights, g.perms):
        out += w * (conjugate(a, p) - a)
    if g.hamiltonian is not None:
        h = g.hamiltonian.matrix(g.n)
        out += (-1j / g.hamiltonian.hbar) * (h @ a - a @ h)
    return out


def vectorized_generator(g: GeneratorSpec) -> np.ndarray:
    """Dense ``4^n x 4^n`` matrix of the generator acting on column-stacked ``vec(rho)``."""
    g = _as_generator(g)
    d = 2**g.n
    eye = np.eye(d)
    gen = np.zeros((d * d, d * d), dtype=complex)
    for w, p in zip(g.weights, g.perms):
        m = basis_map(p)
        u = np.zeros((d, d))
        u[m, np.arange(d)] = 1.0
        gen += w * (np.kron(u, u) - np.eye(d * d))
    if g.hamiltonian is not None:
        h = g.hamiltonian.matrix(g.n)
        gen += (-1j / g.hamiltonian.hbar) * (np.kron(eye, h) - np.kron(h.T, eye))
    return gen


class BlockGenerator:
    """The Hamiltonian-free generator restricted to each operator-space component.

    Components of equal size are stacked so that exponentials and eigenvalues
    are computed in batches.  Entries are addressed by their flat row-major
    label ``row * 2^n + col``.
    """

    def __init__(self, g: GeneratorSpec, max_qubits: int = MAX_BLOCK_QUBITS):
        g = _as_generator(g)
        if g.hamiltonian is not None:
            raise ValueError("block decomposition requires a generator without Hamiltonian")
        if g.n > max_qubits:
            raise ResourceError(f"block propagation is capped at n <= {max_qubits} (got n={g.n})")
        self.g = g
        self.n = g.n
        d = 2**g.n
        self.count, labels = operator_component_labels(g.perms)
        self.labels = labels
        flat_labels = labels.ravel()
        order = np.argsort(flat_labels, kind="stable")
        sizes = np.bincount(flat_labels)
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        pos = np.empty(d * d, dtype=int)
        pos[order] = np.arange(d * d) - np.repeat(starts, sizes)
        self._pos = pos
        targets = []
        for p in g.perms:
            m = basis_map(p)
            targets.append((m[:, None] * d + m[None, :]).ravel())
        self.groups = []  # (size, component ids, flat labels (g, size), K blocks (g, size, size))
        for size in np.unique(sizes):
            comp_ids = np.flatnonzero(sizes == size)
            members = np.stack([order[starts[c]:starts[c] + size] for c in comp_ids])
            blocks = np.zeros((len(comp_ids), size, size))
            if size > 1:
                slot = np.empty(self.count, dtype=int)
                slot[comp_ids] = np.arange(len(comp_ids))
                src = members.ravel()
                grp = slot[flat_labels[src]]
                for w, tgt in zip(g.weights, targets):
                    dst = tgt[src]
                    np.add.at(blocks, (grp, pos[dst], pos[src]), w)
                    np.add.at(blocks, (grp, pos[src], pos[src]), -w)
            self.groups.append((int(size), comp_ids, members, blocks))
        self._cache: dict = {}

    def _exp(self, dt: float):
        key = float(dt)
        if key not in self._cache:
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[key] = [
                expm(blocks * dt) if size > 1 else None
                for size, _, _, blocks in self.groups
            ]
        return self._cache[key]

    def evolve(self, a: np.ndarray, dt: float) -> np.ndarray:
        """Exact solution after time ``dt`` starting from the matrix ``a``."""
        flat = a.ravel()
        out = flat.copy()
        for (size, _, members, _), e in zip(self.groups, self._exp(dt)):
            if e is None:
                continue
            x = flat[members]
            out[members] = np.einsum("gij,gj->gi", e, x)
        return out.reshape(a.shape)

    def eigenvalues(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per size group: component ids and their eigenvalues, shape ``(g, size)``."""
        res = []
        for size, comp_ids, _, blocks in self.groups:
            if size == 1:
                ev = np.zeros((len(comp_ids), 1), dtype=complex)
            else:
                ev = np.linalg.eigvals(blocks)
            res.append((comp_ids, ev))
        return res


class DenseGenerator:
    """Full vectorized generator, needed once a Hamiltonian couples components."""

    def __init__(self, g: GeneratorSpec, max_qubits: int = MAX_DENSE_QUBITS):
        g = _as_generator(g)
        if g.n > max_qubits:
            raise ResourceError(
                f"dense vectorized propagation is capped at n <= {max_qubits} (got n={g.n})"
            )
        self.g = g
        self.matrix = vectorized_generator(g)
        self._cache: dict = {}

    def evolve(self, a: np.ndarray, dt: float) -> np.ndarray:
        key = float(dt)
        if key not in self._cache:
            if len(self._cache) > 16:
                self._cache.clear()
            self._cache[key] = expm(self.matrix * dt)
        v = self._cache[key] @ a.ravel(order="F")
        return v.reshape(a.shape, order="F")


def make_propagator(g: GeneratorSpec, max_qubits: int | None = None):
    g = _as_generator(g)
    if g.hamiltonian is None:
        return BlockGenerator(g, max_qubits or MAX_BLOCK_QUBITS)
    return DenseGenerator(g, max_qubits or MAX_DENSE_QUBITS)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (T, 2^n, 2^n)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def n(self) -> int:
        return n_qubits(self.states[0])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def reduced(self, k: int) -> np.ndarray:
        """Reduced states of qubit ``k`` along the trajectory, shape ``(T, 2, 2)``."""
        return np.stack([partial_trace_to_qubit(s, k).data for s in self.states])


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float).ravel()
    if t.size == 0 or t[0] != 0.0:
        raise ValueError("time grid must start at 0")
    if np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return t


def _steps(t: np.ndarray) -> np.ndarray:
    # uniform grids give bitwise-identical increments so the exponential is reused
    dts = np.diff(t)
    if dts.size and np.allclose(dts, dts[0], rtol=1e-12, atol=0):
        return np.full_like(dts, dts[0])
    return dts


def propagate(rho0, g: GeneratorSpec, times, max_qubits: int | None = None) -> Trajectory:
    """Exact states ``rho(t)`` on the time grid ``times`` (which starts at 0)."""
    g = _as_generator(g)
    a = np.array(_mat(rho0), dtype=complex)
    if n_qubits(a) != g.n:
        raise ValueError(f"state has {n_qubits(a)} qubits, generator acts on {g.n}")
    t = _check_times(times)
    prop = make_propagator(g, max_qubits)
    states = np.empty((len(t),) + a.shape, dtype=complex)
    states[0] = a
    for i, dt in enumerate(_steps(t), start=1):
        a = prop.evolve(a, dt)
        states[i] = a
    return Trajectory(t, states)


@dataclass
class SpectralReport:
    """Eigenvalues of the consensus generator, block by block.

    ``eigenvalues[c]`` belongs to operator-space component ``c``; ``rate`` is
    the smallest decay rate ``-Re(lambda)`` over nonzero eigenvalues, or
    ``None`` when the generator vanishes.
    """

    n: int
    component_sizes: list[int]
    eigenvalues: list[np.ndarray]
    rate: float | None
    null_dimension: int
    total_weight: float
    zero_tol: float = field(default=1e-9)

    def all_eigenvalues(self) -> np.ndarray:
        return np.concatenate(self.eigenvalues) if self.eigenvalues else np.zeros(0)

    def gershgorin_ok(self, tol: float = 1e-9) -> bool:
        re = self.all_eigenvalues().real
        return bool(np.all(re <= tol) and np.all(re >= -2 * self.total_weight - tol))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rate": self.rate,
            "null_dimension": self.null_dimension,
            "total_weight": self.total_weight,
            "components": [
                {"size": s, "eigenvalues": [[float(z.real), float(z.imag)] for z in ev]}
                for s, ev in zip(self.component_sizes, self.eigenvalues)
            ],
        }


def spectral_report(g: GeneratorSpec, max_qubits: int = MAX_SPECTRAL_QUBITS,
                    zero_tol: float = 1e-9) -> SpectralReport:
    """Spectrum of ``sum_pi w_pi (U_pi kron U_pi - I)`` per operator-space component."""
    g = _as_generator(g)
    if g.hamiltonian is not None:
        raise ValueError("spectral report is defined for the Hamiltonian-free generator")
    if len(g.perms) == 0:
        raise ValidationError("spectral report needs at least one permutation")
    if g.n > max_qubits:
        raise ResourceError(f"spectral report is capped at n <= {max_qubits} (got n={g.n})")
    blocks = BlockGenerator(g, max_qubits=max_qubits)
    eig: list = [None] * blocks.count
    sizes = [0] * blocks.count
    for comp_ids, ev in blocks.eigenvalues():
        for c, row in zip(comp_ids, ev):
            eig[c] = np.sort_complex(row)
            sizes[c] = len(row)
    tol = zero_tol * max(1.0, g.total_weight)
    allv = np.concatenate(eig)
    zero = np.abs(allv) <= tol
    nonzero = allv[~zero]
    rate = float(np.min(-nonzero.real)) if nonzero.size else None
    return SpectralReport(g.n, sizes, eig, rate, int(zero.sum()), g.total_weight, tol)


# --- switching ------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    duration: float
    active: PermSet


@dataclass(frozen=True)
class SwitchingSchedule:
    """Finite prefix followed by a period that repeats forever."""

    n: int
    prefix: tuple = ()
    period: tuple = ()
    dwell: float = DEFAULT_DWELL

    def __post_init__(self):
        problems = []
        segs = []
        for where, group in (("prefix", self.prefix), ("period", self.period)):
            out = []
            for i, seg in enumerate(group):
                if not isinstance(seg, Segment):
                    dur, active = seg
                    if not isinstance(active, PermSet):
                        active = PermSet(active, n=self.n)
                    seg = Segment(float(dur), active)
                if seg.active.n != self.n:
                    problems.append(f"{where}[{i}]: permutations act on {seg.active.n} qubits")
                if not seg.duration >= self.dwell:
                    problems.append(
                        f"{where}[{i}]: duration {seg.duration} below dwell time {self.dwell}"
                    )
                out.append(seg)
            segs.append(tuple(out))
        if not self.dwell > 0:
            problems.append("dwell time must be positive")
        if not segs[0] and not segs[1]:
            problems.append("schedule has no segments")
        if problems:
            raise ValidationError(problems, what="switching schedule")
        object.__setattr__(self, "prefix", segs[0])
        object.__setattr__(self, "period", segs[1])

    @property
    def prefix_duration(self) -> float:
        return float(sum(s.duration for s in self.prefix))

    @property
    def period_duration(self) -> float:
        return float(sum(s.duration for s in self.period))

    def persistent(self) -> PermSet:
        """Permutations active for a positive time in every period."""
        found = set()
        for seg in self.period:
            found.update(seg.active)
        return PermSet(found, n=self.n)

    def all_permutations(self) -> PermSet:
        found = set()
        for seg in self.prefix + self.period:
            found.update(seg.active)
        return PermSet(found, n=self.n)

    def segments(self, horizon: float):
        """Yield ``(start, end, active)`` covering ``[0, horizon]``."""
        t = 0.0
        for seg in self.prefix:
            if t >= horizon:
                return
            yield t, min(t + seg.duration, horizon), seg.active
            t += seg.duration
        if t >= horizon:
            return
        if not self.period:
            raise ValueError("horizon extends past the prefix but the period is empty")
        while t < horizon:
            for seg in self.period:
                if t >= horizon:
                    return
                yield t, min(t + seg.duration, horizon), seg.active
                t += seg.duration


def _average_or_self(a, s: PermSet):
    return group_average(a, s) if len(s) else np.array(_mat(a))


@dataclass
class SwitchingResult:
    trajectory: Trajectory
    persistent: PermSet
    total: PermSet
    persistent_closure_size: int
    total_closure_size: int
    closures_match: bool
    predicted_limit: np.ndarray
    total_average: np.ndarray
    tail_limit: np.ndarray
    segment_log: list

    @property
    def verdict(self) -> str:
        return "consensus to P*-average" if self.closures_match else "closure mismatch"


def _closure_size(s: PermSet) -> int:
    return len(closure(s)) if len(s) else 1


def propagate_switching(rho0, sched: SwitchingSchedule, horizon: float,
                        times=None, weights: Mapping | None = None,
                        max_qubits: int = MAX_BLOCK_QUBITS) -> SwitchingResult:
    """Piecewise-exact propagation under a switching schedule.

    Reports the persistent set, whether it generates the same subgroup as
    every permutation ever active, and three candidate limits: the average of
    ``rho0`` over the persistent subgroup, over the full subgroup, and the
    persistent average of the state at the start of the periodic tail (which
    is the actual limit when the prefix uses extra permutations).
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    a = np.array(_mat(rho0), dtype=complex)
    if n_qubits(a) != sched.n:
        raise ValueError(f"state has {n_qubits(a)} qubits, schedule acts on {sched.n}")
    if times is None:
        times = np.linspace(0.0, horizon, 201)
    t_out = _check_times(times)
    if t_out[-1] > horizon * (1 + 1e-12):
        raise ValueError("output times exceed the horizon")
    weights = dict(weights or {})

    # merge neighbouring segments with the same active set so a static
    # schedule takes exactly the steps that ``propagate`` would
    segs: list = []
    for start, end, active in sched.segments(horizon):
        if segs and segs[-1][2] == active:
            segs[-1][1] = end
        else:
            segs.append([start, end, active])
    grid = _steps(t_out)
    step = grid[0] if grid.size and np.all(grid == grid[0]) else None

    props: dict = {}
    states = np.empty((len(t_out),) + a.shape, dtype=complex)
    states[0] = a
    log = []
    t_now = 0.0
    out_i = 1
    prefix_end = sched.prefix_duration
    tail_state = a.copy() if prefix_end == 0 else None

    def advance(a, prop, dt):
        if prop is None or dt <= 0:
            return a
        if step is not None and abs(dt - step) <= 1e-12 * step:
            dt = step
        return prop.evolve(a, dt)

    for start, end, active in segs:
        if active not in props:
            props[active] = (
                BlockGenerator(GeneratorSpec(active, weights), max_qubits) if len(active) else None
            )
        prop = props[active]
        log.append({"start": start, "end": end, "active": [str(p) for p in active]})
        stops = [prefix_end] if tail_state is None and start < prefix_end < end else []
        while True:
            next_out = t_out[out_i] if out_i < len(t_out) else np.inf
            next_stop = stops[0] if stops else np.inf
            target = min(next_out, next_stop, end)
            a = advance(a, prop, target - t_now)
            t_now = target
            if next_stop <= target + 1e-12 and stops:
                stops.pop(0)
                tail_state = a.copy()
            if next_out <= target + 1e-12:
                states[out_i] = a
                out_i += 1
                continue
            if target >= end - 1e-12:
                break
        if tail_state is None and abs(end - prefix_end) <= 1e-12:
            tail_state = a.copy()
    if tail_state is None:
        tail_state = a.copy()

    persistent = sched.persistent()
    total = sched.all_permutations()
    p_size = _closure_size(persistent)
    t_size = _closure_size(total)
    # the persistent closure is a subgroup of the total one, so sizes decide equality
    return SwitchingResult(
        trajectory=Trajectory(t_out, states),
        persistent=persistent,
        total=total,
        persistent_closure_size=p_size,
        total_closure_size=t_size,
        closures_match=p_size == t_size,
        predicted_limit=_average_or_self(np.array(_mat(rho0)), persistent),
        total_average=_average_or_self(np.array(_mat(rho0)), total),
        tail_limit=_average_or_self(tail_state, persistent),
        segment_log=log,
    )


def segment_cut_balance(active: PermSet, subsets: Sequence, weights=None) -> list[tuple[float, float]]:
    """Weighted out/in cut flows of the active operator-space graph for each subset."""
    return [cut_flows(active, s, weights) for s in subsets]


# --- synchronization ------------------------------------------------------


@dataclass
class SyncReport:
    times: np.ndarray
    kind: str
    per_qubit_error: np.ndarray | None  # (T, n) for direct_sum
    full_error: np.ndarray  # (T,) distance to the rotated group average
    pairs: list
    pairwise: np.ndarray  # (T, n(n-1)/2)

    @property
    def pairwise_sum(self) -> np.ndarray:
        return self.pairwise.sum(axis=1)


def pairwise_distances(reduced: Sequence[np.ndarray]) -> tuple[list, np.ndarray]:
    n = len(reduced)
    pairs = [(i + 1, j + 1) for i in range(n) for j in range(i + 1, n)]
    return pairs, np.array([trace_distance(reduced[i - 1], reduced[j - 1]) for i, j in pairs])


def sync_report(rho0, g: GeneratorSpec, times, max_qubits: int | None = None) -> SyncReport:
    """Distances between the trajectory and its synchronization targets.

    The target orbit is the group average of ``rho0`` carried along by the free
    Hamiltonian evolution.  For a direct-sum Hamiltonian the per-qubit target is
    the single-qubit rotation of the reduced state (of qubit n) of that average.
    """
    g = _as_generator(g)
    if g.hamiltonian is None:
        raise ValueError("synchronization report requires a Hamiltonian")
    h = g.hamiltonian
    traj = propagate(rho0, g, times, max_qubits)
    avg = group_average(np.array(_mat(rho0)), g.perms)
    n = g.n
    sigma = partial_trace_to_qubit(avg, n).data
    full_err = []
    per_qubit = [] if h.kind == "direct_sum" else None
    pair_rows = []
    pairs: list = []
    for t, state in zip(traj.times, traj.states):
        u = h.propagator(t, n)
        full_err.append(trace_distance(state, u @ avg @ u.conj().T))
        red = [partial_trace_to_qubit(state, k).data for k in range(1, n + 1)]
        if per_qubit is not None:
            u0 = h.propagator(t)
            target = u0 @ sigma @ u0.conj().T
            per_qubit.append([trace_distance(r, target) for r in red])
        pairs, row = pairwise_distances(red)
        pair_rows.append(row)
    return SyncReport(
        times=traj.times,
        kind=h.kind,
        per_qubit_error=None if per_qubit is None else np.array(per_qubit),
        full_error=np.array(full_err),
        pairs=pairs,
        pairwise=np.array(pair_rows).reshape(len(traj.times), -1),
    )


def trajectory_defects(traj: Trajectory) -> dict:
    """Worst-case trace, Hermiticity and positivity defects along a trajectory."""
    tr = max(abs(np.trace(s) - 1) for s in traj.states)
    herm = max(float(np.max(np.abs(s - s.conj().T))) for s in traj.states)
    lo = min(float(np.linalg.eigvalsh((s + s.conj().T) / 2).min()) for s in traj.states)
    return {"trace_drift": float(tr), "hermiticity_defect": herm, "min_eigenvalue": lo}


def conserved_drift(traj: Trajectory, s: PermSet) -> float:
    """Largest trace distance between ``group_average(rho(t))`` and its initial value."""
    ref = group_average(traj.states[0], s)
    return max(trace_distance(group_average(st, s), ref) for st in traj.states)


def fit_decay_rate(times, values, t_min: float, t_max: float) -> float:
    """Negative least-squares slope of ``log(values)`` on ``[t_min, t_max]``."""
    t = np.asarray(times)
    v = np.asarray(values)
    mask = (t >= t_min) & (t <= t_max) & (v > 0)
    slope = np.polyfit(t[mask], np.log(v[mask]), 1)[0]
    return float(-slope)
