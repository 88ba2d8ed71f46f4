"""Batch experiment runner.

Each subcommand reads one JSON config and writes its artifacts into an
output directory::

    qconsensus simulate --config cycle3.json --out runs/cycle3

Exit status: 0 success, 2 invalid config, 3 resource cap, 4 a consistency check
disagreed with the computation.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, dynamics, graphs, qstate
from .errors import ResourceError, ValidationError
from .perm import Permutation, PermSet, union_interaction_graph
from .serialize import (
    atomic_write,
    components_to_json,
    digraph_to_dot,
    dumps,
    format_csv,
    matrix_from_json,
    matrix_to_json,
    perm_lines,
    reduced_to_json,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RESOURCE = 3
EXIT_DISAGREE = 4

NAMED_BASES = {
    "sigma_x": qstate.SIGMA_X,
    "sigma_y": qstate.SIGMA_Y,
    "sigma_z": qstate.SIGMA_Z,
}


class ConfigError(ValidationError):
    def __init__(self, failures):
        super().__init__(failures, what="config")


class CheckFailed(RuntimeError):
    """A computed artifact contradicts the prediction it is checked against."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class ExperimentConfig:
    n: int
    perms: PermSet
    weights: tuple = ()
    initial_state: object = None
    hamiltonian: dynamics.HamiltonianSpec | None = None
    t_max: float = 10.0
    steps: int = 100
    schedule: dynamics.SwitchingSchedule | None = None
    horizon: float | None = None
    seed: int = 0
    samples: int = 20
    threshold: float = analysis.EMPIRICAL_THRESHOLD
    output: str | None = None
    max_qubits: dict = field(default_factory=dict)

    @property
    def generator(self) -> dynamics.GeneratorSpec:
        return dynamics.GeneratorSpec(self.perms, self.weights, self.hamiltonian)

    def times(self, t_max: float | None = None) -> np.ndarray:
        t_max = self.t_max if t_max is None else t_max
        if t_max == 0:
            return np.zeros(1)
        return np.linspace(0.0, t_max, self.steps + 1)

    def state(self) -> qstate.DensityMatrix:
        spec = self.initial_state
        if spec == "random":
            return qstate.random_density(self.n, np.random.default_rng(self.seed))
        return qstate.make_state(spec, self.n)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        """Validate a parsed JSON config, collecting every problem with its field path."""
        errs: list[str] = []
        if not isinstance(raw, dict):
            raise ConfigError(["<root>: config must be a JSON object"])
        known = {
            "n", "permutations", "weights", "initial_state", "hamiltonian", "time",
            "schedule", "horizon", "seed", "samples", "threshold", "output", "max_qubits",
        }
        for key in sorted(set(raw) - known):
            errs.append(f"{key}: unknown field")

        n = raw.get("n")
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            errs.append("n: must be a positive integer")
            raise ConfigError(errs)

        def perm_list(items, path):
            out = []
            if not isinstance(items, list):
                errs.append(f"{path}: must be a list of image strings")
                return out
            for i, item in enumerate(items):
                try:
                    p = Permutation.parse(item) if isinstance(item, str) else Permutation(tuple(item))
                except (ValidationError, TypeError) as exc:
                    errs.append(f"{path}[{i}]: {exc}")
                    continue
                if p.n != n:
                    errs.append(f"{path}[{i}]: acts on {p.n} qubits, expected {n}")
                    continue
                out.append(p)
            return out

        perm_items = raw.get("permutations", [])
        perms = PermSet(perm_list(perm_items, "permutations"), n=n)
        if len(perms) != len(perm_items) and not errs:
            errs.append("permutations: duplicate entries")

        weights = raw.get("weights", [])
        if weights:
            if not isinstance(weights, list) or len(weights) != len(perm_items):
                errs.append("weights: must list one positive number per permutation")
            else:
                try:
                    paired = {Permutation.parse(str(p)) if isinstance(p, str) else Permutation(tuple(p)): float(w)
                              for p, w in zip(perm_items, weights)}
                    weights = tuple(paired[p] for p in perms)
                except (ValueError, TypeError, KeyError):
                    errs.append("weights: must be numbers")
                    weights = ()
                if any(not w > 0 for w in weights):
                    errs.append("weights: must be strictly positive")
        weights = tuple(weights)

        state = raw.get("initial_state")
        if state is not None:
            if isinstance(state, dict):
                if set(state) != {"matrix"}:
                    errs.append("initial_state: object form must be {\"matrix\": ...}")
                else:
                    try:
                        state = qstate.make_state(matrix_from_json(state["matrix"]), n)
                    except (ValueError, TypeError) as exc:
                        errs.append(f"initial_state.matrix: {exc}")
            elif isinstance(state, str):
                if state != "random":
                    try:
                        qstate.make_state(state, n)
                    except ValidationError as exc:
                        errs.append(f"initial_state: {exc}")
            else:
                errs.append("initial_state: must be a ket string, \"random\" or {\"matrix\": ...}")

        ham = None
        h = raw.get("hamiltonian")
        if h is not None:
            if not isinstance(h, dict):
                errs.append("hamiltonian: must be an object or null")
            else:
                base = h.get("base", "sigma_z")
                try:
                    if isinstance(base, str):
                        if base not in NAMED_BASES:
                            raise ValueError(f"unknown named base {base!r}")
                        base = NAMED_BASES[base]
                    else:
                        base = matrix_from_json(base)
                    ham = dynamics.HamiltonianSpec(
                        str(h.get("kind")), base, float(h.get("hbar", 1.0))
                    )
                except (ValueError, TypeError) as exc:
                    errs.append(f"hamiltonian: {exc}")

        tcfg = raw.get("time", {})
        t_max, steps = 10.0, 100
        if not isinstance(tcfg, dict):
            errs.append("time: must be an object with t_max and steps")
        else:
            t_max = tcfg.get("t_max", t_max)
            steps = tcfg.get("steps", steps)
            if not isinstance(t_max, (int, float)) or isinstance(t_max, bool) or t_max < 0:
                errs.append("time.t_max: must be a non-negative number")
            if not isinstance(steps, int) or isinstance(steps, bool) or steps < 1:
                errs.append("time.steps: must be a positive integer")

        sched = None
        sc = raw.get("schedule")
        if sc is not None:
            if not isinstance(sc, dict):
                errs.append("schedule: must be an object")
            else:
                groups = {}
                for part in ("prefix", "period"):
                    segs = []
                    items = sc.get(part, [])
                    if not isinstance(items, list):
                        errs.append(f"schedule.{part}: must be a list")
                        items = []
                    for i, seg in enumerate(items):
                        path = f"schedule.{part}[{i}]"
                        if not isinstance(seg, dict):
                            errs.append(f"{path}: must be an object")
                            continue
                        dur = seg.get("duration")
                        if not isinstance(dur, (int, float)) or isinstance(dur, bool) or dur <= 0:
                            errs.append(f"{path}.duration: must be a positive number")
                            continue
                        segs.append((float(dur), PermSet(perm_list(seg.get("active", []), f"{path}.active"), n=n)))
                    groups[part] = segs
                try:
                    sched = dynamics.SwitchingSchedule(
                        n, tuple(groups["prefix"]), tuple(groups["period"]),
                        float(sc.get("dwell", dynamics.DEFAULT_DWELL)),
                    )
                except ValidationError as exc:
                    errs.extend(f"schedule: {f}" for f in exc.failures)

        horizon = raw.get("horizon")
        if horizon is not None and (not isinstance(horizon, (int, float)) or horizon <= 0):
            errs.append("horizon: must be a positive number")

        for key, kind, lo in (("seed", int, 0), ("samples", int, 1)):
            v = raw.get(key)
            if v is not None and (not isinstance(v, kind) or isinstance(v, bool) or v < lo):
                errs.append(f"{key}: must be an integer >= {lo}")
        thr = raw.get("threshold")
        if thr is not None and (not isinstance(thr, (int, float)) or thr <= 0):
            errs.append("threshold: must be a positive number")
        caps = raw.get("max_qubits", {})
        if not isinstance(caps, dict) or any(
            not isinstance(v, int) or isinstance(v, bool) or v < 1 for v in caps.values()
        ):
            errs.append("max_qubits: must map cap names to positive integers")
            caps = {}

        if errs:
            raise ConfigError(errs)
        return cls(
            n=n,
            perms=perms,
            weights=weights,
            initial_state=state,
            hamiltonian=ham,
            t_max=float(t_max),
            steps=int(steps),
            schedule=sched,
            horizon=None if horizon is None else float(horizon),
            seed=int(raw.get("seed", 0)),
            samples=int(raw.get("samples", 20)),
            threshold=float(thr) if thr is not None else analysis.EMPIRICAL_THRESHOLD,
            output=raw.get("output"),
            max_qubits=dict(caps),
        )


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError([f"<file>: cannot read {path}: {exc.strerror}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<file>: invalid JSON at line {exc.lineno}: {exc.msg}"]) from None
    return ExperimentConfig.from_dict(raw)


def _require(cfg: ExperimentConfig, *names):
    errs = []
    if "state" in names and cfg.initial_state is None:
        errs.append("initial_state: required for this command")
    if "perms" in names and len(cfg.perms) == 0:
        errs.append("permutations: at least one permutation is required")
    if "schedule" in names and cfg.schedule is None:
        errs.append("schedule: required for this command")
    if "no-schedule" in names and cfg.schedule is not None:
        errs.append("schedule: not allowed here, use the switching command")
    if errs:
        raise ConfigError(errs)


# --- trajectory table ---------------------------------------------------------


def trajectory_table(traj: dynamics.Trajectory, limit_at, conserved_set: PermSet | None,
                     conserved_at) -> tuple[list[str], list[list[float]]]:
    """CSV header and rows: Bloch vectors, pairwise distances, limit distance, drift.

    ``limit_at(t)`` and ``conserved_at(t)`` give the predicted limit and the
    predicted value of the conserved group average at time ``t``.
    """
    n = traj.n
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    header = ["time"]
    for k in range(1, n + 1):
        header += [f"q{k}_x", f"q{k}_y", f"q{k}_z"]
    header += [f"D_{i}_{j}" for i, j in pairs]
    header += ["D_pair_sum", "dist_to_limit", "conserved_drift"]
    rows = []
    for t, state in zip(traj.times, traj.states):
        failures = qstate.density_defects(state)
        if failures:
            raise CheckFailed(f"state at t={t} is not a density matrix: {'; '.join(failures)}")
        red = qstate.reduced_states(state)
        row = [t]
        for r in red:
            row += list(r.bloch)
        dists = [qstate.trace_distance(red[i - 1].data, red[j - 1].data) for i, j in pairs]
        row += dists
        row.append(sum(dists))
        row.append(qstate.trace_distance(state, limit_at(t)))
        if conserved_set is not None and len(conserved_set):
            drift = qstate.trace_distance(qstate.group_average(state, conserved_set), conserved_at(t))
        else:
            drift = 0.0
        row.append(drift)
        rows.append(row)
    return header, rows


def _rotating(reference: np.ndarray, ham, n: int):
    if ham is None:
        return lambda t: reference

    def at(t):
        u = ham.propagator(t, n)
        return u @ reference @ u.conj().T

    return at


def _cap(cfg, name, default):
    return int(cfg.max_qubits.get(name, default))


# --- commands -----------------------------------------------------------------


def run_simulate(cfg: ExperimentConfig, out: Path) -> dict:
    _require(cfg, "state", "perms", "no-schedule")
    rho0 = cfg.state()
    g = cfg.generator
    default_cap = dynamics.MAX_DENSE_QUBITS if g.hamiltonian else dynamics.MAX_BLOCK_QUBITS
    traj = dynamics.propagate(rho0, g, cfg.times(), max_qubits=_cap(cfg, "propagate", default_cap))
    limit = np.asarray(qstate.group_average(rho0, cfg.perms))
    at = _rotating(limit, cfg.hamiltonian, cfg.n)
    header, rows = trajectory_table(traj, at, cfg.perms, at)
    spec = dynamics.spectral_report(
        g.without_hamiltonian(), max_qubits=_cap(cfg, "spectrum", dynamics.MAX_SPECTRAL_QUBITS)
    )
    atomic_write(out / "trajectory.csv", format_csv(header, rows))
    atomic_write(out / "limit.json", dumps(_limit_json(limit, cfg.perms)))
    atomic_write(out / "spectrum.json", dumps(spec.to_dict()))
    return {"rows": len(rows), "rate": spec.rate}


def _limit_json(limit: np.ndarray, s: PermSet) -> dict:
    return {
        "permutations": perm_lines(s),
        "matrix": matrix_to_json(limit),
        "reduced_states": [reduced_to_json(r) for r in qstate.reduced_states(limit)],
    }


def run_spectrum(cfg: ExperimentConfig, out: Path) -> dict:
    _require(cfg, "perms")
    spec = dynamics.spectral_report(
        dynamics.GeneratorSpec(cfg.perms, cfg.weights),
        max_qubits=_cap(cfg, "spectrum", dynamics.MAX_SPECTRAL_QUBITS),
    )
    if not spec.gershgorin_ok():
        raise CheckFailed("eigenvalues outside the Gershgorin disc")
    atomic_write(out / "spectrum.json", dumps(spec.to_dict()))
    return {"rate": spec.rate, "null_dimension": spec.null_dimension}


def run_graphs(cfg: ExperimentConfig, out: Path) -> dict:
    s = cfg.perms if len(cfg.perms) else PermSet([], n=cfg.n)
    state_cap = _cap(cfg, "state_graph", graphs.MAX_STATE_QUBITS)
    op_cap = _cap(cfg, "operator_graph", graphs.MAX_OPERATOR_QUBITS)
    g_int = union_interaction_graph(s)
    g_state = graphs.state_space_graph(s, state_cap)
    g_op = graphs.operator_space_graph(s, op_cap)
    stats = graphs.graph_statistics(s, state_cap, op_cap).to_dict()
    stats["permutations"] = perm_lines(s)
    stats["operator_space"]["balanced"] = graphs.is_balanced(g_op)
    stats["state_space"]["balanced"] = graphs.is_balanced(g_state)
    stats["state_space"]["report"] = components_to_json(graphs.scc(g_state))
    atomic_write(out / "interaction.dot", digraph_to_dot(g_int, "interaction"))
    atomic_write(out / "state_space.dot", digraph_to_dot(g_state, "state_space"))
    atomic_write(out / "operator_space.dot", digraph_to_dot(g_op, "operator_space", n=cfg.n))
    atomic_write(out / "stats.json", dumps(stats))
    return {
        "state_arcs": stats["state_space"]["arcs"],
        "operator_arcs": stats["operator_space"]["arcs"],
        "operator_components": stats["operator_space"]["components"],
    }


def _mask_json(mask: analysis.ZeroPatternMask, extra: dict | None = None) -> dict:
    d = {"n": mask.n, "count": mask.count, "rows": "ket", "columns": "bra",
         "mask": mask.mask.tolist()}
    if extra:
        d.update(extra)
    return d


def run_zero_pattern(cfg: ExperimentConfig, out: Path) -> dict:
    _require(cfg, "perms")
    predicted = analysis.predicted_zero_pattern(cfg.perms)
    empirical = analysis.empirical_zero_pattern(cfg.perms, cfg.samples, cfg.threshold, cfg.seed)
    strong = analysis.classify_consensus(cfg.perms).strongly_connected
    violations = analysis.zero_condition_violations(predicted) if strong else None
    atomic_write(out / "predicted.json", dumps(_mask_json(predicted, {
        "permutations": perm_lines(cfg.perms),
        "strongly_connected": strong,
        "zero_condition_violations": violations,
    })))
    atomic_write(out / "empirical.json", dumps(_mask_json(empirical, {
        "samples": cfg.samples, "threshold": cfg.threshold, "seed": cfg.seed,
    })))
    atomic_write(out / "grid.txt", analysis.mask_to_text(predicted))
    diff = predicted.differences(empirical)
    if diff or (violations and any(violations.values())):
        report = {
            "mismatched_labels": [
                {"ket": graphs.bitstring(p, cfg.n), "bra": graphs.bitstring(q, cfg.n),
                 "predicted": bool(predicted.mask[p, q]), "empirical": bool(empirical.mask[p, q])}
                for p, q in diff
            ],
            "zero_condition_violations": violations,
        }
        atomic_write(out / "diff.json", dumps(report))
        raise CheckFailed(f"predicted and empirical zero patterns differ at {len(diff)} labels", report)
    return {"count": predicted.count}


def run_switching(cfg: ExperimentConfig, out: Path) -> dict:
    _require(cfg, "state", "schedule")
    sched = cfg.schedule
    horizon = cfg.horizon if cfg.horizon is not None else (cfg.t_max or None)
    if not horizon:
        raise ConfigError(["horizon: required (or give time.t_max > 0)"])
    if not sched.period and horizon > sched.prefix_duration:
        raise ConfigError(["schedule.period: empty period cannot cover the horizon"])
    rho0 = cfg.state()
    weights = dict(zip(cfg.perms, cfg.weights)) if cfg.weights else None
    times = cfg.times(horizon)
    res = dynamics.propagate_switching(
        rho0, sched, horizon, times, weights,
        max_qubits=_cap(cfg, "propagate", dynamics.MAX_BLOCK_QUBITS),
    )
    total = res.total
    header, rows = trajectory_table(
        res.trajectory, lambda t: res.predicted_limit, total, lambda t: res.total_average
    )
    final = res.trajectory.final
    report = {
        "persistent": perm_lines(res.persistent),
        "all_active": perm_lines(total),
        "persistent_closure_size": res.persistent_closure_size,
        "total_closure_size": res.total_closure_size,
        "closures_match": res.closures_match,
        "verdict": res.verdict,
        "horizon": horizon,
        "predicted_limit": matrix_to_json(res.predicted_limit),
        "distance_to_predicted_limit": qstate.trace_distance(final, res.predicted_limit),
        "distance_to_total_average": qstate.trace_distance(final, res.total_average),
        "distance_to_tail_limit": qstate.trace_distance(final, res.tail_limit),
        "tail_limit": matrix_to_json(res.tail_limit),
        "total_average": matrix_to_json(res.total_average),
        "segments": res.segment_log,
    }
    atomic_write(out / "trajectory.csv", format_csv(header, rows))
    atomic_write(out / "persistence.json", dumps(report))
    return {"verdict": res.verdict}


COMMANDS = {
    "simulate": run_simulate,
    "graphs": run_graphs,
    "zero-pattern": run_zero_pattern,
    "switching": run_switching,
    "spectrum": run_spectrum,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qconsensus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON experiment config")
        p.add_argument("--out", help="output directory (default: config 'output' or '.')")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--samples", type=int, help="override the config sample count")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(["--seed: must be non-negative"])
            cfg.seed = args.seed
        if args.samples is not None:
            if args.samples < 1:
                raise ConfigError(["--samples: must be at least 1"])
            cfg.samples = args.samples
        out = Path(args.out or cfg.output or ".")
        summary = COMMANDS[args.command](cfg, out)
    except ValidationError as exc:
        for f in exc.failures:
            print(f"error: {f}", file=sys.stderr)
        return EXIT_INVALID
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_DISAGREE
    print(json.dumps({"command": args.command, "out": str(out), **summary}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
