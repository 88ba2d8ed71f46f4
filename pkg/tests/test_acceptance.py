"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed in the
terminal summary (and to stdout with ``-s``).
"""

import sys
import time
from math import comb

import numpy as np
import pytest

from qconsensus import dynamics, graphs, qstate
from qconsensus.analysis import (
    classify_consensus,
    empirical_zero_pattern,
    necessity_counterexample,
    predicted_zero_pattern,
    zero_condition_violations,
)
from qconsensus.digraph import scc
from qconsensus.dynamics import (
    GeneratorSpec,
    HamiltonianSpec,
    SwitchingSchedule,
    propagate,
    propagate_switching,
    spectral_report,
)
from qconsensus.perm import Permutation, PermSet, cycle, swap
from qconsensus.qstate import group_average, make_state, trace_distance

CYCLE3 = PermSet([cycle(3)])
LIMIT_REDUCED = np.array([[0.5, 1 / 6], [1 / 6, 0.5]])
T_FIT = (2.0, 10.0)

ACCEPTANCE_LINES = {}


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line


def _pairwise_sum(traj):
    out = []
    for state in traj.states:
        red = [r.data for r in qstate.reduced_states(state)]
        out.append(sum(trace_distance(red[i], red[j])
                       for i in range(len(red)) for j in range(i + 1, len(red))))
    return np.array(out)


def _conservation(traj, s, hamiltonian=None):
    """Worst invariant defects; the conserved average is taken in the rotating frame."""
    d = dynamics.trajectory_defects(traj)
    ref = group_average(traj.states[0], s)
    drift = 0.0
    for t, state in zip(traj.times, traj.states):
        if hamiltonian is not None:
            u = hamiltonian.propagator(t, s.n)
            state = u.conj().T @ state @ u
        drift = max(drift, trace_distance(group_average(state, s), ref))
    d["average_drift"] = drift
    return d


_trajectories = []  # (trajectory, perms, hamiltonian) from criteria 4 and 6


def test_criterion_1_cycle_rate():
    worst, slowest = 0.0, 0.0
    for n in (3, 5, 7):
        start = time.perf_counter()
        rep = spectral_report(GeneratorSpec(PermSet([cycle(n)])), max_qubits=7)
        slowest = max(slowest, time.perf_counter() - start)
        worst = max(worst, abs(rep.rate - (1 - np.cos(2 * np.pi / n))))
    report(1, worst <= 1e-9 and slowest < 5,
           f"max |rate - (1 - cos(2 pi/n))| = {worst:.2e}, slowest {slowest:.2f}s")


def test_criterion_2_graph_counts():
    problems = []
    for n in (3, 5):
        s = PermSet([cycle(n)])
        st = graphs.graph_statistics(s)
        e = 2**n - 2
        expected = (e, 2 + e // n, 2 ** (n + 1) * e - e * e, 4 + (4**n - 4) // n)
        got = (st.state_arcs, st.state_components, st.operator_arcs, st.operator_components)
        if got != expected:
            problems.append(f"n={n}: {got} != {expected}")
    import itertools

    for n in range(1, 6):
        full = PermSet([Permutation(p) for p in itertools.permutations(range(1, n + 1))])
        brute = len(graphs.state_space_graph(full).arcs)
        formula = sum(comb(n, k) * (comb(n, k) - 1) for k in range(1, n))
        if brute != formula:
            problems.append(f"E_{n}: brute {brute} != formula {formula}")
    report(2, not problems, "; ".join(problems) or
           "n=3: (6, 4, 60, 24), n=5: (30, 8, 1020, 208); E_1..E_5 match brute force")


def test_criterion_3_null_space():
    rng = np.random.default_rng(3)
    mismatches = []
    for i in range(50):
        n = 3 if i % 2 == 0 else 4
        k = int(rng.integers(1, 4))
        s = PermSet([Permutation(tuple(rng.permutation(n) + 1)) for _ in range(k)], n=n)
        m = dynamics.vectorized_generator(GeneratorSpec(s))
        sv = np.linalg.svd(m, compute_uv=False)
        null_dim = int(np.sum(sv <= 1e-8))
        comps = len(scc(graphs.operator_space_graph(s)))
        if null_dim != comps:
            mismatches.append((str(list(s)), null_dim, comps))
    report(3, not mismatches, f"{50 - len(mismatches)}/50 sets with null dimension == SCC count")


def test_criterion_4_ten_plus_example():
    start = time.perf_counter()
    rho0 = make_state("10+")
    times = np.linspace(0, 20, 401)
    plain = propagate(rho0, GeneratorSpec(CYCLE3), times)
    _trajectories.append((plain, CYCLE3, None))
    limit_err = max(trace_distance(r.data, LIMIT_REDUCED) for r in qstate.reduced_states(plain.final))
    avg_err = max(trace_distance(r.data, LIMIT_REDUCED)
                  for r in qstate.reduced_states(group_average(rho0, CYCLE3)))
    rates = {"none": dynamics.fit_decay_rate(times, _pairwise_sum(plain), *T_FIT)}
    for kind in ("direct_sum", "tensor_product"):
        h = HamiltonianSpec(kind, qstate.SIGMA_Z)
        traj = propagate(rho0, GeneratorSpec(CYCLE3, hamiltonian=h), times)
        _trajectories.append((traj, CYCLE3, h))
        rates[kind] = dynamics.fit_decay_rate(times, _pairwise_sum(traj), *T_FIT)
    elapsed = time.perf_counter() - start
    ok = (
        limit_err <= 1e-8
        and avg_err <= 1e-8
        and abs(rates["none"] - 1.5) <= 0.05 * 1.5
        and abs(rates["direct_sum"] - rates["tensor_product"]) <= 0.02 * rates["tensor_product"]
        and elapsed < 10
    )
    report(4, ok, f"limit error {max(limit_err, avg_err):.1e}, fitted rates "
           + ", ".join(f"{k}={v:.5f}" for k, v in rates.items()) + f", {elapsed:.2f}s")


def test_criterion_5_zero_pattern():
    pred = predicted_zero_pattern(CYCLE3)
    emp = empirical_zero_pattern(CYCLE3, samples=20, threshold=1e-12, seed=0)
    violations = sum(len(v) for v in zero_condition_violations(pred).values())
    ok = pred.count == 24 and pred == emp and violations == 0
    report(5, ok, f"predicted {pred.count} entries, empirical {emp.count}, "
           f"equal={pred == emp}, condition a-d violations {violations}")


def test_criterion_6_reduced_consensus():
    rng = np.random.default_rng(6)
    sets = [CYCLE3, PermSet([swap(3, 1, 2), swap(3, 2, 3)]), PermSet([cycle(4, [1, 2]), cycle(4, [2, 3, 4])])]
    worst = 0.0
    times = np.linspace(0, 30, 61)
    for s in sets:
        assert classify_consensus(s).strongly_connected
        for _ in range(5):
            rho = qstate.random_density(s.n, rng)
            mean = sum(r.data for r in qstate.reduced_states(rho)) / s.n
            traj = propagate(rho, GeneratorSpec(s), times)
            _trajectories.append((traj, s, None))
            worst = max(worst, max(trace_distance(r.data, mean) for r in qstate.reduced_states(traj.final)))
    sw = PermSet([swap(3, 1, 2)])
    rho = necessity_counterexample(sw)
    traj = propagate(rho, GeneratorSpec(sw), times)
    _trajectories.append((traj, sw, None))
    red = qstate.reduced_states(traj.final)
    gap = max(trace_distance(a.data, b.data) for a in red for b in red)
    report(6, worst <= 1e-6 and gap >= 0.1,
           f"consensus error {worst:.1e} over 15 runs; swap(1,2) counterexample gap {gap:.3f}")


def test_criterion_7_conservation():
    if not _trajectories:
        test_criterion_4_ten_plus_example()
        test_criterion_6_reduced_consensus()
    worst = {"trace_drift": 0.0, "hermiticity_defect": 0.0, "min_eigenvalue": 0.0, "average_drift": 0.0}
    for traj, s, h in _trajectories:
        d = _conservation(traj, s, h)
        for k in ("trace_drift", "hermiticity_defect", "average_drift"):
            worst[k] = max(worst[k], d[k])
        worst["min_eigenvalue"] = min(worst["min_eigenvalue"], d["min_eigenvalue"])
    ok = (worst["trace_drift"] <= 1e-10 and worst["hermiticity_defect"] <= 1e-10
          and worst["min_eigenvalue"] >= -1e-9 and worst["average_drift"] <= 1e-9)
    report(7, ok, f"{len(_trajectories)} trajectories: "
           + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_8_switching():
    rho0 = make_state("10+")
    idle = PermSet([], n=3)
    periodic = SwitchingSchedule(3, period=((1.0, CYCLE3), (1.0, idle)))
    res = propagate_switching(rho0, periodic, 40.0)
    reach = trace_distance(res.trajectory.final, group_average(rho0, CYCLE3))
    prefixed = SwitchingSchedule(3, prefix=((1.0, PermSet([swap(3, 1, 2)])),), period=((1.0, CYCLE3),))
    mis = propagate_switching(rho0, prefixed, 40.0)
    final = mis.trajectory.final
    to_tail = trace_distance(final, mis.tail_limit)
    invariant = max(np.abs(qstate.conjugate(final, p) - final).max() for p in CYCLE3)
    gap = trace_distance(final, mis.total_average)
    ok = (res.closures_match and reach <= 1e-6 and not mis.closures_match
          and mis.verdict == "closure mismatch" and to_tail <= 1e-6 and invariant <= 1e-6 and gap >= 1e-3)
    report(8, ok, f"periodic distance {reach:.1e}; prefix case verdict '{mis.verdict}', "
           f"distance to persistent limit {to_tail:.1e}, to total average {gap:.3f}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
