"""Zero pattern of the missing symmetry and consensus-type classification."""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .digraph import connectivity_class, weak_components
from .graphs import bit_table, full_group_labels, operator_component_labels
from .perm import MAX_CLOSURE_SIZE, PermSet, closure, union_interaction_graph
from .qstate import DensityMatrix, full_average, group_average, make_state, random_density

EMPIRICAL_THRESHOLD = 1e-12


@dataclass(frozen=True)
class ZeroPatternMask:
    """``mask[p, q]`` is True where ``[avg_s(rho) - avg_full(rho)]_{p,q}`` can be nonzero."""

    n: int
    mask: np.ndarray

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    def __eq__(self, other):
        if not isinstance(other, ZeroPatternMask):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.mask, other.mask)

    __hash__ = None

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    def is_subset_of(self, other: "ZeroPatternMask") -> bool:
        return bool(np.all(~self.mask | other.mask))

    def differences(self, other: "ZeroPatternMask") -> list[tuple[int, int]]:
        return [tuple(map(int, rc)) for rc in np.argwhere(self.mask != other.mask)]


def _component_sizes(labels: np.ndarray) -> np.ndarray:
    flat = labels.ravel()
    return np.bincount(flat)[flat].reshape(labels.shape)


def predicted_zero_pattern(s: PermSet) -> ZeroPatternMask:
    """Labels whose component under ``s`` is smaller than under the full group."""
    _, sub = operator_component_labels(s)
    _, full = full_group_labels(s.n)
    return ZeroPatternMask(s.n, _component_sizes(sub) != _component_sizes(full))


def ginibre_samples(n: int, samples: int, seed: int = 0):
    """Independent random states, one child RNG stream per sample."""
    children = np.random.SeedSequence(seed).spawn(samples)
    for child in children:
        yield random_density(n, np.random.default_rng(child))


def empirical_zero_pattern(s: PermSet, samples: int = 20, threshold: float = EMPIRICAL_THRESHOLD,
                           seed: int = 0, states=None) -> ZeroPatternMask:
    """Entries of ``avg_s(rho) - avg_full(rho)`` exceeding ``threshold`` for some sample.

    ``states`` overrides the Ginibre draws with explicit matrices.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    if states is None:
        states = ginibre_samples(s.n, samples, seed)
    d = 2**s.n
    mask = np.zeros((d, d), dtype=bool)
    for rho in states:
        diff = np.asarray(group_average(rho, s)) - np.asarray(full_average(rho))
        mask |= np.abs(diff) > threshold
    return ZeroPatternMask(s.n, mask)


def zero_conditions(n: int) -> dict[str, np.ndarray]:
    """Boolean grids of the four label families forced to zero under strong connectivity.

    Keys ``a``..``d``: constant bra and ket strings; constant ket with bra weight
    1 or n-1; equal strings with weight 1 or n-1; complementary strings with
    bra weight 1 or n-1.  Conditions are applied exactly as stated, including
    pairing ``q`` with the weight test.
    """
    bits = bit_table(n)
    weight = bits.sum(axis=1)
    d = 2**n
    const = (weight == 0) | (weight == n)
    edge_w = np.isin(weight, [1, n - 1])
    p = np.arange(d)[:, None]
    q = np.arange(d)[None, :]
    return {
        "a": const[:, None] & const[None, :],
        "b": const[:, None] & edge_w[None, :],
        "c": (p == q) & edge_w[None, :],
        "d": (p == (d - 1 - q)) & edge_w[None, :],
    }


def zero_condition_violations(mask: ZeroPatternMask) -> dict[str, list]:
    """Labels of each condition family where the mask is (wrongly) True."""
    return {
        key: [tuple(map(int, rc)) for rc in np.argwhere(cond & mask.mask)]
        for key, cond in zero_conditions(mask.n).items()
    }


@dataclass(frozen=True)
class ConsensusClassification:
    n: int
    connectivity: str
    strongly_connected: bool
    reduced_state_consensus: bool
    closure_size: int
    symmetric_state_consensus: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def classify_consensus(s: PermSet, max_size: int = MAX_CLOSURE_SIZE) -> ConsensusClassification:
    g = union_interaction_graph(s)
    conn = connectivity_class(g)
    strong = conn in ("fully", "strongly")
    size = len(closure(s, max_size=max_size)) if len(s) else 1
    return ConsensusClassification(
        n=s.n,
        connectivity=conn,
        strongly_connected=strong,
        reduced_state_consensus=strong,
        closure_size=size,
        symmetric_state_consensus=size == factorial(s.n),
    )


def necessity_counterexample(s: PermSet) -> DensityMatrix | None:
    """Product basis state that keeps two interaction components apart.

    Qubits in the first weak component of the union interaction graph start
    in |0>, all others in |1>.  Returns None when the graph is connected.
    """
    comps = weak_components(union_interaction_graph(s))
    if len(comps) < 2:
        return None
    first = set(comps.components[0].nodes)
    label = "".join("0" if k in first else "1" for k in range(1, s.n + 1))
    return make_state(label)


def mask_to_text(mask: ZeroPatternMask) -> str:
    """Text grid with bra strings as rows and ket strings as columns.

    ``#`` marks a possibly nonzero entry and ``.`` an entry that is always zero.
    """
    n = mask.n
    d = 2**n
    names = [format(x, f"0{n}b") for x in range(d)]
    pad = " " * (n + 1)
    lines = [pad + " ".join(names)]
    for q in range(d):
        cells = (("#" if mask.mask[p, q] else ".").center(n) for p in range(d))
        lines.append((names[q] + " " + " ".join(cells)).rstrip())
    return "\n".join(lines) + "\n"
