"""Density operators on n qubits: construction, permutation action, reductions.

Matrices are dense ``(2^n, 2^n)`` complex arrays in the computational basis,
qubit 1 being the most significant bit of the row/column index.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import ValidationError
from .graphs import basis_map, full_group_labels, operator_component_labels
from .perm import MAX_CLOSURE_SIZE, Permutation, PermSet, closure

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = -1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

_KETS = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
}


def density_defects(data, hermitian_tol=HERMITIAN_TOL, trace_tol=TRACE_TOL,
                    positivity_tol=POSITIVITY_TOL) -> list[str]:
    """Every density-operator invariant that ``data`` violates (empty if valid)."""
    a = np.asarray(data)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return [f"matrix must be square, got shape {a.shape}"]
    d = a.shape[0]
    failures = []
    if d < 2 or d & (d - 1):
        failures.append(f"dimension {d} is not a power of two >= 2")
    herm = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if herm > hermitian_tol:
        failures.append(f"not Hermitian (max |A - A^H| = {herm:.3g})")
    tr = np.trace(a)
    if abs(tr - 1) > trace_tol:
        failures.append(f"trace {tr:.6g} != 1")
    if herm <= hermitian_tol:
        lo = float(np.linalg.eigvalsh((a + a.conj().T) / 2).min())
        if lo < positivity_tol:
            failures.append(f"not positive semidefinite (min eigenvalue {lo:.3g})")
    return failures


class DensityMatrix:
    """Validated n-qubit density operator.

    ``data`` is a read-only copy; pass ``validate=False`` only for matrices
    already known to be valid (e.g. images of a valid state under a relabeling).
    """

    __slots__ = ("data", "n")

    def __init__(self, data, validate: bool = True):
        a = np.array(data, dtype=complex)
        if validate:
            failures = density_defects(a)
            if failures:
                raise ValidationError(failures, what="density matrix")
        a.setflags(write=False)
        self.data = a
        self.n = int(a.shape[0]).bit_length() - 1

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __repr__(self) -> str:
        return f"DensityMatrix(n={self.n})"

    @property
    def dim(self) -> int:
        return self.data.shape[0]


def _mat(x) -> np.ndarray:
    return x.data if isinstance(x, DensityMatrix) else np.asarray(x, dtype=complex)


def _like(template, a: np.ndarray):
    return DensityMatrix(a, validate=False) if isinstance(template, DensityMatrix) else a


def n_qubits(x) -> int:
    d = _mat(x).shape[0]
    if d < 2 or d & (d - 1):
        raise ValueError(f"dimension {d} is not a power of two")
    return d.bit_length() - 1


def ket(label: str) -> np.ndarray:
    """Product state vector for a string over ``0 1 + -`` (ASCII or unicode minus)."""
    label = label.replace("−", "-")
    try:
        factors = [_KETS[ch] for ch in label]
    except KeyError as exc:
        raise ValidationError(f"unknown ket symbol {exc.args[0]!r} in {label!r}") from None
    if not factors:
        raise ValidationError("empty ket string")
    return reduce(np.kron, factors)


def make_state(spec, n: int | None = None) -> DensityMatrix:
    """Build a state from a ket string like ``"10+"`` or from an explicit matrix."""
    if isinstance(spec, DensityMatrix):
        rho = spec
    elif isinstance(spec, str):
        psi = ket(spec)
        rho = DensityMatrix(np.outer(psi, psi.conj()))
    else:
        rho = DensityMatrix(spec)
    if n is not None and rho.n != n:
        raise ValidationError(f"state has {rho.n} qubits, expected {n}")
    return rho


def maximally_mixed(n: int) -> DensityMatrix:
    return DensityMatrix(np.eye(2**n) / 2**n)


def random_density(n: int, rng: np.random.Generator) -> DensityMatrix:
    """Ginibre-ensemble state ``G G^H / tr(G G^H)``."""
    d = 2**n
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    w = g @ g.conj().T
    w = (w + w.conj().T) / 2
    return DensityMatrix(w / np.trace(w).real, validate=False)


def conjugate(rho, p: Permutation):
    """``U_pi rho U_pi^H`` by relabeling rows and columns."""
    a = _mat(rho)
    if n_qubits(a) != p.n:
        raise ValueError(f"state has {n_qubits(a)} qubits but permutation acts on {p.n}")
    m = basis_map(p)
    out = np.empty_like(a)
    out[np.ix_(m, m)] = a
    return _like(rho, out)


def permutation_matrix(p: Permutation) -> np.ndarray:
    """Dense ``U_pi``; used for cross-checks and commutation tests only."""
    m = basis_map(p)
    u = np.zeros((len(m), len(m)))
    u[m, np.arange(len(m))] = 1.0
    return u


@dataclass(frozen=True)
class ReducedState:
    k: int
    data: np.ndarray

    @property
    def bloch(self) -> tuple[float, float, float]:
        r = self.data
        return (
            float(2 * r[0, 1].real),
            float(2 * r[1, 0].imag),
            float((r[0, 0] - r[1, 1]).real),
        )


def partial_trace_to_qubit(rho, k: int) -> ReducedState:
    """Reduced 2x2 state of qubit ``k`` (1-based)."""
    a = _mat(rho)
    n = n_qubits(a)
    if not 1 <= k <= n:
        raise ValueError(f"qubit index {k} outside 1..{n}")
    t = a.reshape(2 ** (k - 1), 2, 2 ** (n - k), 2 ** (k - 1), 2, 2 ** (n - k))
    return ReducedState(k, np.einsum("aibajb->ij", t))


def reduced_states(rho) -> list[ReducedState]:
    return [partial_trace_to_qubit(rho, k) for k in range(1, n_qubits(rho) + 1)]


def trace_distance(a, b) -> float:
    x, y = _mat(a), _mat(b)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch {x.shape} vs {y.shape}")
    return 0.5 * float(np.linalg.svd(x - y, compute_uv=False).sum())


def group_average(rho, s: PermSet, method: str = "components",
                  max_size: int = MAX_CLOSURE_SIZE):
    """Mean of ``U_pi rho U_pi^H`` over the subgroup generated by ``s``.

    ``method="closure"`` enumerates the subgroup explicitly.  The default
    ``"components"`` replaces every entry by the mean over its operator-space
    component, which gives the same matrix without building the group.
    """
    a = _mat(rho)
    if n_qubits(a) != s.n:
        raise ValueError(f"state has {n_qubits(a)} qubits but permutations act on {s.n}")
    if len(s) == 0:
        raise ValidationError("group average over an empty permutation set")
    if method == "closure":
        group = closure(s, max_size=max_size)
        out = np.zeros_like(a)
        for p in group:
            out += conjugate(a, p)
        out /= len(group)
    elif method == "components":
        out = component_average(a, operator_component_labels(s)[1])
    else:
        raise ValueError(f"unknown method {method!r}")
    return _like(rho, out)


def component_average(a: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Replace every entry of ``a`` by the mean of the entries sharing its label."""
    flat = labels.ravel()
    counts = np.bincount(flat)
    re = np.bincount(flat, weights=a.real.ravel()) / counts
    im = np.bincount(flat, weights=a.imag.ravel()) / counts
    return (re + 1j * im)[flat].reshape(a.shape)


def full_average(rho):
    """Symmetrization over all ``n!`` permutations."""
    a = _mat(rho)
    return _like(rho, component_average(a, full_group_labels(n_qubits(a))[1]))


def commutes_with(rho, p: Permutation, atol: float = 1e-12) -> bool:
    a = _mat(rho)
    return bool(np.allclose(conjugate(a, p), a, atol=atol, rtol=0))
