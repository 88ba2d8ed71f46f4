"""Permutations of the qubit index set {1..n} and the groups they generate.

Permutations are stored as 1-based image tuples: ``Permutation((2, 3, 1))``
sends 1 -> 2, 2 -> 3 and 3 -> 1.  Products follow function composition,
``compose(a, b)(i) == a(b(i))``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .digraph import Digraph
from .errors import ResourceError, ValidationError

#: Default cap on the size of a generated subgroup (8! elements).
MAX_CLOSURE_SIZE = 40320


@dataclass(frozen=True, order=True)
class Permutation:
    image: tuple[int, ...]

    def __post_init__(self):
        image = tuple(int(v) for v in self.image)
        object.__setattr__(self, "image", image)
        n = len(image)
        if n == 0:
            raise ValidationError("permutation must act on at least one qubit")
        if sorted(image) != list(range(1, n + 1)):
            raise ValidationError(f"image {image} is not a bijection of 1..{n}")

    @property
    def n(self) -> int:
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i - 1]

    def __str__(self) -> str:
        return " ".join(map(str, self.image))

    def __repr__(self) -> str:
        return f"Permutation({self.image})"

    def __matmul__(self, other: "Permutation") -> "Permutation":
        return compose(self, other)

    @property
    def is_identity(self) -> bool:
        return self.image == tuple(range(1, self.n + 1))

    @classmethod
    def parse(cls, text: str) -> "Permutation":
        """Read a one-line image list such as ``"2 3 1"``."""
        try:
            return cls(tuple(int(tok) for tok in text.replace(",", " ").split()))
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"cannot parse permutation {text!r}") from None


def identity(n: int) -> Permutation:
    return Permutation(tuple(range(1, n + 1)))


def swap(n: int, j: int, k: int) -> Permutation:
    """The transposition exchanging qubits ``j`` and ``k``."""
    image = list(range(1, n + 1))
    image[j - 1], image[k - 1] = k, j
    return Permutation(tuple(image))


def cycle(n: int, nodes: Sequence[int] | None = None) -> Permutation:
    """Cyclic permutation ``nodes[0] -> nodes[1] -> ... -> nodes[0]``.

    With ``nodes`` omitted this is the full n-cycle 1 -> 2 -> ... -> n -> 1.
    """
    if nodes is None:
        nodes = range(1, n + 1)
    nodes = list(nodes)
    image = list(range(1, n + 1))
    for a, b in zip(nodes, nodes[1:] + nodes[:1]):
        image[a - 1] = b
    return Permutation(tuple(image))


def compose(a: Permutation, b: Permutation) -> Permutation:
    """Return the product ``a b``, i.e. ``i -> a(b(i))``."""
    if a.n != b.n:
        raise ValueError(f"cannot compose permutations of sizes {a.n} and {b.n}")
    return Permutation(tuple(a.image[j - 1] for j in b.image))


def inverse(p: Permutation) -> Permutation:
    image = [0] * p.n
    for i, j in enumerate(p.image, start=1):
        image[j - 1] = i
    return Permutation(tuple(image))


def cycle_decomposition(p: Permutation) -> list[tuple[int, ...]]:
    """Disjoint cycles of ``p``; fixed points appear as length-1 cycles.

    Each cycle starts at its smallest element and lists ``i, p(i), p(p(i)), ...``.
    """
    seen = set()
    cycles = []
    for start in range(1, p.n + 1):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        nxt = p(start)
        while nxt != start:
            cyc.append(nxt)
            seen.add(nxt)
            nxt = p(nxt)
        cycles.append(tuple(cyc))
    return cycles


class PermSet:
    """Finite set of permutations of a common size, iterated in lexicographic order."""

    __slots__ = ("n", "members", "_set")

    def __init__(self, members: Iterable[Permutation | Sequence[int] | str], n: int | None = None):
        perms = []
        for m in members:
            if isinstance(m, str):
                m = Permutation.parse(m)
            elif not isinstance(m, Permutation):
                m = Permutation(tuple(m))
            perms.append(m)
        sizes = {p.n for p in perms}
        if n is None:
            if not sizes:
                raise ValidationError("size of an empty permutation set must be given")
            if len(sizes) > 1:
                raise ValidationError(f"mixed permutation sizes {sorted(sizes)}")
            n = sizes.pop()
        elif sizes - {n}:
            raise ValidationError(f"permutation sizes {sorted(sizes)} do not match n={n}")
        self.n = n
        self._set = frozenset(perms)
        self.members = tuple(sorted(self._set))

    def __iter__(self) -> Iterator[Permutation]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, p) -> bool:
        return p in self._set

    def __eq__(self, other) -> bool:
        if not isinstance(other, PermSet):
            return NotImplemented
        return self.n == other.n and self._set == other._set

    def __hash__(self) -> int:
        return hash((self.n, self._set))

    def __repr__(self) -> str:
        return f"PermSet(n={self.n}, [{', '.join(repr(str(p)) for p in self.members)}])"

    def __or__(self, other: "PermSet") -> "PermSet":
        return PermSet(self.members + other.members, n=self.n)

    def nontrivial(self) -> "PermSet":
        """Drop the identity, which contributes nothing to the dynamics."""
        return PermSet((p for p in self.members if not p.is_identity), n=self.n)


def closure(s: PermSet | Iterable[Permutation], max_size: int = MAX_CLOSURE_SIZE) -> PermSet:
    """Subgroup generated by ``s``, by breadth-first left multiplication.

    Raises ``ResourceError`` as soon as more than ``max_size`` elements are found.
    """
    if not isinstance(s, PermSet):
        s = PermSet(s)
    if len(s) == 0:
        raise ValidationError("closure of an empty generator set")
    gens = s.members
    e = identity(s.n)
    found = {e}
    queue = deque([e])
    while queue:
        g = queue.popleft()
        for a in gens:
            h = compose(a, g)
            if h not in found:
                found.add(h)
                if len(found) > max_size:
                    raise ResourceError(
                        f"generated subgroup exceeds {max_size} elements"
                    )
                queue.append(h)
    return PermSet(found, n=s.n)


def interaction_graph(p: Permutation) -> Digraph:
    """Qubit-level digraph with an arc ``(i, p(i))`` for every moved qubit."""
    arcs = {(i, p(i)) for i in range(1, p.n + 1) if p(i) != i}
    return Digraph(tuple(range(1, p.n + 1)), frozenset(arcs))


def union_interaction_graph(s: PermSet) -> Digraph:
    nodes = tuple(range(1, s.n + 1))
    arcs = set()
    for p in s:
        arcs |= interaction_graph(p).arcs
    return Digraph(nodes, frozenset(arcs))
