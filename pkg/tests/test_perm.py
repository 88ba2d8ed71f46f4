import itertools

import pytest
from hypothesis import given, settings, strategies as st

from qconsensus.digraph import is_balanced, is_strongly_connected
from qconsensus.errors import ResourceError, ValidationError
from qconsensus.perm import (
    Permutation,
    PermSet,
    closure,
    compose,
    cycle,
    cycle_decomposition,
    identity,
    interaction_graph,
    inverse,
    swap,
    union_interaction_graph,
)

from conftest import perm_sets, permutations


def P(*image):
    return Permutation(image)


class TestPermutation:
    def test_rejects_non_bijection(self):
        for bad in [(1, 1, 2), (0, 1, 2), (1, 2, 4), ()]:
            with pytest.raises(ValidationError):
                Permutation(bad)

    def test_parse_and_str_round_trip(self):
        p = Permutation.parse("2 3 1")
        assert p == P(2, 3, 1)
        assert str(p) == "2 3 1"
        assert Permutation.parse(str(p)) == p
        assert Permutation.parse("2,3,1") == p

    def test_parse_garbage(self):
        with pytest.raises(ValidationError):
            Permutation.parse("a b")

    def test_call_is_one_based(self):
        p = P(2, 3, 1)
        assert [p(i) for i in (1, 2, 3)] == [2, 3, 1]

    def test_constructors(self):
        assert identity(3) == P(1, 2, 3)
        assert swap(3, 1, 2) == P(2, 1, 3)
        assert cycle(3) == P(2, 3, 1)
        assert cycle(5, [3, 4, 5]) == P(1, 2, 4, 5, 3)


class TestCompose:
    def test_identity_left(self):
        p = P(3, 1, 2)
        assert compose(identity(3), p) == p

    def test_two_swaps(self):
        assert compose(swap(3, 1, 2), swap(3, 2, 3)) == P(2, 3, 1)

    def test_cycle_squared(self):
        c = cycle(3)
        assert c @ c == P(3, 1, 2)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            compose(identity(2), identity(3))

    @given(st.data())
    def test_pointwise_rule(self, data):
        a = data.draw(permutations())
        b = data.draw(permutations(n=a.n))
        ab = compose(a, b)
        assert all(ab(i) == a(b(i)) for i in range(1, a.n + 1))


class TestInverse:
    def test_examples(self):
        assert inverse(identity(4)) == identity(4)
        assert inverse(P(2, 3, 1)) == P(3, 1, 2)
        for j, k in itertools.combinations(range(1, 5), 2):
            assert inverse(swap(4, j, k)) == swap(4, j, k)

    @given(permutations())
    def test_is_two_sided(self, p):
        e = identity(p.n)
        assert compose(p, inverse(p)) == e
        assert compose(inverse(p), p) == e


class TestCycles:
    def test_examples(self):
        assert cycle_decomposition(identity(3)) == [(1,), (2,), (3,)]
        assert cycle_decomposition(P(2, 3, 1)) == [(1, 2, 3)]
        assert cycle_decomposition(P(2, 1, 4, 5, 3)) == [(1, 2), (3, 4, 5)]

    @given(permutations())
    def test_partition_and_traversal(self, p):
        cycles = cycle_decomposition(p)
        assert sorted(i for c in cycles for i in c) == list(range(1, p.n + 1))
        for c in cycles:
            for a, b in zip(c, c[1:] + c[:1]):
                assert p(a) == b


class TestPermSet:
    def test_dedup_and_order(self):
        s = PermSet(["2 3 1", (1, 2, 3), P(2, 3, 1)])
        assert len(s) == 2
        assert [str(p) for p in s] == ["1 2 3", "2 3 1"]

    def test_mixed_sizes_rejected(self):
        with pytest.raises(ValidationError):
            PermSet([identity(2), identity(3)])

    def test_nontrivial_and_union(self):
        s = PermSet([identity(3), cycle(3)])
        assert s.nontrivial() == PermSet([cycle(3)])
        assert (PermSet([cycle(3)]) | PermSet([swap(3, 1, 2)])) == PermSet([cycle(3), swap(3, 1, 2)])

    def test_hash_by_members(self):
        assert hash(PermSet(["2 1 3"])) == hash(PermSet([swap(3, 1, 2)]))


class TestClosure:
    def test_examples(self):
        assert closure(PermSet([identity(3)])) == PermSet([identity(3)])
        c = cycle(3)
        assert closure(PermSet([c])) == PermSet([identity(3), c, c @ c])
        assert len(closure(PermSet([swap(3, 1, 2), swap(3, 2, 3)]))) == 6

    def test_brute_force_generated_subgroup(self):
        # grow the set of all products until it stops changing
        gens = [swap(4, 1, 2), cycle(4, [2, 3, 4])]
        words = {identity(4)}
        while True:
            more = words | {compose(a, b) for a in words for b in gens}
            if more == words:
                break
            words = more
        assert closure(PermSet(gens)) == PermSet(words)
        assert len(words) == 24

    def test_empty_and_cap(self):
        with pytest.raises(ValidationError):
            closure(PermSet([], n=3))
        with pytest.raises(ResourceError):
            closure(PermSet([swap(6, 1, 2), cycle(6)]), max_size=100)

    @settings(max_examples=40, deadline=None)
    @given(perm_sets(max_n=5))
    def test_group_axioms(self, s):
        g = closure(s)
        assert identity(s.n) in g
        assert closure(g) == g
        for p in g:
            assert inverse(p) in g
        for a in s:
            for b in g:
                assert compose(a, b) in g


class TestInteractionGraph:
    def test_examples(self):
        assert interaction_graph(P(2, 3, 1)).arcs == {(1, 2), (2, 3), (3, 1)}
        assert interaction_graph(identity(3)).arcs == frozenset()
        g = interaction_graph(swap(3, 1, 2))
        assert g.arcs == {(1, 2), (2, 1)}
        assert g.in_degree()[3] == g.out_degree()[3] == 0

    @given(permutations())
    def test_balanced_union_of_cycles(self, p):
        g = interaction_graph(p)
        assert is_balanced(g)
        assert all(d <= 1 for d in g.out_degree().values())

    @settings(max_examples=60, deadline=None)
    @given(perm_sets(min_n=2, max_n=5))
    def test_strong_iff_closure_fully_connected(self, s):
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import connected_components

        g = union_interaction_graph(s)
        rows = [u - 1 for u, _ in g.arcs]
        cols = [v - 1 for _, v in g.arcs]
        adj = coo_matrix(([1] * len(rows), (rows, cols)), shape=(s.n, s.n))
        strong_oracle = connected_components(adj, directed=True, connection="strong")[0] == 1
        assert is_strongly_connected(g) == strong_oracle
        full = union_interaction_graph(closure(s))
        fully = len(full.arcs) == s.n * (s.n - 1)
        assert strong_oracle == fully
