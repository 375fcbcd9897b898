import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resolvent_bounds.perm_core import (
    ALTERNATING,
    SYMMETRIC,
    ChainCertificate,
    CycleType,
    Permutation,
    class_is_higher,
    class_reps,
    cycle_type,
    even_class_reps,
    is_even,
    is_higher,
    lower_bound_s,
    max_chain,
    partitions,
)


def cyc(n, *cycles):
    """Permutation from 1-based cycles, as they are usually written."""
    return Permutation.from_cycles(n, [[i - 1 for i in c] for c in cycles])


def perms(n):
    return st.permutations(list(range(n))).map(lambda im: Permutation(tuple(im)))


any_perm = st.integers(1, 8).flatmap(perms)


# -- permutations -----------------------------------------------------------------

def test_permutation_rejects_non_bijection():
    with pytest.raises(ValueError):
        Permutation((0, 0, 1))
    with pytest.raises(ValueError):
        Permutation(())


def test_composition_is_function_composition():
    p, q = cyc(3, (1, 2)), cyc(3, (2, 3))
    assert (p * q)(1) == p(q(1))
    assert p * q == cyc(3, (1, 2, 3)) or p * q == cyc(3, (1, 3, 2))
    assert [(p * q)(i) for i in range(3)] == [p(q(i)) for i in range(3)]


def test_json_round_trip():
    p = cyc(5, (1, 3, 5))
    assert json.loads(json.dumps(p.to_json())) == [2, 1, 4, 3, 0]
    assert Permutation.from_json(p.to_json()) == p


@given(any_perm)
def test_inverse_and_powers(p):
    e = Permutation.identity(p.n)
    assert p * p.inverse() == e
    assert p ** 0 == e
    assert p ** 3 == p * p * p
    assert p ** -2 == (p * p).inverse()


# -- cycle types ------------------------------------------------------------------

def test_cycle_type_examples():
    assert cycle_type(Permutation.identity(4)) == CycleType.of(1, 1, 1, 1)
    assert cycle_type(cyc(5, (1, 2, 3))) == CycleType.of(3, 1, 1)
    five = cyc(5, (1, 2, 3, 4, 5))
    assert cycle_type(five * five) == CycleType.of(5)


def test_cycle_type_storage_is_descending():
    assert CycleType.of(1, 3, 2).parts == (3, 2, 1)
    with pytest.raises(ValueError):
        CycleType.of(0, 2)


def test_is_even_examples():
    assert is_even(Permutation.identity(6))
    for n in range(2, 7):
        assert not is_even(cyc(n, (1, 2)))
    assert not is_even(cyc(5, (1, 2, 3), (4, 5)))


@given(any_perm)
def test_parity_matches_cycle_count(p):
    ct = cycle_type(p)
    assert is_even(p) == ((p.n - ct.cycle_count) % 2 == 0)
    if is_even(p):
        assert ct.cycle_count % 2 == p.n % 2


@given(st.integers(1, 7).flatmap(lambda n: st.tuples(perms(n), perms(n))))
def test_parity_is_multiplicative(pq):
    p, q = pq
    assert is_even(p * q) == (is_even(p) == is_even(q))


@given(st.integers(1, 8).flatmap(lambda n: st.tuples(perms(n), perms(n))))
def test_conjugation_preserves_cycle_type(pq):
    p, q = pq
    assert cycle_type(q.inverse() * p * q) == cycle_type(p)


# -- the higher-than order ----------------------------------------------------------

def test_is_higher_examples():
    assert is_higher(cyc(5, (1, 2, 3, 4, 5)), cyc(5, (1, 2, 3)))
    assert not is_higher(cyc(4, (1, 2), (3, 4)), cyc(4, (1, 3)))
    t = cyc(3, (1, 2, 3))
    assert is_higher(t, t)


def test_is_higher_degree_mismatch():
    with pytest.raises(ValueError):
        is_higher(Permutation.identity(3), Permutation.identity(4))


@pytest.mark.parametrize("n", [4, 5])
def test_is_higher_is_a_preorder_on_partitions(n):
    group = [Permutation(im) for im in itertools.permutations(range(n))]
    rel = {(a, b): is_higher(a, b) for a in group for b in group}
    blocks = {p: p.coincidence_blocks() for p in group}
    for a in group:
        assert rel[a, a]
    for a in group:
        for b in group:
            if rel[a, b] and rel[b, a]:
                assert blocks[a] == blocks[b]
    # transitivity over one representative per coincidence partition keeps this quick
    reps = list({blocks[p]: p for p in group}.values())
    for a, b, c in itertools.product(reps, repeat=3):
        if rel[a, b] and rel[b, c]:
            assert rel[a, c]


def test_class_is_higher_examples():
    for n in range(5, 9):
        assert class_is_higher(CycleType.of(5, *[1] * (n - 5)), CycleType.of(3, *[1] * (n - 3)))
    assert not class_is_higher(CycleType.of(3, 3), CycleType.of(5, 1))
    for c in class_reps(6):
        assert class_is_higher(c, c)


def test_class_is_higher_degree_mismatch():
    with pytest.raises(ValueError):
        class_is_higher(CycleType.of(3), CycleType.of(2, 2))


@pytest.mark.parametrize("n", range(1, 7))
def test_class_is_higher_matches_representative_search(n):
    group = [Permutation(im) for im in itertools.permutations(range(n))]
    by_class = {}
    for p in group:
        by_class.setdefault(cycle_type(p), []).append(p)
    for ct, ts in by_class.items():
        t = ts[0]  # conjugating both sides by the same element preserves the relation
        for cs, ss in by_class.items():
            brute = any(is_higher(t, s) for s in ss)
            assert class_is_higher(ct, cs) == brute, (ct, cs)


# -- class enumeration ----------------------------------------------------------------

def test_partitions_count():
    assert [len(list(partitions(n))) for n in range(1, 11)] == [1, 2, 3, 5, 7, 11, 15, 22, 30, 42]


def test_even_class_reps_examples():
    assert set(even_class_reps(3)) == {CycleType.of(1, 1, 1), CycleType.of(3)}
    assert set(even_class_reps(4)) == {CycleType.of(1, 1, 1, 1), CycleType.of(2, 2), CycleType.of(3, 1)}
    assert list(even_class_reps(1)) == [CycleType.of(1)]


# -- chains ------------------------------------------------------------------------

def test_max_chain_examples():
    c5 = max_chain(5, ALTERNATING)
    assert c5.length == 2
    assert [c.parts for c in c5.chain] == [(3, 1, 1), (5,)]
    c9 = max_chain(9, ALTERNATING)
    assert [c.parts for c in c9.chain] == [(3,) + (1,) * 6, (5, 1, 1, 1, 1), (7, 1, 1), (9,)]
    s4 = max_chain(4, SYMMETRIC)
    assert s4.length == 3
    assert s4.chain[0] == CycleType.of(2, 1, 1) and s4.chain[-1] == CycleType.of(4)


def test_max_chain_rejects_small_alternating():
    with pytest.raises(ValueError):
        max_chain(2, ALTERNATING)
    with pytest.raises(ValueError):
        max_chain(5, "dihedral")


@pytest.mark.parametrize("n", range(3, 13))
def test_alternating_chain_length_closed_form(n):
    cert = max_chain(n, ALTERNATING)
    assert cert.length == (n - 1) // 2
    counts = [c.cycle_count for c in cert.chain]
    assert all(a - b >= 2 for a, b in zip(counts, counts[1:]))
    assert all(c.is_even() for c in cert.chain)


def test_lower_bound_values():
    assert [lower_bound_s(n) for n in range(5, 10)] == [2, 2, 3, 3, 4]
    assert lower_bound_s(3) == 1
    assert lower_bound_s(11) == 5
    with pytest.raises(ValueError):
        lower_bound_s(2)


def test_certificate_validation():
    with pytest.raises(ValueError):
        ChainCertificate((CycleType.of(2, 1, 1), CycleType.of(4)), ALTERNATING)
    with pytest.raises(ValueError):
        ChainCertificate((CycleType.of(3, 1), CycleType.of(3, 1)), ALTERNATING)
    with pytest.raises(ValueError):
        ChainCertificate((CycleType.of(1, 1, 1),), SYMMETRIC)
    ok = ChainCertificate((CycleType.of(2, 1, 1), CycleType.of(4)), SYMMETRIC)
    assert ok.length == 2


def test_certificate_json_round_trip():
    cert = max_chain(7)
    data = json.loads(json.dumps(cert.to_json()))
    assert data == {"kind": "alternating", "length": 3, "chain": [[3, 1, 1, 1, 1], [5, 1, 1], [7]]}
    assert ChainCertificate.from_json(data).chain == cert.chain


@settings(max_examples=60)
@given(st.integers(2, 9).flatmap(lambda n: st.tuples(st.sampled_from(class_reps(n)), st.sampled_from(class_reps(n)),
                                                    st.sampled_from(class_reps(n)))))
def test_class_order_is_transitive(abc):
    a, b, c = abc
    if class_is_higher(a, b) and class_is_higher(b, c):
        assert class_is_higher(a, c)
