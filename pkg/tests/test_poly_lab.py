import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resolvent_bounds.errors import SingularDerivativeError
from resolvent_bounds.poly_lab import (
    CPoly,
    MPoly,
    ParametricFamily,
    RootSet,
    all_roots,
    discriminant_value,
    newton_refine,
    parse_family,
    resultant,
    specialize,
    variables,
)

coef = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


def product_family():
    return parse_family("(x**3 - w1)*(x**2 - w2)", ["w1", "w2"])


def test_cpoly_trims_and_is_read_only():
    p = CPoly([1, 2, 0, 0])
    assert p.degree == 1
    with pytest.raises(ValueError):
        p.coeffs[0] = 5


def test_cpoly_arithmetic():
    a, b = CPoly([1, 1]), CPoly([-1, 1])
    assert (a * b).allclose(CPoly([-1, 0, 1]))
    assert (a - a).degree == 0
    assert a.derivative().allclose(CPoly([1]))


def test_specialize_examples():
    assert specialize(parse_family("x**2 - u1", ["u1"]), [4]).allclose(CPoly([-4, 0, 1]))
    cubic = parse_family("x**3 + u1*x + u2", ["u1", "u2"])
    assert specialize(cubic, [0, -1]).allclose(CPoly([-1, 0, 0, 1]))
    assert specialize(product_family(), [1, 1]).allclose(CPoly([1, 0, -1, -1, 0, 1]))


def test_specialize_dimension_mismatch():
    with pytest.raises(ValueError):
        specialize(parse_family("x**2 - u1", ["u1"]), [1, 2])


def test_family_is_monic_by_construction():
    fam = parse_family("x**3 + u1*x + u2", ["u1", "u2"])
    rng = np.random.default_rng(3)
    for _ in range(5):
        p = fam.specialize(rng.normal(size=2) + 1j * rng.normal(size=2))
        assert p.degree == 3 and p.lead == 1


def test_parse_rejects_non_monic():
    with pytest.raises(ValueError):
        parse_family("2*x**2 + u1", ["u1"])
    with pytest.raises(ValueError):
        parse_family("u1*x**2 + 1", ["u1"])


def test_family_json_format():
    fam = parse_family("x**2 + 3*u1*u2 - 1j", ["u1", "u2"])
    data = json.loads(json.dumps(fam.to_json()))
    assert data["degree"] == 2 and data["parameters"] == ["u1", "u2"]
    index2 = next(c for c in data["coefficients"] if c["index"] == 2)
    terms = sorted((tuple(t["e"]), tuple(t["c"])) for t in index2["terms"])
    assert terms == [((0, 0), (0.0, -1.0)), ((1, 1), (3.0, 0.0))]
    back = ParametricFamily.from_json(data)
    assert back.x_coeffs() == fam.x_coeffs()


def test_mpoly_substitution():
    u, v = variables(2)
    p = u * u + 2 * v
    q = p.substitute([v + 1, u])
    assert q == v * v + 2 * v + 1 + 2 * u
    assert p([2, 3]) == 10


def test_all_roots_examples():
    r = all_roots(CPoly([-1, 0, 1]))
    assert np.allclose(r.roots, [-1, 1])
    r3 = all_roots(CPoly([-1, 0, 0, 1]))
    assert np.all(r3.residuals < 1e-12)
    assert np.allclose(np.sort_complex(r3.roots**3), [1, 1, 1])
    multi = all_roots(CPoly.from_roots([0, 0, 0, 1, 1]))
    zeros = multi.roots[np.abs(multi.roots) < 0.5]
    ones = multi.roots[np.abs(multi.roots - 1) < 0.5]
    assert len(zeros) == 3 and len(ones) == 2
    assert np.ptp(zeros.real) < 1e-4 and np.ptp(ones.real) < 1e-6


def test_all_roots_labels_are_sorted_and_deterministic():
    p = CPoly([2 + 1j, -1, 0.5j, 3, 1])
    a, b = all_roots(p), all_roots(p)
    assert np.array_equal(a.roots, b.roots)
    keys = [(z.real, z.imag) for z in a.roots]
    assert keys == sorted(keys)


def test_discriminant_examples():
    assert discriminant_value(CPoly([-4, 0, 1])) == pytest.approx(16)
    assert discriminant_value(CPoly([-1, 0, 0, 1])) == pytest.approx(-27)
    assert abs(discriminant_value(CPoly.from_roots([0, 0, 0, 1, 1]))) < 1e-12
    with pytest.raises(ValueError):
        discriminant_value(CPoly([1, 1]))


def test_resultant_against_root_formula():
    f, g = CPoly.from_roots([1, 2]), CPoly.from_roots([3, -1, 0.5])
    expected = np.prod([b - a for a in [1, 2] for b in [3, -1, 0.5]])
    assert resultant(f, g) == pytest.approx(expected)


@settings(max_examples=40, deadline=None)
@given(st.lists(coef, min_size=2, max_size=6))
def test_discriminant_matches_root_product(cs):
    p = CPoly(list(cs) + [1])
    r = all_roots(p).roots
    brute = np.prod([(a - b) ** 2 for a, b in itertools.combinations(r, 2)])
    d = discriminant_value(p)
    scale = max(abs(brute), 1e-8)
    assert abs(d - brute) <= 1e-6 * scale + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.lists(coef, min_size=1, max_size=7, unique=True))
def test_reconstruction_from_roots(roots):
    roots = np.asarray(roots)
    if len(roots) > 1 and min(abs(a - b) for a, b in itertools.combinations(roots, 2)) < 0.1:
        return
    p = CPoly.from_roots(roots)
    back = CPoly.from_roots(all_roots(p).roots)
    scale = np.abs(p.coeffs).max()
    assert np.abs(back.coeffs - p.coeffs).max() <= 1e-8 * scale


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_specialize_is_linear_in_coefficients(seed):
    rng = np.random.default_rng(seed)
    u = variables(2)

    def rand_poly():
        return sum(complex(*rng.normal(size=2)) * u[0] ** i * u[1] ** j
                   for i in range(2) for j in range(2)) + complex(*rng.normal(size=2))

    a = [rand_poly() for _ in range(3)]
    b = [rand_poly() for _ in range(3)]
    fa, fb = ParametricFamily(a), ParametricFamily(b)
    fs = ParametricFamily([x + y for x, y in zip(a, b)])
    point = rng.normal(size=2) + 1j * rng.normal(size=2)
    ca, cb, cs = (f.specialize(point).coeffs for f in (fa, fb, fs))
    # the leading 1 is shared, the rest add
    assert np.allclose(cs[:-1], ca[:-1] + cb[:-1], atol=1e-12)


def test_discriminant_vanishes_exactly_on_clusters():
    fam = product_family()
    for w2 in [0.5, 1.0, 2 + 1j]:
        p = fam.specialize([0, w2])
        r = all_roots(p)
        assert abs(discriminant_value(p)) < 1e-12
        assert min(abs(a - b) for a, b in itertools.combinations(r.roots, 2)) < 1e-4
    for w1 in [0.3, 1j]:
        p = fam.specialize([w1, 1.0])
        assert abs(discriminant_value(p)) > 1e-3
        assert RootSet.of(p, all_roots(p).roots).min_separation() > 1e-2


def test_newton_refine_examples():
    assert newton_refine(CPoly([-2, 0, 1]), 1.5) == pytest.approx(np.sqrt(2), abs=1e-13)
    assert newton_refine(CPoly([-3 + 1j, 1]), 100.0) == pytest.approx(3 - 1j)
    with pytest.raises(SingularDerivativeError):
        newton_refine(CPoly([0, 0, 1]), 1e-9)


def test_product_family_multiplication():
    f = parse_family("x**3 - w1", ["w1", "w2"])
    g = parse_family("x**2 - w2", ["w1", "w2"])
    prod = f * g
    assert prod.specialize([1, 1]).allclose(product_family().specialize([1, 1]))


def test_mpoly_json_round_trip():
    u, v = variables(2)
    p = (1 + 2j) * u**2 * v - 3
    assert MPoly.from_json(json.loads(json.dumps(p.to_json())), 2) == p
