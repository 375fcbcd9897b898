import json
from functools import lru_cache

import numpy as np
import pytest

from resolvent_bounds.critical_atlas import (
    CoincidencePattern,
    chain_certificate,
    coincidence_pattern,
    constrained_t,
    inertia_group,
    layouts_of_type,
    nearby_classes,
    pattern_at,
    pattern_class,
    phi_s_test,
    phi_s_values,
)
from resolvent_bounds.errors import AmbiguousClusteringError
from resolvent_bounds.perm_core import CycleType, class_is_higher, class_reps, cycle_type, is_higher
from resolvent_bounds.poly_lab import CPoly, all_roots, parse_family


@lru_cache(maxsize=None)
def fam(expr, params):
    return parse_family(expr, list(params))


SQUARE = ("x**2 - u", ("u",))
CUBE = ("x**3 - u", ("u",))
CUBIC = ("x**3 + u1*x + u2", ("u1", "u2"))
PRODUCT = ("(x**3 - w1)*(x**2 - w2)", ("w1", "w2"))
PENCIL = ("x**3*(x - 1)**2 + v1*(x - 2)", ("v1",))
QUINTIC = ("x**5 + u1*x**3 + u2*x**2 + u3*x + u4", ("u1", "u2", "u3", "u4"))


def T(*parts):
    return CycleType.of(*parts)


# -- patterns ----------------------------------------------------------------------

def test_pattern_examples():
    p = coincidence_pattern([0, 0, 0, 1, 1])
    assert p.blocks == ((0, 1, 2), (3, 4))
    assert pattern_class(p) == T(3, 2)
    distinct = coincidence_pattern([0, 1, 2j, -1])
    assert pattern_class(distinct) == T(1, 1, 1, 1) and not distinct.is_critical()
    rs = all_roots(CPoly.from_roots([1, 1, -2]))
    assert sorted(map(len, coincidence_pattern(rs).blocks)) == [1, 2]
    assert pattern_class(CoincidencePattern(((0, 1, 2, 3),), 4)) == T(4)


def test_pattern_ambiguity():
    with pytest.raises(AmbiguousClusteringError):
        coincidence_pattern([0, 5e-6, 1], tol=1e-6)


def test_pattern_validation_and_json():
    with pytest.raises(ValueError):
        CoincidencePattern(((0, 1), (1, 2)), 3)
    with pytest.raises(ValueError):
        CoincidencePattern(((0,), (2,)), 3)
    p = CoincidencePattern(((3, 4), (0, 1, 2)), 5)
    assert json.loads(json.dumps(p.to_json())) == [[0, 1, 2], [3, 4]]
    assert cycle_type(p.as_permutation()) == T(3, 2)


def test_pattern_at_family_points():
    assert pattern_class(pattern_at(fam(*PENCIL), [0])) == T(3, 2)
    assert pattern_class(pattern_at(fam(*PRODUCT), [0, 1])) == T(3, 1, 1)
    assert pattern_class(pattern_at(fam(*PRODUCT), [0, 0])) == T(5)


# -- constrained product ----------------------------------------------------------

def test_layout_counts():
    assert len(layouts_of_type(T(3, 1, 1))) == 10
    assert len(layouts_of_type(T(2, 2, 1))) == 15
    assert len(layouts_of_type(T(1, 1, 1))) == 1
    for lay in layouts_of_type(T(3, 2)):
        assert sorted(i for b in lay for i in b) == list(range(5))


def test_constrained_t_sums():
    rng = np.random.default_rng(0)
    lay = ((0, 3, 4), (1, 2), (5,))
    t = constrained_t(lay, 6, rng)
    assert abs(t[[0, 3, 4]].sum()) < 1e-14 and abs(t[[1, 2]].sum()) < 1e-14
    assert t[5] == 0


def test_phi_square_root_examples():
    assert phi_s_test(fam(*SQUARE), [0], T(2), seed=1)
    assert not phi_s_test(fam(*SQUARE), [1], T(2), seed=1)


def test_phi_product_family_examples():
    f = fam(*PRODUCT)
    assert phi_s_test(f, [0, 1], T(3, 1, 1), seed=2)
    assert not phi_s_test(f, [0, 1], T(2, 2, 1), seed=2)
    assert not phi_s_test(f, [0, 1], T(3, 2), seed=2)


def test_phi_two_block_on_the_quadratic_orbit_does_not_vanish():
    f = fam(*PRODUCT)
    res = phi_s_values(f, [0, 1], T(2, 1, 1, 1), seed=3)
    quad = [i for i, z in enumerate(res.roots_at_point) if abs(abs(z) - 1) < 0.1]
    assert len(quad) == 2
    others = [(i,) for i in range(5) if i not in quad]
    lay = (tuple(quad),) + tuple(others)
    explicit = phi_s_values(f, [0, 1], T(2, 1, 1, 1), seed=3, layout=lay)
    assert not explicit.holds
    assert explicit.values.min() > 1e-3


def test_phi_rejects_bad_class():
    with pytest.raises(ValueError):
        phi_s_values(fam(*SQUARE), [0], T(2, 1))
    with pytest.raises(ValueError):
        phi_s_values(fam(*PRODUCT), [0, 1], T(3, 1, 1), layout=((0, 1), (2,), (3,), (4,)))


PATTERN_CASES = [
    (SQUARE, [0]), (SQUARE, [1]), (CUBIC, [0, 0]), (CUBIC, [-3, 2]),
    (PRODUCT, [0, 1]), (PRODUCT, [1, 0]), (PRODUCT, [0.5 + 0.5j, 2]),
]


@pytest.mark.parametrize("family,point", PATTERN_CASES)
def test_phi_agrees_with_pattern_order(family, point):
    f = fam(*family)
    here = pattern_class(pattern_at(f, point))
    for cls in class_reps(f.degree):
        res = phi_s_values(f, point, cls, samples=4, seed=5)
        assert res.holds == class_is_higher(here, cls), (family, point, cls.parts)


# -- inertia ---------------------------------------------------------------------

def _check_report(rep, expected_cls):
    assert rep.cls == expected_cls
    assert expected_cls in {cycle_type(g) for g in rep.group.elements}
    assert rep.violations() == []


def test_inertia_square_root():
    rep = inertia_group(fam(*SQUARE), [0], probes=4, seed=0)
    assert rep.group.order == 2
    _check_report(rep, T(2))


def test_inertia_cube_root():
    rep = inertia_group(fam(*CUBE), [0], probes=4, seed=0)
    assert rep.group.order == 3
    _check_report(rep, T(3))


def test_inertia_pencil_contains_pattern_class():
    rep = inertia_group(fam(*PENCIL), [0], probes=8, seed=1)
    _check_report(rep, T(3, 2))


def test_inertia_cubic_cusp_is_full_symmetric_group():
    rep = inertia_group(fam(*CUBIC), [0, 0], probes=8, seed=0)
    assert rep.group.order == 6
    _check_report(rep, T(3))


def test_inertia_intersection_sees_every_locus():
    rep = inertia_group(fam(*PRODUCT), [0, 0], probes=8, seed=0)
    types = {cycle_type(g) for g in rep.group.elements}
    for cls in (T(3, 1, 1), T(2, 1, 1, 1), T(3, 2)):
        assert cls in types
    assert rep.violations() == []


def test_inertia_report_json():
    rep = inertia_group(fam(*SQUARE), [0], probes=2, seed=4)
    data = json.loads(json.dumps(rep.to_json()))
    assert {"point", "pattern", "class", "order", "generators", "probes"} <= set(data)
    assert data["class"] == [2] and data["seed"] == 4
    assert all({"direction", "rho", "perm"} <= set(p) for p in data["probes"])


def test_inertia_upper_containment_on_product_line():
    rep = inertia_group(fam(*PRODUCT), [0, 1], probes=6, seed=2)
    top = rep.pattern.as_permutation()
    assert all(is_higher(top, g) for g in rep.group.elements)
    _check_report(rep, T(3, 1, 1))


# -- nearby classes ------------------------------------------------------------------

def test_nearby_points_realize_each_locus():
    f = fam(*PRODUCT)
    rng = np.random.default_rng(0)
    along_w2 = nearby_classes(f, [0, 0], [0, 1], 1e-3, 6, rng)
    along_w1 = nearby_classes(f, [0, 0], [1, 0], 1e-3, 6, rng)
    assert set(along_w2) == {T(3, 1, 1)}
    assert set(along_w1) == {T(2, 1, 1, 1)}
    generic = nearby_classes(f, [0, 0], [1, 1j], 1e-3, 6, rng)
    assert set(generic) == {T(1, 1, 1, 1, 1)}


# -- chains --------------------------------------------------------------------------

def test_chain_certificate_quintic():
    cert = chain_certificate(fam(*QUINTIC), [[-1, 0, 0, 0], [0, 0, 0, 0]])
    assert cert.length == 2
    assert [c.parts for c in cert.chain] == [(3, 1, 1), (5,)]
    assert cert.group_kind == "alternating"


def test_chain_certificate_single_point():
    assert chain_certificate(fam(*QUINTIC), [[0, 0, 0, 0]]).length == 1


def test_chain_certificate_rejects_equal_patterns():
    with pytest.raises(ValueError, match="points 0 and 1"):
        chain_certificate(fam(*QUINTIC), [[0, 0, 0, 0], [0, 0, 0, 0]])
    with pytest.raises(ValueError):
        chain_certificate(fam(*QUINTIC), [])
