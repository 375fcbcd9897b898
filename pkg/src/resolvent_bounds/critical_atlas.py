"""Coincidence patterns at critical points, inertia groups and chain certificates."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AmbiguousClusteringError, NumericalError, TrackingError
from .monodromy import (
    DEFAULT_TRACK,
    Circle,
    Line,
    ParamLoop,
    ParamPath,
    PermGroup,
    TrackOptions,
    _cluster_points,
    _vec,
    conjugated_circle,
    group_closure,
    line_critical_points,
    line_discriminant,
    loop_permutation,
    monodromy_group,
    random_direction,
    star_loops,
    track_path,
)
from .perm_core import (
    ALTERNATING,
    SYMMETRIC,
    ChainCertificate,
    CycleType,
    Permutation,
    class_is_higher,
    is_higher,
)
from .poly_lab import (
    DEFAULT_TOL,
    CPoly,
    ParametricFamily,
    RootSet,
    Tolerances,
    all_roots,
    complex_to_json,
    point_to_json,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoincidencePattern:
    """Set partition of root labels into groups of equal roots."""

    blocks: tuple[tuple[int, ...], ...]
    n: int

    def __post_init__(self):
        blocks = tuple(sorted(tuple(sorted(int(i) for i in b)) for b in self.blocks))
        flat = [i for b in blocks for i in b]
        if any(len(b) == 0 for b in blocks) or sorted(flat) != list(range(self.n)):
            raise ValueError("blocks must be non-empty, disjoint and cover 0..n-1")
        object.__setattr__(self, "blocks", blocks)

    def as_permutation(self) -> Permutation:
        """A permutation whose cycles are exactly the blocks."""
        return Permutation.from_cycles(self.n, self.blocks)

    def is_critical(self) -> bool:
        return any(len(b) > 1 for b in self.blocks)

    def to_json(self) -> list[list[int]]:
        return [list(b) for b in self.blocks]


def coincidence_pattern(rs: RootSet | Sequence[complex], tol: float = DEFAULT_TOL.cluster) -> CoincidencePattern:
    """Single-linkage clusters of the roots at threshold ``tol``."""
    z = np.asarray(getattr(rs, "roots", rs), dtype=complex)
    groups = _cluster_points(z, tol)
    if len(groups) > 1:
        gap = min(
            np.abs(z[a][:, None] - z[b][None, :]).min()
            for a, b in itertools.combinations(groups, 2)
        )
        if gap < 10 * tol:
            raise AmbiguousClusteringError(
                f"clusters only {gap:.3g} apart at tolerance {tol:.3g}; adjust the cluster tolerance")
    return CoincidencePattern(tuple(tuple(int(i) for i in g) for g in groups), len(z))


def pattern_class(p: CoincidencePattern) -> CycleType:
    return CycleType(tuple(len(b) for b in p.blocks))


def pattern_at(fam: ParametricFamily, point, tol: Tolerances = DEFAULT_TOL) -> CoincidencePattern:
    return coincidence_pattern(all_roots(fam.specialize(_vec(point)), tol.residual), tol.cluster)


def local_structure(fam: ParametricFamily, point, direction, rel_zero: float = 1e-10) -> tuple[int, float]:
    """Vanishing order of the discriminant at ``point`` along ``direction``, and the
    distance (in line units) to the nearest other critical value on that line."""
    dpoly = line_discriminant(fam, point, direction)
    c = dpoly.coeffs
    big = np.abs(c).max()
    k = 0
    while k < len(c) - 1 and abs(c[k]) <= rel_zero * big:
        k += 1
    rest = CPoly(c[k:])
    if rest.degree == 0:
        return k, 1.0
    ts = all_roots(rest, tol=1e-6).roots
    return k, float(np.abs(ts).min())


def transport_to_point(fam: ParametricFamily, point, base: RootSet, base_point,
                       tol: Tolerances = DEFAULT_TOL, options: TrackOptions = DEFAULT_TRACK,
                       shrink: float = 1e-6) -> tuple[np.ndarray, CoincidencePattern]:
    """Limits at ``point`` of the roots labeled at ``base_point``, approached along the
    straight ray, plus the coincidence pattern expressed in those labels."""
    point, base_point = _vec(point), _vec(base_point)
    near = point + shrink * (base_point - point)
    tracked = track_path(fam, ParamPath((Line(base_point, near),)), base, options)
    at_p = all_roots(fam.specialize(point), tol.residual)
    raw = coincidence_pattern(at_p, tol.cluster)
    centres = np.array([at_p.roots[list(b)].mean() for b in raw.blocks])
    owner = np.argmin(np.abs(tracked.roots[:, None] - centres[None, :]), axis=1)
    sizes = np.bincount(owner, minlength=len(centres))
    if any(sizes[k] != len(b) for k, b in enumerate(raw.blocks)):
        raise NumericalError("could not transport root labels to the critical point", location=point)
    blocks = tuple(tuple(np.nonzero(owner == k)[0].tolist()) for k in range(len(centres)))
    return centres[owner], CoincidencePattern(blocks, fam.degree)


# -- the product test ---------------------------------------------------------

def layouts_of_type(cls: CycleType) -> list[tuple[tuple[int, ...], ...]]:
    """Every set partition of ``0..n-1`` whose block sizes are ``cls``."""
    out = []

    def place(remaining: tuple[int, ...], sizes: list[int], acc: list):
        if not remaining:
            out.append(tuple(acc))
            return
        first, rest = remaining[0], remaining[1:]
        for size in sorted(set(sizes), reverse=True):
            left = list(sizes)
            left.remove(size)
            for others in itertools.combinations(rest, size - 1):
                place(tuple(i for i in rest if i not in others), left, acc + [(first,) + others])

    place(tuple(range(cls.n)), list(cls.parts), [])
    return out


def default_layout(cls: CycleType) -> tuple[tuple[int, ...], ...]:
    """Blocks for the parts in descending size, symbols in index order."""
    blocks, start = [], 0
    for part in cls.parts:
        blocks.append(tuple(range(start, start + part)))
        start += part
    return tuple(blocks)


def constrained_t(layout, n: int, rng: np.random.Generator) -> np.ndarray:
    """Random ``t`` with zero sum over every block; free entries have modulus one."""
    t = np.zeros(n, dtype=complex)
    for block in layout:
        if len(block) < 2:
            continue
        free = np.exp(2j * np.pi * rng.random(len(block) - 1))
        t[list(block[:-1])] = free
        t[block[-1]] = -free.sum()
    return t


def phi_product(x: np.ndarray, t: np.ndarray, elements: Sequence[Permutation]) -> complex:
    """``prod over T of (t_1 x_T(1) + ... + t_n x_T(n))``."""
    imgs = np.array([g.images for g in elements])
    return complex(np.prod(x[imgs] @ t))


@dataclass(frozen=True, eq=False)
class PhiResult:
    cls: CycleType
    layouts: tuple[tuple[tuple[int, ...], ...], ...]
    values: np.ndarray          # |Phi|, shape (layouts, samples)
    roots_at_point: np.ndarray  # limits at the point, in the basepoint labels
    group: PermGroup
    tol: float
    notes: list[str] = field(default_factory=list)

    def vanishing_layouts(self) -> list[int]:
        return [k for k in range(len(self.layouts)) if np.all(self.values[k] < self.tol)]

    @property
    def holds(self) -> bool:
        return bool(self.vanishing_layouts())


def phi_s_values(fam: ParametricFamily, point, cls: CycleType, samples: int = 8, seed: int = 0,
                 layout=None, phi_tol: float = 1e-8, tol: Tolerances = DEFAULT_TOL,
                 options: TrackOptions = DEFAULT_TRACK) -> PhiResult:
    """Evaluate the constrained product over the monodromy group near ``point``.

    Without an explicit ``layout`` every placement of the class's blocks is
    tried, one per orbit of the group, so the verdict is class-level.
    """
    point = _vec(point)
    if cls.n != fam.degree:
        raise ValueError(f"class {cls} does not partition the family degree {fam.degree}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    d = random_direction(fam.param_count, rng)
    _, scale = local_structure(fam, point, d)
    base_point = point + 1e-2 * scale * d
    run = monodromy_group(fam, base_point, "auto", seed=seed, options=options, tol=tol)
    x_p, _ = transport_to_point(fam, point, run.base, base_point, tol, options)
    notes = []
    group = run.group
    if group.materialized:
        elements = sorted(group.elements, key=lambda g: g.images)
    else:
        msg = "monodromy closure not materialized; using the full symmetric group"
        logger.warning(msg)
        notes.append(msg)
        elements = [Permutation(p) for p in itertools.permutations(range(fam.degree))]

    if layout is not None:
        lay = tuple(tuple(int(i) for i in b) for b in layout)
        if sorted(len(b) for b in lay) != sorted(cls.parts) or sorted(i for b in lay for i in b) != list(range(cls.n)):
            raise ValueError("layout does not match the class")
        reps = [lay]
    else:
        reps = []
        seen: set = set()
        for lay in layouts_of_type(cls):
            key = frozenset(frozenset(b) for b in lay)
            if key in seen:
                continue
            reps.append(lay)
            for g in elements:
                seen.add(frozenset(frozenset(g.images[i] for i in b) for b in lay))
    values = np.zeros((len(reps), samples))
    for k, lay in enumerate(reps):
        for j in range(samples):
            t = constrained_t(lay, fam.degree, rng)
            values[k, j] = abs(phi_product(x_p, t, elements))
    return PhiResult(cls, tuple(reps), values, x_p, group, phi_tol, notes)


def phi_s_test(fam: ParametricFamily, point, cls: CycleType, samples: int = 8, **kwargs) -> bool:
    """Whether the constrained product vanishes, i.e. the point lies on the critical
    manifold of the class."""
    return phi_s_values(fam, point, cls, samples, **kwargs).holds


# -- inertia ------------------------------------------------------------------

@dataclass(frozen=True)
class Probe:
    kind: str            # "circle" or "slice"
    direction: np.ndarray
    rho: float
    perm: Permutation

    def to_json(self) -> dict:
        return {"kind": self.kind, "direction": point_to_json(self.direction),
                "rho": self.rho, "perm": self.perm.to_json()}


@dataclass(frozen=True, eq=False)
class InertiaReport:
    point: np.ndarray
    pattern: CoincidencePattern   # in the labels of the shared basepoint
    group: PermGroup
    probes: tuple[Probe, ...]
    basepoint: np.ndarray
    seed: int | None = None

    @property
    def cls(self) -> CycleType:
        return pattern_class(self.pattern)

    def violations(self) -> list[Permutation]:
        """Group elements moving a root outside its coincidence block."""
        if not self.group.materialized:
            return []
        top = self.pattern.as_permutation()
        return [g for g in self.group.elements if not is_higher(top, g)]

    def to_json(self) -> dict:
        return {
            "point": point_to_json(self.point),
            "pattern": self.pattern.to_json(),
            "class": self.cls.to_json(),
            "order": self.group.order,
            "generators": [g.to_json() for g in self.group.generators],
            "probes": [p.to_json() for p in self.probes],
            "seed": self.seed,
        }


def _circle_probe(fam, point, base_point, base, d, rho, options):
    circle = Circle(point, d, rho, 1)
    if np.allclose(circle.start, base_point):
        loop = ParamLoop(ParamPath((circle,)))
    else:
        loop = conjugated_circle(base_point, circle)
    return loop_permutation(fam, loop, base, options)


def inertia_group(fam: ParametricFamily, point, probes: int = 8, seed: int = 0,
                  slice_probes: int = 1, tol: Tolerances = DEFAULT_TOL,
                  options: TrackOptions = DEFAULT_TRACK, max_halvings: int = 8) -> InertiaReport:
    """Permutations realized by small loops around a critical point.

    Each probe is a small circle around ``point`` inside a random complex
    line, reached from a shared nearby basepoint.  ``slice_probes`` extra
    random lines passing close to (not through) the point contribute loops
    around each nearby discriminant point, which exposes non-cyclic
    inertia at intersections of critical manifolds.
    """
    point = _vec(point)
    if probes < 1:
        raise ValueError("probes must be >= 1")
    if not pattern_at(fam, point, tol).is_critical():
        raise ValueError("point is not on the discriminant locus")
    rng = np.random.default_rng(seed)
    dirs = [random_direction(fam.param_count, rng) for _ in range(probes)]
    rhos = []
    for d in dirs:
        _, scale = local_structure(fam, point, d)
        rhos.append(1e-2 * scale)

    for _ in range(max_halvings + 1):
        base_point = point + rhos[0] * dirs[0]
        try:
            base = all_roots(fam.specialize(base_point), tol.residual)
            perms = [
                _circle_probe(fam, point, base_point, base, d, r, options)
                for d, r in zip(dirs, rhos)
            ]
            _, pattern = transport_to_point(fam, point, base, base_point, tol, options)
            break
        except (TrackingError, NumericalError) as exc:
            logger.info("inertia probe failed (%s); halving rho", exc)
            rhos = [r / 2 for r in rhos]
    else:
        raise NumericalError("no non-critical probe radius found", location=point)

    log = [Probe("circle", d, float(r), p) for d, r, p in zip(dirs, rhos, perms)]
    if fam.param_count > 1:
        for _ in range(slice_probes):
            log.extend(_slice_probe(fam, point, base_point, base, rhos[0], rng, options))
    group = group_closure([p.perm for p in log], fam.degree)
    return InertiaReport(point, pattern, group, tuple(log), base_point, seed)


def _slice_probe(fam, point, base_point, base, rho, rng, options) -> list[Probe]:
    d = random_direction(fam.param_count, rng)
    expected, _ = local_structure(fam, point, d)
    try:
        pts = line_critical_points(fam, base_point, d)
    except NumericalError as exc:
        logger.info("slice probe skipped: %s", exc)
        return []
    local = [c for c in pts if np.linalg.norm(base_point + c.t * d - point) < 10 * rho]
    if sum(c.multiplicity for c in local) != expected:
        logger.info("slice probe skipped: found %d local crossings, expected %d",
                    sum(c.multiplicity for c in local), expected)
        return []
    sl = star_loops(base_point, d, local)
    out = []
    for loop, r in zip(sl.loops, sl.radii):
        try:
            out.append(Probe("slice", d, float(r), loop_permutation(fam, loop, base, options)))
        except TrackingError as exc:
            logger.info("slice loop skipped: %s", exc)
    return out


# -- chains -------------------------------------------------------------------

def chain_certificate(fam: ParametricFamily, points: Sequence, tol: Tolerances = DEFAULT_TOL) -> ChainCertificate:
    """Chain of coincidence classes at points listed from lowest to highest."""
    if not points:
        raise ValueError("need at least one point")
    classes = [pattern_class(pattern_at(fam, p, tol)) for p in points]
    for k, (lo, hi) in enumerate(zip(classes, classes[1:])):
        if lo == hi or not class_is_higher(hi, lo):
            raise ValueError(f"points {k} and {k + 1}: class {hi.parts} is not strictly above {lo.parts}")
    kind = ALTERNATING if all(c.is_even() for c in classes) and not classes[0].is_transposition() else SYMMETRIC
    return ChainCertificate(tuple(classes), kind)


def nearby_classes(fam: ParametricFamily, point, direction, eps: float, samples: int,
                   rng: np.random.Generator, tol: Tolerances = DEFAULT_TOL) -> list[CycleType]:
    """Classes at random points ``point + eps * z * direction`` with ``|z| = 1``."""
    point, direction = _vec(point), _vec(direction)
    out = []
    for _ in range(samples):
        z = np.exp(2j * np.pi * rng.random())
        out.append(pattern_class(pattern_at(fam, point + eps * z * direction, tol)))
    return out


def describe_point(fam: ParametricFamily, point, tol: Tolerances = DEFAULT_TOL) -> dict:
    rs = all_roots(fam.specialize(_vec(point)), tol.residual)
    pat = coincidence_pattern(rs, tol.cluster)
    return {"point": point_to_json(_vec(point)), "roots": [complex_to_json(z) for z in rs.roots],
            "pattern": pat.to_json(), "class": pattern_class(pat).to_json()}
