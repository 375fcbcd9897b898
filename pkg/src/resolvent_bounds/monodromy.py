"""Root continuation along parameter paths and monodromy groups.

Paths are chains of straight segments and circles in ``C^m``.  Roots are
carried along with a Newton corrector; a step is accepted only when every
root moved less than a third of the smallest root gap, which makes the
label correspondence between consecutive root sets unambiguous.

Orientation: for a loop, ``sigma`` satisfies ``end[i] == base[sigma(i)]``.
Loop A followed by loop B therefore gives ``sigma_B * sigma_A``.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import CriticalIsolationError, RootFindingError, TrackingError
from .perm_core import Permutation, cycle_type
from .poly_lab import (
    DEFAULT_TOL,
    CPoly,
    ParametricFamily,
    RootSet,
    Tolerances,
    all_roots,
    discriminant_value,
    point_from_json,
    point_to_json,
)

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps
CLOSURE_CAP = 10**6


def _vec(p) -> np.ndarray:
    return np.asarray(p, dtype=complex).reshape(-1)


def _close(a, b, tol: float = 1e-12) -> bool:
    a, b = _vec(a), _vec(b)
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= tol * max(1.0, np.abs(a).max(initial=0))))


@dataclass(frozen=True, eq=False)
class Line:
    start: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start", _vec(self.start))
        object.__setattr__(self, "end", _vec(self.end))
        if self.start.shape != self.end.shape:
            raise ValueError("line endpoints differ in dimension")

    weight = 1

    def point(self, s: float) -> np.ndarray:
        return self.start + s * (self.end - self.start)

    def reversed(self) -> Line:
        return Line(self.end, self.start)

    def to_json(self) -> dict:
        return {"line": {"from": point_to_json(self.start), "to": point_to_json(self.end)}}


@dataclass(frozen=True, eq=False)
class Circle:
    """``u(theta) = center + radius * exp(i theta) * direction``, theta over ``2 pi turns``."""

    center: np.ndarray
    direction: np.ndarray
    radius: float
    turns: int = 1

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "direction", _vec(self.direction))
        if self.center.shape != self.direction.shape:
            raise ValueError("circle center and direction differ in dimension")
        if not self.radius > 0:
            raise ValueError("circle radius must be positive")
        if int(self.turns) != self.turns:
            raise ValueError("turns must be an integer")
        object.__setattr__(self, "turns", int(self.turns))

    @property
    def weight(self) -> int:
        return max(1, abs(self.turns))

    @property
    def start(self) -> np.ndarray:
        return self.center + self.radius * self.direction

    end = start

    def point(self, s: float) -> np.ndarray:
        return self.center + self.radius * np.exp(2j * np.pi * self.turns * s) * self.direction

    def reversed(self) -> Circle:
        return Circle(self.center, self.direction, self.radius, -self.turns)

    def to_json(self) -> dict:
        return {"circle": {
            "center": point_to_json(self.center),
            "direction": point_to_json(self.direction),
            "radius": float(self.radius),
            "turns": self.turns,
        }}


Segment = Line | Circle


def _segment_from_json(data: dict) -> Segment:
    if "line" in data:
        d = data["line"]
        return Line(point_from_json(d["from"]), point_from_json(d["to"]))
    if "circle" in data:
        d = data["circle"]
        return Circle(point_from_json(d["center"]), point_from_json(d["direction"]),
                      float(d["radius"]), int(d.get("turns", 1)))
    raise ValueError(f"unknown segment {sorted(data)}")


@dataclass(frozen=True, eq=False)
class ParamPath:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValueError("a path needs at least one segment")
        for a, b in zip(segs, segs[1:]):
            if not _close(a.end, b.start):
                raise ValueError("consecutive segments do not share endpoints")
        object.__setattr__(self, "segments", segs)

    @property
    def start(self) -> np.ndarray:
        return self.segments[0].start

    @property
    def end(self) -> np.ndarray:
        return self.segments[-1].end

    @property
    def dim(self) -> int:
        return self.start.shape[0]

    def reversed(self) -> ParamPath:
        return ParamPath(tuple(s.reversed() for s in reversed(self.segments)))

    def then(self, other: ParamPath) -> ParamPath:
        return ParamPath(self.segments + other.segments)

    def to_json(self) -> dict:
        return {"segments": [s.to_json() for s in self.segments]}

    @classmethod
    def from_json(cls, data: dict) -> ParamPath:
        return cls(tuple(_segment_from_json(s) for s in data["segments"]))


@dataclass(frozen=True, eq=False)
class ParamLoop:
    path: ParamPath

    def __post_init__(self):
        if not _close(self.path.start, self.path.end):
            raise ValueError("loop is not closed")

    @property
    def base(self) -> np.ndarray:
        return self.path.start

    def inverse(self) -> ParamLoop:
        return ParamLoop(self.path.reversed())

    def then(self, other: ParamLoop) -> ParamLoop:
        return ParamLoop(self.path.then(other.path))

    def __pow__(self, k: int) -> ParamLoop:
        if k == 0:
            raise ValueError("zero power of a loop has no segments")
        base = self if k > 0 else self.inverse()
        return ParamLoop(ParamPath(base.path.segments * abs(k)))

    def to_json(self) -> dict:
        return self.path.to_json()

    @classmethod
    def from_json(cls, data: dict) -> ParamLoop:
        return cls(ParamPath.from_json(data))


def conjugated_circle(base, circle: Circle) -> ParamLoop:
    """Approach ``circle`` by a straight segment from ``base``, go round, come back."""
    approach = Line(base, circle.start)
    return ParamLoop(ParamPath((approach, circle, approach.reversed())))


@dataclass(frozen=True)
class TrackOptions:
    max_step: float = 0.02      # fraction of a segment (per turn for circles)
    min_step: float = 1e-9
    newton_iters: int = 10
    growth: float = 2.0


DEFAULT_TRACK = TrackOptions()


def _newton_all(c_high: np.ndarray, x: np.ndarray, iters: int) -> np.ndarray | None:
    d_high = np.polyder(c_high)
    abs_high = np.abs(c_high)
    scale = max(np.abs(x).max(), 1e-300)
    for _ in range(iters):
        pv = np.polyval(c_high, x)
        dv = np.polyval(d_high, x)
        if np.any(np.abs(dv) == 0):
            return None
        step = pv / dv
        x = x - step
        if not np.all(np.isfinite(x)):
            return None
        small_step = np.abs(step) <= 1e-12 * np.maximum(np.abs(x), scale)
        small_res = np.abs(np.polyval(c_high, x)) <= 64 * _EPS * np.polyval(abs_high, np.abs(x))
        if np.all(small_step | small_res):
            return x
    return None


def _min_gap(x: np.ndarray) -> float:
    if len(x) < 2:
        return np.inf
    d = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(d, np.inf)
    return float(d.min())


def _track_segment(fam: ParametricFamily, seg: Segment, x: np.ndarray, opts: TrackOptions) -> np.ndarray:
    hmax = opts.max_step / seg.weight
    tau, h = 0.0, hmax
    while tau < 1.0:
        h = min(h, 1.0 - tau)
        target = seg.point(tau + h)
        xn = _newton_all(fam.coefficients_at(target), x, opts.newton_iters)
        if xn is not None and np.abs(xn - x).max() < _min_gap(x) / 3:
            tau = tau + h if tau + h < 1.0 - 1e-15 else 1.0
            x = xn
            h = min(h * opts.growth, hmax)
            continue
        h /= 2
        if h < opts.min_step:
            raise TrackingError(
                f"step underflow at segment parameter {tau:.6g} (roots nearly collide)",
                location=seg.point(tau),
            )
    return x


def track_path(fam: ParametricFamily, path: ParamPath, start: RootSet,
               options: TrackOptions = DEFAULT_TRACK) -> RootSet:
    """Continue every labeled root of ``start`` along ``path``; label ``i`` stays label ``i``."""
    if path.dim != fam.param_count:
        raise ValueError("path dimension differs from the family's parameter count")
    if start.n != fam.degree:
        raise ValueError("start root set has the wrong size")
    x = np.array(start.roots, dtype=complex)
    for seg in path.segments:
        x = _track_segment(fam, seg, x, options)
    return RootSet.of(fam.specialize(path.end), x)


def match_roots(reference: RootSet | np.ndarray, moved: RootSet | np.ndarray) -> list[int]:
    """Index ``j`` of the reference root matched to each moved root, by optimal assignment.

    Raises when some matched pair is not clearly closer than any rival.
    """
    ref = np.asarray(getattr(reference, "roots", reference))
    mov = np.asarray(getattr(moved, "roots", moved))
    cost = np.abs(mov[:, None] - ref[None, :])
    rows, cols = linear_sum_assignment(cost)
    gap = _min_gap(ref)
    worst = cost[rows, cols].max()
    if worst >= gap / 3:
        raise TrackingError(f"root matching ambiguous: displacement {worst:.3g} vs gap {gap:.3g}")
    out = [0] * len(rows)
    for r, c in zip(rows, cols):
        out[r] = int(c)
    return out


def base_roots(fam: ParametricFamily, point, tol: Tolerances = DEFAULT_TOL) -> RootSet:
    return all_roots(fam.specialize(point), tol.residual)


def loop_permutation(fam: ParametricFamily, loop: ParamLoop, base: RootSet,
                     options: TrackOptions = DEFAULT_TRACK) -> Permutation:
    end = track_path(fam, loop.path, base, options)
    return Permutation(tuple(match_roots(base, end)))


@dataclass(frozen=True, eq=False)
class PermGroup:
    """Permutation group from generators; ``elements`` is None when the closure was capped."""

    degree: int
    generators: tuple[Permutation, ...]
    elements: frozenset[Permutation] | None

    @property
    def order(self) -> int | None:
        return None if self.elements is None else len(self.elements)

    @property
    def materialized(self) -> bool:
        return self.elements is not None

    def orbits(self) -> list[tuple[int, ...]]:
        parent = list(range(self.degree))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for g in self.generators:
            for i, j in enumerate(g.images):
                a, b = find(i), find(j)
                if a != b:
                    parent[max(a, b)] = min(a, b)
        groups: dict[int, list[int]] = {}
        for i in range(self.degree):
            groups.setdefault(find(i), []).append(i)
        return [tuple(v) for v in groups.values()]

    @property
    def transitive(self) -> bool:
        return len(self.orbits()) == 1

    def __contains__(self, p: Permutation) -> bool:
        if self.elements is None:
            raise ValueError("membership unknown: closure was not materialized")
        return p in self.elements

    def cycle_types(self) -> set:
        if self.elements is None:
            raise ValueError("closure was not materialized")
        return {cycle_type(g) for g in self.elements}

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "order": self.order,
            "transitive": self.transitive,
            "generators": [g.to_json() for g in self.generators],
        }


def group_closure(gens: Sequence[Permutation], degree: int | None = None,
                  cap: int = CLOSURE_CAP) -> PermGroup:
    """Breadth-first closure of ``gens`` under composition (finite, so inverses come free)."""
    gens = tuple(gens)
    if degree is None:
        if not gens:
            raise ValueError("degree needed for an empty generator list")
        degree = gens[0].n
    if any(g.n != degree for g in gens):
        raise ValueError("generators differ in degree")
    ident = tuple(range(degree))
    gen_imgs = [g.images for g in gens]
    seen = {ident}
    queue = deque([ident])
    while queue:
        x = queue.popleft()
        for g in gen_imgs:
            y = tuple(g[i] for i in x)
            if y not in seen:
                seen.add(y)
                if len(seen) > cap:
                    logger.warning("group closure exceeded cap %d; order unknown", cap)
                    return PermGroup(degree, gens, None)
                queue.append(y)
    return PermGroup(degree, gens, frozenset(Permutation(e) for e in seen))


# -- critical points along complex lines --------------------------------------

def discriminant_degree_bound(fam: ParametricFamily) -> int:
    """Upper bound on the degree of ``t -> D(base + t d)``."""
    n = fam.degree
    degs = [a.total_degree for a in fam.coeff_polys]
    weighted = n * (n - 1) * max(d / (i + 1) for i, d in enumerate(degs))
    return int(min(np.floor(weighted + 1e-9), (2 * n - 2) * max(degs)))


def line_discriminant(fam: ParametricFamily, base, direction, radius: float = 1.0) -> CPoly:
    """Discriminant restricted to ``base + t * direction`` as a polynomial in ``t``.

    Interpolated from samples on the circle ``|t| = radius``; coefficients
    at round-off level relative to the largest are dropped from the top.
    """
    base, direction = _vec(base), _vec(direction)
    if fam.degree < 2:
        return CPoly([1.0])
    k = discriminant_degree_bound(fam) + 1
    ts = radius * np.exp(2j * np.pi * np.arange(k) / k)
    vals = np.array([discriminant_value(fam.specialize(base + t * direction)) for t in ts])
    c = np.fft.fft(vals) / k
    mags = np.abs(c)
    if mags.max() == 0:
        raise CriticalIsolationError("discriminant vanishes identically along the line")
    keep = np.nonzero(mags > 1e-11 * mags.max())[0]
    c = c[: keep[-1] + 1] / radius ** np.arange(keep[-1] + 1)
    return CPoly(c)


def _cluster_points(z: np.ndarray, tol) -> list[np.ndarray]:
    """Single-linkage groups; ``tol`` is a scalar or a per-pair matrix."""
    n = len(z)
    tol = np.broadcast_to(np.asarray(tol, dtype=float), (n, n))
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) < tol[i, j]:
                parent[find(j)] = find(i)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in groups.values()]


def _relative_tol(z: np.ndarray, rel: float) -> np.ndarray:
    mag = np.abs(z)
    floor = 1e-8 * max(1.0, float(mag.max(initial=0)))
    return rel * np.maximum(np.maximum(mag[:, None], mag[None, :]), floor)


@dataclass(frozen=True)
class CriticalPoint:
    t: complex
    multiplicity: int


def line_critical_points(fam: ParametricFamily, base, direction, rel_tol: float = 1e-3) -> list[CriticalPoint]:
    """Distinct zeros of the discriminant along the line, with multiplicities.

    A k-fold zero splits by roughly eps^(1/k) under root finding, so clusters
    are formed at a loose relative tolerance and must be separated by ten
    times that.
    """
    base, direction = _vec(base), _vec(direction)
    dpoly = line_discriminant(fam, base, direction)
    if dpoly.degree == 0:
        return []
    try:
        t = all_roots(dpoly, tol=1e-6).roots
    except RootFindingError as exc:
        t = exc.best.roots
    groups = _cluster_points(t, _relative_tol(t, rel_tol))
    centres = np.array([t[g].mean() for g in groups])
    gaps = np.abs(centres[:, None] - centres[None, :])
    np.fill_diagonal(gaps, np.inf)
    if len(centres) > 1 and np.any(gaps < 10 * _relative_tol(centres, rel_tol)):
        raise CriticalIsolationError(
            "critical points on this line are not well separated; try a different seed")
    dprime = dpoly.derivative()
    out = []
    for centre, g in zip(centres, groups):
        if len(g) == 1:
            # polish simple zeros against the exact discriminant
            for _ in range(3):
                d = dprime(centre)
                if d == 0:
                    break
                centre = centre - discriminant_value(fam.specialize(base + centre * direction)) / d
        out.append(CriticalPoint(complex(centre), len(g)))
    return sorted(out, key=lambda c: (np.angle(c.t), abs(c.t)))


@dataclass(frozen=True, eq=False)
class LineSlice:
    """Star-shaped generating loops on a complex line through ``base``."""

    base: np.ndarray
    direction: np.ndarray
    points: tuple[CriticalPoint, ...]
    loops: tuple[ParamLoop, ...]
    radii: tuple[float, ...]

    def enclosing_loop(self) -> tuple[ParamLoop, list[int]]:
        """One big loop around every critical point, and the loop indices in the
        order whose composition equals it."""
        ts = np.array([c.t for c in self.points])
        big = 1.5 * np.abs(ts).max() + 1.0
        angles = np.sort(np.mod(np.angle(ts), 2 * np.pi))
        gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
        k = int(np.argmax(gaps))
        psi = angles[k] + gaps[k] / 2
        ray = np.exp(1j * psi) * self.direction
        circle = Circle(self.base, ray, big, 1)
        loop = conjugated_circle(self.base, circle)
        order = sorted(range(len(ts)), key=lambda i: np.mod(np.angle(ts[i]) - psi, 2 * np.pi))
        return loop, order


def star_loops(base, direction, points: Sequence[CriticalPoint], radius_factor: float = 0.05) -> LineSlice:
    base, direction = _vec(base), _vec(direction)
    ts = np.array([c.t for c in points])
    loops, radii = [], []
    for k, tk in enumerate(ts):
        others = np.delete(ts, k)
        near = min(abs(tk), np.abs(others - tk).min(initial=np.inf))
        r = radius_factor * near
        if not r > 0:
            raise CriticalIsolationError("basepoint lies on the discriminant along this line")
        toward_base = -tk / abs(tk)
        circle = Circle(base + tk * direction, toward_base * direction, r, 1)
        loops.append(conjugated_circle(base, circle))
        radii.append(r)
    return LineSlice(base, direction, tuple(points), tuple(loops), tuple(radii))


def random_direction(m: int, rng: np.random.Generator) -> np.ndarray:
    d = rng.normal(size=m) + 1j * rng.normal(size=m)
    return d / np.linalg.norm(d)


def random_loops(basepoint, count: int, rng: np.random.Generator, scale: float = 1.0) -> list[ParamLoop]:
    """Closed triangles ``b -> b + s z1 -> b + s z2 -> b`` with random complex ``z``."""
    b = _vec(basepoint)
    out = []
    for _ in range(count):
        p1 = b + scale * (rng.normal(size=b.shape) + 1j * rng.normal(size=b.shape))
        p2 = b + scale * (rng.normal(size=b.shape) + 1j * rng.normal(size=b.shape))
        out.append(ParamLoop(ParamPath((Line(b, p1), Line(p1, p2), Line(p2, b)))))
    return out


def check_basepoint(fam: ParametricFamily, point, tol: Tolerances = DEFAULT_TOL) -> RootSet:
    point = _vec(point)
    if fam.degree >= 2 and abs(discriminant_value(fam.specialize(point))) < tol.safety:
        raise ValueError("basepoint lies on (or too near) the discriminant locus")
    return base_roots(fam, point, tol)


@dataclass(frozen=True, eq=False)
class MonodromyRun:
    """A monodromy group together with what produced it."""

    group: PermGroup
    base: RootSet
    loops: tuple[ParamLoop, ...]
    permutations: tuple[Permutation, ...]
    slice: LineSlice | None = None
    attempts: int = 1
    seed: int | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        out = self.group.to_json()
        out["seed"] = self.seed
        return out


def generator_slice(fam: ParametricFamily, basepoint, rng: np.random.Generator,
                    attempts: int = 4, options: TrackOptions = DEFAULT_TRACK,
                    tol: Tolerances = DEFAULT_TOL):
    """Pick a random line through ``basepoint``, isolate its critical points and
    track the star loops. Returns ``(slice, base, perms, attempts_used)``."""
    base = check_basepoint(fam, basepoint, tol)
    last: Exception | None = None
    for attempt in range(1, attempts + 1):
        direction = random_direction(fam.param_count, rng)
        try:
            pts = line_critical_points(fam, basepoint, direction)
            sl = star_loops(basepoint, direction, pts)
            perms = [loop_permutation(fam, lp, base, options) for lp in sl.loops]
            return sl, base, perms, attempt
        except (CriticalIsolationError, TrackingError) as exc:
            logger.info("line attempt %d failed: %s", attempt, exc)
            last = exc
    raise CriticalIsolationError(
        f"could not isolate discriminant points on {attempts} random lines ({last}); "
        "try a different seed")


def monodromy_group(fam: ParametricFamily, basepoint, loops: Sequence[ParamLoop] | str = "auto",
                    seed: int = 0, options: TrackOptions = DEFAULT_TRACK,
                    tol: Tolerances = DEFAULT_TOL, cap: int = CLOSURE_CAP) -> MonodromyRun:
    """Monodromy group at ``basepoint`` from explicit loops, or ``"auto"``.

    Auto mode restricts to a random complex line through the basepoint,
    encircles each discriminant point on it and closes the resulting
    permutations.
    """
    basepoint = _vec(basepoint)
    if basepoint.shape[0] != fam.param_count:
        raise ValueError("basepoint dimension differs from the family's parameter count")
    if isinstance(loops, str):
        if loops != "auto":
            raise ValueError(f"unknown loop mode {loops!r}")
        rng = np.random.default_rng(seed)
        sl, base, perms, used = generator_slice(fam, basepoint, rng, options=options, tol=tol)
        group = group_closure(perms, fam.degree, cap)
        return MonodromyRun(group, base, sl.loops, tuple(perms), sl, used, seed)
    base = check_basepoint(fam, basepoint, tol)
    for lp in loops:
        if not _close(lp.base, basepoint):
            raise ValueError("every loop must start at the basepoint")
    perms = [loop_permutation(fam, lp, base, options) for lp in loops]
    group = group_closure(perms, fam.degree, cap)
    return MonodromyRun(group, base, tuple(loops), tuple(perms), None, 1, seed)
