"""Polynomial root correspondences between two families.

Given roots ``x_i`` of one family and ``y_i`` of another, the quantities
``u_k = sum_i x_i^k y_i`` determine the coefficients of the unique
``y = alpha_0 + alpha_1 x + ... + alpha_(n-1) x^(n-1)`` through the Hankel
system of power sums.  Whether that correspondence survives analytic
continuation is read off the loop permutations of both families.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SingularSystemError
from .monodromy import (
    DEFAULT_TRACK,
    ParamLoop,
    TrackOptions,
    _vec,
    check_basepoint,
    match_roots,
    track_path,
)
from .perm_core import Permutation
from .poly_lab import (
    DEFAULT_TOL,
    CPoly,
    MPoly,
    ParametricFamily,
    RootSet,
    Tolerances,
    complex_to_json,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MatchedRoots:
    """``alignment(i)`` is the y-label paired with x-label ``i``."""

    x: RootSet
    y: RootSet
    alignment: Permutation

    def __post_init__(self):
        if not (self.x.n == self.y.n == self.alignment.n):
            raise ValueError("x, y and alignment must share the degree")

    def aligned_y(self) -> np.ndarray:
        return self.y.roots[list(self.alignment.images)]


def _roots(x) -> np.ndarray:
    return np.asarray(getattr(x, "roots", x), dtype=complex)


def power_sums(x: RootSet | Sequence[complex], upto: int) -> np.ndarray:
    """``s_0, ..., s_upto`` with ``s_m = sum_i x_i^m``."""
    if upto < 0:
        raise ValueError("upto must be non-negative")
    r = _roots(x)
    return np.array([np.sum(r**m) for m in range(upto + 1)], dtype=complex)


def u_invariants(mr: MatchedRoots) -> np.ndarray:
    x = mr.x.roots
    y = mr.aligned_y()
    return np.array([np.sum(x**k * y) for k in range(mr.x.n)], dtype=complex)


def solve_alphas(x: RootSet | Sequence[complex], u: Sequence[complex], max_cond: float = 1e13) -> np.ndarray:
    """Solve ``u_k = sum_j alpha_j s_(k+j)`` for ``alpha``.

    The matrix is ``V^T V`` with ``V`` the Vandermonde matrix of ``x``, so it
    is singular exactly when two roots coincide.
    """
    r = _roots(x)
    n = len(r)
    u = np.asarray(u, dtype=complex)
    if u.shape != (n,):
        raise ValueError(f"expected {n} invariants, got shape {u.shape}")
    s = power_sums(r, 2 * n - 2)
    hankel = np.array([[s[k + j] for j in range(n)] for k in range(n)])
    cond = np.linalg.cond(hankel)
    if not np.isfinite(cond) or cond > max_cond:
        raise SingularSystemError(
            f"power-sum system is singular (cond {cond:.3g}); the x roots must be distinct")
    return np.linalg.solve(hankel, u)


def apply_alphas(alphas: Sequence[complex], x) -> np.ndarray:
    return np.polyval(np.asarray(alphas)[::-1], _roots(x))


def compatible_alignments(perms_f: Sequence[Permutation], perms_g: Sequence[Permutation], n: int,
                          limit: int = 100_000) -> list[Permutation]:
    """All ``pi`` with ``pi * sf == sg * pi`` for every loop pair, by backtracking.

    Fixing ``pi`` on one symbol forces it along the orbit of that symbol, so
    the search branches only once per orbit.
    """
    pairs = list(zip(perms_f, perms_g))
    found: list[Permutation] = []

    def extend(pi: dict[int, int]) -> bool:
        # propagate pi(sf(i)) = sg(pi(i)) to a fixed point; False on conflict
        stack = list(pi)
        while stack:
            i = stack.pop()
            for sf, sg in pairs:
                for a, b in ((sf(i), sg(pi[i])), (sf.inverse()(i), sg.inverse()(pi[i]))):
                    if a in pi:
                        if pi[a] != b:
                            return False
                    else:
                        if b in pi.values():
                            return False
                        pi[a] = b
                        stack.append(a)
        return True

    def search(pi: dict[int, int]):
        if len(found) >= limit:
            return
        free = [i for i in range(n) if i not in pi]
        if not free:
            found.append(Permutation(tuple(pi[i] for i in range(n))))
            return
        i = free[0]
        used = set(pi.values())
        for j in range(n):
            if j in used:
                continue
            trial = dict(pi)
            trial[i] = j
            if extend(trial):
                search(trial)

    search({})
    return found


@dataclass(frozen=True, eq=False)
class TransformReport:
    alphas: np.ndarray
    residual: float
    invariant_ok: bool
    alignment: Permutation | None
    transformable: bool
    seed: int | None = None
    loop_perms: tuple[tuple[Permutation, Permutation], ...] = ()
    invariant_drift: float = 0.0
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "alphas": [complex_to_json(a) for a in self.alphas],
            "residual": float(self.residual),
            "invariant_ok": self.invariant_ok,
            "alignment": None if self.alignment is None else self.alignment.to_json(),
            "transformable": self.transformable,
            "seed": self.seed,
        }


def _all_alignments(n: int, exhaustive_up_to: int = 8):
    if n > exhaustive_up_to:
        yield Permutation.identity(n)
        return
    for images in itertools.permutations(range(n)):
        yield Permutation(images)


def _residual(mr: MatchedRoots) -> tuple[np.ndarray, float]:
    alphas = solve_alphas(mr.x, u_invariants(mr))
    res = float(np.abs(mr.aligned_y() - apply_alphas(alphas, mr.x)).max())
    return alphas, res


def transformability_test(fam_f: ParametricFamily, fam_g: ParametricFamily, pmap: Sequence[MPoly],
                          basepoint, loops: Sequence[ParamLoop], seed: int = 0, t_samples: int = 3,
                          residual_tol: float = 1e-8, tol: Tolerances = DEFAULT_TOL,
                          options: TrackOptions = DEFAULT_TRACK) -> TransformReport:
    """Test whether the roots of ``fam_g`` (its parameters given by ``pmap`` in
    terms of ``fam_f``'s) are a fixed polynomial in the roots of ``fam_f``.

    The alignment of root labels is the one under which every supplied loop
    permutes both root sets identically; the invariants ``u_k`` are then
    checked to return to their values after each loop.
    """
    if fam_f.degree != fam_g.degree:
        raise ValueError(f"degrees differ: {fam_f.degree} vs {fam_g.degree}")
    if len(pmap) != fam_g.param_count:
        raise ValueError(f"parameter map needs {fam_g.param_count} entries, got {len(pmap)}")
    if any(p.nvars != fam_f.param_count for p in pmap):
        raise ValueError("parameter map must be polynomials in the source family's parameters")
    n = fam_f.degree
    b = _vec(basepoint)
    g_pulled = fam_g.pullback(pmap, fam_f.parameters)
    xb = check_basepoint(fam_f, b, tol)
    yb = check_basepoint(g_pulled, b, tol)
    notes = []

    ends = []
    perms = []
    for lp in loops:
        if not np.allclose(lp.base, b, atol=1e-12):
            raise ValueError("every loop must start at the basepoint")
        xe = track_path(fam_f, lp.path, xb, options)
        ye = track_path(g_pulled, lp.path, yb, options)
        ends.append((xe, ye))
        perms.append((Permutation(tuple(match_roots(xb, xe))), Permutation(tuple(match_roots(yb, ye)))))

    candidates = compatible_alignments([p for p, _ in perms], [q for _, q in perms], n)
    if not candidates:
        notes.append("no alignment makes the loop permutations agree")
        candidates = list(_all_alignments(n))
    elif len(candidates) > 1:
        notes.append(f"{len(candidates)} alignments agree with the loops; picked the smallest residual")
    best = None
    for pi in candidates:
        alphas, res = _residual(MatchedRoots(xb, yb, pi))
        if best is None or res < best[2]:
            best = (pi, alphas, res)
    pi, alphas, residual = best

    rng = np.random.default_rng(seed)
    u0 = u_invariants(MatchedRoots(xb, yb, pi))
    scale = max(1.0, float(np.abs(u0).max()))
    drift = 0.0
    for xe, ye in ends:
        u1 = np.array([np.sum(xe.roots**k * ye.roots[list(pi.images)]) for k in range(n)])
        for _ in range(t_samples):
            t = rng.normal(size=n) + 1j * rng.normal(size=n)
            drift = max(drift, abs(t @ (u1 - u0)) / scale)
    loops_agree = all(sg == pi * sf * pi.inverse() for sf, sg in perms)
    invariant_ok = bool(loops_agree and drift < 1e-7)
    transformable = bool(invariant_ok and residual < residual_tol)
    return TransformReport(alphas, float(residual), invariant_ok, pi, transformable, seed, tuple(perms),
                           float(drift), notes)


def invariant_polynomial(mr: MatchedRoots, elements: Sequence[Permutation], t: Sequence[complex],
                         max_order: int = 720) -> CPoly:
    """``prod over S of (z - u^S)`` where ``u^S`` moves only the x roots by ``S``."""
    if len(elements) > max_order:
        raise ValueError(f"group order {len(elements)} above {max_order}")
    t = np.asarray(t, dtype=complex)
    x = mr.x.roots
    y = mr.aligned_y()
    vals = []
    for s in elements:
        xs = x[list(s.images)]
        vals.append(sum(t[k] * np.sum(xs**k * y) for k in range(len(t))))
    return CPoly.from_roots(vals)
