"""Complex polynomials, parametric families and their numerics.

Coefficient conventions: :class:`CPoly` stores coefficients lowest degree
first.  A :class:`ParametricFamily` is the monic polynomial
``x^n + a_1(u) x^(n-1) + ... + a_n(u)`` whose ``a_i`` are multivariate
polynomials (:class:`MPoly`) in ``m`` complex parameters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import RootFindingError, SingularDerivativeError

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Tolerances:
    residual: float = 1e-10   # root certification, relative to the term scale
    cluster: float = 1e-6     # roots closer than this count as coincident
    safety: float = 1e-12     # |D| below this marks a parameter point critical

    def __post_init__(self):
        if min(self.residual, self.cluster, self.safety) <= 0:
            raise ValueError("tolerances must be positive")

    def to_json(self) -> dict:
        return {"residual": self.residual, "cluster": self.cluster, "safety": self.safety}


DEFAULT_TOL = Tolerances()


def complex_to_json(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def complex_from_json(pair) -> complex:
    if isinstance(pair, (int, float)):
        return complex(pair)
    re, im = pair
    return complex(float(re), float(im))


def point_to_json(point: Sequence[complex]) -> list[list[float]]:
    return [complex_to_json(z) for z in point]


def point_from_json(data) -> np.ndarray:
    return np.array([complex_from_json(z) for z in data], dtype=complex)


class CPoly:
    """Univariate complex polynomial, coefficients lowest degree first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[complex]):
        c = np.array(list(coeffs), dtype=complex)
        nz = np.nonzero(c)[0]
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1, dtype=complex)
        c.setflags(write=False)
        self.coeffs = c

    @classmethod
    def from_roots(cls, roots: Iterable[complex]) -> CPoly:
        c = np.array([1.0 + 0j])
        for r in roots:
            c = np.convolve(c, [-r, 1.0])
        return cls(c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lead(self) -> complex:
        return complex(self.coeffs[-1])

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0

    def highest_first(self) -> np.ndarray:
        return self.coeffs[::-1]

    def __call__(self, x):
        return np.polyval(self.coeffs[::-1], x)

    def derivative(self) -> CPoly:
        if self.degree == 0:
            return CPoly([0])
        return CPoly(self.coeffs[1:] * np.arange(1, len(self.coeffs)))

    def monic(self) -> CPoly:
        return CPoly(self.coeffs / self.coeffs[-1])

    def term_scale(self, x):
        """``sum |c_k| |x|^k``, the rounding scale of a Horner evaluation at ``x``."""
        return np.polyval(np.abs(self.coeffs[::-1]), np.abs(x))

    def __add__(self, other: CPoly) -> CPoly:
        size = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros(size, dtype=complex)
        a[: len(self.coeffs)] += self.coeffs
        a[: len(other.coeffs)] += other.coeffs
        return CPoly(a)

    def __neg__(self) -> CPoly:
        return CPoly(-self.coeffs)

    def __sub__(self, other: CPoly) -> CPoly:
        return self + (-other)

    def __mul__(self, other: CPoly) -> CPoly:
        return CPoly(np.convolve(self.coeffs, other.coeffs))

    def allclose(self, other: CPoly, rtol: float = 1e-12, atol: float = 0.0) -> bool:
        return self.degree == other.degree and np.allclose(self.coeffs, other.coeffs, rtol=rtol, atol=atol)

    def __repr__(self) -> str:
        return f"CPoly({self.coeffs.tolist()})"


class MPoly:
    """Sparse multivariate complex polynomial in ``nvars`` variables."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[tuple[int, ...], complex] | None = None):
        self.nvars = int(nvars)
        clean: dict[tuple[int, ...], complex] = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars or min(exps, default=0) < 0:
                raise ValueError(f"bad exponent vector {exps} for {self.nvars} variables")
            c = complex(c)
            if c != 0:
                clean[exps] = clean.get(exps, 0) + c
        self.terms = {e: c for e, c in clean.items() if c != 0}

    @classmethod
    def const(cls, c: complex, nvars: int) -> MPoly:
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, i: int, nvars: int) -> MPoly:
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1})

    def _coerce(self, other) -> MPoly:
        if isinstance(other, MPoly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return MPoly.const(other, self.nvars)

    def __add__(self, other) -> MPoly:
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return MPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> MPoly:
        return MPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> MPoly:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> MPoly:
        return self._coerce(other) - self

    def __mul__(self, other) -> MPoly:
        other = self._coerce(other)
        out: dict[tuple[int, ...], complex] = {}
        for (e1, c1), (e2, c2) in itertools.product(self.terms.items(), other.terms.items()):
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0) + c1 * c2
        return MPoly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> MPoly:
        result = MPoly.const(1, self.nvars)
        for _ in range(k):
            result = result * self
        return result

    def __eq__(self, other) -> bool:
        return isinstance(other, MPoly) and self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __call__(self, point: Sequence[complex]) -> complex:
        point = np.asarray(point, dtype=complex)
        if point.shape != (self.nvars,):
            raise ValueError(f"expected {self.nvars} coordinates, got shape {point.shape}")
        return complex(sum(c * np.prod(point ** np.array(e)) for e, c in self.terms.items()))

    def substitute(self, values: Sequence[MPoly]) -> MPoly:
        """Compose with polynomials: variable ``i`` is replaced by ``values[i]``."""
        if len(values) != self.nvars:
            raise ValueError(f"need {self.nvars} substitutions, got {len(values)}")
        k = values[0].nvars if values else 0
        out = MPoly(k)
        for e, c in self.terms.items():
            term = MPoly.const(c, k)
            for v, power in zip(values, e):
                if power:
                    term = term * v**power
            out = out + term
        return out

    def to_json(self) -> list[dict]:
        return [{"c": complex_to_json(c), "e": list(e)} for e, c in sorted(self.terms.items())]

    @classmethod
    def from_json(cls, terms: Sequence[dict], nvars: int) -> MPoly:
        out: dict[tuple[int, ...], complex] = {}
        for t in terms:
            e = tuple(t["e"])
            if e in out:
                raise ValueError(f"duplicate exponent vector {e}")
            out[e] = complex_from_json(t["c"])
        return cls(nvars, out)

    def __repr__(self) -> str:
        return f"MPoly({self.nvars}, {self.terms})"


def variables(m: int) -> list[MPoly]:
    return [MPoly.var(i, m) for i in range(m)]


class ParametricFamily:
    """Monic ``x^n + a_1(u) x^(n-1) + ... + a_n(u)`` over ``m`` parameters."""

    def __init__(self, coeff_polys: Sequence[MPoly], parameters: Sequence[str] | None = None):
        coeff_polys = tuple(coeff_polys)
        if not coeff_polys:
            raise ValueError("family degree must be at least 1")
        m = coeff_polys[0].nvars
        if any(a.nvars != m for a in coeff_polys):
            raise ValueError("all coefficient polynomials must use the same parameter count")
        if parameters is None:
            parameters = tuple(f"u{i + 1}" for i in range(m))
        parameters = tuple(parameters)
        if len(parameters) != m:
            raise ValueError(f"{len(parameters)} parameter names for {m} parameters")
        self.coeff_polys = coeff_polys
        self.parameters = parameters
        self._compile()

    def _compile(self):
        exps, vals, rows = [], [], []
        for i, a in enumerate(self.coeff_polys):
            for e, c in a.terms.items():
                exps.append(e)
                vals.append(c)
                rows.append(i + 1)
        m = self.param_count
        self._exps = np.array(exps, dtype=float).reshape(-1, m)
        self._vals = np.array(vals, dtype=complex)
        self._rows = np.array(rows, dtype=int)

    @property
    def degree(self) -> int:
        return len(self.coeff_polys)

    @property
    def param_count(self) -> int:
        return self.coeff_polys[0].nvars

    @classmethod
    def from_x_coeffs(cls, coeffs_high_first: Sequence, parameters: Sequence[str] | None = None,
                      nvars: int | None = None) -> ParametricFamily:
        """From ``[1, a_1, ..., a_n]``; entries may be MPoly or scalars."""
        if nvars is None:
            nvars = next((c.nvars for c in coeffs_high_first if isinstance(c, MPoly)), None)
            if nvars is None:
                raise ValueError("cannot infer the parameter count")
        polys = [c if isinstance(c, MPoly) else MPoly.const(c, nvars) for c in coeffs_high_first]
        if polys[0] != MPoly.const(1, nvars):
            raise ValueError("family must be monic with leading coefficient exactly 1")
        return cls(polys[1:], parameters)

    def x_coeffs(self) -> list[MPoly]:
        return [MPoly.const(1, self.param_count)] + list(self.coeff_polys)

    def __mul__(self, other: ParametricFamily) -> ParametricFamily:
        if other.param_count != self.param_count:
            raise ValueError("families must share the parameter space")
        a, b = self.x_coeffs(), other.x_coeffs()
        out = [MPoly(self.param_count) for _ in range(len(a) + len(b) - 1)]
        for i, ai in enumerate(a):
            for j, bj in enumerate(b):
                out[i + j] = out[i + j] + ai * bj
        return ParametricFamily(out[1:], self.parameters)

    def pullback(self, pmap: Sequence[MPoly], parameters: Sequence[str] | None = None) -> ParametricFamily:
        """The family with its parameters replaced by polynomials in new parameters."""
        if len(pmap) != self.param_count:
            raise ValueError(f"parameter map needs {self.param_count} entries, got {len(pmap)}")
        return ParametricFamily([a.substitute(pmap) for a in self.coeff_polys], parameters)

    def coefficients_at(self, point) -> np.ndarray:
        """Highest-first coefficient vector ``[1, a_1(P), ..., a_n(P)]``."""
        point = np.asarray(point, dtype=complex).reshape(-1)
        if point.shape[0] != self.param_count:
            raise ValueError(f"point has {point.shape[0]} coordinates, family has {self.param_count} parameters")
        out = np.zeros(self.degree + 1, dtype=complex)
        out[0] = 1.0
        if self._vals.size:
            mono = np.prod(point[None, :] ** self._exps, axis=1)
            np.add.at(out, self._rows, self._vals * mono)
        return out

    def specialize(self, point) -> CPoly:
        return CPoly(self.coefficients_at(point)[::-1])

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "parameters": list(self.parameters),
            "coefficients": [
                {"index": i + 1, "terms": a.to_json()} for i, a in enumerate(self.coeff_polys)
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> ParametricFamily:
        n = int(data["degree"])
        params = list(data["parameters"])
        m = len(params)
        polys = [MPoly(m) for _ in range(n)]
        seen = set()
        for entry in data["coefficients"]:
            i = int(entry["index"])
            if not 1 <= i <= n or i in seen:
                raise ValueError(f"bad or repeated coefficient index {i}")
            seen.add(i)
            polys[i - 1] = MPoly.from_json(entry["terms"], m)
        return cls(polys, params)

    def __repr__(self) -> str:
        return f"ParametricFamily(degree={self.degree}, parameters={self.parameters})"


def parse_family(expr: str, parameters: Sequence[str], var: str = "x") -> ParametricFamily:
    """Read a family from a sympy-parsable expression such as ``"x**3 + u1*x + u2"``."""
    import sympy

    syms = sympy.symbols(list(parameters))
    x = sympy.Symbol(var)
    local = {str(s): s for s in syms} | {var: x}
    poly = sympy.Poly(sympy.expand(sympy.sympify(expr, locals=local)), x)
    coeffs = poly.all_coeffs()
    if sympy.simplify(coeffs[0] - 1) != 0:
        raise ValueError("expression is not monic in " + var)
    m = len(syms)
    out = []
    for c in coeffs[1:]:
        terms = {}
        if c != 0:
            for mono, val in sympy.Poly(c, *syms).terms() if m else [((), c)]:
                terms[tuple(mono)] = complex(val)
        out.append(MPoly(m, terms))
    return ParametricFamily(out, parameters)


@dataclass(frozen=True)
class RootSet:
    """Labeled roots; label ``i`` is position ``i``."""

    roots: np.ndarray
    residuals: np.ndarray

    @classmethod
    def of(cls, p: CPoly, roots) -> RootSet:
        roots = np.asarray(roots, dtype=complex)
        return cls(roots, np.abs(p(roots)))

    @property
    def n(self) -> int:
        return len(self.roots)

    def min_separation(self) -> float:
        if self.n < 2:
            return np.inf
        d = np.abs(self.roots[:, None] - self.roots[None, :])
        d[np.diag_indices(self.n)] = np.inf
        return float(d.min())

    def permuted(self, order: Sequence[int]) -> RootSet:
        """Relabel so that new label ``i`` carries old label ``order[i]``."""
        order = list(order)
        return RootSet(self.roots[order], self.residuals[order])

    def to_json(self) -> dict:
        return {"roots": point_to_json(self.roots), "residuals": self.residuals.tolist()}


def specialize(fam: ParametricFamily, point) -> CPoly:
    return fam.specialize(point)


def _fujiwara_bound(c_high: np.ndarray) -> float:
    n = len(c_high) - 1
    a = np.abs(c_high / c_high[0])
    terms = [a[k] ** (1.0 / k) for k in range(1, n)]
    terms.append((a[n] / 2) ** (1.0 / n))
    return 2.0 * max(terms)


def _aberth(c_high: np.ndarray, max_iter: int) -> tuple[np.ndarray, bool]:
    n = len(c_high) - 1
    d_high = np.polyder(c_high)
    centre = -c_high[1] / (n * c_high[0])
    shifted = np.polyval(np.poly1d(c_high), np.poly1d([1, centre])).coeffs if n > 1 else c_high
    radius = _fujiwara_bound(np.asarray(shifted, dtype=complex))
    scale = max(radius, abs(centre))
    if radius == 0:
        return np.full(n, centre, dtype=complex), True
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    x = centre + radius * np.exp(1j * angles)
    done = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        pv = np.polyval(c_high, x)
        dv = np.polyval(d_high, x)
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pv / dv
            w = ratio / (1.0 - ratio * inv.sum(axis=1))
        w = np.where(np.isfinite(w), w, 0.0)
        w[done] = 0.0
        x = x - w
        done |= (np.abs(w) <= 4 * _EPS * np.maximum(np.abs(x), scale)) | (pv == 0)
        if done.all():
            return x, True
    return x, False


def all_roots(p: CPoly, tol: float = DEFAULT_TOL.residual, max_iter: int = 800) -> RootSet:
    """All roots with multiplicity by Aberth-Ehrlich iteration.

    Multiple roots come back as clustered copies.  Labels follow the sort
    order of (real, imag), so identical input bits give identical labels.
    """
    if p.degree < 1:
        raise ValueError("need degree >= 1")
    c_high = p.highest_first() / p.lead
    if p.degree == 1:
        x = np.array([-c_high[1]])
        ok = True
    else:
        x, ok = _aberth(c_high, max_iter)
    order = np.lexsort((x.imag, x.real))
    x = x[order]
    monic = CPoly(c_high[::-1])
    residuals = np.abs(monic(x))
    certified = residuals <= tol * np.maximum(1.0, monic.term_scale(x))
    if not certified.all():
        raise RootFindingError(
            f"root finder did not certify {int((~certified).sum())} roots (converged={ok})",
            best=RootSet(x, residuals),
        )
    return RootSet(x, residuals)


def sylvester_matrix(f: CPoly, g: CPoly) -> np.ndarray:
    m, n = f.degree, g.degree
    size = m + n
    s = np.zeros((size, size), dtype=complex)
    fh, gh = f.highest_first(), g.highest_first()
    for i in range(n):
        s[i, i:i + m + 1] = fh
    for i in range(m):
        s[n + i, i:i + n + 1] = gh
    return s


def resultant(f: CPoly, g: CPoly) -> complex:
    return complex(np.linalg.det(sylvester_matrix(f, g)))


def discriminant_value(p: CPoly) -> complex:
    """``(-1)^(n(n-1)/2) Res(p, p') / lead(p)`` through the Sylvester determinant."""
    n = p.degree
    if n < 2:
        raise ValueError("discriminant needs degree >= 2")
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    return sign * resultant(p, p.derivative()) / p.lead


def newton_refine(p: CPoly, x0: complex, tol: float = 1e-14, deriv_floor: float = 1e-8,
                  max_iter: int = 50) -> complex:
    """Newton's method from ``x0``; raises if ``|p'|`` drops below ``deriv_floor``."""
    dp = p.derivative()
    x = complex(x0)
    for _ in range(max_iter):
        d = complex(dp(x))
        if abs(d) < deriv_floor:
            raise SingularDerivativeError(f"|p'(x)| = {abs(d):.3g} below threshold at x = {x}", location=x)
        step = complex(p(x)) / d
        x -= step
        if abs(step) <= tol * max(1.0, abs(x)) or abs(p(x)) <= _EPS * p.term_scale(x):
            return x
    raise RootFindingError(f"Newton did not converge from {x0}", best=x)
