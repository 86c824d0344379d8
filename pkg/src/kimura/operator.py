"""Degenerate diffusion operators on corner domains.

This module implements second-order operators of the form

    L u = Σ_i ( ℓ_i(z) x_i u_{x_i x_i} + b_i(z) u_{x_i} )
        + Σ_{i,j} x_i x_j a_ij(z) u_{x_i x_j}
        + Σ_{l,k} d_lk(z) u_{y_l y_k}
        + Σ_{i,l} x_i c_il(z) u_{x_i y_l}
        + Σ_l e_l(z) u_{y_l}

on a :class:`~kimura.geometry.CornerBox` or :class:`~kimura.geometry.Simplex`,
with ``z = (x, y)``.  The corner coordinates ``x_i ≥ 0`` carry a diffusion that
degenerates linearly at the faces ``{x_i = 0}``; the ``y`` coordinates diffuse
non-degenerately.  The diagonal leading factors ``ℓ_i`` default to 1 (the
normalized presentation); presets stated with an overall time scale (e.g. the
multi-allele genetic-drift operator, whose second-order part is
``½ Σ (δ_ij x_i − x_i x_j) ∂_i ∂_j``) use a non-unit ``ℓ_i``.

Structural quantities computed here:

* the **weight** of a face, ``B_i = b_i / ℓ_i`` evaluated on ``{x_i = 0}`` —
  the coordinate-invariant drift-to-diffusion ratio that decides whether the
  face absorbs;
* **cleanness**: each face must be either *tangent* (``B_i ≡ 0``; paths stick
  and the dynamics restricts to the face) or uniformly *transverse*
  (``B_i ≥ β₀ > 0``; paths touch but do not stick);
* **restriction** of the operator to a tangent face, which is again an
  operator of the same class in one fewer corner coordinate;
* the **zoom rescaling** ``x = λ x′, y = √λ y′`` under which the class is
  invariant and first-order corner terms are *not* lower order;
* SDE coefficients (drift vector, covariance ``2·M``, and a factor ``G`` with
  ``G Gᵀ = 2M``) for path simulation.

Coefficients are :class:`CoefficientField` objects: constants, explicit
polynomial tables (exact derivatives and exact restriction/rescaling algebra),
or user closures.  Operators are immutable; all evaluation paths are
re-entrant and vectorized over batches of points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable, Literal, Mapping, Sequence, Union

import numpy as np

from .errors import (
    DerivativeUnavailable,
    FaceNotTangent,
    FactorizationFailure,
    KimuraError,
    NotClean,
)
from .geometry import CornerBox, DomainSpec, Point, Simplex, restrict_domain

__all__ = [
    "CoefficientField",
    "ConstField",
    "PolyField",
    "FuncField",
    "as_field",
    "SmoothFunction",
    "PolynomialFunction",
    "AssumptionViolation",
    "AssumptionReport",
    "FaceClassification",
    "PresetInfo",
    "KimuraOperator",
    "sample_domain",
    "sample_face",
    "model1d",
    "wright_fisher",
    "product_operator",
    "remark_counterexample",
    "make_preset",
    "PRESET_NAMES",
]

_PROVENANCES = ("preset", "polynomial table", "user closure")


# --------------------------------------------------------------------------
# coefficient fields
# --------------------------------------------------------------------------


class CoefficientField:
    """A scalar coefficient on a corner domain.

    Concrete subclasses provide ``eval(x, y)`` on batches (``x`` of shape
    ``(k, n)``, ``y`` of shape ``(k, m)``, returning shape ``(k,)``) and may
    provide exact first partial derivatives via :meth:`partial`.  Every field
    carries a ``provenance`` tag, one of ``"preset"``, ``"polynomial table"``
    or ``"user closure"``.
    """

    provenance: str = "user closure"

    def eval(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, p: Point) -> float:
        return float(self.eval(p.x[None, :], p.y[None, :])[0])

    def partial(self, axis: Literal["x", "y"], index: int) -> "CoefficientField | None":
        """Exact first partial in coordinate ``index`` (0-based), or None."""
        return None

    def partial_or_fd(self, axis: Literal["x", "y"], index: int) -> "CoefficientField":
        """Analytic partial when available, else a central-difference field."""
        exact = self.partial(axis, index)
        return exact if exact is not None else _FDPartial(self, axis, index)

    @property
    def const(self) -> float | None:
        """The field's value if it is a known constant, else None."""
        return None

    @property
    def is_zero(self) -> bool:
        return self.const == 0.0

    def __repr__(self) -> str:
        c = self.const
        return f"{type(self).__name__}({c})" if c is not None else super().__repr__()


@dataclass(frozen=True, repr=False)
class ConstField(CoefficientField):
    """A constant coefficient."""

    value: float
    provenance: str = "polynomial table"

    def eval(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.full(x.shape[0] if x.ndim == 2 else y.shape[0], self.value)

    def partial(self, axis, index):
        return ConstField(0.0, self.provenance)

    @property
    def const(self) -> float | None:
        return self.value


@dataclass(frozen=True, repr=False)
class PolyField(CoefficientField):
    """A polynomial coefficient stored as an explicit term table.

    ``terms`` is a tuple of ``(coeff, xpow, ypow)`` with integer exponent
    tuples of lengths ``n`` and ``m``.  Supports exact differentiation,
    restriction to a face (substituting ``x_i = 0``) and zoom rescaling.
    """

    terms: tuple[tuple[float, tuple[int, ...], tuple[int, ...]], ...]
    n: int
    m: int = 0
    provenance: str = "polynomial table"

    def __post_init__(self):
        for coeff, xp, yp in self.terms:
            if len(xp) != self.n or len(yp) != self.m:
                raise ValueError(
                    f"term exponents {(xp, yp)} do not match dims (n={self.n}, m={self.m})"
                )

    def eval(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        k = x.shape[0] if x.ndim == 2 else y.shape[0]
        out = np.zeros(k)
        for coeff, xp, yp in self.terms:
            t = np.full(k, float(coeff))
            for i, p in enumerate(xp):
                if p:
                    t = t * x[:, i] ** p
            for l, p in enumerate(yp):
                if p:
                    t = t * y[:, l] ** p
            out += t
        return out

    def partial(self, axis, index):
        new = []
        for coeff, xp, yp in self.terms:
            pw = (xp if axis == "x" else yp)[index]
            if pw == 0:
                continue
            if axis == "x":
                nxp = xp[:index] + (pw - 1,) + xp[index + 1 :]
                new.append((coeff * pw, nxp, yp))
            else:
                nyp = yp[:index] + (pw - 1,) + yp[index + 1 :]
                new.append((coeff * pw, xp, nyp))
        return PolyField(tuple(new), self.n, self.m, self.provenance)

    @property
    def const(self) -> float | None:
        if all(sum(xp) + sum(yp) == 0 for _, xp, yp in self.terms):
            return float(sum(c for c, _, _ in self.terms))
        return None

    def drop_x(self, index: int) -> "PolyField":
        """Substitute ``x_index = 0`` and delete that variable (exact)."""
        new = [
            (c, xp[:index] + xp[index + 1 :], yp)
            for c, xp, yp in self.terms
            if xp[index] == 0
        ]
        return PolyField(tuple(new), self.n - 1, self.m, self.provenance)

    def rescaled(self, lam: float, outer: float) -> "PolyField":
        """Exact table for ``outer · f(λ x′, √λ y′)``."""
        new = [
            (c * outer * lam ** (sum(xp) + 0.5 * sum(yp)), xp, yp)
            for c, xp, yp in self.terms
        ]
        return PolyField(tuple(new), self.n, self.m, self.provenance)


@dataclass(frozen=True, repr=False)
class FuncField(CoefficientField):
    """A coefficient given by a user callable.

    ``fn`` either takes a :class:`Point` (``vectorized=False``, the default) or
    batch arrays ``(x, y) -> (k,)`` (``vectorized=True``).  Optional exact
    partials may be supplied as tuples of callables with the same convention.
    Callables must be pure and re-entrant (no hidden mutable state).
    """

    fn: Callable
    vectorized: bool = False
    dfdx: tuple | None = None
    dfdy: tuple | None = None
    name: str = ""
    provenance: str = "user closure"

    def eval(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.vectorized:
            return np.asarray(self.fn(x, y), dtype=float)
        k = x.shape[0] if x.ndim == 2 else y.shape[0]
        return np.array([float(self.fn(Point(x[r], y[r]))) for r in range(k)])

    def partial(self, axis, index):
        table = self.dfdx if axis == "x" else self.dfdy
        if table is None or table[index] is None:
            return None
        return FuncField(table[index], self.vectorized, provenance=self.provenance)


@dataclass(frozen=True, repr=False)
class _FDPartial(CoefficientField):
    """Central-difference partial derivative of another field."""

    base: CoefficientField
    axis: str
    index: int

    @property
    def provenance(self) -> str:  # type: ignore[override]
        return self.base.provenance

    def eval(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        coord = (x if self.axis == "x" else y)[:, self.index]
        h = 1e-5 * np.maximum(1.0, np.abs(coord))
        if self.axis == "x":
            xp = x.copy(); xp[:, self.index] += h
            xm = x.copy(); xm[:, self.index] -= h
            return (self.base.eval(xp, y) - self.base.eval(xm, y)) / (2 * h)
        yp = y.copy(); yp[:, self.index] += h
        ym = y.copy(); ym[:, self.index] -= h
        return (self.base.eval(x, yp) - self.base.eval(x, ym)) / (2 * h)


@dataclass(frozen=True, repr=False)
class _XformField(CoefficientField):
    """``outer · base(xscale·x, yscale·y)`` — used by zoom rescaling."""

    base: CoefficientField
    outer: float
    xscale: float
    yscale: float

    @property
    def provenance(self) -> str:  # type: ignore[override]
        return self.base.provenance

    def eval(self, x, y):
        return self.outer * self.base.eval(self.xscale * x, self.yscale * y)

    @property
    def const(self):
        c = self.base.const
        return None if c is None else self.outer * c


@dataclass(frozen=True, repr=False)
class _EmbedField(CoefficientField):
    """Restriction of a parent-domain field to the face ``{x_face = 0}``.

    Evaluates the parent field with a zero column re-inserted at the face's
    coordinate slot.
    """

    base: CoefficientField
    face: int  # 1-based parent coordinate index

    @property
    def provenance(self) -> str:  # type: ignore[override]
        return self.base.provenance

    def eval(self, x, y):
        full = np.insert(x, self.face - 1, 0.0, axis=1)
        return self.base.eval(full, y)

    @property
    def const(self):
        return self.base.const


@dataclass(frozen=True, repr=False)
class _SliceField(CoefficientField):
    """A factor-operator field lifted to a product domain (reads its block)."""

    base: CoefficientField
    x0: int
    x1: int
    y0: int
    y1: int

    @property
    def provenance(self) -> str:  # type: ignore[override]
        return self.base.provenance

    def eval(self, x, y):
        return self.base.eval(x[:, self.x0 : self.x1], y[:, self.y0 : self.y1])

    @property
    def const(self):
        return self.base.const


@dataclass(frozen=True, repr=False)
class _RatioField(CoefficientField):
    """Pointwise ratio of two fields (used for weights of generic presets)."""

    num: CoefficientField
    den: CoefficientField

    @property
    def provenance(self) -> str:  # type: ignore[override]
        return self.num.provenance

    def eval(self, x, y):
        return self.num.eval(x, y) / self.den.eval(x, y)

    @property
    def const(self):
        cn, cd = self.num.const, self.den.const
        if cn is not None and cd is not None and cd != 0.0:
            return cn / cd
        return None


def as_field(obj, provenance: str = "polynomial table") -> CoefficientField:
    """Coerce a number, callable, or field into a :class:`CoefficientField`."""
    if isinstance(obj, CoefficientField):
        return obj
    if isinstance(obj, (int, float, np.floating, np.integer)):
        return ConstField(float(obj), provenance)
    if callable(obj):
        return FuncField(obj)
    raise TypeError(f"cannot interpret {obj!r} as a coefficient field")


# --------------------------------------------------------------------------
# smooth test functions (arguments of L)
# --------------------------------------------------------------------------


class SmoothFunction:
    """A twice-differentiable scalar function of a domain point.

    Supply ``f`` plus optional ``grad`` / ``hess`` callables; missing
    derivatives fall back to central differences unless ``allow_fd=False`` at
    the call site, in which case :class:`DerivativeUnavailable` is raised.
    """

    def __init__(self, f: Callable[[Point], float], grad=None, hess=None):
        self._f, self._grad, self._hess = f, grad, hess

    def value(self, p: Point) -> float:
        return float(self._f(p))

    def gradient(self, p: Point, allow_fd: bool = True) -> np.ndarray:
        if self._grad is not None:
            return np.asarray(self._grad(p), dtype=float)
        if not allow_fd:
            raise DerivativeUnavailable("no analytic gradient and fallback disabled")
        return _fd_gradient(self._f, p)

    def hessian(self, p: Point, allow_fd: bool = True) -> np.ndarray:
        if self._hess is not None:
            return np.asarray(self._hess(p), dtype=float)
        if not allow_fd:
            raise DerivativeUnavailable("no analytic hessian and fallback disabled")
        return _fd_hessian(self._f, p)


def _fd_gradient(f, p: Point) -> np.ndarray:
    z = p.coords()
    n = p.n
    g = np.empty(z.size)
    for i in range(z.size):
        h = 1e-6 * max(1.0, abs(z[i]))
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (f(Point(zp[:n], zp[n:])) - f(Point(zm[:n], zm[n:]))) / (2 * h)
    return g


def _fd_hessian(f, p: Point) -> np.ndarray:
    z = p.coords()
    n = p.n
    d = z.size
    H = np.empty((d, d))

    def at(v):
        return f(Point(v[:n], v[n:]))

    f0 = at(z)
    hs = [3e-4 * max(1.0, abs(z[i])) for i in range(d)]
    for i in range(d):
        zp, zm = z.copy(), z.copy()
        zp[i] += hs[i]
        zm[i] -= hs[i]
        H[i, i] = (at(zp) - 2 * f0 + at(zm)) / hs[i] ** 2
    for i in range(d):
        for j in range(i + 1, d):
            zpp, zpm, zmp, zmm = z.copy(), z.copy(), z.copy(), z.copy()
            zpp[[i, j]] += [hs[i], hs[j]]
            zpm[i] += hs[i]; zpm[j] -= hs[j]
            zmp[i] -= hs[i]; zmp[j] += hs[j]
            zmm[[i, j]] -= [hs[i], hs[j]]
            H[i, j] = H[j, i] = (at(zpp) - at(zpm) - at(zmp) + at(zmm)) / (
                4 * hs[i] * hs[j]
            )
    return H


class PolynomialFunction(SmoothFunction):
    """A polynomial test function with exact gradient and hessian.

    ``terms`` follows the :class:`PolyField` convention:
    ``(coeff, xpow, ypow)`` tuples.
    """

    def __init__(self, terms, n: int, m: int = 0):
        self.terms = tuple((float(c), tuple(xp), tuple(yp)) for c, xp, yp in terms)
        self.n, self.m = n, m
        super().__init__(self._value)

    def _value(self, p: Point) -> float:
        out = 0.0
        for c, xp, yp in self.terms:
            t = c
            for i, pw in enumerate(xp):
                if pw:
                    t *= p.x[i] ** pw
            for l, pw in enumerate(yp):
                if pw:
                    t *= p.y[l] ** pw
            out += t
        return out

    def _diff(self, slot: int) -> "PolynomialFunction":
        new = []
        for c, xp, yp in self.terms:
            if slot < self.n:
                pw = xp[slot]
                if pw:
                    nxp = xp[:slot] + (pw - 1,) + xp[slot + 1 :]
                    new.append((c * pw, nxp, yp))
            else:
                l = slot - self.n
                pw = yp[l]
                if pw:
                    nyp = yp[:l] + (pw - 1,) + yp[l + 1 :]
                    new.append((c * pw, xp, nyp))
        return PolynomialFunction(new, self.n, self.m)

    def gradient(self, p: Point, allow_fd: bool = True) -> np.ndarray:
        d = self.n + self.m
        return np.array([self._diff(i)._value(p) for i in range(d)])

    def hessian(self, p: Point, allow_fd: bool = True) -> np.ndarray:
        d = self.n + self.m
        H = np.empty((d, d))
        for i in range(d):
            di = self._diff(i)
            for j in range(i, d):
                H[i, j] = H[j, i] = di._diff(j)._value(p)
        return H

    def rescaled_input(self, lam: float) -> "PolynomialFunction":
        """The composition ``v(z′) = u(λ x′, √λ y′)`` as an exact polynomial."""
        new = [
            (c * lam ** (sum(xp) + 0.5 * sum(yp)), xp, yp)
            for c, xp, yp in self.terms
        ]
        return PolynomialFunction(new, self.n, self.m)


# --------------------------------------------------------------------------
# reports and metadata
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AssumptionViolation:
    """One witnessed failure of a structural condition."""

    condition: str  # "nonneg" | "ellipticity"
    point: Point
    value: float
    detail: str


@dataclass(frozen=True)
class AssumptionReport:
    """Result of sample-based structural checks on an operator.

    ``nonneg_ok`` — the corner drifts are non-negative where they guard their
    own face (each ``b_i`` sampled on ``{x_i = 0}``, and the slack-face inward
    drift on simplex domains).  ``lambda_estimate`` — the minimum observed
    Rayleigh quotient of the reduced second-order form
    ``Σ ℓ_i ξ_i² + Σ a_ij ξ_i ξ_j + Σ c_il ξ_i η_l + Σ d_lk η_l η_k`` over
    sampled points (exact minimum over directions at each sample).  A value of
    0 marks a presentation that is only marginally non-degenerate in this
    chart (zooming toward the corner strengthens it).
    """

    nonneg_ok: bool
    lambda_estimate: float
    violations: tuple[AssumptionViolation, ...]

    @property
    def elliptic_ok(self) -> bool:
        return self.lambda_estimate > 0.0


@dataclass(frozen=True)
class FaceClassification:
    """Tangent/transverse split of the boundary faces.

    ``weights`` maps each face index to its weight function on the face;
    ``beta0`` is the smallest weight value observed on transverse faces
    (``inf`` when there are none).
    """

    tangent: frozenset
    transverse: frozenset
    weights: Mapping[int, CoefficientField]
    beta0: float


@dataclass(frozen=True)
class PresetInfo:
    """Identity of a registry-built operator (name + constructor params)."""

    name: str
    params: dict


# --------------------------------------------------------------------------
# quasi-random sampling
# --------------------------------------------------------------------------


def _sobol(dim: int, k: int, seed) -> np.ndarray:
    from scipy.stats import qmc

    eng = qmc.Sobol(d=dim, scramble=True, seed=seed)
    pow2 = max(1, math.ceil(math.log2(max(2, k))))
    return eng.random_base2(pow2)[:k]


def sample_domain(dom: DomainSpec, k: int, seed=0) -> tuple[np.ndarray, np.ndarray]:
    """Low-discrepancy sample of ``k`` points: arrays ``(k, n)`` and ``(k, m)``."""
    if isinstance(dom, Simplex):
        u = _sobol(dom.N + 1, k, seed)
        e = -np.log1p(-np.clip(u, 0.0, 1.0 - 1e-12))
        x = e[:, : dom.N] / np.sum(e, axis=1, keepdims=True)
        return x, np.empty((k, 0))
    u = _sobol(dom.n + dom.m, k, seed)
    x = dom.radius * u[:, : dom.n]
    y = dom.y_radius * (2.0 * u[:, dom.n :] - 1.0)
    return x, y


def _extreme_points(dom: DomainSpec) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the closed domain (capped at 256 for high dimensions)."""
    import itertools

    if isinstance(dom, Simplex):
        x = np.vstack([np.zeros(dom.N), np.eye(dom.N)])
        return x, np.empty((dom.N + 1, 0))
    xlevels = [(0.0, dom.radius)] * dom.n
    ylevels = [(-dom.y_radius, dom.y_radius)] * dom.m
    rows = list(itertools.islice(itertools.product(*(xlevels + ylevels)), 256))
    pts = np.array(rows, dtype=float).reshape(len(rows), dom.n + dom.m)
    return pts[:, : dom.n], pts[:, dom.n :]


def sample_face(
    dom: DomainSpec, face: int, k: int, seed=0
) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``k`` points on a face, in parent-domain coordinates."""
    n = dom.n
    if isinstance(dom, Simplex):
        if dom.N == 1:
            x = np.full((k, 1), 0.0 if face == 1 else 1.0)
            return x, np.empty((k, 0))
        sub, _ = restrict_domain(dom, face)
        xs, _ = sample_domain(sub, k, seed)
        if face <= dom.N:
            x = np.insert(xs, face - 1, 0.0, axis=1)
        else:
            last = np.clip(1.0 - np.sum(xs, axis=1), 0.0, None)
            x = np.column_stack([xs, last])
        return x, np.empty((k, 0))
    if n == 1 and dom.m == 0:
        return np.zeros((k, 1)), np.empty((k, 0))
    sub, _ = restrict_domain(dom, face)
    xs, ys = sample_domain(sub, k, seed)
    return np.insert(xs, face - 1, 0.0, axis=1), ys


# --------------------------------------------------------------------------
# the operator
# --------------------------------------------------------------------------


def _coerce_vec(vals, length, default, provenance) -> tuple[CoefficientField, ...]:
    if vals is None:
        return tuple(ConstField(default, provenance) for _ in range(length))
    if len(vals) != length:
        raise ValueError(f"expected {length} fields, got {len(vals)}")
    return tuple(as_field(v, provenance) for v in vals)


def _coerce_mat(vals, rows, cols, provenance) -> tuple[tuple[CoefficientField, ...], ...]:
    if vals is None:
        return tuple(
            tuple(ConstField(0.0, provenance) for _ in range(cols)) for _ in range(rows)
        )
    if len(vals) != rows or any(len(r) != cols for r in vals):
        raise ValueError(f"expected a {rows}×{cols} field matrix")
    return tuple(tuple(as_field(v, provenance) for v in r) for r in vals)


@dataclass(frozen=True)
class KimuraOperator:
    """An immutable corner-degenerate diffusion operator.

    Parameters may be numbers, callables, or :class:`CoefficientField`
    objects; missing blocks default to zero (``a``, ``c``, ``d``, ``e``) or
    one (``lead``).  ``a`` and ``d`` must be symmetric.
    """

    dom: DomainSpec
    b: tuple = ()
    a: tuple | None = None
    c: tuple | None = None
    d: tuple | None = None
    e: tuple | None = None
    lead: tuple | None = None
    name: str = ""
    preset: PresetInfo | None = None

    def __post_init__(self):
        prov = "preset" if self.preset is not None else "polynomial table"
        n, m = self.dom.n, self.dom.m
        object.__setattr__(self, "b", _coerce_vec(self.b or None, n, 0.0, prov))
        object.__setattr__(self, "a", _coerce_mat(self.a, n, n, prov))
        object.__setattr__(self, "c", _coerce_mat(self.c, n, m, prov))
        object.__setattr__(self, "d", _coerce_mat(self.d, m, m, prov))
        object.__setattr__(self, "e", _coerce_vec(self.e, m, 0.0, prov))
        object.__setattr__(self, "lead", _coerce_vec(self.lead, n, 1.0, prov))
        for mat, label in ((self.a, "a"), (self.d, "d")):
            for i in range(len(mat)):
                for j in range(i):
                    ci, cj = mat[i][j].const, mat[j][i].const
                    if ci is not None and cj is not None and ci != cj:
                        raise ValueError(
                            f"{label}[{i}][{j}]={ci} != {label}[{j}][{i}]={cj}: "
                            "second-order blocks must be symmetric"
                        )

    # -- basic structure ---------------------------------------------------

    @property
    def n(self) -> int:
        return self.dom.n

    @property
    def m(self) -> int:
        return self.dom.m

    @property
    def dim(self) -> int:
        return self.n + self.m

    @cached_property
    def _a_zero(self) -> bool:
        return all(f.is_zero for row in self.a for f in row)

    @cached_property
    def _c_zero(self) -> bool:
        return all(f.is_zero for row in self.c for f in row)

    @cached_property
    def _b_zero(self) -> bool:
        return all(f.is_zero for f in self.b)

    @cached_property
    def _e_zero(self) -> bool:
        return all(f.is_zero for f in self.e)

    @cached_property
    def _lead_const(self) -> np.ndarray | None:
        vals = [f.const for f in self.lead]
        return None if any(v is None for v in vals) else np.array(vals)

    @cached_property
    def _b_const(self) -> np.ndarray | None:
        vals = [f.const for f in self.b]
        return None if any(v is None for v in vals) else np.array(vals)

    @cached_property
    def _d_const(self) -> np.ndarray | None:
        vals = [[f.const for f in row] for row in self.d]
        if any(v is None for row in vals for v in row):
            return None
        return np.array(vals).reshape(self.m, self.m)

    @cached_property
    def _d_diag_const(self) -> np.ndarray | None:
        D = self._d_const
        if D is None or self.m == 0:
            return D if self.m == 0 else None
        return np.diag(D) if np.all(D == np.diag(np.diag(D))) else None

    @cached_property
    def _yy_chol_const(self) -> np.ndarray | None:
        D = self._d_const
        if D is None or self.m == 0:
            return None
        try:
            return np.linalg.cholesky(2.0 * D)
        except np.linalg.LinAlgError:
            return None

    # -- pointwise application ---------------------------------------------

    def apply(self, u, p: Point, allow_fd: bool = True) -> float:
        """Evaluate ``L u`` at ``p``.

        ``u`` is a :class:`SmoothFunction` or a plain callable of
        :class:`Point` (differentiated by central differences when allowed).
        The formula is polynomial in ``x``, so boundary points are fine.
        """
        if not isinstance(u, SmoothFunction):
            if not callable(u):
                raise TypeError("u must be callable or a SmoothFunction")
            u = SmoothFunction(u)
        g = u.gradient(p, allow_fd=allow_fd)
        H = u.hessian(p, allow_fd=allow_fd)
        n, m = self.n, self.m
        x = p.x
        val = 0.0
        for i in range(n):
            val += self.lead[i](p) * x[i] * H[i, i] + self.b[i](p) * g[i]
            for j in range(n):
                aij = self.a[i][j](p)
                if aij:
                    val += x[i] * x[j] * aij * H[i, j]
            for l in range(m):
                cil = self.c[i][l](p)
                if cil:
                    val += x[i] * cil * H[i, n + l]
        for l in range(m):
            val += self.e[l](p) * g[n + l]
            for kk in range(m):
                dlk = self.d[l][kk](p)
                if dlk:
                    val += dlk * H[n + l, n + kk]
        return float(val)

    # -- structural checks ---------------------------------------------------

    def check_assumptions(self, samples: int = 4096, seed=0) -> AssumptionReport:
        """Sample-check drift non-negativity and reduced strict ellipticity.

        The drift condition is evaluated where it constrains the dynamics: each
        ``b_i`` on its own face ``{x_i = 0}`` (at interior points the operator
        is classically elliptic and the sign of ``b_i`` is unconstrained), plus
        the inward drift ``−Σ b_i`` on the slack face of a simplex.  The
        ellipticity estimate is the exact directional minimum of the reduced
        form at each sampled point; see :class:`AssumptionReport`.
        """
        if samples < 1:
            raise ValueError("samples must be ≥ 1")
        violations: list[AssumptionViolation] = []
        tol = 1e-12

        face_k = min(samples, 512)
        nonneg_ok = True
        for i in range(self.n):
            fx, fy = sample_face(self.dom, i + 1, face_k, seed)
            vals = self.b[i].eval(fx, fy)
            bad = np.flatnonzero(vals < -tol)
            if bad.size:
                nonneg_ok = False
                r = int(bad[np.argmin(vals[bad])])
                violations.append(
                    AssumptionViolation(
                        "nonneg",
                        Point(fx[r], fy[r]),
                        float(vals[r]),
                        f"b_{i + 1} < 0 on its face",
                    )
                )
        if isinstance(self.dom, Simplex):
            fx, fy = sample_face(self.dom, self.dom.N + 1, face_k, seed)
            vals = -sum(self.b[i].eval(fx, fy) for i in range(self.n))
            bad = np.flatnonzero(vals < -tol)
            if bad.size:
                nonneg_ok = False
                r = int(bad[np.argmin(vals[bad])])
                violations.append(
                    AssumptionViolation(
                        "nonneg",
                        Point(fx[r], fy[r]),
                        float(vals[r]),
                        "inward drift −Σ b_i < 0 on the slack face",
                    )
                )

        x, y = sample_domain(self.dom, samples, seed)
        Q = self._reduced_form_batch(x, y)
        mineig = np.linalg.eigvalsh(Q)[:, 0]
        lam = float(np.min(mineig))
        bad = np.flatnonzero(mineig < -1e-12)
        if bad.size:
            r = int(bad[np.argmin(mineig[bad])])
            violations.append(
                AssumptionViolation(
                    "ellipticity",
                    Point(x[r], y[r]),
                    float(mineig[r]),
                    "reduced second-order form is indefinite",
                )
            )
        return AssumptionReport(nonneg_ok, lam, tuple(violations))

    def _reduced_form_batch(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """The reduced direction form ``Q(z)`` at each sample, shape (k,dim,dim)."""
        k, n, m = x.shape[0], self.n, self.m
        Q = np.zeros((k, self.dim, self.dim))
        for i in range(n):
            Q[:, i, i] = self.lead[i].eval(x, y)
            for j in range(n):
                aij = self.a[i][j]
                if not aij.is_zero:
                    Q[:, i, j] += aij.eval(x, y)
            for l in range(m):
                cil = self.c[i][l]
                if not cil.is_zero:
                    half = 0.5 * cil.eval(x, y)
                    Q[:, i, n + l] += half
                    Q[:, n + l, i] += half
        for l in range(m):
            for kk in range(m):
                dlk = self.d[l][kk]
                if not dlk.is_zero:
                    Q[:, n + l, n + kk] += dlk.eval(x, y)
        return 0.5 * (Q + np.swapaxes(Q, 1, 2))

    # -- weights, cleanness, restriction -------------------------------------

    def weight(self, face: int) -> CoefficientField:
        """The weight ``B_face = b_face / ℓ_face`` as a function on the face.

        For simplex domains the slack face's weight is obtained from the
        chart swap; this requires a preset rule (available for the
        genetic-drift preset, whose weights are constants).
        """
        self._check_face(face)
        rule = self._preset_weight(face)
        if rule is not None:
            return rule
        if isinstance(self.dom, Simplex) and face == self.dom.N + 1:
            raise KimuraError(
                "slack-face weight needs a chart-swap rule; "
                "only simplex presets provide one"
            )
        i = face - 1
        bf, lf = self.b[i], self.lead[i]
        if self._face_is_point(face):
            p = self._face_point(face)
            return ConstField(bf(p) / lf(p), bf.provenance)
        if bf.const is not None and lf.const is not None:
            return ConstField(bf.const / lf.const, bf.provenance)
        num = self._restrict_field(bf, face)
        if lf.const == 1.0:
            return num
        return _RatioField(num, self._restrict_field(lf, face))

    def classify_faces(
        self,
        tol: float = 1e-10,
        beta0_min: float = 1e-8,
        samples: int = 512,
        seed=0,
    ) -> FaceClassification:
        """Split faces into tangent (weight ≡ 0) and transverse (weight ≥ β₀).

        Raises :class:`NotClean` when some face's weight is neither uniformly
        zero nor uniformly bounded below, with witness points.
        """
        tangent, transverse = set(), set()
        weights: dict[int, CoefficientField] = {}
        beta0 = math.inf
        for face in self.dom.face_ids:
            W = weights[face] = self.weight(face)
            pts, vals = self._weight_samples(W, face, samples, seed)
            sup, inf = float(np.max(np.abs(vals))), float(np.min(vals))
            if sup <= tol:
                tangent.add(face)
            elif inf >= beta0_min:
                transverse.add(face)
                beta0 = min(beta0, inf)
            else:
                near = int(np.argmin(np.abs(vals)))
                far = int(np.argmax(vals))
                raise NotClean(
                    f"face {face} is neither tangent nor uniformly transverse: "
                    f"B ranges over [{inf:.3g}, {float(np.max(vals)):.3g}]",
                    face=face,
                    witnesses=[(pts[near], float(vals[near])), (pts[far], float(vals[far]))],
                )
        return FaceClassification(
            frozenset(tangent), frozenset(transverse), weights, beta0
        )

    def _weight_samples(self, W, face, samples, seed):
        if self._face_is_point(face):
            p = self._face_point(face)
            return [p], np.array([W(p) if not isinstance(W, ConstField) else W.value])
        sub, _ = restrict_domain(self.dom, face)
        xs, ys = sample_domain(sub, samples, seed)
        ex, ey = _extreme_points(sub)  # closed-face corners: cleanness is a
        xs = np.vstack([xs, ex])       # condition on the *closed* face
        ys = np.vstack([ys, ey])
        vals = W.eval(xs, ys)
        pts = [Point(xs[r], ys[r]) for r in range(xs.shape[0])]
        return pts, vals

    def _face_is_point(self, face: int) -> bool:
        if isinstance(self.dom, Simplex):
            return self.dom.N == 1
        return self.dom.n == 1 and self.dom.m == 0

    def _face_point(self, face: int) -> Point:
        if isinstance(self.dom, Simplex) and face == self.dom.N + 1:
            return Point(np.ones(1))
        return Point(np.zeros(1))

    def restrict(self, face: int, tol: float = 1e-10, samples: int = 256) -> "KimuraOperator":
        """The induced operator on a tangent face (one fewer corner variable).

        Coefficients are evaluated with ``x_face = 0`` and the face's row and
        column deleted, so that ``L_face u = (L U)|_face`` for extensions ``U``
        constant across the face.  Presets restrict exactly (the result is
        again a preset).  Raises :class:`FaceNotTangent` when the face weight
        is not identically zero.
        """
        self._check_face(face)
        W = self.weight(face)
        _, vals = self._weight_samples(W, face, samples, 0)
        sup = float(np.max(np.abs(vals)))
        if sup > tol:
            raise FaceNotTangent(
                f"face {face} has weight up to {sup:.3g} > tol={tol}: not tangent"
            )
        rule = self._preset_restrict(face)
        if rule is not None:
            return rule
        if isinstance(self.dom, Simplex) and face == self.dom.N + 1:
            raise KimuraError(
                "slack-face restriction needs a chart-swap rule; "
                "only simplex presets provide one"
            )
        sub, _ = restrict_domain(self.dom, face)
        keep = [i for i in range(self.n) if i != face - 1]
        R = lambda f: self._restrict_field(f, face)  # noqa: E731
        return KimuraOperator(
            dom=sub,
            b=tuple(R(self.b[i]) for i in keep),
            a=tuple(tuple(R(self.a[i][j]) for j in keep) for i in keep),
            c=tuple(tuple(R(self.c[i][l]) for l in range(self.m)) for i in keep),
            d=tuple(tuple(R(f) for f in row) for row in self.d),
            e=tuple(R(f) for f in self.e),
            lead=tuple(R(self.lead[i]) for i in keep),
            name=f"{self.name}|face{face}" if self.name else "",
        )

    @staticmethod
    def _restrict_field(f: CoefficientField, face: int) -> CoefficientField:
        if isinstance(f, ConstField):
            return f
        if isinstance(f, PolyField):
            return f.drop_x(face - 1)
        return _EmbedField(f, face)

    def _check_face(self, face: int) -> None:
        if face not in self.dom.face_ids:
            raise ValueError(f"face {face} not a face of {self.dom}")

    # -- preset rules ---------------------------------------------------------

    def _preset_weight(self, face: int) -> CoefficientField | None:
        if self.preset is None:
            return None
        if self.preset.name == "wright-fisher":
            bpar = self.preset.params["b"]
            return ConstField(2.0 * bpar[face - 1], "preset")
        if self.preset.name == "product":
            fac, local = _product_locate(self.preset.params["factors"], face)
            return fac.weight(local)  # weights ignore the other factors
        return None

    def _preset_restrict(self, face: int) -> "KimuraOperator | None":
        if self.preset is None:
            return None
        if self.preset.name == "wright-fisher":
            N, bpar = self.preset.params["N"], list(self.preset.params["b"])
            if N == 1:
                raise KimuraError(
                    "faces of the 1-simplex are absorbing points, not sub-domains"
                )
            if face <= N:  # coordinate face: fold its rate into the slack rate
                rest = bpar[:face - 1] + bpar[face:N] + [bpar[N] + bpar[face - 1]]
            else:  # slack face: last coordinate becomes the new slack
                rest = bpar[: N - 1] + [bpar[N - 1] + bpar[N]]
            return wright_fisher(N - 1, tuple(rest))
        if self.preset.name == "product":
            factors = list(self.preset.params["factors"])
            idx, local = _product_index(factors, face)
            fac = factors[idx]
            if fac.n == 1 and fac.m == 0:
                del factors[idx]
            else:
                factors[idx] = fac.restrict(local)
            if not factors:
                raise KimuraError("restriction exhausts all factors")
            return factors[0] if len(factors) == 1 else product_operator(*factors)
        return None

    def swap_chart(self) -> "KimuraOperator":
        """The operator rewritten in the simplex chart that swaps the slack
        face with the last coordinate face.  Preset rule only."""
        if self.preset is not None and self.preset.name == "wright-fisher":
            bpar = list(self.preset.params["b"])
            bpar[-1], bpar[-2] = bpar[-2], bpar[-1]
            return wright_fisher(self.preset.params["N"], tuple(bpar))
        raise KimuraError("chart swap is available only for simplex presets")

    # -- rescaling -------------------------------------------------------------

    def rescale(self, lam: float) -> "KimuraOperator":
        """Zoom by ``x = λ x′, y = √λ y′``: the operator seen at scale λ.

        Satisfies ``λ·(L u)(λx′, √λ y′) = (L′ v)(x′, y′)`` with
        ``v(z′) = u(λx′, √λ y′)``.  Operators with constant coefficients and
        no ``a``/``c``/``e`` terms are scale-invariant and returned unchanged.
        """
        if not 0.0 < lam <= 1.0:
            raise ValueError(f"λ must lie in (0, 1], got {lam}")
        if lam == 1.0:
            return self
        if (
            self._a_zero
            and self._c_zero
            and self._e_zero
            and self._b_const is not None
            and self._lead_const is not None
            and self._d_const is not None
        ):
            return self
        if not isinstance(self.dom, CornerBox):
            raise KimuraError(
                "rescaling with λ < 1 is defined on box charts; "
                "simplex domains are not scale-invariant"
            )
        root = math.sqrt(lam)
        dom = CornerBox(self.n, self.m, self.dom.radius / lam, self.dom.y_radius / root)

        def xf(f: CoefficientField, outer: float) -> CoefficientField:
            if isinstance(f, ConstField):
                return ConstField(outer * f.value, f.provenance)
            if isinstance(f, PolyField):
                return f.rescaled(lam, outer)
            return _XformField(f, outer, lam, root)

        return KimuraOperator(
            dom=dom,
            b=tuple(xf(f, 1.0) for f in self.b),
            a=tuple(tuple(xf(f, lam) for f in row) for row in self.a),
            c=tuple(tuple(xf(f, root) for f in row) for row in self.c),
            d=tuple(tuple(xf(f, 1.0) for f in row) for row in self.d),
            e=tuple(xf(f, root) for f in self.e),
            lead=tuple(xf(f, 1.0) for f in self.lead),
            name=f"{self.name}@λ={lam:g}" if self.name else "",
        )

    # -- SDE coefficients --------------------------------------------------------

    def drift(self, p: Point) -> np.ndarray:
        """Drift vector ``(b_1..b_n, e_1..e_m)`` at ``p``."""
        return self.drift_batch(p.x[None, :], p.y[None, :])[0]

    def drift_batch(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        k = x.shape[0]
        out = np.zeros((k, self.dim))
        if not self._b_zero:
            if self._b_const is not None:
                out[:, : self.n] = self._b_const
            else:
                for i in range(self.n):
                    out[:, i] = self.b[i].eval(x, y)
        if self.m and not self._e_zero:
            for l in range(self.m):
                out[:, self.n + l] = self.e[l].eval(x, y)
        return out

    def diffusion_matrix(self, p: Point) -> np.ndarray:
        """The generator's second-order coefficient matrix ``M(p)`` (symmetric
        positive semidefinite for operators passing the structural checks).
        The SDE covariance is ``2·M``."""
        return self.diffusion_matrix_batch(p.x[None, :], p.y[None, :])[0]

    def diffusion_matrix_batch(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        k, n, m = x.shape[0], self.n, self.m
        M = np.zeros((k, self.dim, self.dim))
        for i in range(n):
            M[:, i, i] = self.lead[i].eval(x, y) * x[:, i]
            for j in range(n):
                aij = self.a[i][j]
                if not aij.is_zero:
                    M[:, i, j] += x[:, i] * x[:, j] * aij.eval(x, y)
            for l in range(m):
                cil = self.c[i][l]
                if not cil.is_zero:
                    half = 0.5 * x[:, i] * cil.eval(x, y)
                    M[:, i, n + l] += half
                    M[:, n + l, i] += half
        for l in range(m):
            for kk in range(m):
                dlk = self.d[l][kk]
                if not dlk.is_zero:
                    M[:, n + l, n + kk] += dlk.eval(x, y)
        return 0.5 * (M + np.swapaxes(M, 1, 2))

    def diffusion_factor(self, p: Point) -> np.ndarray:
        """A matrix ``G`` with ``G Gᵀ = 2 M(p)``.

        Computed by symmetric eigendecomposition; eigenvalues in
        ``[−1e−10·scale, 0)`` are clipped to zero.  Raises
        :class:`FactorizationFailure` when ``2M`` is indefinite beyond that.
        """
        A = 2.0 * self.diffusion_matrix(p)
        w, V = np.linalg.eigh(A)
        thresh = 1e-10 * max(1.0, float(np.max(np.abs(A))))
        if w[0] < -thresh:
            raise FactorizationFailure(
                f"diffusion matrix at {p} has eigenvalue {w[0]:.3e} < −{thresh:.1e}"
            )
        return V * np.sqrt(np.clip(w, 0.0, None))

    @cached_property
    def _noise_strategy(self) -> str:
        if self.preset is not None and self.preset.name == "wright-fisher":
            return "wf"
        if self._a_zero and self._c_zero:
            if self.m == 0:
                return "diag"
            if self._d_diag_const is not None:
                return "diag"
            if self._yy_chol_const is not None:
                return "diag+chol"
        return "generic"

    def noise_increment(self, x: np.ndarray, y: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """``G(z)·ξ`` for a batch of states: the martingale part of one Euler
        step is ``√dt`` times this.  Dispatches to closed forms where the
        operator's structure allows (diagonal blocks; the genetic-drift
        covariance has an explicit triangular factor); otherwise factors the
        full matrix per state with negative-curvature clipping."""
        s = self._noise_strategy
        if s == "wf":
            return _wf_noise(x, xi)
        if s in ("diag", "diag+chol"):
            out = np.empty_like(xi)
            n = self.n
            if n:
                lead = (
                    self._lead_const
                    if self._lead_const is not None
                    else np.column_stack([f.eval(x, y) for f in self.lead])
                )
                out[:, :n] = np.sqrt(2.0 * lead * np.maximum(x, 0.0)) * xi[:, :n]
            if self.m:
                if s == "diag":
                    out[:, n:] = np.sqrt(2.0 * self._d_diag_const) * xi[:, n:]
                else:
                    out[:, n:] = xi[:, n:] @ self._yy_chol_const.T
            return out
        A = 2.0 * self.diffusion_matrix_batch(x, y)
        w, V = np.linalg.eigh(A)
        G = V * np.sqrt(np.clip(w, 0.0, None))[:, None, :]
        return np.einsum("kij,kj->ki", G, xi)


def _wf_noise(x: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Closed-form triangular factor of ``diag(x) − x xᵀ`` applied to ξ.

    ``L_jj = √(x_j q_j / q_{j−1})`` and ``L_ij = −x_i √(x_j / (q_{j−1} q_j))``
    for ``i > j``, with ``q_j = 1 − x_1 − … − x_j``; degenerate pivots give
    zero columns (the clamped states on faces).
    """
    k, N = x.shape
    tiny = 1e-300
    out = np.zeros((k, N))
    q_prev = np.ones(k)
    for j in range(N):
        xj = np.maximum(x[:, j], 0.0)
        qj = np.maximum(q_prev - xj, 0.0)
        pivot = np.sqrt(xj * qj / np.maximum(q_prev, tiny))
        out[:, j] += pivot * xi[:, j]
        if j + 1 < N:
            f = np.sqrt(xj / np.maximum(q_prev * qj, tiny))
            f[qj <= 0.0] = 0.0
            out[:, j + 1 :] += -np.maximum(x[:, j + 1 :], 0.0) * (f * xi[:, j])[:, None]
        q_prev = qj
    return out


def _product_index(factors, face: int) -> tuple[int, int]:
    """(factor position, face index local to that factor) for a product face."""
    off = 0
    for idx, fac in enumerate(factors):
        if face <= off + fac.n:
            return idx, face - off
        off += fac.n
    raise ValueError(f"face {face} out of range for product of {len(factors)} factors")


def _product_locate(factors, face: int):
    idx, local = _product_index(factors, face)
    return factors[idx], local


# --------------------------------------------------------------------------
# presets
# --------------------------------------------------------------------------


def model1d(b: float, radius: float = 1.0) -> KimuraOperator:
    """The 1D model operator ``x u″ + b u′`` on ``[0, radius]``."""
    return KimuraOperator(
        dom=CornerBox(1, 0, radius),
        b=(float(b),),
        name=f"model1d(b={b:g})",
        preset=PresetInfo("model1d", {"b": float(b), "radius": float(radius)}),
    )


def wright_fisher(N: int, b: Sequence[float]) -> KimuraOperator:
    """The N-allele genetic-drift operator on the simplex.

    ``L u = ½ Σ_ij (δ_ij x_i − x_i x_j) u_{x_i x_j}
    + Σ_i (b_i − x_i Σ_{j≤N+1} b_j) u_{x_i}`` with non-negative rates
    ``b_1..b_{N+1}`` (the last belongs to the slack species).  In the corner
    presentation this has ``ℓ_i ≡ ½`` and ``a_ij ≡ −½``; every face weight is
    the constant ``2 b_i``.
    """
    b = tuple(float(v) for v in b)
    if len(b) != N + 1:
        raise ValueError(f"need N+1 = {N + 1} rates, got {len(b)}")
    S = sum(b)
    drift = tuple(
        PolyField(
            (
                (b[i], (0,) * N, ()),
                (-S, tuple(1 if j == i else 0 for j in range(N)), ()),
            ),
            N,
            0,
            "preset",
        )
        for i in range(N)
    )
    half = ConstField(0.5, "preset")
    mhalf = ConstField(-0.5, "preset")
    return KimuraOperator(
        dom=Simplex(N),
        b=drift,
        a=tuple(tuple(mhalf for _ in range(N)) for _ in range(N)),
        lead=tuple(half for _ in range(N)),
        name=f"wright-fisher(N={N})",
        preset=PresetInfo("wright-fisher", {"N": int(N), "b": b}),
    )


def product_operator(*factors: KimuraOperator) -> KimuraOperator:
    """Independent product of box-chart operators (block-diagonal structure)."""
    if len(factors) < 1:
        raise ValueError("need at least one factor")
    if len(factors) == 1:
        return factors[0]
    if not all(isinstance(f.dom, CornerBox) for f in factors):
        raise ValueError("product factors must live on box charts")
    radii = {(f.dom.radius, f.dom.y_radius) for f in factors}
    if len(radii) != 1:
        raise ValueError(f"product factors must share the box radius, got {radii}")
    n = sum(f.n for f in factors)
    m = sum(f.m for f in factors)
    radius, y_radius = next(iter(radii))
    dom = CornerBox(n, m, radius, y_radius)
    zero = ConstField(0.0, "preset")
    b: list = [zero] * n
    e: list = [zero] * m
    lead: list = [ConstField(1.0, "preset")] * n
    a = [[zero] * n for _ in range(n)]
    c = [[zero] * m for _ in range(n)]
    d = [[zero] * m for _ in range(m)]
    x0 = y0 = 0
    for fac in factors:
        def lift(f: CoefficientField, x0=x0, y0=y0, fac=fac) -> CoefficientField:
            if isinstance(f, ConstField):
                return f
            return _SliceField(f, x0, x0 + fac.n, y0, y0 + fac.m)

        for i in range(fac.n):
            b[x0 + i] = lift(fac.b[i])
            lead[x0 + i] = lift(fac.lead[i])
            for j in range(fac.n):
                a[x0 + i][x0 + j] = lift(fac.a[i][j])
            for l in range(fac.m):
                c[x0 + i][y0 + l] = lift(fac.c[i][l])
        for l in range(fac.m):
            e[y0 + l] = lift(fac.e[l])
            for kk in range(fac.m):
                d[y0 + l][y0 + kk] = lift(fac.d[l][kk])
        x0 += fac.n
        y0 += fac.m
    return KimuraOperator(
        dom=dom,
        b=tuple(b),
        a=tuple(tuple(r) for r in a),
        c=tuple(tuple(r) for r in c),
        d=tuple(tuple(r) for r in d),
        e=tuple(e),
        lead=tuple(lead),
        name="product(" + ", ".join(f.name or "?" for f in factors) + ")",
        preset=PresetInfo("product", {"factors": tuple(factors)}),
    )


def remark_counterexample(radius: float = 32.0) -> KimuraOperator:
    """Two corner coordinates whose drifts cross-feed: ``b₁ = x₂, b₂ = x₁``.

    Each face individually has a weight that vanishes only at the corner
    (neither tangent nor uniformly transverse — the classification rejects
    it), and the sum ``X₁ + X₂`` reaches the corner with positive
    probability.
    """
    b1 = PolyField(((1.0, (0, 1), ()),), 2, 0, "preset")
    b2 = PolyField(((1.0, (1, 0), ()),), 2, 0, "preset")
    return KimuraOperator(
        dom=CornerBox(2, 0, radius),
        b=(b1, b2),
        name="remark-counterexample",
        preset=PresetInfo("remark-counterexample", {"radius": float(radius)}),
    )


def _appendix_a(a11: float, a22: float, b1: float, b2: float, nu: float):
    from .verify import AppendixOperator

    return AppendixOperator(a11=a11, a22=a22, b1=b1, b2=b2, nu=nu)


PRESET_NAMES = (
    "model1d",
    "wright-fisher",
    "product",
    "remark-counterexample",
    "appendix-A",
)


def make_preset(name: str, **params):
    """Build a registry operator by config-addressable name."""
    if name == "model1d":
        return model1d(**params)
    if name == "wright-fisher":
        return wright_fisher(**params)
    if name == "product":
        return product_operator(*params["factors"])
    if name == "remark-counterexample":
        return remark_counterexample(**params)
    if name == "appendix-A":
        return _appendix_a(**params)
    raise ValueError(f"unknown preset {name!r}; known: {PRESET_NAMES}")
