"""Comparison-operator checks: barrier supersolutions and window growth.

This module houses the square-root-form elliptic operator

    A u = Σ √(x_i x_j) a_ij u_{x_i x_j} + Σ b_i u_{x_i}
        + Σ √x_i c_il u_{x_i y_l} + Σ d_lk u_{y_l y_k} + Σ e_l u_{y_l}

on the unit box chart, together with the three explicit barrier functions
used to compare against it, and the two-window growth ratio of its bounded
solutions.  Each barrier check evaluates A(barrier) from *closed-form*
derivatives of the barrier (they are explicit elementary functions), so the
reported margins carry no finite-difference error; grids exclude the
degenerate edge x₁ = 0, where the barriers' derivatives blow up.

Search conventions: a barrier parameter passed as ``None`` is searched —
geometric descent/doubling with a 40-iteration budget and a 1e−6 floor —
and the first comfortably passing value is reported (not the razor-thin
threshold), so that a re-check on a 10× finer grid stays negative.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    FaceNotTangent,
    KimuraError,
    NoValidH,
    NoValidParams,
    NoValidRho,
)
from .geometry import CornerBox, Point
from .operator import KimuraOperator, SmoothFunction

__all__ = [
    "AppendixOperator",
    "AppendixAssumptions",
    "BarrierReport",
    "GrowthEntry",
    "GrowthReport",
    "check_barrier_w2",
    "check_barrier_w1",
    "check_barrier_regularity",
    "growth_ratio",
]

_SEARCH_BUDGET = 40
_PARAM_FLOOR = 1e-6
_MAX_WITNESSES = 16


def _as_xy_field(v) -> Callable[..., np.ndarray]:
    """Normalize a scalar-or-callable coefficient to a broadcasting callable."""
    if callable(v):
        return lambda *coords: np.asarray(v(*coords), dtype=float) + 0.0 * coords[0]
    c = float(v)
    return lambda *coords: np.full_like(np.asarray(coords[0], dtype=float), c)


@dataclass(frozen=True)
class AppendixAssumptions:
    """Sampled structural constants of an :class:`AppendixOperator`.

    ``delta`` is the smallest eigenvalue of the (a, d) block-diagonal form
    over the sample, ``bound`` the largest coefficient magnitude, ``b0`` the
    smallest drift value seen on the transverse faces.
    """

    delta: float
    bound: float
    b0: float
    tangent_ok: bool
    transverse_ok: bool
    tangent: frozenset
    transverse: frozenset

    @property
    def ok(self) -> bool:
        return (
            self.delta > 0.0
            and math.isfinite(self.bound)
            and self.tangent_ok
            and self.transverse_ok
            and len(self.tangent) > 0
            and len(self.transverse) > 0
        )


class AppendixOperator:
    """Square-root-form comparison operator on the unit box chart.

    Corner coefficients ``a`` (second order) and ``b`` (drift) may be floats
    or callables of the corner coordinates; the tangential blocks ``c``,
    ``d``, ``e`` are constant arrays (the barrier checks only use their
    values, never their variation).  ``tangent`` / ``transverse`` list the
    face indices (1-based) on which the drift vanishes / stays positive.

    The two-variable constructor shorthand ``a11, a22, b1, b2, nu`` covers
    every preset: diagonal second order, constant-or-callable drift, and a
    stored default boundary level ``nu`` for the growth solve.
    """

    def __init__(
        self,
        *,
        n: int = 2,
        m: int = 0,
        a11=1.0,
        a22=1.0,
        b1=0.0,
        b2=0.5,
        nu: float = 0.5,
        a=None,
        b=None,
        c=None,
        d=None,
        e=None,
        tangent: Sequence[int] | None = None,
        transverse: Sequence[int] | None = None,
        radius: float = 1.0,
    ):
        if n not in (1, 2):
            raise KimuraError(f"the comparison operator is implemented for n ∈ {{1,2}}, got {n}")
        if not 0.0 <= nu < 1.0:
            raise ValueError(f"nu must lie in [0,1), got {nu}")
        self.n, self.m = n, m
        self.nu = float(nu)
        self.radius = float(radius)
        if a is None:
            diag = (a11, a22)[:n]
            a = [[diag[i] if i == j else 0.0 for j in range(n)] for i in range(n)]
        if b is None:
            b = (b1, b2)[:n]
        self._a = [[_as_xy_field(a[i][j]) for j in range(n)] for i in range(n)]
        self._b = [_as_xy_field(b[i]) for i in range(n)]
        self.c = np.zeros((n, m)) if c is None else np.asarray(c, dtype=float)
        self.d = np.eye(m) if d is None else np.asarray(d, dtype=float)
        self.e = np.zeros(m) if e is None else np.asarray(e, dtype=float)
        if self.c.shape != (n, m) or self.d.shape != (m, m) or self.e.shape != (m,):
            raise ValueError("tangential coefficient blocks have inconsistent shapes")
        if tangent is None:
            tangent = (1,) if n >= 1 else ()
        if transverse is None:
            transverse = tuple(range(2, n + 1))
        self.tangent = frozenset(int(i) for i in tangent)
        self.transverse = frozenset(int(i) for i in transverse)
        overlap = self.tangent & self.transverse
        if overlap or (self.tangent | self.transverse) != set(range(1, n + 1)):
            raise ValueError("tangent/transverse must partition the face indices 1..n")

    # -- coefficient evaluation (vectorized over corner coordinates) --------

    def a_at(self, i: int, j: int, *coords) -> np.ndarray:
        return self._a[i - 1][j - 1](*coords)

    def b_at(self, i: int, *coords) -> np.ndarray:
        return self._b[i - 1](*coords)

    def apply(self, u: SmoothFunction, p: Point) -> float:
        """Evaluate A u at a point (exact derivatives required of ``u``)."""
        x, y = p.x, p.y
        grad = u.gradient(p, allow_fd=False)
        hess = u.hessian(p, allow_fd=False)
        n, m = self.n, self.m
        coords = tuple(x)
        val = 0.0
        for i in range(n):
            for j in range(n):
                val += math.sqrt(x[i] * x[j]) * float(self.a_at(i + 1, j + 1, *coords)) * hess[i, j]
            val += float(self.b_at(i + 1, *coords)) * grad[i]
            for l in range(m):
                val += math.sqrt(x[i]) * self.c[i, l] * hess[i, n + l]
        for l in range(m):
            for k in range(m):
                val += self.d[l, k] * hess[n + l, n + k]
            val += self.e[l] * grad[n + l]
        return float(val)

    def check_assumptions(self, samples: int = 512, seed: int = 0) -> AppendixAssumptions:
        """Sample ellipticity, boundedness, and the face-drift sign pattern."""
        rng = np.random.default_rng(seed)
        pts = rng.random((samples, self.n)) * self.radius
        delta = math.inf
        bound = 0.0
        for row in pts:
            coords = tuple(row)
            amat = np.array(
                [[float(self.a_at(i, j, *coords)) for j in range(1, self.n + 1)] for i in range(1, self.n + 1)]
            )
            block = np.zeros((self.n + self.m, self.n + self.m))
            block[: self.n, : self.n] = 0.5 * (amat + amat.T)
            block[self.n :, self.n :] = 0.5 * (self.d + self.d.T)
            delta = min(delta, float(np.min(np.linalg.eigvalsh(block))))
            bvec = [float(self.b_at(i, *coords)) for i in range(1, self.n + 1)]
            bound = max(
                bound,
                float(np.max(np.abs(amat))),
                max(abs(v) for v in bvec),
                float(np.max(np.abs(self.c), initial=0.0)),
                float(np.max(np.abs(self.d), initial=0.0)),
                float(np.max(np.abs(self.e), initial=0.0)),
            )
        tangent_ok, transverse_ok, b0 = True, True, math.inf
        face_pts = rng.random((64, self.n)) * self.radius
        corners = []
        for other in range(self.n):
            zeroed = face_pts[: 8].copy()
            zeroed[:, other] = 0.0
            corners.append(zeroed)
        corners.append(np.zeros((1, self.n)))
        face_pts = np.vstack([face_pts, *corners])
        for idx in range(1, self.n + 1):
            probe = face_pts.copy()
            probe[:, idx - 1] = 0.0
            vals = np.array([float(self.b_at(idx, *tuple(r))) for r in probe])
            if idx in self.tangent:
                tangent_ok = tangent_ok and bool(np.max(np.abs(vals)) <= 1e-12)
            else:
                transverse_ok = transverse_ok and bool(np.min(vals) > 0.0)
                b0 = min(b0, float(np.min(vals)))
        return AppendixAssumptions(
            delta, bound, b0, tangent_ok, transverse_ok, self.tangent, self.transverse
        )


# --------------------------------------------------------------------------
# barrier reports
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BarrierReport:
    """Outcome of one barrier supersolution check.

    ``min_margin`` is the minimum of −A(barrier) over the grid: the check
    passes exactly when it is positive, i.e. the violating-point list is
    empty.  ``flags`` records precondition violations observed on the way
    (the margin itself may still be fine).
    """

    name: str
    params: dict
    grid_shape: tuple
    min_margin: float
    argmin: tuple
    violations: tuple
    flags: tuple = ()

    @property
    def passed(self) -> bool:
        return len(self.violations) == 0

    def to_json(self) -> str:
        payload = {
            "barrier": self.name,
            "verdict": "pass" if self.passed else "fail",
            "parameters": self.params,
            "grid_shape": list(self.grid_shape),
            "min_margin": self.min_margin,
            "argmin": list(self.argmin),
            "witnesses": [list(v) for v in self.violations[:_MAX_WITNESSES]],
            "flags": list(self.flags),
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _graded_open(edge: float, M: int) -> np.ndarray:
    """Nodes (k/M)²·edge, k = 1..M — excludes the degenerate endpoint 0."""
    k = np.arange(1, M + 1, dtype=float)
    return (k / M) ** 2 * edge


def _report(name, params, arrays, margin_grid, flags) -> BarrierReport:
    """Assemble a report from the −A(barrier) values on a mesh grid."""
    flat = margin_grid.reshape(-1)
    j = int(np.argmin(flat))
    idx = np.unravel_index(j, margin_grid.shape)
    argmin = tuple(float(arrays[d][idx[d]]) for d in range(len(arrays)))
    viol_idx = np.argwhere(margin_grid <= 0.0)
    violations = tuple(
        tuple(float(arrays[d][ix[d]]) for d in range(len(arrays)))
        for ix in viol_idx[:_MAX_WITNESSES]
    )
    return BarrierReport(
        name,
        params,
        margin_grid.shape,
        float(flat[j]),
        argmin,
        violations,
        tuple(flags),
    )


def _y_mesh(m: int, M: int, radius: float) -> list[np.ndarray]:
    return [np.linspace(-radius, radius, max(3, M // 4)) for _ in range(m)]


def _y_quadratic_terms(A: AppendixOperator, y_axes: list[np.ndarray]):
    """Σ_l (d_ll + e_l y_l), broadcast over the y mesh (2× enters per use)."""
    if A.m == 0:
        return 0.0
    grids = np.meshgrid(*y_axes, indexing="ij")
    out = np.zeros_like(grids[0])
    for l in range(A.m):
        out += A.d[l, l] + A.e[l] * grids[l]
    return out


# --------------------------------------------------------------------------
# barrier: sqrt profile across the tangent face strip
# --------------------------------------------------------------------------


def _w2_margin(A: AppendixOperator, H: float, M: int):
    """−A(w₂) on the strip (0,H]×[¼,¾]×[−1,1]^m, from exact derivatives.

    w₂ = ν + 16(x₂−½)² + √(x₁/H) + Σ y_l², so
    A w₂ = (2b₁ − a₁₁)/(4√(H x₁)) + 32(x₂ a₂₂ + b₂(x₂−½)) + 2Σ(d_ll + e_l y_l).
    """
    x1 = _graded_open(H, M)
    x2 = np.linspace(0.25, 0.75, M + 1)
    y_axes = _y_mesh(A.m, M, 1.0)
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    val = (2.0 * A.b_at(1, X1, X2) - A.a_at(1, 1, X1, X2)) / (4.0 * np.sqrt(H * X1))
    val += 32.0 * (X2 * A.a_at(2, 2, X1, X2) + A.b_at(2, X1, X2) * (X2 - 0.5))
    ywork = _y_quadratic_terms(A, y_axes)
    if A.m:
        val = val.reshape(val.shape + (1,) * A.m) + 2.0 * ywork.reshape((1, 1) + ywork.shape)
    return [x1, x2, *y_axes], -val


def check_barrier_w2(
    A: AppendixOperator,
    nu: float | None = None,
    H: float | None = None,
    *,
    M: int = 64,
) -> BarrierReport:
    """Check that the √-profile barrier is a strict supersolution on its strip.

    With ``H=None`` the strip height is searched by geometric descent from
    ½ (the drift term 32(x₂a₂₂ + b₂(x₂−½)) is bounded while the √ term
    contributes −a₁₁/(4√(Hx₁)) ≤ −a₁₁/(4H), so small enough H wins whenever
    the drift vanishes on the tangent face).
    """
    nu = A.nu if nu is None else float(nu)
    if not 0.0 < nu < 1.0:
        raise ValueError(f"nu must lie in (0,1), got {nu}")
    flags = []
    face = A.check_assumptions(samples=64)
    if 1 not in A.tangent or not face.tangent_ok:
        flags.append("drift does not vanish on the x1 face: sqrt-term sign logic off")

    def run(h: float) -> BarrierReport:
        arrays, margin = _w2_margin(A, h, M)
        params = {"H": h, "nu": nu}
        return _report("w2", params, arrays, margin, flags)

    if H is not None:
        if H <= 0:
            raise ValueError(f"H must be positive, got {H}")
        return run(float(H))
    h = 0.5
    for _ in range(_SEARCH_BUDGET):
        rep = run(h)
        if rep.passed:
            return rep
        if h <= _PARAM_FLOOR:
            break
        h = max(0.5 * h, _PARAM_FLOOR)
    raise NoValidH(f"no strip height ≥ {_PARAM_FLOOR} makes the w2 barrier strict")


# --------------------------------------------------------------------------
# barrier: drift sweep along a transverse face
# --------------------------------------------------------------------------


def _w1_margin(A: AppendixOperator, theta2: float, k: float, beta: float, M: int):
    """−A(w₁) on [¼,¾]×(0,k]×[−1,1]^m, from exact derivatives.

    w₁ = θ₂ + (1−θ₂)[16(x₁−½)² + β(k−x₂) + ½ + ½Σ y_l²], so
    A w₁ = (1−θ₂)[32(x₁a₁₁ + b₁(x₁−½)) − βb₂ + Σ(d_ll + e_l y_l)].
    """
    x1 = np.linspace(0.25, 0.75, M + 1)
    x2 = _graded_open(k, M)
    y_axes = _y_mesh(A.m, M, 1.0)
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    val = 32.0 * (X1 * A.a_at(1, 1, X1, X2) + A.b_at(1, X1, X2) * (X1 - 0.5))
    val -= beta * A.b_at(2, X1, X2)
    ywork = _y_quadratic_terms(A, y_axes)
    if A.m:
        val = val.reshape(val.shape + (1,) * A.m) + ywork.reshape((1, 1) + ywork.shape)
    return [x1, x2, *y_axes], -(1.0 - theta2) * val


def check_barrier_w1(
    A: AppendixOperator,
    theta2: float = 0.5,
    k: float | None = None,
    beta: float | None = None,
    *,
    M: int = 64,
) -> BarrierReport:
    """Check the drift-sweep barrier along the transverse face strip.

    ``beta=None`` doubles β from 1 until the margin is strictly positive;
    if the budget runs out, the strip height ``k`` is halved and the sweep
    retried (helps when the transverse drift is only large near the face).
    """
    if not 0.0 < theta2 < 1.0:
        raise ValueError(f"theta2 must lie in (0,1), got {theta2}")
    flags = []
    probe_x1 = np.linspace(0.25, 0.75, 33)

    def b2_min(height: float) -> float:
        x2 = np.concatenate(([0.0], _graded_open(height, 32)))
        X1, X2 = np.meshgrid(probe_x1, x2, indexing="ij")
        return float(np.min(A.b_at(2, X1, X2)))

    k0 = 0.5 if k is None else float(k)
    if k0 <= 0:
        raise ValueError(f"k must be positive, got {k0}")
    if b2_min(k0) <= 0.0:
        flags.append("transverse drift vanishes on the strip: no β can win")

    def run(height: float, b: float) -> BarrierReport:
        arrays, margin = _w1_margin(A, theta2, height, b, M)
        params = {"theta2": theta2, "k": height, "beta": b}
        return _report("w1", params, arrays, margin, flags)

    if beta is not None:
        return run(k0, float(beta))
    height = k0
    for _ in range(3):
        b = 1.0
        for _ in range(_SEARCH_BUDGET):
            rep = run(height, b)
            if rep.passed:
                return rep
            b *= 2.0
        if k is not None or height <= _PARAM_FLOOR:
            break
        height = max(0.5 * height, _PARAM_FLOOR)
    raise NoValidParams(
        f"no (β, k) with β ≤ 2^{_SEARCH_BUDGET}, k ≥ {_PARAM_FLOOR} makes the w1 barrier strict"
    )


# --------------------------------------------------------------------------
# barrier: hitting-probability regularity profile
# --------------------------------------------------------------------------


def _w_reg_smooth(L: KimuraOperator, rho: float) -> SmoothFunction:
    """√(x₁/ρ) + Σ_{i≥2} x_i + Σ y_l², with exact derivatives."""
    n, m = L.n, L.m

    def f(p: Point) -> float:
        return math.sqrt(p.x[0] / rho) + float(np.sum(p.x[1:])) + float(np.sum(p.y**2))

    def grad(p: Point) -> np.ndarray:
        g = np.ones(n + m)
        g[0] = 0.5 / math.sqrt(rho * p.x[0])
        g[n:] = 2.0 * p.y
        return g

    def hess(p: Point) -> np.ndarray:
        h = np.zeros((n + m, n + m))
        h[0, 0] = -0.25 / (math.sqrt(rho) * p.x[0] ** 1.5)
        for l in range(m):
            h[n + l, n + l] = 2.0
        return h

    return SmoothFunction(f, grad=grad, hess=hess)


def check_barrier_regularity(
    L: KimuraOperator,
    rho: float | None = None,
    *,
    M: int = 48,
) -> BarrierReport:
    """Check the regularity barrier L(√(x₁/ρ) + Σ_{i≥2}x_i + Σy_l²) < 0.

    Evaluated on the anisotropic window (0,ρ)^n × (−√ρ,√ρ)^m through the
    operator's own coefficients (exact barrier derivatives).  ``rho=None``
    bisects ρ downward from min(1, chart radius).
    """
    if rho is not None and rho <= 0.0:
        raise ValueError(f"rho must be positive, got {rho}")
    box = L.dom
    if not isinstance(box, CornerBox):
        raise KimuraError("the regularity barrier runs on a box chart")
    flags = []
    fc = L.classify_faces()
    if 1 not in fc.tangent:
        flags.append("face 1 drift does not vanish: tangency assumption violated")

    def run(r: float) -> BarrierReport:
        w = _w_reg_smooth(L, r)
        axes = [_graded_open(r, M)]
        for _ in range(L.n - 1):
            axes.append(np.linspace(r / M, r, M))
        y_edge = math.sqrt(r)
        for _ in range(L.m):
            axes.append(np.linspace(-y_edge, y_edge, max(3, M // 2)))
        mesh = np.meshgrid(*axes, indexing="ij")
        flatpts = np.stack([g.reshape(-1) for g in mesh], axis=-1)
        margin = np.empty(flatpts.shape[0])
        for idx, row in enumerate(flatpts):
            p = Point(row[: L.n], row[L.n :])
            margin[idx] = -L.apply(w, p, allow_fd=False)
        params = {"rho": r}
        return _report("w_reg", params, axes, margin.reshape(mesh[0].shape), flags)

    if rho is not None:
        if rho > box.radius + 1e-12:
            raise ValueError(f"rho={rho} exceeds the chart radius {box.radius}")
        return run(float(rho))
    r = min(1.0, box.radius)
    for _ in range(_SEARCH_BUDGET):
        rep = run(r)
        if rep.passed:
            return rep
        if r <= _PARAM_FLOOR:
            break
        r = max(0.5 * r, _PARAM_FLOOR)
    raise NoValidRho(f"no window size ≥ {_PARAM_FLOOR} makes the regularity barrier strict")


# --------------------------------------------------------------------------
# two-window growth ratio
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthEntry:
    """One window scale: sup over the half window and the full window."""

    r: float
    m_half: float
    m_one: float

    @property
    def ratio(self) -> float:
        return self.m_half / self.m_one if self.m_one > 0.0 else math.nan


@dataclass(frozen=True)
class GrowthReport:
    """Window sup-ratios of the bounded steady solution.

    ``theta_obs`` is the largest ratio over the requested scales; it is the
    observed contraction factor of the corner windows.  ``degenerate`` marks
    the all-zero solution (0/0 ratios).
    """

    entries: tuple
    nu: float
    outer: float
    grid: int
    degenerate: bool

    @property
    def theta_obs(self) -> float:
        vals = [e.ratio for e in self.entries if not math.isnan(e.ratio)]
        return max(vals) if vals else math.nan

    def to_json(self) -> str:
        payload = {
            "nu": self.nu,
            "outer": self.outer,
            "grid": self.grid,
            "degenerate": self.degenerate,
            "theta_obs": None if math.isnan(self.theta_obs) else self.theta_obs,
            "entries": [
                {
                    "r": e.r,
                    "m_half": e.m_half,
                    "m_one": e.m_one,
                    "ratio": None if math.isnan(e.ratio) else e.ratio,
                }
                for e in self.entries
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def growth_ratio(
    A: AppendixOperator,
    r_values: Sequence[float] = (0.5, 0.25, 0.125, 0.0625, 0.03125),
    *,
    nu: float | None = None,
    outer: float = 1.0,
    M: int = 256,
    tol: float = 1e-8,
    max_steps: int = 40000,
) -> GrowthReport:
    """Window sup-ratios M(r;½)/M(r;1) of the steady solution near the corner.

    Solves A u = 0 on the unit box with data ``nu`` on the tangent face
    {x₁=0}, ``outer`` on the far sides {x₁=1} and {x₂=1}, and the natural
    condition on the transverse face {x₂=0}; then reports, for each scale
    r, the sup of u over the corner windows (0, r/2)² and (0, r)².

    The solve runs on per-axis graded grids through the damped steady-state
    iteration; separable diagonal coefficients only.
    """
    from .pde import Grid1D, solve_elliptic_2d

    if A.n != 2 or A.m != 0:
        raise KimuraError("the growth check needs the 2D tangent/transverse setup")
    if A.tangent != frozenset({1}) or A.transverse != frozenset({2}):
        raise KimuraError("the growth check needs face 1 tangent and face 2 transverse")
    nu = A.nu if nu is None else float(nu)
    probe = np.linspace(0.0, A.radius, 7)
    fixed = np.full_like(probe, 0.37 * A.radius)
    for i in (1, 2):
        vary_other = (fixed, probe) if i == 1 else (probe, fixed)
        if (
            float(np.ptp(A.a_at(i, i, *vary_other))) > 1e-12
            or float(np.ptp(A.b_at(i, *vary_other))) > 1e-12
        ):
            raise KimuraError("the growth solve needs per-axis (separable) coefficients")
    if (
        float(np.max(np.abs(A.a_at(1, 2, probe, probe)))) > 1e-12
        or float(np.max(np.abs(A.a_at(2, 1, probe, probe)))) > 1e-12
    ):
        raise KimuraError("the growth solve needs a vanishing mixed term")

    grids = []
    mid = 0.5 * A.radius
    for axis in (1, 2):
        def a_fn(t, _axis=axis):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            coords = (t, np.full_like(t, mid)) if _axis == 1 else (np.full_like(t, mid), t)
            return t * A.a_at(_axis, _axis, *coords)

        def b_fn(t, _axis=axis):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            coords = (t, np.full_like(t, mid)) if _axis == 1 else (np.full_like(t, mid), t)
            return A.b_at(_axis, *coords)

        grids.append(
            Grid1D.from_coefficients(
                a_fn,
                b_fn,
                A.radius,
                M,
                dirichlet_left=(axis == 1),
                dirichlet_right=True,
                face_left=axis,
                face_right=None,
                logistic_possible=False,
            )
        )
    gx, gy = grids
    boundary = np.zeros((gx.n_nodes, gy.n_nodes))
    boundary[-1, :] = outer
    boundary[:, -1] = outer
    boundary[0, :] = nu  # tangent-face data wins at the (0, edge) corner
    u = solve_elliptic_2d(gx, gy, boundary, tol=tol, max_steps=max_steps)

    entries = []
    for r in sorted(r_values, reverse=True):
        vals = []
        for mu in (0.5, 1.0):
            sel_x = gx.nodes <= mu * r * A.radius + 1e-15
            sel_y = gy.nodes <= mu * r * A.radius + 1e-15
            sel_x[0] = False  # interior sup: the face itself carries the data
            if not np.any(sel_x) or not np.any(sel_y):
                raise KimuraError(
                    f"no grid nodes inside the window r={r}, mu={mu}; increase M"
                )
            vals.append(float(np.max(u[np.ix_(sel_x, sel_y)])))
        entries.append(GrowthEntry(float(r), vals[0], vals[1]))
    degenerate = all(e.m_one <= 1e-14 for e in entries)
    return GrowthReport(tuple(entries), nu, outer, M, degenerate)
