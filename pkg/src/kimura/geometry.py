"""Corner-domain geometry: points, strata, restriction maps, weighted measure.

The model space is ``S_{n,m} = [0,∞)^n × R^m`` with coordinates ``z = (x, y)``.
Two concrete charts are supported:

* ``CornerBox(n, m, radius=R)`` — the box neighborhood ``{0 ≤ x_i < R, |y_l| < R}``
  of the corner of ``S_{n,m}``.  Its boundary faces are the coordinate
  hyperplanes ``H_i = {x_i = 0}``, ``i = 1..n``.  The outer box edges
  ``x_i = R`` / ``|y_l| = R`` are chart artifacts, not faces.
* ``Simplex(N)`` — ``Σ_N = {x_i ≥ 0, Σ x_i ≤ 1}`` in the first-N coordinates.
  Faces are ``H_i = {x_i = 0}`` for ``i = 1..N`` plus the slack face
  ``H_{N+1} = {Σ x_i = 1}``, which the affine chart swap ``s = 1 − Σ x_i``
  turns into an ordinary coordinate face.

A *stratum* is labeled by the sorted set of face indices that vanish there;
the interior is the empty set.  Restriction removes one coordinate and
returns the induced domain together with a map from the induced domain's face
indices back to the parent's, so hierarchical simulations can report strata
in original-domain labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import BoundaryEvaluation, NotOnFace, PointOutsideDomain

DEFAULT_TOL = 1e-10

__all__ = [
    "DEFAULT_TOL",
    "Point",
    "CornerBox",
    "Simplex",
    "DomainSpec",
    "StratumId",
    "classify_point",
    "restrict_point",
    "restrict_domain",
    "embed_point",
    "weighted_density",
]


@dataclass(frozen=True)
class Point:
    """A point ``z = (x, y)`` of a corner domain.

    ``x`` holds the n corner coordinates (non-negative), ``y`` the m free
    tangential coordinates.  Arrays are copied and frozen on construction.
    """

    x: np.ndarray
    y: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float)).copy()
        y = np.atleast_1d(np.asarray(self.y, dtype=float)).copy()
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def m(self) -> int:
        return self.y.size

    def coords(self) -> np.ndarray:
        """All coordinates concatenated, x first."""
        return np.concatenate([self.x, self.y])

    def __repr__(self) -> str:  # compact, for witnesses in error messages
        if self.m:
            return f"Point(x={self.x.tolist()}, y={self.y.tolist()})"
        return f"Point(x={self.x.tolist()})"


@dataclass(frozen=True)
class CornerBox:
    """Box chart ``{0 ≤ x_i < radius, |y_l| < y_radius}`` around a corner.

    ``y_radius`` defaults to ``radius``; rescaling (which stretches x and y
    by different powers of the zoom factor) produces boxes where they differ.
    """

    n: int
    m: int = 0
    radius: float = 1.0
    y_radius: float | None = None

    def __post_init__(self):
        if self.n < 0 or self.m < 0 or self.n + self.m < 1:
            raise ValueError(f"need n ≥ 0, m ≥ 0, n+m ≥ 1; got n={self.n}, m={self.m}")
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.y_radius is None:
            object.__setattr__(self, "y_radius", float(self.radius))
        elif not self.y_radius > 0:
            raise ValueError(f"y_radius must be positive, got {self.y_radius}")

    @property
    def face_ids(self) -> tuple[int, ...]:
        return tuple(range(1, self.n + 1))


@dataclass(frozen=True)
class Simplex:
    """The N-simplex ``{x_i ≥ 0, Σ x_i ≤ 1}``; faces 1..N are coordinate
    faces, face N+1 is the slack face ``{Σ x_i = 1}``."""

    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"simplex dimension must be ≥ 1, got {self.N}")

    @property
    def n(self) -> int:
        return self.N

    @property
    def m(self) -> int:
        return 0

    @property
    def face_ids(self) -> tuple[int, ...]:
        return tuple(range(1, self.N + 2))


DomainSpec = Union[CornerBox, Simplex]

#: A stratum label: the sorted set of vanished face indices (empty = interior).
StratumId = frozenset


def _check_inside(p: Point, dom: DomainSpec, tol: float) -> None:
    if np.any(p.x < -tol):
        raise PointOutsideDomain(f"negative corner coordinate beyond tol={tol}: {p}")
    if isinstance(dom, Simplex):
        if p.n != dom.N or p.m != 0:
            raise PointOutsideDomain(
                f"point has (n={p.n}, m={p.m}), domain expects (n={dom.N}, m=0)"
            )
        if float(np.sum(p.x)) > 1.0 + tol:
            raise PointOutsideDomain(f"simplex constraint Σx ≤ 1 violated: {p}")
    else:
        if p.n != dom.n or p.m != dom.m:
            raise PointOutsideDomain(
                f"point has (n={p.n}, m={p.m}), domain expects (n={dom.n}, m={dom.m})"
            )
        if np.any(p.x > dom.radius + tol) or (
            p.m and np.any(np.abs(p.y) > dom.y_radius + tol)
        ):
            raise PointOutsideDomain(f"point outside box of radius {dom.radius}: {p}")


def classify_point(p: Point, dom: DomainSpec, tol: float = DEFAULT_TOL) -> StratumId:
    """Label the boundary stratum containing ``p``.

    Returns the set of face indices ``i`` with ``x_i ≤ tol`` (plus the slack
    face for simplex domains when ``1 − Σx ≤ tol``); the empty set marks the
    interior.

    Raises
    ------
    PointOutsideDomain
        If a coordinate is below ``−tol`` or the simplex sum exceeds
        ``1 + tol`` (or the point leaves the box chart).
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    _check_inside(p, dom, tol)
    faces = {i + 1 for i in range(p.n) if p.x[i] <= tol}
    if isinstance(dom, Simplex) and 1.0 - float(np.sum(p.x)) <= tol:
        faces.add(dom.N + 1)
    return frozenset(faces)


def restrict_domain(dom: DomainSpec, face: int) -> tuple[DomainSpec, dict[int, int]]:
    """Induced domain of a face, plus the map {induced face id → parent face id}.

    For a coordinate face the coordinate is deleted.  For the simplex slack
    face the last coordinate is dropped (it is determined by the others on
    the face); the induced slack face then corresponds to the parent's last
    coordinate face, since ``{Σ_{i<N} x = 1}`` meets ``{Σ_{i≤N} x = 1}``
    exactly where ``x_N = 0``.
    """
    if isinstance(dom, CornerBox):
        if face not in dom.face_ids:
            raise NotOnFace(f"face {face} not a face of {dom}")
        if dom.n + dom.m == 1:
            raise NotOnFace("faces of a 1-dimensional box are points; no induced domain")
        sub = CornerBox(dom.n - 1, dom.m, dom.radius, dom.y_radius)
        fmap = {new: (new if new < face else new + 1) for new in range(1, dom.n)}
        return sub, fmap
    if face not in dom.face_ids:
        raise NotOnFace(f"face {face} not a face of {dom}")
    if dom.N == 1:
        raise NotOnFace("faces of Simplex(1) are points; no induced domain")
    sub = Simplex(dom.N - 1)
    if face <= dom.N:
        fmap = {new: (new if new < face else new + 1) for new in range(1, dom.N)}
        fmap[dom.N] = dom.N + 1  # induced slack face is the parent slack face
    else:  # slack face: drop last coordinate
        fmap = {new: new for new in range(1, dom.N)}
        fmap[dom.N] = dom.N  # induced slack face is the parent's last coord face
    return sub, fmap


def restrict_point(
    p: Point, face: int, dom: DomainSpec, tol: float = DEFAULT_TOL
) -> tuple[Point, DomainSpec]:
    """Drop the coordinate of ``face`` from a point lying on that face.

    Raises
    ------
    NotOnFace
        If ``x_face > tol`` (or ``1 − Σx > tol`` for the slack face).
    """
    _check_inside(p, dom, tol)
    if isinstance(dom, Simplex) and face == dom.N + 1:
        if 1.0 - float(np.sum(p.x)) > tol:
            raise NotOnFace(f"point not on slack face {{Σx=1}}: {p}")
        sub, _ = restrict_domain(dom, face)
        return Point(p.x[:-1], p.y), sub
    if face < 1 or face > p.n:
        raise NotOnFace(f"face {face} out of range 1..{p.n}")
    if p.x[face - 1] > tol:
        raise NotOnFace(f"x_{face} = {p.x[face - 1]} > tol = {tol}: not on face")
    sub, _ = restrict_domain(dom, face)
    return Point(np.delete(p.x, face - 1), p.y), sub


def embed_point(p: Point, face: int, parent: DomainSpec) -> Point:
    """Inverse of :func:`restrict_point`: re-embed a face point in the parent.

    Coordinate faces insert ``x_face = 0``; the simplex slack face appends the
    determined last coordinate ``x_N = 1 − Σ x``.
    """
    if isinstance(parent, Simplex) and face == parent.N + 1:
        last = 1.0 - float(np.sum(p.x))
        return Point(np.append(p.x, max(last, 0.0)), p.y)
    return Point(np.insert(p.x, face - 1, 0.0), p.y)


def weighted_density(
    p: Point, weights: Sequence[Union[float, Callable[[Point], float]]]
) -> float:
    """Density ``Π x_i^{B_i(p)−1}`` of the weighted measure dμ at ``p``.

    ``weights`` gives one weight per corner coordinate, each a constant or a
    callable of the point.

    Raises
    ------
    BoundaryEvaluation
        If some ``x_i = 0`` while ``B_i(p) < 1`` (the density diverges).
    """
    if len(weights) != p.n:
        raise ValueError(f"need {p.n} weights, got {len(weights)}")
    out = 1.0
    for i, w in enumerate(weights):
        b = float(w(p)) if callable(w) else float(w)
        xi = float(p.x[i])
        if xi == 0.0:
            if b < 1.0:
                raise BoundaryEvaluation(
                    f"x_{i + 1}=0 with weight B={b} < 1: density diverges at {p}"
                )
            out *= 1.0 if b == 1.0 else 0.0
        else:
            out *= xi ** (b - 1.0)
    return out
