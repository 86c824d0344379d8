"""Path simulation of corner-degenerate diffusions with face absorption.

The Euler–Maruyama scheme steps ``z′ = z + drift·dt + G·√dt·ξ`` with the
noise factor ``G Gᵀ = 2M`` from the operator, then enforces the domain:
corner coordinates clamp to 0, and on a simplex the slack constraint
``Σx ≤ 1`` is restored through the affine chart swap (the slack face behaves
exactly like a coordinate face).  What happens at a face depends on its
weight:

* **tangent face** (weight ≡ 0): the exact process reaches the face with
  positive probability and is absorbed; a clamp that lands a tangent
  coordinate on 0 is the discrete witness.  The path records a hit event,
  the operator restricts to the face, and the simulation continues inside
  the face — recursively, down to dimension-0 corners, which are frozen.
* **transverse face** (weight ≥ β₀ > 0): the exact process touches the face
  but spends zero time there and does not stick; clamping without absorption
  is the consistent discrete analogue.

Noise is counter-based: every normal variate is a pure function of
``(seed, path_index, step, slot)`` where slots are the *original* domain's
coordinates.  A restricted path keeps drawing from the slots of its surviving
coordinates at its own step counter, so each path's trajectory is identical
no matter how the ensemble is chunked across workers.

The outer edges of a box chart (``x_i = radius``, ``|y_l| = y_radius``) are
chart artifacts, not faces; paths reflect there.  Acceptance-scale runs are
parameterized so paths essentially never reach them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _rng
from .errors import KimuraError, MaxStepsExceeded, NonFinite, NotClean
from .geometry import CornerBox, DomainSpec, Point, Simplex, StratumId, restrict_domain
from .operator import FaceClassification, KimuraOperator

__all__ = [
    "SimConfig",
    "HitEvent",
    "PathRecord",
    "EnsembleResult",
    "CounterexampleResult",
    "step",
    "simulate",
    "simulate_ensemble",
    "simulate_counterexample",
    "counterexample_ensemble",
    "sum_process_ensemble",
]

_SLACK_TOL = 1e-12


@dataclass(frozen=True)
class SimConfig:
    """Knobs of one simulation run.

    ``dt`` — Euler step; ``T`` — horizon; ``seed`` — 64-bit stream seed;
    ``max_steps`` — guard on steps per path; ``occupation_eps`` — thresholds
    for near-face occupation accounting (empty disables it);
    ``stop_at_first_tangent_hit`` — terminate paths at their first absorption
    (first-hit statistics) instead of continuing inside the face;
    ``allow_nonclean`` — simulate operators whose faces are not cleanly
    tangent/transverse (non-tangent faces then clamp without absorbing).
    ``clamp`` and ``tangent_hit_rule`` name the fixed boundary policy.
    """

    dt: float = 1e-4
    T: float = 1.0
    seed: int = 0
    max_steps: int = 2_000_000_000
    clamp: str = "zero"
    tangent_hit_rule: str = "clamp-absorbs"
    occupation_eps: tuple[float, ...] = ()
    stop_at_first_tangent_hit: bool = False
    allow_nonclean: bool = False

    def __post_init__(self):
        if not (self.dt > 0 and self.T > 0 and self.dt <= self.T):
            raise ValueError(f"need 0 < dt ≤ T, got dt={self.dt}, T={self.T}")
        if self.clamp != "zero":
            raise ValueError("the only boundary policy is clamp-to-zero")
        if self.tangent_hit_rule != "clamp-absorbs":
            raise ValueError("the only tangent hit rule is clamp-absorbs")
        eps = tuple(float(e) for e in self.occupation_eps)
        if any(e <= 0 for e in eps) or list(eps) != sorted(eps):
            raise ValueError("occupation_eps must be positive and ascending")
        object.__setattr__(self, "occupation_eps", eps)

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.T / self.dt - 1e-9)))


@dataclass(frozen=True)
class HitEvent:
    """One tangent-face absorption.

    ``face`` and ``location`` are expressed in the domain the path lived in
    just before the hit (the original domain for the first event, the face
    for the second, and so on); ``depth`` counts the codimension reached.
    """

    time: float
    face: int
    location: Point
    depth: int


@dataclass(frozen=True)
class PathRecord:
    """Full record of one path.

    ``terminal = (time, point, stratum)`` gives the state at the horizon in
    *original-domain* coordinates; the stratum is the set of original faces
    the path was absorbed on (empty = still interior).  ``occupation`` maps
    each tracked transverse face to the time spent within each
    ``occupation_eps`` threshold of it.
    """

    events: tuple[HitEvent, ...]
    terminal: tuple[float, Point, StratumId]
    occupation: dict[int, np.ndarray]


@dataclass
class EnsembleResult:
    """Vectorized records of ``n_paths`` independent paths.

    ``terminal_xy`` rows are original-domain coordinates; ``strata_bits``
    encodes each path's absorption stratum as a bitmask (bit ``i-1`` = face
    ``i``).  ``first_hit_face`` is 0 for paths that never hit a tangent face;
    locations/times refer to the first absorption.  ``occupation`` has shape
    ``(n_paths, n_tracked_faces, n_eps)``.
    """

    n_paths: int
    dt: float
    T: float
    seed: int
    terminal_time: np.ndarray
    terminal_xy: np.ndarray
    strata_bits: np.ndarray
    first_hit_time: np.ndarray
    first_hit_face: np.ndarray
    first_hit_xy: np.ndarray
    occupation: np.ndarray | None
    tracked_faces: tuple[int, ...]
    occupation_eps: tuple[float, ...]
    classification: FaceClassification | None
    events: list | None = None

    def strata(self) -> list[StratumId]:
        return [_bits_to_stratum(int(b)) for b in self.strata_bits]


@dataclass(frozen=True)
class CounterexampleResult:
    """Outcome of one cross-fed-drift path: did ``X₁+X₂`` reach the corner?"""

    corner_hit: bool
    hit_time: float | None


def _bits_to_stratum(bits: int) -> StratumId:
    out = []
    i = 1
    while bits:
        if bits & 1:
            out.append(i)
        bits >>= 1
        i += 1
    return frozenset(out)


# ---------------------------------------------------------------------------
# single Euler step (spec'd building block; the engine uses the batched core)
# ---------------------------------------------------------------------------


def step(L: KimuraOperator, state: Point, dt: float, noise: np.ndarray) -> Point:
    """One Euler–Maruyama step with boundary clamping.

    ``noise`` supplies the standard normals (length ``n+m``).  Corner
    coordinates are clamped at 0; on a simplex an overshoot of ``Σx ≤ 1`` is
    projected onto the slack face through the chart swap.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    noise = np.asarray(noise, dtype=float).reshape(1, -1)
    if noise.shape[1] != L.dim:
        raise ValueError(f"need {L.dim} normals, got {noise.shape[1]}")
    x = state.x[None, :].copy()
    y = state.y[None, :].copy()
    drift = L.drift_batch(x, y)
    inc = L.noise_increment(x, y, noise)
    z = np.concatenate([x, y], axis=1) + drift * dt + inc * math.sqrt(dt)
    if not np.all(np.isfinite(z)):
        raise NonFinite(f"state became non-finite stepping from {state}")
    xn, yn = z[:, : L.n], z[:, L.n :]
    xn = np.maximum(xn, 0.0)
    if isinstance(L.dom, Simplex):
        _simplex_clamp(xn)
    return Point(xn[0], yn[0])


def _simplex_clamp(x: np.ndarray) -> np.ndarray:
    """Restore ``Σx ≤ 1`` by sequential chart-swap clamps (in place).

    Returns the pre-clamp slack overshoot ``max(Σx − 1, 0)`` per row.
    """
    over = np.maximum(x.sum(axis=1) - 1.0, 0.0)
    for j in range(x.shape[1] - 1, -1, -1):
        s = x.sum(axis=1) - 1.0
        bad = s > 0
        if not bad.any():
            break
        adj = np.minimum(x[:, j], np.where(bad, s, 0.0))
        x[:, j] -= np.maximum(adj, 0.0)
    fired = over > 0
    if fired.any():  # land exactly on the slack face
        rest = x[fired, :-1].sum(axis=1)
        x[fired, -1] = np.maximum(1.0 - rest, 0.0)
    return over


# ---------------------------------------------------------------------------
# level bookkeeping for hierarchical absorption
# ---------------------------------------------------------------------------


@dataclass
class _Level:
    op: KimuraOperator
    stratum_bits: int
    x_slots: np.ndarray          # original noise slot per current x coord
    y_slots: np.ndarray
    face_orig: dict[int, int]    # current face id -> original face id
    tangent_coords: np.ndarray   # 0-based current coord columns that absorb
    slack_tangent: bool
    tracked: tuple[tuple[int, int], ...]  # (coord column | -1 for slack, occ row)
    parent: "_Level | None" = None
    via_face: int | None = None
    children: dict[int, "_Level"] = dc_field(default_factory=dict)

    @property
    def dom(self) -> DomainSpec:
        return self.op.dom

    @property
    def slots(self) -> np.ndarray:
        return np.concatenate([self.x_slots, self.y_slots])


def _classify_or_fallback(op: KimuraOperator, allow_nonclean: bool):
    """(tangent set, transverse set, classification?) for a level's operator."""
    try:
        fc = op.classify_faces()
        return set(fc.tangent), set(fc.transverse), fc
    except NotClean:
        if not allow_nonclean:
            raise
        tangent = set()
        for f in op.dom.face_ids:
            W = op.weight(f)
            _, vals = op._weight_samples(W, f, 256, 0)
            if float(np.max(np.abs(vals))) <= 1e-10:
                tangent.add(f)
        return tangent, set(), None


def _build_root(
    L: KimuraOperator, cfg: SimConfig
) -> tuple[_Level, FaceClassification | None, set[int]]:
    tangent, transverse, fc = _classify_or_fallback(L, cfg.allow_nonclean)
    n = L.n
    lvl = _Level(
        op=L,
        stratum_bits=0,
        x_slots=np.arange(n, dtype=np.uint64),
        y_slots=np.arange(n, n + L.m, dtype=np.uint64),
        face_orig={f: f for f in L.dom.face_ids},
        tangent_coords=np.array(sorted(f - 1 for f in tangent if f <= n), dtype=int),
        slack_tangent=isinstance(L.dom, Simplex) and (L.dom.N + 1) in tangent,
        tracked=(),
    )
    return lvl, fc, transverse


def _child_level(level: _Level, face: int, cfg: SimConfig, tracked_rows: dict[int, int]) -> _Level:
    if face in level.children:
        return level.children[face]
    sub_op = level.op.restrict(face)
    _, fmap = restrict_domain(level.dom, face)
    face_orig = {new: level.face_orig[old] for new, old in fmap.items()}
    n_cur = level.op.n
    if isinstance(level.dom, Simplex) and face == level.dom.N + 1:
        x_slots = level.x_slots[:-1]
    else:
        x_slots = np.delete(level.x_slots, face - 1)
    tangent, transverse, _ = _classify_or_fallback(sub_op, cfg.allow_nonclean)
    n_sub = sub_op.n
    tracked = tuple(
        ((f - 1 if f <= n_sub else -1), tracked_rows[face_orig[f]])
        for f in sorted(face_orig)
        if face_orig[f] in tracked_rows and f in transverse
    )
    child = _Level(
        op=sub_op,
        stratum_bits=level.stratum_bits | (1 << (level.face_orig[face] - 1)),
        x_slots=x_slots,
        y_slots=level.y_slots,
        face_orig=face_orig,
        tangent_coords=np.array(sorted(f - 1 for f in tangent if f <= n_sub), dtype=int),
        slack_tangent=isinstance(sub_op.dom, Simplex) and (sub_op.dom.N + 1) in tangent,
        tracked=tracked,
        parent=level,
        via_face=face,
    )
    level.children[face] = child
    return child


def _level_dim0_after(level: _Level, face: int) -> bool:
    """Would restricting at ``face`` leave a zero-dimensional corner?"""
    dom = level.dom
    if isinstance(dom, Simplex):
        return dom.N == 1
    return dom.n == 1 and dom.m == 0


def _embed_to_root(level: _Level, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Rows of current-level coordinates → original-domain (x, y) rows."""
    lvl = level
    while lvl.parent is not None:
        parent = lvl.parent
        if isinstance(parent.dom, Simplex) and lvl.via_face == parent.dom.N + 1:
            x = np.column_stack([x, np.clip(1.0 - x.sum(axis=1), 0.0, None)])
        else:
            x = np.insert(x, lvl.via_face - 1, 0.0, axis=1)
        lvl = parent
    return np.concatenate([x, y], axis=1)


# ---------------------------------------------------------------------------
# the cohort engine
# ---------------------------------------------------------------------------


class _Collector:
    def __init__(self, k: int, dim: int, cfg: SimConfig, tracked_ids: tuple[int, ...], collect_events: bool):
        self.term_time = np.full(k, np.nan)
        self.term_xy = np.full((k, dim), np.nan)
        self.term_bits = np.zeros(k, dtype=np.uint32)
        self.first_time = np.full(k, np.nan)
        self.first_face = np.zeros(k, dtype=np.int32)
        self.first_xy = np.full((k, dim), np.nan)
        n_eps = len(cfg.occupation_eps)
        self.tracked_rows = {f: i for i, f in enumerate(tracked_ids)}
        self.occ = (
            np.zeros((k, len(tracked_ids), n_eps)) if n_eps and tracked_ids else None
        )
        self.events: list[list[HitEvent]] | None = (
            [[] for _ in range(k)] if collect_events else None
        )


def _simulate_cohort(
    L: KimuraOperator,
    p0: Point,
    cfg: SimConfig,
    path_ids: np.ndarray,
    collect_events: bool,
) -> tuple[_Collector, tuple[int, ...], FaceClassification | None]:
    if cfg.n_steps > cfg.max_steps:
        raise MaxStepsExceeded(
            f"T/dt = {cfg.n_steps} steps exceeds max_steps = {cfg.max_steps}"
        )
    k = len(path_ids)
    dim = L.dim
    root, fc, transverse = _build_root(L, cfg)
    tracked_ids = tuple(sorted(transverse)) if cfg.occupation_eps else ()
    res = _Collector(k, dim, cfg, tracked_ids, collect_events=collect_events)
    root.tracked = tuple(
        ((f - 1 if f <= L.n else -1), res.tracked_rows[f]) for f in tracked_ids
    )
    x0 = np.tile(np.asarray(p0.x, dtype=float), (k, 1))
    y0 = np.tile(np.asarray(p0.y, dtype=float), (k, 1))
    queue: list[tuple[_Level, np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = [
        (root, x0, y0, np.zeros(k, dtype=np.int64), np.arange(k))
    ]
    while queue:
        level, x, y, steps, rows = queue.pop()
        _advance(level, x, y, steps, rows, path_ids, res, cfg, dim, queue)
    if np.any(np.isnan(res.term_time)):
        raise KimuraError("internal: some paths finished without a terminal record")
    return res, tracked_ids, fc


def _advance(level, x, y, steps, rows, path_ids, res, cfg, stride, queue):
    dt, T = cfg.dt, cfg.T
    sqdt = math.sqrt(dt)
    n_total = cfg.n_steps
    nx = level.op.n
    is_simplex = isinstance(level.dom, Simplex)
    dombox = level.dom if isinstance(level.dom, CornerBox) else None
    slots = level.slots
    eps = np.asarray(cfg.occupation_eps)
    ov = np.zeros_like(x)
    sov = np.zeros(x.shape[0])
    check_ctr = 0
    child_buf: dict[int, list] = {}
    while x.shape[0]:
        # --- absorption detection on the current states -------------------
        hit_face = _detect_hits(level, x, ov, sov)
        hits = np.flatnonzero(hit_face)
        if hits.size:
            _route_hits(
                level, x, y, steps, rows, hit_face, hits, res, cfg, child_buf
            )
            keep = hit_face == 0
            x, y, steps, rows, ov, sov = (
                x[keep], y[keep], steps[keep], rows[keep], ov[keep], sov[keep]
            )
            if not x.shape[0]:
                break
        # --- horizon ------------------------------------------------------
        done = steps >= n_total
        if done.any():
            idx = np.flatnonzero(done)
            res.term_time[rows[idx]] = T
            res.term_xy[rows[idx]] = _embed_to_root(level, x[idx], y[idx])
            res.term_bits[rows[idx]] = level.stratum_bits
            keep = ~done
            x, y, steps, rows, ov, sov = (
                x[keep], y[keep], steps[keep], rows[keep], ov[keep], sov[keep]
            )
            if not x.shape[0]:
                break
        # --- one Euler step for everyone -----------------------------------
        xi = _rng.step_normals(cfg.seed, path_ids[rows], steps, slots, stride)
        drift = level.op.drift_batch(x, y)
        inc = level.op.noise_increment(x, y, xi)
        xn = x + drift[:, :nx] * dt + inc[:, :nx] * sqdt
        if y.shape[1]:
            y = y + drift[:, nx:] * dt + inc[:, nx:] * sqdt
        ov = np.maximum(-xn, 0.0)
        np.maximum(xn, 0.0, out=xn)
        if is_simplex:
            sov = _simplex_clamp(xn)
        elif dombox is not None:
            if nx:
                np.minimum(xn, np.maximum(2.0 * dombox.radius - xn, 0.0), out=xn)
            if y.shape[1]:
                ry = dombox.y_radius
                y = np.clip(np.where(y > ry, 2 * ry - y, np.where(y < -ry, -2 * ry - y, y)), -ry, ry)
        x = xn
        steps = steps + 1
        # --- occupation accounting -----------------------------------------
        if res.occ is not None and level.tracked:
            for col, row in level.tracked:
                v = (1.0 - x.sum(axis=1)) if col == -1 else x[:, col]
                for j, e in enumerate(eps):
                    close = v < e
                    if close.any():
                        res.occ[rows[close], row, j] += dt
        check_ctr += 1
        if check_ctr % 64 == 0 and not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            bad = rows[~np.all(np.isfinite(x), axis=1)]
            raise NonFinite(f"non-finite state in paths {bad[:5].tolist()}...")
    for face, buf in child_buf.items():
        if not buf:
            continue
        child = buf[0][0]
        xs = np.vstack([b[1] for b in buf])
        ys = np.vstack([b[2] for b in buf])
        st = np.concatenate([b[3] for b in buf])
        rs = np.concatenate([b[4] for b in buf])
        queue.append((child, xs, ys, st, rs))


def _detect_hits(level, x, ov, sov) -> np.ndarray:
    """Per-path hit face id (0 = none): deepest-overshoot tangent face at 0."""
    k = x.shape[0]
    face = np.zeros(k, dtype=np.int64)
    if not level.tangent_coords.size and not level.slack_tangent:
        return face
    best = np.full(k, -np.inf)
    for ci in level.tangent_coords:
        on = x[:, ci] == 0.0
        if not on.any():
            continue
        sc = np.where(on, ov[:, ci], -np.inf)
        upd = sc > best
        face[upd] = ci + 1
        best[upd] = sc[upd]
    if level.slack_tangent:
        s = 1.0 - x.sum(axis=1)
        on = s <= _SLACK_TOL
        if on.any():
            sc = np.where(on, sov, -np.inf)
            upd = sc > best
            face[upd] = level.dom.N + 1
            best[upd] = sc[upd]
    return face


def _route_hits(level, x, y, steps, rows, hit_face, hits, res, cfg, child_buf):
    T, dt = cfg.T, cfg.dt
    collect = res.events is not None
    first = level.stratum_bits == 0
    for f in np.unique(hit_face[hits]):
        idx = hits[hit_face[hits] == f]
        f = int(f)
        is_slack = isinstance(level.dom, Simplex) and f == level.dom.N + 1
        xh = x[idx].copy()
        if is_slack:
            rest = xh[:, :-1].sum(axis=1)
            xh[:, -1] = np.maximum(1.0 - rest, 0.0)
        else:
            xh[:, f - 1] = 0.0
        yh = y[idx]
        t_hit = np.minimum(steps[idx] * dt, T)
        orig = level.face_orig[f]
        bits = level.stratum_bits | (1 << (orig - 1))
        if first:
            res.first_time[rows[idx]] = t_hit
            res.first_face[rows[idx]] = orig
            res.first_xy[rows[idx]] = _embed_to_root(level, xh, yh)
        if collect:
            depth = bin(level.stratum_bits).count("1") + 1
            for r, (row_i, t_i) in enumerate(zip(rows[idx], t_hit)):
                loc = Point(xh[r], yh[r])
                res.events[row_i].append(HitEvent(float(t_i), f, loc, depth))
        terminal_here = cfg.stop_at_first_tangent_hit or _level_dim0_after(level, f)
        if terminal_here:
            emb = _embed_to_root(level, xh, yh)
            res.term_time[rows[idx]] = t_hit if cfg.stop_at_first_tangent_hit else T
            res.term_xy[rows[idx]] = emb
            res.term_bits[rows[idx]] = bits
            continue
        if is_slack:
            xc = xh[:, :-1]
        else:
            xc = np.delete(xh, f - 1, axis=1)
        child = _child_level(level, f, cfg, res.tracked_rows)
        child_buf.setdefault(f, []).append((child, xc, yh, steps[idx].copy(), rows[idx].copy()))


# ---------------------------------------------------------------------------
# public drivers
# ---------------------------------------------------------------------------


def simulate(
    L: KimuraOperator, p0: Point, cfg: SimConfig, path_index: int = 0
) -> PathRecord:
    """Simulate one path and return its full record.

    The path is identified by ``(cfg.seed, path_index)``; running it alone or
    inside any ensemble yields the identical trajectory.
    """
    ens = simulate_ensemble(
        L, p0, cfg, n_paths=1, path_offset=path_index, collect_events=True
    )
    events = tuple(ens.events[0]) if ens.events else ()
    dimn = L.n
    term_pt = Point(ens.terminal_xy[0, :dimn], ens.terminal_xy[0, dimn:])
    terminal = (
        float(ens.terminal_time[0]),
        term_pt,
        _bits_to_stratum(int(ens.strata_bits[0])),
    )
    occupation: dict[int, np.ndarray] = {}
    if ens.occupation is not None:
        for row, fid in enumerate(ens.tracked_faces):
            occupation[fid] = ens.occupation[0, row].copy()
    return PathRecord(events=events, terminal=terminal, occupation=occupation)


def simulate_ensemble(
    L: KimuraOperator,
    p0: Point,
    cfg: SimConfig,
    n_paths: int,
    workers: int = 1,
    path_offset: int = 0,
    collect_events: bool = False,
) -> EnsembleResult:
    """Simulate ``n_paths`` independent paths (path indices
    ``path_offset .. path_offset+n_paths-1``) and collect vectorized records.

    With ``workers > 1`` the ensemble is split into contiguous path-index
    chunks on separate processes; results are bitwise identical to a
    single-worker run because the noise is counter-based.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be ≥ 1")
    if workers > 1 and n_paths >= 4 * workers:
        from concurrent.futures import ProcessPoolExecutor

        bounds = np.linspace(0, n_paths, workers + 1, dtype=int)
        args = [
            (L, p0, cfg, path_offset + int(a), int(b - a), collect_events)
            for a, b in zip(bounds[:-1], bounds[1:])
            if b > a
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_ensemble_chunk, args))
        return _merge_ensembles(parts)
    return _ensemble_chunk((L, p0, cfg, path_offset, n_paths, collect_events))


def _ensemble_chunk(args) -> EnsembleResult:
    L, p0, cfg, path_offset, n_paths, collect_events = args
    path_ids = np.arange(path_offset, path_offset + n_paths, dtype=np.uint64)
    res, tracked_ids, fc = _simulate_cohort(L, p0, cfg, path_ids, collect_events)
    return EnsembleResult(
        n_paths=n_paths,
        dt=cfg.dt,
        T=cfg.T,
        seed=cfg.seed,
        terminal_time=res.term_time,
        terminal_xy=res.term_xy,
        strata_bits=res.term_bits,
        first_hit_time=res.first_time,
        first_hit_face=res.first_face,
        first_hit_xy=res.first_xy,
        occupation=res.occ,
        tracked_faces=tracked_ids,
        occupation_eps=cfg.occupation_eps,
        classification=fc,
        events=res.events,
    )


def _merge_ensembles(parts: list[EnsembleResult]) -> EnsembleResult:
    first = parts[0]
    cat = np.concatenate
    events = None
    if first.events is not None:
        events = [ev for p in parts for ev in p.events]
    occ = None
    if first.occupation is not None:
        occ = cat([p.occupation for p in parts])
    return EnsembleResult(
        n_paths=sum(p.n_paths for p in parts),
        dt=first.dt,
        T=first.T,
        seed=first.seed,
        terminal_time=cat([p.terminal_time for p in parts]),
        terminal_xy=cat([p.terminal_xy for p in parts]),
        strata_bits=cat([p.strata_bits for p in parts]),
        first_hit_time=cat([p.first_hit_time for p in parts]),
        first_hit_face=cat([p.first_hit_face for p in parts]),
        first_hit_xy=cat([p.first_hit_xy for p in parts]),
        occupation=occ,
        tracked_faces=first.tracked_faces,
        occupation_eps=first.occupation_eps,
        classification=first.classification,
        events=events,
    )


# ---------------------------------------------------------------------------
# the cross-fed-drift counterexample
# ---------------------------------------------------------------------------


def counterexample_ensemble(
    p0: Point,
    cfg: SimConfig,
    n_paths: int,
    eps_abs: float = 1e-6,
    s_freeze: float = 16.0,
    path_offset: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate ``dX₁ = X₂ dt + √(2X₁) dW₁, dX₂ = X₁ dt + √(2X₂) dW₂``.

    Returns ``(hit, hit_time)`` arrays; a path counts as a corner hit when
    ``S = X₁ + X₂`` drops to ``eps_abs`` or below before the horizon.  Once
    ``S ≥ s_freeze`` the path is frozen as escaped: for the sum process the
    probability of returning to 0 from level ``s`` is ``e^{−s}``
    (≈ 1.1e−7 at the default 16), far below the estimator tolerances, and the
    exponential outward drift makes further simulation pure cost.
    """
    if np.any(np.asarray(p0.x) < 0) or p0.n != 2:
        raise ValueError("p0 must have two non-negative corner coordinates")
    if eps_abs <= 0:
        raise ValueError("eps_abs must be positive")
    dt, sqdt, n_total = cfg.dt, math.sqrt(cfg.dt), cfg.n_steps
    ids = np.arange(path_offset, path_offset + n_paths, dtype=np.uint64)
    z = np.tile(np.asarray(p0.x, dtype=float), (n_paths, 1))
    hit = np.zeros(n_paths, dtype=bool)
    hit_time = np.full(n_paths, np.nan)
    alive = np.arange(n_paths)
    s0 = float(np.sum(p0.x))
    if s0 <= eps_abs:
        hit[:] = True
        hit_time[:] = 0.0
        return hit, hit_time
    step_ctr = 0
    while alive.size and step_ctr < n_total:
        xi = _rng.step_normals(cfg.seed, ids[alive], step_ctr, 2, 2)
        z = z + z[:, ::-1] * dt + np.sqrt(2.0 * np.maximum(z, 0.0)) * (sqdt * xi)
        np.maximum(z, 0.0, out=z)
        step_ctr += 1
        S = z.sum(axis=1)
        if step_ctr % 64 == 0 and not np.all(np.isfinite(S)):
            raise NonFinite("counterexample state became non-finite")
        hits = S <= eps_abs
        if hits.any():
            hit[alive[hits]] = True
            hit_time[alive[hits]] = min(step_ctr * dt, cfg.T)
        gone = hits | (S >= s_freeze)
        if gone.any():
            keep = ~gone
            z, alive = z[keep], alive[keep]
    return hit, hit_time


def simulate_counterexample(
    p0: Point, cfg: SimConfig, eps_abs: float = 1e-6, path_index: int = 0
) -> CounterexampleResult:
    """One path of the cross-fed-drift system; see
    :func:`counterexample_ensemble`."""
    hit, t = counterexample_ensemble(p0, cfg, 1, eps_abs=eps_abs, path_offset=path_index)
    return CounterexampleResult(bool(hit[0]), float(t[0]) if hit[0] else None)


def sum_process_ensemble(
    s0: float,
    cfg: SimConfig,
    n_paths: int,
    eps_abs: float = 1e-6,
    s_freeze: float = 16.0,
    path_offset: int = 0,
    seed_tag: int = 0x5DE1,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Direct simulation of the sum process ``dS = S dt + √(2S) dW``.

    Returns ``(hit, hit_time, S_T)`` with the same absorption/freeze rules as
    :func:`counterexample_ensemble` (frozen paths report their frozen value in
    ``S_T``).  Used as a one-dimensional oracle for the two-dimensional
    system.
    """
    dt, sqdt, n_total = cfg.dt, math.sqrt(cfg.dt), cfg.n_steps
    ids = np.arange(path_offset, path_offset + n_paths, dtype=np.uint64)
    S = np.full(n_paths, float(s0))
    hit = np.zeros(n_paths, dtype=bool)
    hit_time = np.full(n_paths, np.nan)
    final = np.full(n_paths, np.nan)
    alive = np.arange(n_paths)
    step_ctr = 0
    seed = cfg.seed ^ seed_tag
    while alive.size and step_ctr < n_total:
        xi = _rng.step_normals(seed, ids[alive], step_ctr, 1, 1)[:, 0]
        S = np.maximum(S + S * dt + np.sqrt(2.0 * S) * (sqdt * xi), 0.0)
        step_ctr += 1
        hits = S <= eps_abs
        if hits.any():
            hit[alive[hits]] = True
            hit_time[alive[hits]] = min(step_ctr * dt, cfg.T)
            final[alive[hits]] = 0.0
        frozen = S >= s_freeze
        if frozen.any():
            final[alive[frozen]] = S[frozen]
        gone = hits | frozen
        if gone.any():
            keep = ~gone
            S, alive = S[keep], alive[keep]
    final[alive] = S
    return hit, hit_time, final
