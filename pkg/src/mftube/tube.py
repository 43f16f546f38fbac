"""Numeric multifractal tube quantities.

V^q_r(K) = (1/r^d) int_{B(K,r)} mu(B(x,r))^q dx via three evaluators: an
exact gap-structure method (q = 0, d = 1), a deterministic component-wise
quadrature (d = 1), and Monte Carlo (any d).  On top of these sit the
renewal kernel lambda_q, Minkowski contents (plain and averaged), and the
tube-measure ratios of first-level cylinders.

Evaluators are pure given seeds; Monte Carlo work may be split into
batches with derived seeds (tube_volume_mc_merged) and merged by weighted
mean in fixed batch order, which keeps parallel runs deterministic up to
the documented 1e-13 reassociation level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from mftube import _kernels
from mftube.errors import (DegenerateBall, DimensionMismatch, InvalidSystem,
                           NoConvergence)
from mftube.exponents import arithmetic_structure, beta
from mftube.ifs import SelfSimilarSystem, Word, sample_cloud

DEFAULT_DEPTH_CAP = 60
GAP_NODE_BUDGET = 2 ** 24


@dataclass(frozen=True)
class TubeEstimate:
    r: float
    q: float
    value: float
    method: str  # exact1d | quadrature1d | montecarlo
    stderr: float | None = None
    samples: int | None = None


@dataclass(frozen=True)
class IntervalMeasureQuery:
    """mu([a, b]) with the depth-capped bracket radius as error bound."""

    interval: tuple[float, float]
    depth_cap: int
    value: float
    error: float


def measure_interval(system: SelfSimilarSystem, interval, depth_cap: int =
                     DEFAULT_DEPTH_CAP) -> float:
    """mu([a, b]) for a 1-D system; midpoint of the depth-capped bracket."""
    value, _ = measure_interval_with_error(system, interval, depth_cap)
    return value


def measure_interval_query(system: SelfSimilarSystem, interval,
                           depth_cap: int = DEFAULT_DEPTH_CAP
                           ) -> IntervalMeasureQuery:
    """Full query record: value plus the half-gap error bound."""
    a, b = float(interval[0]), float(interval[1])
    value, gap = measure_interval_with_error(system, (a, b), depth_cap)
    return IntervalMeasureQuery(interval=(a, b), depth_cap=depth_cap,
                                value=value, error=0.5 * gap)


def measure_interval_with_error(system: SelfSimilarSystem, interval,
                                depth_cap: int = DEFAULT_DEPTH_CAP):
    """(value, gap): the bracket is [value - gap/2, value + gap/2], where
    gap is the total mass of cylinders unresolved at depth_cap."""
    if system.dimension != 1:
        raise DimensionMismatch("measure_interval requires a 1-D system")
    a, b = float(interval[0]), float(interval[1])
    if b < a:
        a, b = b, a
    rho, shift = system.signed_params_1d
    lo, hi = system.hull_1d
    values, gaps = _kernels.measure_interval_batch(
        rho, shift, system.probs, lo, hi, np.array([a]), np.array([b]),
        int(depth_cap))
    return float(values[0]), float(gaps[0])


def measure_intervals_batch(system: SelfSimilarSystem, a: np.ndarray,
                            b: np.ndarray,
                            depth_cap: int = DEFAULT_DEPTH_CAP) -> np.ndarray:
    if system.dimension != 1:
        raise DimensionMismatch("measure_interval requires a 1-D system")
    rho, shift = system.signed_params_1d
    lo, hi = system.hull_1d
    values, _ = _kernels.measure_interval_batch(
        rho, shift, system.probs, lo, hi,
        np.ascontiguousarray(a, dtype=float),
        np.ascontiguousarray(b, dtype=float), int(depth_cap))
    return values


def _gap_positions(system: SelfSimilarSystem, r: float,
                   node_budget: int = GAP_NODE_BUDGET) -> list[tuple[float, float]]:
    """Positions of all complementary gaps of K with length > 2r (d = 1).

    Walks words, tracking the composed affine map; a gap of the root hull
    reappears inside every cylinder scaled by the ratio product, so the DFS
    prunes once scale * g_max <= 2r.
    """
    hull_lo, hull_hi = system.hull_1d
    rho, shift = system.signed_params_1d
    root_gaps = []
    ends = []
    for i in range(system.n_maps):
        x = rho[i] * hull_lo + shift[i]
        y = rho[i] * hull_hi + shift[i]
        ends.append((min(x, y), max(x, y)))
    ends.sort()
    for (a_lo, a_hi), (b_lo, _) in zip(ends, ends[1:]):
        if b_lo - a_hi > 0.0:
            root_gaps.append((a_hi, b_lo))
    if not root_gaps:
        return []
    g_max = max(g_hi - g_lo for g_lo, g_hi in root_gaps)
    out: list[tuple[float, float]] = []
    two_r = 2.0 * r
    # stack of affine maps (scale, offset): x -> scale * x + offset
    stack = [(1.0, 0.0)]
    nodes = 0
    while stack:
        s, off = stack.pop()
        nodes += 1
        if nodes > node_budget:
            raise NoConvergence(
                f"gap-position enumeration exceeded {node_budget} nodes")
        for g_lo, g_hi in root_gaps:
            if abs(s) * (g_hi - g_lo) > two_r:
                x, y = s * g_lo + off, s * g_hi + off
                out.append((min(x, y), max(x, y)))
        for i in range(system.n_maps):
            cs = s * rho[i]
            if abs(cs) * g_max > two_r:
                stack.append((cs, s * shift[i] + off))
    out.sort()
    return out


def tube_components_1d(system: SelfSimilarSystem, r: float) -> list[tuple[float, float]]:
    """Connected components of B(K, r) (closed intervals), exactly: the
    padded hull minus every gap wider than 2r shrunk by r on each side."""
    if system.dimension != 1:
        raise DimensionMismatch("tube_components_1d requires a 1-D system")
    hull_lo, hull_hi = system.hull_1d
    comps = []
    cur_lo = hull_lo - r
    for g_lo, g_hi in _gap_positions(system, r):
        comps.append((cur_lo, g_lo + r))
        cur_lo = g_hi - r
    comps.append((cur_lo, hull_hi + r))
    return comps


def tube_volume_exact_1d(system: SelfSimilarSystem, r: float) -> TubeEstimate:
    """Exact Minkowski volume L(B(K,r))/r for a 1-D system (q = 0 only).

    L(B(K,r)) = (hull + 2r) - sum over gaps g > 2r of (g - 2r), the gaps
    enumerated by recursive descent (their lengths scale by ratio products).
    """
    if system.dimension != 1:
        raise DimensionMismatch("tube_volume_exact_1d requires a 1-D system")
    hull_lo, hull_hi = system.hull_1d
    gaps = np.ascontiguousarray(
        [g_hi - g_lo for g_lo, g_hi in _first_level_gap_list(system)])
    excess = _kernels.gap_excess(gaps, system.ratios, float(r),
                                 GAP_NODE_BUDGET)
    length = (hull_hi - hull_lo + 2.0 * r) - excess
    return TubeEstimate(r=r, q=0.0, value=length / r, method="exact1d")


def _first_level_gap_list(system: SelfSimilarSystem) -> list[tuple[float, float]]:
    hull_lo, hull_hi = system.hull_1d
    rho, shift = system.signed_params_1d
    ends = []
    for i in range(system.n_maps):
        x = rho[i] * hull_lo + shift[i]
        y = rho[i] * hull_hi + shift[i]
        ends.append((min(x, y), max(x, y)))
    ends.sort()
    gaps = []
    for (a_lo, a_hi), (b_lo, _) in zip(ends, ends[1:]):
        if b_lo - a_hi > 0.0:
            gaps.append((a_hi, b_lo))
    return gaps


def _gauss_panel_nodes(lo: float, hi: float, n_panels: int, order: int = 8):
    """Nodes and weights of composite Gauss-Legendre on [lo, hi]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def tube_volume_quadrature_1d(system: SelfSimilarSystem, q: float, r: float,
                              interval=None, rel_tol: float = 1e-4,
                              depth_cap: int = DEFAULT_DEPTH_CAP,
                              max_panels: int = 512) -> TubeEstimate:
    """Deterministic (1/r) int mu([x-r, x+r])^q dx over B(K,r) (d = 1),
    optionally clipped to ``interval``.

    Integrates per connected component of B(K,r) with composite
    Gauss-Legendre, doubling panel counts until the component integral is
    stable to rel_tol.  Intended for q >= 0; the interior nodes avoid the
    zero-measure component endpoints, but negative q amplifies endpoint
    behaviour and accuracy degrades.
    """
    comps = tube_components_1d(system, r)
    if interval is not None:
        a, b = float(interval[0]), float(interval[1])
        if b < a:
            a, b = b, a
        comps = [(max(lo, a), min(hi, b)) for lo, hi in comps]
        comps = [(lo, hi) for lo, hi in comps if hi > lo]
    if q == 0.0:
        total = sum(hi - lo for lo, hi in comps)
        return TubeEstimate(r=r, q=q, value=total / r, method="quadrature1d")
    total = 0.0
    for lo, hi in comps:
        prev = None
        n_panels = 4
        while True:
            nodes, weights = _gauss_panel_nodes(lo, hi, n_panels)
            mu = measure_intervals_batch(system, nodes - r, nodes + r,
                                         depth_cap)
            if q < 0.0:
                if np.any(mu <= 0.0):
                    raise DegenerateBall(
                        "zero ball measure inside B(K,r) with q < 0")
                vals = mu ** q
            else:
                vals = np.where(mu > 0.0, mu, 0.0) ** q
            est = float(np.dot(weights, vals))
            if prev is not None and abs(est - prev) <= rel_tol * max(
                    abs(est), 1e-300):
                break
            if n_panels >= max_panels:
                break
            prev = est
            n_panels *= 2
        total += est
    return TubeEstimate(r=r, q=q, value=total / r, method="quadrature1d")


def _bounding_box(system: SelfSimilarSystem, r: float, cloud: np.ndarray,
                  depth: int) -> tuple[np.ndarray, np.ndarray]:
    lo = cloud.min(axis=0)
    hi = cloud.max(axis=0)
    diam = float(np.linalg.norm(hi - lo)) or 1.0
    pad = r + system.r_max ** depth * diam
    return lo - pad, hi + pad


def tube_volume(system: SelfSimilarSystem, q: float, r: float,
                samples: int = 10 ** 4, rng_seed: int = 0,
                depth_cap: int = DEFAULT_DEPTH_CAP,
                cloud_depth: int = 40) -> TubeEstimate:
    """Monte Carlo multifractal Minkowski volume estimate.

    Draws x uniformly from a bounding box of B(K,r); points farther than r
    from a 10^4+ point attractor sample are rejected (contribute 0).  The
    ball measure mu(B(x,r)) is evaluated by the interval recursion for
    d = 1 and by the hit fraction of an independent address cloud for
    d >= 2.
    """
    if samples < 10 ** 3:
        raise InvalidSystem("tube_volume needs samples >= 1e3")
    rng = np.random.default_rng(np.random.SeedSequence(
        [rng_seed & 0xFFFFFFFF, _bits(q), _bits(r)]))
    cloud_n = max(10 ** 4, samples)
    cloud = sample_cloud(system, cloud_n, cloud_depth, rng)
    box_lo, box_hi = _bounding_box(system, r, cloud, cloud_depth)
    box_vol = float(np.prod(box_hi - box_lo))
    xs = rng.uniform(box_lo, box_hi, size=(samples, system.dimension))

    if system.dimension == 1:
        flat = np.sort(cloud[:, 0])
        idx = np.searchsorted(flat, xs[:, 0])
        left = np.abs(xs[:, 0] - flat[np.clip(idx - 1, 0, cloud_n - 1)])
        right = np.abs(flat[np.clip(idx, 0, cloud_n - 1)] - xs[:, 0])
        accept = np.minimum(left, right) < r
        mu = np.zeros(samples)
        if accept.any():
            mu[accept] = measure_intervals_batch(
                system, xs[accept, 0] - r, xs[accept, 0] + r, depth_cap)
    else:
        from scipy.spatial import cKDTree
        tree = cKDTree(cloud)
        dist, _ = tree.query(xs, k=1)
        accept = dist < r
        ball_cloud = sample_cloud(system, cloud_n, cloud_depth, rng)
        ball_tree = cKDTree(ball_cloud)
        mu = np.zeros(samples)
        if accept.any():
            counts = ball_tree.query_ball_point(xs[accept], r,
                                                return_length=True)
            mu[accept] = np.asarray(counts, dtype=float) / cloud_n

    if q < 0.0 and (not accept.any() or np.any(accept & (mu <= 0.0))):
        raise DegenerateBall(
            "zero estimated ball measure with q < 0: increase samples")
    kernel = np.zeros(samples)
    kernel[accept] = np.where(mu[accept] > 0.0, mu[accept], 0.0) ** q \
        if q != 0.0 else 1.0
    scale = box_vol / r ** system.dimension
    mean = float(kernel.mean())
    stderr = float(kernel.std(ddof=1) / math.sqrt(samples))
    return TubeEstimate(r=r, q=q, value=scale * mean, method="montecarlo",
                        stderr=scale * stderr, samples=samples)


def _bits(x: float) -> int:
    return int(np.frombuffer(np.float64(x).tobytes(), dtype=np.uint64)[0])


def tube_volume_mc_merged(system: SelfSimilarSystem, q: float, r: float,
                          samples: int = 10 ** 4, rng_seed: int = 0,
                          depth_cap: int = DEFAULT_DEPTH_CAP,
                          threads: int = 1) -> TubeEstimate:
    """Monte Carlo volume split over ``threads`` batches with derived seeds.

    Batches are merged by sample-weighted mean in fixed batch order, so the
    result is deterministic for a given (seed, threads) regardless of
    scheduling; reassociation changes results only at the 1e-13 level
    relative to single-threaded runs with the same total sample count.
    """
    if threads <= 1:
        return tube_volume(system, q, r, samples=samples, rng_seed=rng_seed,
                           depth_cap=depth_cap)
    from concurrent.futures import ThreadPoolExecutor
    batch = max(10 ** 3, samples // threads)
    seeds = [rng_seed + 1000003 * (k + 1) for k in range(threads)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(tube_volume, system, q, r, batch, sd,
                               depth_cap) for sd in seeds]
        parts = [f.result() for f in futures]
    n_total = sum(p.samples for p in parts)
    value = sum(p.value * p.samples for p in parts) / n_total
    var = sum((p.samples / n_total) ** 2 * p.stderr ** 2 for p in parts)
    return TubeEstimate(r=r, q=q, value=value, method="montecarlo",
                        stderr=math.sqrt(var), samples=n_total)


def make_evaluator(system: SelfSimilarSystem, method: str = "auto",
                   samples: int = 10 ** 4, seed: int = 0,
                   rel_tol: float = 1e-4,
                   depth_cap: int = DEFAULT_DEPTH_CAP) -> Callable[[float, float], float]:
    """Tube-volume evaluator (q, r) -> V^q_r(K).

    method "exact1d" requires q = 0, "quadrature1d" requires d = 1;
    "montecarlo" works in any dimension and derives a per-(q, r) seed from
    ``seed`` so repeated calls are reproducible.  "auto" picks the cheapest
    applicable method.
    """
    def evaluate(q: float, r: float) -> float:
        m = method
        if m == "auto":
            if system.dimension == 1:
                m = "exact1d" if q == 0.0 else "quadrature1d"
            else:
                m = "montecarlo"
        if m == "exact1d":
            if q != 0.0:
                raise InvalidSystem("exact1d evaluator requires q = 0")
            return tube_volume_exact_1d(system, r).value
        if m == "quadrature1d":
            return tube_volume_quadrature_1d(system, q, r, rel_tol=rel_tol,
                                             depth_cap=depth_cap).value
        if m == "montecarlo":
            return tube_volume(system, q, r, samples=samples, rng_seed=seed,
                               depth_cap=depth_cap).value
        raise InvalidSystem(f"unknown evaluator method {m!r}")

    return evaluate


def lambda_q(system: SelfSimilarSystem, q: float, r: float,
             evaluate: Callable[[float, float], float]) -> float:
    """Renewal kernel V^q_r(K) - sum_i p_i^q 1_{(0, r_i]}(r) V^q_{r/r_i}(K)."""
    total = evaluate(q, r)
    for i in range(system.n_maps):
        r_i = float(system.ratios[i])
        if r <= r_i:
            total -= float(system.probs[i]) ** q * evaluate(q, r / r_i)
    return total


@dataclass(frozen=True)
class ContentResult:
    q: float
    beta: float
    averaged: float
    renewal_constant: float
    plain: float | None
    is_arithmetic: bool


def _extend_grid_to_one(r_grid: np.ndarray) -> np.ndarray:
    """Continue a log grid up to r = 1 at its own density (the averaged
    content normalizes over [r_lo, 1])."""
    grid = np.sort(np.asarray(r_grid, dtype=float))
    if grid[-1] >= 1.0:
        return grid
    step = np.log(grid[-1] / grid[0]) / (len(grid) - 1)
    extra = np.exp(np.arange(np.log(grid[-1]) + step, 0.0, step))
    return np.unique(np.concatenate([grid, extra, [1.0]]))


def _with_jump_nodes(grid: np.ndarray, jumps: Sequence[float],
                     eps: float = 1e-12) -> np.ndarray:
    """Insert paired nodes just left/right of each jump point so the
    trapezoid rule never straddles a discontinuity."""
    lo, hi = grid[0], grid[-1]
    extra = []
    for s in jumps:
        if lo < s < hi:
            extra.extend([s * (1.0 - eps), s, s * (1.0 + eps)])
    if not extra:
        return grid
    return np.unique(np.concatenate([grid, extra]))


def minkowski_content(system: SelfSimilarSystem, q: float,
                      evaluate: Callable[[float, float], float],
                      r_grid) -> ContentResult:
    """Averaged multifractal Minkowski content and the renewal constant.

    averaged: the log-average (1/(log r_hi - log r_lo)) int_{r_lo}^{r_hi}
    s^beta V^q_s(K) ds/s by the trapezoid rule in log s over the supplied
    grid window.  The definitional limit r_lo -> 0 is window-independent,
    but the transient near s = 1 enters the [r_lo, 1] average at O(1/log
    r_lo); a window with r_hi below the transient (e.g. under the
    strong-separation threshold) converges much faster.

    renewal_constant: the independent formula c_q = (1/(-sum p^q r^beta
    log r)) int_0^1 s^beta lambda_q(s) ds/s by the same trapezoid rule on
    the grid extended up to 1 (lambda is supported up to s = 1), with nodes
    inserted at the indicator jumps s = r_i.

    The plain content equals c_q and is reported only in the non-arithmetic
    case (in the arithmetic case the limit does not exist; only its
    log-average does).
    """
    grid = np.sort(np.asarray(r_grid, dtype=float))
    if len(grid) < 30 or grid[0] <= 0.0:
        raise InvalidSystem("r_grid must have >= 30 positive points")
    b = beta(system, q)
    log_s = np.log(grid)

    v_vals = np.array([evaluate(q, s) for s in grid])
    averaged = float(np.trapezoid(grid ** b * v_vals, log_s)
                     / (log_s[-1] - log_s[0]))

    lam_grid = _with_jump_nodes(_extend_grid_to_one(grid),
                                [float(x) for x in system.ratios])
    lam_vals = np.array([lambda_q(system, q, s, evaluate) for s in lam_grid])
    norm = -float(np.sum(system.probs ** q * system.ratios ** b
                         * np.log(system.ratios)))
    c_q = float(np.trapezoid(lam_grid ** b * lam_vals, np.log(lam_grid))
                / norm)

    arith = arithmetic_structure(system)
    plain = None if arith.is_arithmetic else c_q
    return ContentResult(q=q, beta=b, averaged=averaged, renewal_constant=c_q,
                         plain=plain, is_arithmetic=arith.is_arithmetic)


def tube_measure_ratio(system: SelfSimilarSystem, q: float, word: Word,
                       r: float, rel_tol: float = 1e-4,
                       depth_cap: int = DEFAULT_DEPTH_CAP) -> float:
    """I^q_r(B(S_word K, r)) / I^q_r(R^d) for d = 1.

    The numerator integrates the tube measure over the interval
    B(S_word(hull), r); as r -> 0 the ratio tends to p_word^q
    r_word^beta(q).
    """
    if system.dimension != 1:
        raise DimensionMismatch("tube_measure_ratio requires a 1-D system")
    if not word.letters:
        return 1.0
    rho, shift = system.signed_params_1d
    s, off = 1.0, 0.0
    for a in word.letters:
        i = a - 1
        s, off = s * rho[i], s * shift[i] + off
    hull_lo, hull_hi = system.hull_1d
    x, y = s * hull_lo + off, s * hull_hi + off
    lo, hi = (x, y) if x <= y else (y, x)
    numer = tube_volume_quadrature_1d(system, q, r,
                                      interval=(lo - r, hi + r),
                                      rel_tol=rel_tol,
                                      depth_cap=depth_cap).value
    denom = tube_volume_quadrature_1d(system, q, r, rel_tol=rel_tol,
                                      depth_cap=depth_cap).value
    return numer / denom


def dimension_fit(evaluate: Callable[[float, float], float], q: float,
                  r_grid) -> float:
    """Least-squares slope of log V^q_r against -log r (the multifractal
    Minkowski dimension estimate)."""
    grid = np.asarray(r_grid, dtype=float)
    vals = np.array([evaluate(q, r) for r in grid])
    if np.any(vals <= 0.0):
        raise NoConvergence("nonpositive tube volume in dimension fit")
    slope = np.polyfit(-np.log(grid), np.log(vals), 1)[0]
    return float(slope)
