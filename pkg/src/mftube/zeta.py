"""Multifractal zeta function: evaluation, poles, residues, reconstructions.

zeta^q(s) = sum_words p_i^q r_i^s has the closed form g/(1 - g) with
g(s) = sum_i p_i^q r_i^s; its poles are the zeros of f = 1 - g, confined to
the strip alpha(q) <= Re s <= beta(q).  Poles are located either through
the lattice polynomial 1 - sum_i p_i^q z^{k_i} (arithmetic systems) or by an
argument-principle rectangle scan, and certified by winding counts.  The
symbolic volume is reconstructed from the poles by residue sums and by
vertical-line contour integration of the modified zeta function.

Cell scans and lattice-line enumerations are independent and could run
concurrently; pole lists are merged and deduplicated (distance < 1e-8) in
deterministic sorted order either way.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from mftube.errors import (BadContour, ExcludedExponent, InvalidSystem,
                           MultipleRoot, NearPole, NonSimplePole,
                           NotArithmetic, RootFindingFailure,
                           UnresolvedCluster)
from mftube.exponents import alpha, arithmetic_structure, beta
from mftube.ifs import SelfSimilarSystem
from mftube.symbolic import KappaVector, sigma

logger = logging.getLogger(__name__)

POLE_RESIDUAL_TOL = 1e-10
WINDING_TOL = 1e-3
EDGE_GUARD = 1e-6
EDGE_PUSH = 1e-5
DEDUPE_DIST = 1e-8


@dataclass(frozen=True)
class ZetaPole:
    location: complex
    residue_zeta: complex
    winding: int
    simple: bool


@dataclass(frozen=True)
class PoleLine:
    base: complex
    spacing: float


@dataclass(frozen=True)
class PoleLattice:
    u: float
    lines: tuple[PoleLine, ...]


@dataclass(frozen=True)
class Reconstruction:
    value: float
    terms: int
    imag_residual: float


def _g_terms(system: SelfSimilarSystem, q: float):
    a = system.probs ** q
    log_r = np.log(system.ratios)
    return a, log_r


def zeta_value(system: SelfSimilarSystem, q: float, s: complex) -> complex:
    """Meromorphic continuation g(s)/(1 - g(s)); equals the word series for
    Re s > beta(q)."""
    a, log_r = _g_terms(system, q)
    g = complex(np.sum(a * np.exp(np.multiply(s, log_r))))
    denom = 1.0 - g
    if abs(denom) < 1e-12:
        raise NearPole(f"s = {s} is within 1e-12 of a pole of zeta")
    return g / denom


def zeta_word_sum(system: SelfSimilarSystem, q: float, s: complex,
                  max_len: int = 20) -> complex:
    """Truncated word series sum over |i| <= max_len; the tail is bounded by
    |g|^{max_len+1}/(1-|g|) for |g(s)| < 1."""
    a, log_r = _g_terms(system, q)
    g = complex(np.sum(a * np.exp(np.multiply(s, log_r))))
    return sum(g ** m for m in range(1, max_len + 1))


def modified_zeta_value(system: SelfSimilarSystem, q: float,
                        kappa: KappaVector, s: complex) -> complex:
    """Z^q(s) = (sum_l kappa_l (sigma_l - 1)/(s - (l - dq))) zeta^q(s)."""
    d = system.dimension
    sig = sigma(system, q)
    pref = 0j
    for l in range(d + 1):
        x = l - d * q
        if abs(s - x) < 1e-12:
            raise NearPole(f"s = {s} is within 1e-12 of the simple factor "
                           f"pole at {x}")
        pref += kappa[l] * (sig[l] - 1.0) / (s - x)
    return pref * zeta_value(system, q, s)


def _prefactor_array(system: SelfSimilarSystem, q: float,
                     kappa: KappaVector, s: np.ndarray) -> np.ndarray:
    d = system.dimension
    sig = sigma(system, q)
    out = np.zeros_like(s, dtype=complex)
    for l in range(d + 1):
        out += kappa[l] * (sig[l] - 1.0) / (s - (l - d * q))
    return out


def _f_array(system: SelfSimilarSystem, q: float, s: np.ndarray) -> np.ndarray:
    a, log_r = _g_terms(system, q)
    return 1.0 - np.exp(np.multiply.outer(s, log_r)) @ a


def _df_array(system: SelfSimilarSystem, q: float, s: np.ndarray) -> np.ndarray:
    a, log_r = _g_terms(system, q)
    return -np.exp(np.multiply.outer(s, log_r)) @ (a * log_r)


def _zeta_array(system: SelfSimilarSystem, q: float, s: np.ndarray) -> np.ndarray:
    a, log_r = _g_terms(system, q)
    g = np.exp(np.multiply.outer(s, log_r)) @ a
    return g / (1.0 - g)


def _residue_at(system: SelfSimilarSystem, q: float, w: complex) -> complex:
    """Simple-pole residue 1/(-sum_i p_i^q r_i^w log r_i)."""
    a, log_r = _g_terms(system, q)
    return 1.0 / complex(-np.sum(a * log_r * np.exp(np.multiply(w, log_r))))


# ---------------------------------------------------------------------------
# Durand-Kerner simultaneous root iteration


def durand_kerner(coeffs, rng_seed: int = 0, max_iter: int = 500,
                  restarts: int = 3) -> np.ndarray:
    """All complex roots of sum_k coeffs[k] z^k by simultaneous iteration.

    Deflation-free: every root is tracked at once, with random-perturbation
    restarts when the iteration stalls.  Convergence requires
    |P(root)| <= 1e-13 * sum|coeffs| at every root.
    """
    c = np.asarray(coeffs, dtype=complex)
    while len(c) > 1 and c[-1] == 0:
        c = c[:-1]
    deg = len(c) - 1
    if deg < 1:
        raise RootFindingFailure("polynomial has no roots (degree 0)")
    monic = c / c[-1]
    scale = float(np.sum(np.abs(c)))
    rng = np.random.default_rng(rng_seed)

    def p_of(z):
        return np.polyval(c[::-1], z)

    radius = 1.0 + float(np.max(np.abs(monic[:-1])))
    z = radius * (0.4 + 0.9j) ** np.arange(1, deg + 1)
    for attempt in range(restarts + 1):
        if attempt > 0:
            z = z + radius * 0.1 * (rng.standard_normal(deg)
                                    + 1j * rng.standard_normal(deg))
        for _ in range(max_iter):
            pv = np.polyval(monic[::-1], z)
            denom = np.ones(deg, dtype=complex)
            for j in range(deg):
                diff = z[j] - np.delete(z, j)
                denom[j] = np.prod(diff)
            step = pv / denom
            z = z - step
            if np.max(np.abs(step)) < 1e-15 * (1.0 + np.max(np.abs(z))):
                break
        if np.all(np.abs(p_of(z)) <= 1e-13 * scale):
            return z
    raise RootFindingFailure(
        f"Durand-Kerner failed after {restarts} restarts "
        f"(max |P| = {float(np.max(np.abs(p_of(z)))):.3e})")


# ---------------------------------------------------------------------------
# Winding-number certification


def _winding_rectangle(system: SelfSimilarSystem, q: float, x0, x1, y0, y1,
                       max_nodes: int = 2 ** 14):
    """Argument-principle count of zeros of f inside the rectangle, by
    adaptive trapezoid on f'/f along the boundary.

    Edges passing within EDGE_GUARD of a zero are pushed outward by
    EDGE_PUSH (logged).  Returns (winding, rect) or (None, rect) when the
    refinement cap is reached before the total settles within WINDING_TOL
    of an integer.
    """
    rect = [float(x0), float(x1), float(y0), float(y1)]
    for _ in range(8):
        corners = [complex(rect[0], rect[2]), complex(rect[1], rect[2]),
                   complex(rect[1], rect[3]), complex(rect[0], rect[3])]
        moved = False
        for e in range(4):
            a, b = corners[e], corners[(e + 1) % 4]
            zs = a + (b - a) * np.linspace(0.0, 1.0, 65)
            if float(np.min(np.abs(_f_array(system, q, zs)))) < EDGE_GUARD:
                if e == 0:
                    rect[2] -= EDGE_PUSH
                elif e == 1:
                    rect[1] += EDGE_PUSH
                elif e == 2:
                    rect[3] += EDGE_PUSH
                else:
                    rect[0] -= EDGE_PUSH
                logger.info("winding edge %d perturbed outward by %g", e,
                            EDGE_PUSH)
                moved = True
        if not moved:
            break
    corners = [complex(rect[0], rect[2]), complex(rect[1], rect[2]),
               complex(rect[1], rect[3]), complex(rect[0], rect[3])]
    total = 0.0j
    for e in range(4):
        a, b = corners[e], corners[(e + 1) % 4]
        part = _edge_logderiv_integral(system, q, a, b,
                                       tol=WINDING_TOL * math.pi,
                                       max_evals=max_nodes)
        if part is None:
            return None, rect
        total += part
    wind = total / (2j * math.pi)
    nearest = round(wind.real)
    if abs(wind - nearest) <= WINDING_TOL:
        return int(nearest), rect
    return None, rect


def _edge_logderiv_integral(system, q, a: complex, b: complex, tol: float,
                            max_evals: int = 2 ** 16):
    """int_a^b f'/f dz by batched adaptive Simpson.

    Zeros of f just off the segment spike the integrand; segments are
    bisected (all active midpoints evaluated in one vectorized call per
    sweep) until each panel's trapezoid/Simpson discrepancy fits its share
    of ``tol``.  Returns None if the evaluation budget runs out.
    """
    direction = b - a

    def w_of(ts: np.ndarray) -> np.ndarray:
        zs = a + direction * ts
        return _df_array(system, q, zs) / _f_array(system, q, zs)

    t0 = np.array([0.0, 0.5])
    t1 = np.array([0.5, 1.0])
    w0 = w_of(np.array([0.0]))
    wm = w_of(np.array([0.5]))
    w1 = w_of(np.array([1.0]))
    seg_lo = np.concatenate([w0, wm])
    seg_hi = np.concatenate([wm, w1])
    evals = 3
    total = 0.0j
    for _ in range(60):
        if len(t0) == 0:
            return total * direction
        mid = 0.5 * (t0 + t1)
        w_mid = w_of(mid)
        evals += len(mid)
        if evals > max_evals:
            return None
        length = t1 - t0
        trap = 0.5 * (seg_lo + seg_hi) * length
        simp = (seg_lo + 4.0 * w_mid + seg_hi) / 6.0 * length
        err = np.abs(simp - trap)
        ok = err <= tol * np.maximum(length, 1.0 / len(t0))
        total += complex(np.sum(simp[ok]))
        keep = ~ok
        t0 = np.concatenate([t0[keep], mid[keep]])
        t1 = np.concatenate([mid[keep], t1[keep]])
        seg_lo = np.concatenate([seg_lo[keep], w_mid[keep]])
        seg_hi = np.concatenate([w_mid[keep], seg_hi[keep]])
    return None


def _newton_polish(system: SelfSimilarSystem, q: float, s0: complex,
                   rect, max_iter: int = 80) -> complex | None:
    x0, x1, y0, y1 = rect
    pad_x = 0.25 * (x1 - x0)
    pad_y = 0.25 * (y1 - y0)
    s = complex(s0)
    a, log_r = _g_terms(system, q)
    scale = float(np.sum(a))
    for _ in range(max_iter):
        arr = np.array([s])
        fv = complex(_f_array(system, q, arr)[0])
        if abs(fv) <= 1e-14 * max(1.0, scale):
            return s
        dv = complex(_df_array(system, q, arr)[0])
        if dv == 0:
            return None
        s_new = s - fv / dv
        if not (x0 - pad_x <= s_new.real <= x1 + pad_x
                and y0 - pad_y <= s_new.imag <= y1 + pad_y):
            s_new = 0.5 * (s + complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)))
        if abs(s_new - s) < 1e-16 * (1.0 + abs(s)):
            s = s_new
            break
        s = s_new
    arr = np.array([s])
    if abs(complex(_f_array(system, q, arr)[0])) <= 1e-12 * max(1.0, scale):
        return s
    return None


def _certify(system: SelfSimilarSystem, q: float, loc: complex,
             half_width: float) -> int:
    wind, _ = _winding_rectangle(
        system, q, loc.real - half_width, loc.real + half_width,
        loc.imag - half_width, loc.imag + half_width)
    return 0 if wind is None else wind


def _make_pole(system: SelfSimilarSystem, q: float, loc: complex,
               winding: int) -> ZetaPole:
    arr = np.array([loc])
    df = complex(_df_array(system, q, arr)[0])
    simple = abs(df) > 1e-10
    residue = _residue_at(system, q, loc) if simple else complex(
        float("nan"), float("nan"))
    return ZetaPole(location=loc, residue_zeta=residue, winding=winding,
                    simple=simple)


def _dedupe_sorted(poles: list[ZetaPole]) -> list[ZetaPole]:
    poles = sorted(poles, key=lambda p: (p.location.imag, p.location.real))
    out: list[ZetaPole] = []
    for p in poles:
        if out and abs(p.location - out[-1].location) < DEDUPE_DIST:
            continue
        out.append(p)
    return out


# ---------------------------------------------------------------------------
# Pole finders


def pole_lattice(system: SelfSimilarSystem, q: float,
                 rng_seed: int = 0) -> PoleLattice:
    """Pole lines of an arithmetic system from the roots of the lattice
    polynomial P(z) = 1 - sum_i p_i^q z^{k_i}."""
    arith = arithmetic_structure(system)
    if not arith.is_arithmetic:
        raise NotArithmetic("system is not arithmetic")
    u = float(arith.u)
    k = arith.k
    coeffs = np.zeros(max(k) + 1, dtype=complex)
    coeffs[0] = 1.0
    weights = system.probs ** q
    for ki, wi in zip(k, weights):
        coeffs[ki] -= wi
    roots = durand_kerner(coeffs, rng_seed=rng_seed)
    lines = []
    for w in roots:
        if abs(w) < 1e-300:
            continue
        base = complex(-math.log(abs(w)) / u,
                       -float(np.angle(w)) / u)
        lines.append(PoleLine(base=base, spacing=2.0 * math.pi / u))
    lines.sort(key=lambda ln: (ln.base.real, ln.base.imag))
    return PoleLattice(u=u, lines=tuple(lines))


def poles_arithmetic(system: SelfSimilarSystem, q: float, imag_max: float,
                     rng_seed: int = 0) -> list[ZetaPole]:
    """All poles with |Im| <= imag_max of an arithmetic system.

    Each root w of the lattice polynomial generates the lattice line
    -log|w|/u - (Arg w / u) i + (2 pi / u) i Z; residues are constant along
    a line (1/(-u w P'(w))), and every pole is certified by a winding count
    on a box of half-width min(pi/u, 1e-3)/2.
    """
    arith = arithmetic_structure(system)
    if not arith.is_arithmetic:
        raise NotArithmetic("system is not arithmetic")
    u = float(arith.u)
    k = arith.k
    kmax = max(k)
    coeffs = np.zeros(kmax + 1, dtype=complex)
    coeffs[0] = 1.0
    weights = system.probs ** q
    for ki, wi in zip(k, weights):
        coeffs[ki] -= wi
    roots = durand_kerner(coeffs, rng_seed=rng_seed)
    dcoeffs = np.array([m * coeffs[m] for m in range(1, kmax + 1)])
    spacing = 2.0 * math.pi / u
    half_width = min(math.pi / u, 1e-3) / 2.0
    poles: list[ZetaPole] = []
    for w in roots:
        if abs(w) < 1e-300:
            continue
        dP = complex(np.polyval(dcoeffs[::-1], w))
        simple = abs(dP) > 1e-10
        if not simple:
            logger.warning("multiple root of lattice polynomial at %s; "
                           "pole flagged non-simple, residue omitted", w)
        residue = -1.0 / (u * w * dP) if simple else complex(
            float("nan"), float("nan"))
        base_re = -math.log(abs(w)) / u
        base_im = -float(np.angle(w)) / u
        m_lo = math.ceil((-imag_max - base_im) / spacing - 1e-12)
        m_hi = math.floor((imag_max - base_im) / spacing + 1e-12)
        for m in range(m_lo, m_hi + 1):
            loc = complex(base_re, base_im + m * spacing)
            wind = _certify(system, q, loc, half_width)
            poles.append(ZetaPole(location=loc, residue_zeta=residue,
                                  winding=wind, simple=simple))
    return _dedupe_sorted(poles)


def poles_general(system: SelfSimilarSystem, q: float, imag_max: float,
                  re_margin: float = 0.25) -> list[ZetaPole]:
    """Rectangle-scan pole finder for any system.

    Scans [alpha - re_margin, beta + re_margin] x [0, imag_max] in cells of
    height pi/(-log r_min) (half the asymptotic mean pole spacing); each
    cell's boundary winding count routes to Newton polish (count 1) or
    recursive quadrisection (count >= 2, depth <= 8).  Conjugate poles are
    added by symmetry.
    """
    a_q = alpha(system, q)
    b_q = beta(system, q)
    x0 = a_q - re_margin
    x1 = b_q + re_margin
    h = math.pi / (-math.log(system.r_min))
    poles: list[ZetaPole] = []

    def handle_cell(cx0, cx1, cy0, cy1, depth):
        wind, rect = _winding_rectangle(system, q, cx0, cx1, cy0, cy1)
        if wind is None:
            raise UnresolvedCluster(
                f"winding integral did not settle on cell "
                f"[{cx0},{cx1}]x[{cy0},{cy1}]")
        if wind == 0:
            return
        if wind == 1:
            centroid = complex(0.5 * (rect[0] + rect[1]),
                               0.5 * (rect[2] + rect[3]))
            loc = _newton_polish(system, q, centroid, rect)
            if loc is not None:
                poles.append(_make_pole(system, q, loc, 1))
                return
        if depth >= 8:
            raise UnresolvedCluster(
                f"cell [{cx0},{cx1}]x[{cy0},{cy1}] still holds winding "
                f"{wind} at quadrisection depth 8")
        mx = 0.5 * (cx0 + cx1)
        my = 0.5 * (cy0 + cy1)
        for nx0, nx1 in ((cx0, mx), (mx, cx1)):
            for ny0, ny1 in ((cy0, my), (my, cy1)):
                handle_cell(nx0, nx1, ny0, ny1, depth + 1)

    y = -0.5 * h  # start half a cell below the axis so real poles are interior
    while y < imag_max:
        handle_cell(x0, x1, y, y + h, 0)
        y += h

    out = list(poles)
    for p in poles:
        if p.location.imag > DEDUPE_DIST:
            out.append(ZetaPole(location=p.location.conjugate(),
                                residue_zeta=p.residue_zeta.conjugate(),
                                winding=p.winding, simple=p.simple))
    out = [p for p in out if abs(p.location.imag) <= imag_max + 1e-12]
    return _dedupe_sorted(out)


def find_poles(system: SelfSimilarSystem, q: float, imag_max: float,
               method: str = "auto", re_margin: float = 0.25,
               rng_seed: int = 0) -> list[ZetaPole]:
    if method == "auto":
        method = ("arithmetic"
                  if arithmetic_structure(system).is_arithmetic
                  else "general")
    if method == "arithmetic":
        return poles_arithmetic(system, q, imag_max, rng_seed=rng_seed)
    if method == "general":
        return poles_general(system, q, imag_max, re_margin=re_margin)
    raise InvalidSystem(f"unknown pole-finding method {method!r}")


def pole_density_check(system: SelfSimilarSystem, poles: list[ZetaPole],
                       t_grid) -> list[tuple[float, int, float, float]]:
    """Compare the two-sided counting function against gamma * t with
    gamma = -(1/pi) log r_min; returns (t, count, gamma t, deviation)."""
    gam = -math.log(system.r_min) / math.pi
    ims = np.array([p.location.imag for p in poles])
    out = []
    for t in t_grid:
        count = int(np.sum(np.abs(ims) <= t))
        out.append((float(t), count, gam * t, count - gam * t))
    return out


# ---------------------------------------------------------------------------
# Reconstructions


def _check_reconstruction_preconditions(system, q, r):
    d = system.dimension
    b = beta(system, q)
    for l in range(d + 1):
        if abs(b - (l - d * q)) <= 1e-9:
            raise ExcludedExponent(
                f"beta(q) = {b} coincides with l - dq for l = {l}")
    if not 0.0 < r < system.r_min:
        raise InvalidSystem(
            f"reconstruction requires 0 < r < r_min = {system.r_min}")
    return b


def residue_sum_reconstruction(system: SelfSimilarSystem, q: float,
                               kappa: KappaVector, r: float,
                               imag_max: float, method: str = "auto",
                               poles: list[ZetaPole] | None = None,
                               rng_seed: int = 0) -> Reconstruction:
    """Partial residue sum sum_omega prefactor(omega) res(zeta; omega)
    r^{-omega} over poles with |Im omega| <= imag_max, accumulated in
    conjugate pairs ordered by |Im|.

    The exact formula's limit runs along a special unbounded sequence of
    heights; symmetric conjugate truncation keeps partial sums real and is
    diagnosed through the tail envelope instead.
    """
    _check_reconstruction_preconditions(system, q, r)
    if poles is None:
        poles = find_poles(system, q, imag_max, method=method,
                           rng_seed=rng_seed)
    used = [p for p in poles if abs(p.location.imag) <= imag_max]
    for p in used:
        if not p.simple:
            raise NonSimplePole(
                f"pole at {p.location} is not simple; residue sum "
                "reconstruction needs simple poles")
    used.sort(key=lambda p: (abs(p.location.imag), p.location.imag))
    locs = np.array([p.location for p in used])
    residues = np.array([p.residue_zeta for p in used])
    pref = _prefactor_array(system, q, kappa, locs)
    terms = pref * residues * np.exp(-locs * math.log(r))
    total = complex(np.sum(terms))
    imag_residual = abs(total.imag) / max(abs(total), 1e-300)
    if imag_residual > 1e-9:
        logger.warning("residue sum imaginary residual %.3e (conjugate "
                       "pairing incomplete up to imag_max?)", imag_residual)
    return Reconstruction(value=float(total.real), terms=len(used),
                          imag_residual=float(imag_residual))


def _contour_tail(system: SelfSimilarSystem, q: float, kappa: KappaVector,
                  r: float, c: float, T: float,
                  max_level_words: int = 2 ** 18) -> float:
    """First-order tail (1/2 pi) * 2 Re int_T^inf of the contour integrand.

    Expanding zeta into the word series turns the integrand into a sum of
    pure oscillations p_w^q (r_w/r)^c e^{i t log(r_w/r)} prefactor(c+it);
    integrating each by parts leaves -prefactor(c+iT) e^{i w T}/(i w) per
    word plus O(1/T^3) terms.  Word levels are accumulated until their
    geometric envelope is negligible.
    """
    a, log_r = _g_terms(system, q)
    pref_T = complex(_prefactor_array(system, q, kappa,
                                      np.array([c + 1j * T]))[0])
    log_ratio = math.log(r)
    level_logr = log_r.copy()
    level_pq = a.copy()
    g_c = float(np.sum(a * np.exp(c * log_r)))
    total = 0.0j
    for _ in range(200):
        omega = level_logr - log_ratio
        amp = level_pq * np.exp(c * omega)
        total += complex(np.sum(
            amp * (-pref_T) * np.exp(1j * omega * T) / (1j * omega)))
        bound = float(np.sum(amp)) * g_c * abs(pref_T)
        if bound < 1e-12 * (1.0 + abs(total)):
            break
        if len(level_logr) * system.n_maps > max_level_words:
            logger.warning(
                "contour tail correction truncated at %d words per level; "
                "remaining envelope %.3e", len(level_logr), bound)
            break
        level_logr = (level_logr[:, None] + log_r[None, :]).ravel()
        level_pq = (level_pq[:, None] * a[None, :]).ravel()
    return float(total.real) / math.pi


def contour_reconstruction(system: SelfSimilarSystem, q: float,
                           kappa: KappaVector, r: float, c: float,
                           imag_max: float,
                           nodes_per_period: int = 64,
                           tail_correction: bool = True) -> float:
    """First explicit formula: sum_l kappa_l sigma_l r^{-l+dq} plus the
    vertical-line integral (1/2 pi) int Z(c+it) r^{-(c+it)} dt truncated at
    |t| <= imag_max.

    The integrand oscillates with period 2 pi/|log r| and decays like 1/t^2
    (the consistency condition kills the 1/t term), so composite
    Gauss-Legendre panels of a quarter period integrate it to near machine
    accuracy; symmetry halves the work.  The truncated tail scales like
    r^{-c}/imag_max and grows with c; with ``tail_correction`` the
    first-order integration-by-parts tail estimate is added back, making
    the result c-independent to quadrature accuracy.
    """
    d = system.dimension
    b = _check_reconstruction_preconditions(system, q, r)
    c_floor = max([l - d * q for l in range(d + 1)] + [b])
    if c <= c_floor + 1e-12:
        raise BadContour(
            f"contour abscissa c = {c} must exceed {c_floor}")
    sig = sigma(system, q)
    head = sum(kappa[l] * sig[l] * r ** (-l + d * q) for l in range(d + 1))

    period = 2.0 * math.pi / abs(math.log(r))
    panel = period / 4.0
    n_panels = max(8, int(math.ceil(imag_max / panel)))
    order = max(8, nodes_per_period // 4)
    gl_x, gl_w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, imag_max, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    ts = (mid[:, None] + half[:, None] * gl_x[None, :]).ravel()
    ws = (half[:, None] * gl_w[None, :]).ravel()

    s = c + 1j * ts
    integrand = (_prefactor_array(system, q, kappa, s)
                 * _zeta_array(system, q, s)
                 * np.exp(-s * math.log(r)))
    # integrand(-t) = conj(integrand(t)); the real part is even
    integral = 2.0 * float(np.dot(ws, integrand.real))
    value = float(head + integral / (2.0 * math.pi))
    if tail_correction:
        value += _contour_tail(system, q, kappa, r, c, imag_max)
    return value


def fourier_frac_partial(a: float, x: float, K: int) -> float:
    """Partial sum sum_{|k|<=K} (e^a - 1)/(a - 2 pi i k) e^{2 pi i k x};
    converges to e^{a frac(x)} off the integers and to (e^a + 1)/2 on them.
    Test-support routine for the residue-sum convergence mechanism."""
    k = np.arange(-K, K + 1)
    terms = (math.exp(a) - 1.0) / (a - 2j * math.pi * k) \
        * np.exp(2j * math.pi * k * x)
    return float(np.sum(terms).real)
