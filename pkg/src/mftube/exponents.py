"""Exponent functions of a self-similar system.

beta(q) solves sum_i p_i^q r_i^beta = 1 and is the multifractal Minkowski
dimension of the attractor; alpha(q) is the left edge of the zeta-function
pole strip; gamma(q) is the excluded-word variant used in remainder
estimates.  The module also detects lattice (arithmetic) structure of
{log 1/r_i} and computes discrete Legendre transforms.

Everything is a pure function of immutable inputs and unconditionally
thread-safe.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import logsumexp

from mftube.errors import InsufficientSamples, InvalidSystem, NoConvergence
from mftube.ifs import SelfSimilarSystem, Word

logger = logging.getLogger(__name__)

RESIDUAL_TARGET = 1e-13
MAX_ITER = 200
ALPHA_SCAN_STEP = 0.25
ALPHA_BISECT_TOL = 1e-12
RATIONALITY_QMAX = 10 ** 6
RATIONALITY_TOL = 1e-9


@dataclass(frozen=True)
class ExponentProfile:
    """Per-q record of the exponent functions with solver residuals."""

    q: float
    beta: float
    alpha: float
    gamma: float | None
    beta_residual: float
    alpha_residual: float


@dataclass(frozen=True)
class ArithmeticStructure:
    """Lattice structure of {log 1/r_i}: log 1/r_i = k_i * u with coprime
    integers k_i when arithmetic."""

    is_arithmetic: bool
    u: float | None
    k: tuple[int, ...] | None


def _exp_sat(x: float) -> float:
    """exp with the argument clipped at 700: saturates instead of
    overflowing, preserving sign and monotonicity during bracket scans far
    from a root (values near any root are O(1) and unaffected)."""
    return math.exp(min(x, 700.0))


def _solve_dirichlet(weights: np.ndarray, ratios: np.ndarray,
                     target: float = 1.0) -> float:
    """Solve sum_i w_i r_i^t = target for the unique real t.

    The map t -> sum w_i r_i^t is smooth, strictly decreasing (all r_i in
    (0,1), w_i > 0), with limits +inf / 0, so a bracketing scan plus
    safeguarded Newton converges fast for any q.
    """
    log_r = np.log(ratios)

    def phi(t):
        with np.errstate(over="ignore"):
            return float(np.sum(weights * np.exp(t * log_r)))

    def dphi(t):
        with np.errstate(over="ignore"):
            return float(np.sum(weights * np.exp(t * log_r) * log_r))

    lo, hi = 0.0, 0.0
    step = 1.0
    for _ in range(200):
        if phi(lo) >= target:
            break
        lo -= step
        step *= 2.0
    else:
        raise NoConvergence("could not bracket the exponent from below")
    step = 1.0
    for _ in range(200):
        if phi(hi) <= target:
            break
        hi += step
        step *= 2.0
    else:
        raise NoConvergence("could not bracket the exponent from above")

    t = 0.5 * (lo + hi)
    for _ in range(MAX_ITER):
        f = phi(t) - target
        if abs(f) <= RESIDUAL_TARGET:
            return t
        d = dphi(t)
        t_new = t - f / d if d != 0.0 else math.nan
        if not (lo <= t_new <= hi) or not math.isfinite(t_new):
            t_new = 0.5 * (lo + hi)
        # keep the bracket valid: phi decreasing => f > 0 means t too small
        if f > 0.0:
            lo = max(lo, t)
        else:
            hi = min(hi, t)
        t = t_new
    if abs(phi(t) - target) <= 1e-11:
        return t
    raise NoConvergence(
        f"exponent solve stalled (residual {phi(t) - target:.3e})")


def beta(system: SelfSimilarSystem, q: float) -> float:
    """The unique beta with sum_i p_i^q r_i^beta = 1."""
    weights = system.probs ** q
    return _solve_dirichlet(weights, system.ratios)


def beta_residual(system: SelfSimilarSystem, q: float, b: float) -> float:
    return float(np.sum(system.probs ** q * system.ratios ** b) - 1.0)


def _alpha_log_margin(system: SelfSimilarSystem, q: float):
    """Returns t -> log(1 + sum_{r_i>r_min} p^q r_i^t) - log(sum_{r_i=r_min}
    p^q r_min^t): same sign as Phi_q(t) but overflow-free for any t (the
    raw terms blow past float range when nearly tied ratios push alpha far
    negative)."""
    ratios = system.ratios
    log_w = q * np.log(system.probs)
    r_min = system.r_min
    is_min = np.abs(ratios - r_min) <= 1e-12 * r_min
    lw_min = log_w[is_min]
    lw_rest = log_w[~is_min]
    lr_rest = np.log(ratios[~is_min])
    log_r_min = math.log(r_min)

    def margin(t):
        a = logsumexp(lw_min + t * log_r_min)
        if len(lw_rest):
            b = float(np.logaddexp(0.0, logsumexp(lw_rest + t * lr_rest)))
        else:
            b = 0.0
        return float(b - a)

    return margin


def alpha(system: SelfSimilarSystem, q: float) -> float:
    """inf{t : sum_{r_i=r_min} p_i^q r_min^t <= 1 + sum_{r_i>r_min} p_i^q
    r_i^t}.

    Phi_q(t) = 1 + sum_{r_i>r_min} p_i^q r_i^t - sum_{r_i=r_min} p_i^q
    r_min^t is >= 0 at beta(q) and tends to -inf as t -> -inf; once it goes
    strictly negative it stays negative (the r_min terms dominate), so the
    infimum is the single sign change found by a descending scan plus
    bisection.  Only the sign of Phi matters and it is evaluated in log
    space, so systems whose alpha sits past the float exponent range still
    resolve.
    """
    margin = _alpha_log_margin(system, q)
    hi = beta(system, q)
    m_hi = margin(hi)
    if m_hi < 0.0:
        # Phi(beta) = 2 * sum over non-minimal ratios >= 0 analytically; a
        # tiny negative value means all ratios tie with r_min and the
        # crossing sits at beta itself.
        if m_hi > -1e-9:
            return hi
        raise NoConvergence("Phi_q(beta) < 0; inconsistent exponent state")
    lo = hi
    for _ in range(100000):
        lo -= ALPHA_SCAN_STEP
        if margin(lo) < 0.0:
            break
    else:
        raise NoConvergence("alpha scan failed to find a sign change")
    hi = lo + ALPHA_SCAN_STEP
    while hi - lo > ALPHA_BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if margin(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def alpha_residual(system: SelfSimilarSystem, q: float, a: float) -> float:
    """Log-domain margin log(1 + sum_rest) - log(sum_min) at the reported
    alpha; zero at an exact crossing and scale-free at extreme exponents."""
    return _alpha_log_margin(system, q)(a)


def gamma(system: SelfSimilarSystem, q: float, excluded_word: Word) -> float:
    """The unique gamma with sum over words i of the excluded word's length,
    i != excluded_word, of p_i^q r_i^gamma = 1.

    Uses sum_{|i|=m} p_i^q r_i^s = (sum_i p_i^q r_i^s)^m, so no word
    enumeration is needed; the left side is a strictly decreasing sum of
    N^m - 1 exponentials and the same safeguarded Newton applies.
    """
    m = len(excluded_word)
    if m < 1:
        raise InvalidSystem("gamma requires a nonempty excluded word")
    log_r = np.log(system.ratios)
    log_r_l = math.log(excluded_word.ratio_product)

    log_w = q * np.log(system.probs)
    log_pq_l = q * math.log(excluded_word.prob_product)

    def xi(t):
        inner_log = logsumexp(log_w + t * log_r)
        return _exp_sat(m * inner_log) - _exp_sat(log_pq_l + t * log_r_l)

    def dxi(t):
        inner_log = logsumexp(log_w + t * log_r)
        dinner = float(np.sum(np.exp(
            np.minimum(log_w + t * log_r, 700.0)) * log_r))
        return m * _exp_sat((m - 1) * inner_log) * dinner \
            - _exp_sat(log_pq_l + t * log_r_l) * log_r_l

    lo, hi, step = 0.0, 0.0, 1.0
    for _ in range(200):
        if xi(lo) >= 1.0:
            break
        lo -= step
        step *= 2.0
    step = 1.0
    for _ in range(200):
        if xi(hi) <= 1.0:
            break
        hi += step
        step *= 2.0

    t = 0.5 * (lo + hi)
    for _ in range(MAX_ITER):
        f = xi(t) - 1.0
        if abs(f) <= RESIDUAL_TARGET:
            return t
        d = dxi(t)
        t_new = t - f / d if d != 0.0 else math.nan
        if not (lo <= t_new <= hi) or not math.isfinite(t_new):
            t_new = 0.5 * (lo + hi)
        if f > 0.0:
            lo = max(lo, t)
        else:
            hi = min(hi, t)
        t = t_new
    if abs(xi(t) - 1.0) <= 1e-11:
        return t
    raise NoConvergence("gamma solve stalled")


def profile(system: SelfSimilarSystem, q: float,
            excluded_word: Word | None = None) -> ExponentProfile:
    b = beta(system, q)
    a = alpha(system, q)
    g = gamma(system, q, excluded_word) if excluded_word is not None else None
    return ExponentProfile(q=q, beta=b, alpha=a, gamma=g,
                           beta_residual=beta_residual(system, q, b),
                           alpha_residual=alpha_residual(system, q, a))


def _rational_approx(x: float, q_max: int, tol: float):
    """Best continued-fraction convergent p/q of x with q <= q_max, or None.

    Acceptance is denominator-scaled: |x - p/q| <= tol/q * |x|.  A genuine
    rational stored in doubles is approximated at machine noise (far below
    tol/q for any realistic q), while a generic irrational's best convergent
    errs like 1/q^2 > tol/q whenever q < 1/tol, so with q_max < 1/tol the
    scaled gate cannot be fooled by approximation accidents.  Cases inside
    the flat tol band but outside the scaled gate are borderline: they
    resolve to non-arithmetic and are logged.
    """
    frac = Fraction(x).limit_denominator(q_max)
    err = abs(x - float(frac))
    if frac.denominator <= q_max and err <= tol / frac.denominator * abs(x):
        return frac
    if frac.denominator <= q_max and err <= tol * abs(x):
        logger.info(
            "borderline rationality %s ~ %s (rel err %.3e at denominator "
            "%d): resolved to non-arithmetic", x, frac, err / abs(x),
            frac.denominator)
    return None


def arithmetic_structure(system: SelfSimilarSystem,
                         q_max: int = RATIONALITY_QMAX,
                         tol: float = RATIONALITY_TOL) -> ArithmeticStructure:
    """Detect whether {log 1/r_i} lies in a lattice u * Z.

    Tests rationality of each log-ratio quotient via continued-fraction
    convergents with denominator <= q_max at relative tolerance tol.
    Borderline cases resolve to non-arithmetic and are logged.
    """
    ell = -np.log(system.ratios)
    fracs = []
    for i in range(len(ell)):
        f = _rational_approx(float(ell[i] / ell[0]), q_max, tol)
        if f is None:
            logger.info(
                "non-arithmetic: log-ratio quotient %d has no rational "
                "approximant with denominator <= %d", i, q_max)
            return ArithmeticStructure(is_arithmetic=False, u=None, k=None)
        fracs.append(f)
    denom_lcm = 1
    for f in fracs:
        denom_lcm = denom_lcm * f.denominator // math.gcd(denom_lcm,
                                                          f.denominator)
    ks = [f.numerator * (denom_lcm // f.denominator) for f in fracs]
    g = 0
    for k in ks:
        g = math.gcd(g, k)
    ks = [k // g for k in ks]
    # least-squares lattice generator given the integer multipliers
    ks_arr = np.array(ks, dtype=float)
    u = float(np.dot(ks_arr, ell) / np.dot(ks_arr, ks_arr))
    err = np.abs(ell - ks_arr * u)
    if np.any(err > tol * np.abs(ell)):
        logger.info("non-arithmetic: lattice fit residual %.3e exceeds "
                    "tolerance", float(err.max()))
        return ArithmeticStructure(is_arithmetic=False, u=None, k=None)
    return ArithmeticStructure(is_arithmetic=True, u=u, k=tuple(ks))


def legendre(sample_points, x: float, fn=None) -> float:
    """Discrete Legendre transform inf_y (x*y + phi(y)) from samples.

    ``sample_points`` is a sequence of (y, phi(y)) pairs with sorted y.  The
    discrete argmin is refined by golden-section search when ``fn`` (a
    callable for phi) is supplied, else by parabolic interpolation through
    the argmin triple.  Returns -inf when the discrete values decrease
    strictly monotonically into a grid edge (transform unbounded below or
    minimum outside the sampled range).
    """
    pts = [(float(y), float(v)) for y, v in sample_points]
    if len(pts) < 3:
        raise InsufficientSamples(
            f"legendre needs >= 3 sample points, got {len(pts)}")
    ys = np.array([p[0] for p in pts])
    vals = x * ys + np.array([p[1] for p in pts])
    i = int(np.argmin(vals))
    if i == 0:
        return -math.inf if vals[0] < vals[1] else float(vals[0])
    if i == len(vals) - 1:
        return -math.inf if vals[-1] < vals[-2] else float(vals[-1])

    y_lo, y_mid, y_hi = ys[i - 1], ys[i], ys[i + 1]
    v_lo, v_mid, v_hi = vals[i - 1], vals[i], vals[i + 1]
    if fn is not None:
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = float(y_lo), float(y_hi)
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc = x * c + fn(c)
        fd = x * d + fn(d)
        for _ in range(200):
            if b - a < 1e-12 * max(1.0, abs(a) + abs(b)):
                break
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = x * c + fn(c)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = x * d + fn(d)
        y_best = 0.5 * (a + b)
        return float(min(v_mid, x * y_best + fn(y_best)))

    # parabola through the argmin triple; fall back to the grid value when
    # the points are (numerically) collinear
    denom = (y_lo - y_mid) * (y_lo - y_hi) * (y_mid - y_hi)
    if denom == 0.0:
        return float(v_mid)
    a2 = (y_hi * (v_mid - v_lo) + y_mid * (v_lo - v_hi)
          + y_lo * (v_hi - v_mid)) / denom
    if a2 <= 0.0:
        return float(v_mid)
    b1 = (y_hi ** 2 * (v_lo - v_mid) + y_mid ** 2 * (v_hi - v_lo)
          + y_lo ** 2 * (v_mid - v_hi)) / denom
    y_star = -b1 / (2.0 * a2)
    y_star = min(max(y_star, y_lo), y_hi)
    c0 = v_mid - a2 * y_mid ** 2 - b1 * y_mid
    return float(min(v_mid, a2 * y_star ** 2 + b1 * y_star + c0))


def spectrum(system: SelfSimilarSystem, alphas, q_lo: float = -10.0,
             q_hi: float = 10.0, n_q: int = 401) -> np.ndarray:
    """Multifractal spectrum f(a) as the Legendre transform of beta(q),
    evaluated at each a in ``alphas`` from a beta sample grid."""
    qs = np.linspace(q_lo, q_hi, n_q)
    samples = [(q, beta(system, q)) for q in qs]
    return np.array([legendre(samples, a) for a in np.atleast_1d(alphas)])
