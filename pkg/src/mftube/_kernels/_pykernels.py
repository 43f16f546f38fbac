"""Pure-Python kernel backend.

Reference implementations of the hot inner loops (word enumeration, interval
measure recursion, gap enumeration).  The compiled backend in
``_ckernels.pyx`` implements the same contracts; equivalence is enforced by
tests, and either backend may be active at runtime.
"""

from __future__ import annotations

import numpy as np

from mftube.errors import BudgetExceeded

BACKEND = "pure"


def cut_set_arrays(ratios, probs, r, eq_tol, node_budget):
    """Enumerate the scale-r cut set of the code space by lexicographic DFS.

    Returns (letters, offsets, boundary_flags, ratio_products,
    prob_products).  ``letters`` is a flat int32 array; word k occupies
    ``letters[offsets[k]:offsets[k+1]]`` (1-based letters).  A word is
    interior when its ratio product is strictly below r while its parent's is
    strictly above (both beyond ``eq_tol * r``), and boundary when the parent
    ratio ties with r within that tolerance.
    """
    n_maps = len(ratios)
    tol = eq_tol * r
    letters: list[int] = []
    offsets: list[int] = [0]
    flags: list[int] = []
    rprod: list[float] = []
    pprod: list[float] = []
    path: list[int] = []
    nodes = 0

    def record(rp, pp, flag):
        letters.extend(path)
        offsets.append(len(letters))
        flags.append(flag)
        rprod.append(rp)
        pprod.append(pp)

    def visit(rp, pp):
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceeded(
                f"cut-set DFS exceeded node budget {node_budget} at r={r}")
        if abs(rp - r) <= tol:
            # Parent ratio ties with r: all children are boundary words.
            for i in range(n_maps):
                nodes += 1
                path.append(i + 1)
                record(rp * ratios[i], pp * probs[i], 1)
                path.pop()
        elif rp > r:
            for i in range(n_maps):
                path.append(i + 1)
                visit(rp * ratios[i], pp * probs[i])
                path.pop()
        else:
            record(rp, pp, 0)

    visit(1.0, 1.0)
    return (
        np.asarray(letters, dtype=np.int32),
        np.asarray(offsets, dtype=np.int64),
        np.asarray(flags, dtype=np.uint8),
        np.asarray(rprod, dtype=np.float64),
        np.asarray(pprod, dtype=np.float64),
    )


def rescaled_b_sum(ratios, probs_q, expo, r, eq_tol, node_budget):
    """Sum p_i^q (r_i/r)^expo E(r_i - r) over all nonempty words with
    r_i >= r, where E is the half-value step function.

    ``probs_q`` carries the per-letter factors p_i^q already raised to q.
    """
    n_maps = len(ratios)
    tol = eq_tol * r
    lo = r - tol
    total = 0.0
    nodes = 0

    def visit(rp, pqp):
        nonlocal total, nodes
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceeded(
                f"rescaled-sum DFS exceeded node budget {node_budget} at r={r}")
        if abs(rp - r) <= tol:
            total += 0.5 * pqp * (rp / r) ** expo
            return  # children fall strictly below r
        total += pqp * (rp / r) ** expo
        for i in range(n_maps):
            crp = rp * ratios[i]
            if crp >= lo:
                visit(crp, pqp * probs_q[i])

    for i in range(n_maps):
        if ratios[i] >= lo:
            visit(ratios[i], probs_q[i])
    return total


def measure_interval_batch(rho, shift, probs, hull_lo, hull_hi, a, b,
                           depth_cap):
    """Evaluate mu([a_k, b_k]) for a 1-D self-similar measure.

    ``rho``/``shift`` are the signed scale and translation of each map, so
    S_i(x) = rho_i * x + shift_i.  The recursion pulls the query interval
    back through S_i^{-1} and compares against the fixed attractor hull;
    branches still unresolved at ``depth_cap`` contribute their mass to the
    bracket gap.  Returns (values, gaps) where value is the bracket midpoint.
    """
    n_maps = len(rho)
    n_q = len(a)
    values = np.empty(n_q)
    gaps = np.empty(n_q)
    for k in range(n_q):
        total = 0.0
        gap = 0.0
        stack = [(a[k], b[k], 1.0, 0)]
        while stack:
            qa, qb, mass, depth = stack.pop()
            if qb < hull_lo or qa > hull_hi:
                continue
            if qa <= hull_lo and qb >= hull_hi:
                total += mass
                continue
            if depth >= depth_cap:
                gap += mass
                continue
            for i in range(n_maps):
                x = (qa - shift[i]) / rho[i]
                y = (qb - shift[i]) / rho[i]
                if x > y:
                    x, y = y, x
                stack.append((x, y, mass * probs[i], depth + 1))
        values[k] = total + 0.5 * gap
        gaps[k] = gap
    return values, gaps


def gap_excess(gaps, ratios, r, node_budget):
    """Total overshoot sum(g - 2r) over all complementary gaps g > 2r.

    ``gaps`` holds the first-level gap lengths; deeper gaps are the same
    lengths scaled by ratio products, so the DFS walks scale factors and
    prunes once even the largest gap falls below 2r.
    """
    if len(gaps) == 0:
        return 0.0
    n_maps = len(ratios)
    two_r = 2.0 * r
    gmax = max(gaps)
    excess = 0.0
    nodes = 0
    stack = [1.0]
    while stack:
        s = stack.pop()
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceeded(
                f"gap enumeration exceeded node budget {node_budget} at r={r}")
        for g in gaps:
            sg = s * g
            if sg > two_r:
                excess += sg - two_r
        for i in range(n_maps):
            cs = s * ratios[i]
            if cs * gmax > two_r:
                stack.append(cs)
    return excess
