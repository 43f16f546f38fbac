# distutils: language = c++
"""Compiled kernel backend (Cython).

Same contracts as ``_pykernels``; see that module for reference semantics.
"""

import numpy as np

cimport numpy as cnp
from libcpp.vector cimport vector

from mftube.errors import BudgetExceeded

cnp.import_array()

BACKEND = "compiled"


cdef struct CutCtx:
    double r
    double tol
    long nodes
    long budget
    int n_maps
    const double *ratios
    const double *probs


cdef int _cut_visit(CutCtx *ctx, double rp, double pp,
                    vector[int] &path,
                    vector[int] &letters, vector[long] &offsets,
                    vector[unsigned char] &flags,
                    vector[double] &rprod, vector[double] &pprod) except -1:
    cdef int i
    cdef size_t j
    ctx.nodes += 1
    if ctx.nodes > ctx.budget:
        raise BudgetExceeded(
            f"cut-set DFS exceeded node budget {ctx.budget} at r={ctx.r}")
    if rp - ctx.r <= ctx.tol and ctx.r - rp <= ctx.tol:
        for i in range(ctx.n_maps):
            ctx.nodes += 1
            path.push_back(i + 1)
            for j in range(path.size()):
                letters.push_back(path[j])
            offsets.push_back(<long> letters.size())
            flags.push_back(1)
            rprod.push_back(rp * ctx.ratios[i])
            pprod.push_back(pp * ctx.probs[i])
            path.pop_back()
    elif rp > ctx.r:
        for i in range(ctx.n_maps):
            path.push_back(i + 1)
            _cut_visit(ctx, rp * ctx.ratios[i], pp * ctx.probs[i], path,
                       letters, offsets, flags, rprod, pprod)
            path.pop_back()
    else:
        for j in range(path.size()):
            letters.push_back(path[j])
        offsets.push_back(<long> letters.size())
        flags.push_back(0)
        rprod.push_back(rp)
        pprod.push_back(pp)
    return 0


def cut_set_arrays(double[::1] ratios, double[::1] probs, double r,
                   double eq_tol, long node_budget):
    cdef CutCtx ctx
    ctx.r = r
    ctx.tol = eq_tol * r
    ctx.nodes = 0
    ctx.budget = node_budget
    ctx.n_maps = ratios.shape[0]
    ctx.ratios = &ratios[0]
    ctx.probs = &probs[0]

    cdef vector[int] path
    cdef vector[int] letters
    cdef vector[long] offsets
    cdef vector[unsigned char] flags
    cdef vector[double] rprod
    cdef vector[double] pprod
    offsets.push_back(0)

    _cut_visit(&ctx, 1.0, 1.0, path, letters, offsets, flags, rprod, pprod)

    cdef cnp.ndarray letters_a = np.empty(letters.size(), dtype=np.int32)
    cdef cnp.ndarray offsets_a = np.empty(offsets.size(), dtype=np.int64)
    cdef cnp.ndarray flags_a = np.empty(flags.size(), dtype=np.uint8)
    cdef cnp.ndarray rprod_a = np.empty(rprod.size(), dtype=np.float64)
    cdef cnp.ndarray pprod_a = np.empty(pprod.size(), dtype=np.float64)
    cdef size_t j
    cdef int[::1] lv = letters_a
    cdef long[::1] ov = offsets_a
    cdef unsigned char[::1] fv = flags_a
    cdef double[::1] rv = rprod_a
    cdef double[::1] pv = pprod_a
    for j in range(letters.size()):
        lv[j] = letters[j]
    for j in range(offsets.size()):
        ov[j] = offsets[j]
    for j in range(flags.size()):
        fv[j] = flags[j]
        rv[j] = rprod[j]
        pv[j] = pprod[j]
    return letters_a, offsets_a, flags_a, rprod_a, pprod_a


cdef struct SumCtx:
    double r
    double tol
    double lo
    double expo
    double total
    long nodes
    long budget
    int n_maps
    const double *ratios
    const double *probs_q


cdef int _sum_visit(SumCtx *ctx, double rp, double pqp) except -1:
    cdef int i
    cdef double crp
    ctx.nodes += 1
    if ctx.nodes > ctx.budget:
        raise BudgetExceeded(
            f"rescaled-sum DFS exceeded node budget {ctx.budget} at r={ctx.r}")
    if rp - ctx.r <= ctx.tol and ctx.r - rp <= ctx.tol:
        ctx.total += 0.5 * pqp * (rp / ctx.r) ** ctx.expo
        return 0
    ctx.total += pqp * (rp / ctx.r) ** ctx.expo
    for i in range(ctx.n_maps):
        crp = rp * ctx.ratios[i]
        if crp >= ctx.lo:
            _sum_visit(ctx, crp, pqp * ctx.probs_q[i])
    return 0


def rescaled_b_sum(double[::1] ratios, double[::1] probs_q, double expo,
                   double r, double eq_tol, long node_budget):
    cdef SumCtx ctx
    ctx.r = r
    ctx.tol = eq_tol * r
    ctx.lo = r - ctx.tol
    ctx.expo = expo
    ctx.total = 0.0
    ctx.nodes = 0
    ctx.budget = node_budget
    ctx.n_maps = ratios.shape[0]
    ctx.ratios = &ratios[0]
    ctx.probs_q = &probs_q[0]
    cdef int i
    for i in range(ctx.n_maps):
        if ratios[i] >= ctx.lo:
            _sum_visit(&ctx, ratios[i], probs_q[i])
    return ctx.total


def measure_interval_batch(double[::1] rho, double[::1] shift,
                           double[::1] probs, double hull_lo, double hull_hi,
                           double[::1] a, double[::1] b, int depth_cap):
    cdef int n_maps = rho.shape[0]
    cdef Py_ssize_t n_q = a.shape[0]
    cdef cnp.ndarray values_a = np.empty(n_q, dtype=np.float64)
    cdef cnp.ndarray gaps_a = np.empty(n_q, dtype=np.float64)
    cdef double[::1] values = values_a
    cdef double[::1] gaps = gaps_a

    cdef int cap = n_maps * (depth_cap + 2) + 8
    cdef cnp.ndarray buf = np.empty((4, cap), dtype=np.float64)
    cdef double[:, ::1] st = buf

    cdef Py_ssize_t k
    cdef int sp, depth, i
    cdef double qa, qb, mass, total, gap, x, y, tmp
    with nogil:
        for k in range(n_q):
            total = 0.0
            gap = 0.0
            st[0, 0] = a[k]
            st[1, 0] = b[k]
            st[2, 0] = 1.0
            st[3, 0] = 0.0
            sp = 1
            while sp > 0:
                sp -= 1
                qa = st[0, sp]
                qb = st[1, sp]
                mass = st[2, sp]
                depth = <int> st[3, sp]
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
                        tmp = x
                        x = y
                        y = tmp
                    st[0, sp] = x
                    st[1, sp] = y
                    st[2, sp] = mass * probs[i]
                    st[3, sp] = depth + 1
                    sp += 1
            values[k] = total + 0.5 * gap
            gaps[k] = gap
    return values_a, gaps_a


def gap_excess(double[::1] gaps, double[::1] ratios, double r,
               long node_budget):
    cdef Py_ssize_t n_gaps = gaps.shape[0]
    if n_gaps == 0:
        return 0.0
    cdef int n_maps = ratios.shape[0]
    cdef double two_r = 2.0 * r
    cdef double gmax = 0.0
    cdef Py_ssize_t g
    for g in range(n_gaps):
        if gaps[g] > gmax:
            gmax = gaps[g]
    cdef double excess = 0.0
    cdef long nodes = 0
    cdef vector[double] stack
    stack.push_back(1.0)
    cdef double s, sg, cs
    cdef int i
    while stack.size() > 0:
        s = stack.back()
        stack.pop_back()
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceeded(
                f"gap enumeration exceeded node budget {node_budget} at r={r}")
        for g in range(n_gaps):
            sg = s * gaps[g]
            if sg > two_r:
                excess += sg - two_r
        for i in range(n_maps):
            cs = s * ratios[i]
            if cs * gmax > two_r:
                stack.push_back(cs)
    return excess
