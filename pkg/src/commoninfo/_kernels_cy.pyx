# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False, language_level=3
"""Compiled kernels for the optimizer inner loops.

Lockstep mirror of _kernels_py; see that module for the conventions. The
equivalence tests compare the two element by element.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, log, log2

cnp.import_array()

cdef double LN2 = 0.6931471805599453
cdef double PFLOOR = 1e-30


cdef inline double xlogx(double v) nogil:
    return v * log(v) if v > 0.0 else 0.0


def route_a_step(const double[::1] p_x, const long long[:, ::1] digits,
                 const long long[::1] sizes, const double[:, ::1] r,
                 double eta, double beta, double[:, ::1] r_new):
    cdef Py_ssize_t cells = r.shape[0]
    cdef Py_ssize_t w_size = r.shape[1]
    cdef Py_ssize_t n_vars = sizes.shape[0]
    cdef Py_ssize_t max_s = 0
    cdef Py_ssize_t c, w, i, a
    for i in range(n_vars):
        if sizes[i] > max_s:
            max_s = sizes[i]

    pair_np = np.zeros((n_vars, max_s, w_size))
    cdef double[:, :, ::1] pair = pair_np
    pw_np = np.zeros(w_size)
    cdef double[::1] pw = pw_np

    cdef double jcw
    cdef double h_joint = 0.0, h_x = 0.0
    for c in range(cells):
        h_x -= xlogx(p_x[c])
        for w in range(w_size):
            jcw = p_x[c] * r[c, w]
            pw[w] += jcw
            h_joint -= xlogx(jcw)
            for i in range(n_vars):
                pair[i, digits[i, c], w] += jcw

    cdef double h_w = 0.0, h_pairs = 0.0
    for w in range(w_size):
        h_w -= xlogx(pw[w])
    for i in range(n_vars):
        for a in range(sizes[i]):
            for w in range(w_size):
                h_pairs -= xlogx(pair[i, a, w])
    h_joint /= LN2
    h_x /= LN2
    h_w /= LN2
    h_pairs /= LN2
    cdef double mi = h_x + h_w - h_joint
    cdef double t_ci = (h_pairs - n_vars * h_w) - (h_joint - h_w)

    # log p(w) and log q_i(a|w) tables for the multiplicative update
    logpw_np = np.empty(w_size)
    cdef double[::1] logpw = logpw_np
    for w in range(w_size):
        logpw[w] = log(pw[w]) if pw[w] > 0.0 else -INFINITY
    logq_np = np.empty((n_vars, max_s, w_size))
    cdef double[:, :, ::1] logq = logq_np
    for i in range(n_vars):
        for a in range(sizes[i]):
            for w in range(w_size):
                if pair[i, a, w] > 0.0:
                    logq[i, a, w] = log(pair[i, a, w]) - logpw[w]
                else:
                    logq[i, a, w] = -INFINITY

    row_np = np.empty(w_size)
    cdef double[::1] row = row_np
    cdef double m, top, total, lr
    for c in range(cells):
        top = -INFINITY
        for w in range(w_size):
            m = logpw[w]
            for i in range(n_vars):
                m += eta * logq[i, digits[i, c], w]
            if beta != 1.0:
                lr = log(r[c, w]) if r[c, w] > 0.0 else -INFINITY
                m = beta * m + (1.0 - beta) * lr
            row[w] = m
            if m > top:
                top = m
        if top == -INFINITY:
            for w in range(w_size):
                r_new[c, w] = 1.0 / w_size
            continue
        total = 0.0
        for w in range(w_size):
            row[w] = exp(row[w] - top)
            total += row[w]
        for w in range(w_size):
            r_new[c, w] = row[w] / total

    return mi, t_ci


cdef void _fill_digits(const long long[::1] sizes, long long[:, ::1] digits):
    cdef Py_ssize_t n_vars = sizes.shape[0]
    cdef Py_ssize_t cells = digits.shape[1]
    cdef Py_ssize_t stride = cells
    cdef Py_ssize_t i, c
    for i in range(n_vars):
        stride //= sizes[i]
        for c in range(cells):
            digits[i, c] = (c // stride) % sizes[i]


cdef double _aux_fill(const double[::1] p_x, const long long[:, ::1] digits,
                      const long long[::1] sizes,
                      const double[::1] p_w, const double[:, :, ::1] chans,
                      double[:, ::1] table, double[::1] q, double[::1] hw,
                      double[::1] a_w, double[:, :, ::1] b):
    """Shared body of aux_tables operating on caller-owned buffers."""
    cdef Py_ssize_t n_vars = sizes.shape[0]
    cdef Py_ssize_t w_size = p_w.shape[0]
    cdef Py_ssize_t max_s = chans.shape[2]
    cdef Py_ssize_t cells = p_x.shape[0]
    cdef Py_ssize_t c, w, i, a
    cdef double prod, h, kl, ratio, wr

    for w in range(w_size):
        a_w[w] = 0.0
        hw[w] = 0.0
    for i in range(n_vars):
        for w in range(w_size):
            for a in range(max_s):
                b[i, w, a] = 0.0
    for c in range(cells):
        q[c] = 0.0

    for w in range(w_size):
        for c in range(cells):
            prod = 1.0
            for i in range(n_vars):
                prod *= chans[i, w, digits[i, c]]
            table[w, c] = prod
            q[c] += p_w[w] * prod
    for i in range(n_vars):
        for w in range(w_size):
            h = 0.0
            for a in range(sizes[i]):
                h -= xlogx(chans[i, w, a])
            hw[w] += h / LN2

    kl = 0.0
    for c in range(cells):
        if p_x[c] > 0.0:
            if q[c] <= 0.0:
                return INFINITY
            kl += p_x[c] * (log(p_x[c]) - log(q[c]))
    kl /= LN2

    for c in range(cells):
        if p_x[c] <= 0.0 or q[c] <= 0.0:
            continue
        ratio = p_x[c] / q[c]
        for w in range(w_size):
            wr = table[w, c] * ratio
            a_w[w] += wr
            for i in range(n_vars):
                b[i, w, digits[i, c]] += wr
    return kl


def aux_tables(const double[::1] p_w, const double[:, :, ::1] chans,
               const long long[::1] sizes, const double[::1] p_x):
    cdef Py_ssize_t n_vars = sizes.shape[0]
    cdef Py_ssize_t w_size = p_w.shape[0]
    cdef Py_ssize_t max_s = chans.shape[2]
    cdef Py_ssize_t cells = p_x.shape[0]

    digits_np = np.empty((n_vars, cells), dtype=np.int64)
    cdef long long[:, ::1] digits = digits_np
    _fill_digits(sizes, digits)

    q_np = np.zeros(cells)
    hw_np = np.zeros(w_size)
    a_np = np.zeros(w_size)
    b_np = np.zeros((n_vars, w_size, max_s))
    table_np = np.empty((w_size, cells))
    cdef double kl = _aux_fill(p_x, digits, sizes, p_w, chans,
                               table_np, q_np, hw_np, a_np, b_np)
    return q_np, kl, hw_np, a_np, b_np


cdef void _eg_vec(const double[::1] logx, const double[::1] g, double step,
                  double[::1] out):
    cdef Py_ssize_t n = logx.shape[0]
    cdef Py_ssize_t j
    cdef double m = -INFINITY, z, total = 0.0
    for j in range(n):
        z = logx[j] + step * g[j]
        out[j] = z
        if z > m:
            m = z
    for j in range(n):
        z = exp(out[j] - m)
        if z < PFLOOR:
            z = PFLOOR
        out[j] = z
        total += z
    for j in range(n):
        out[j] /= total


cdef void _eg_chan_rows(const double[:, :, ::1] logch,
                        const double[:, :, ::1] g,
                        const long long[::1] sizes, double step,
                        double[:, :, ::1] out):
    cdef Py_ssize_t n_vars = logch.shape[0]
    cdef Py_ssize_t w_size = logch.shape[1]
    cdef Py_ssize_t i, w, a
    cdef double m, z, total
    for i in range(n_vars):
        for w in range(w_size):
            m = -INFINITY
            for a in range(sizes[i]):
                z = logch[i, w, a] + step * g[i, w, a]
                out[i, w, a] = z
                if z > m:
                    m = z
            total = 0.0
            for a in range(sizes[i]):
                z = exp(out[i, w, a] - m)
                if z < PFLOOR:
                    z = PFLOOR
                out[i, w, a] = z
                total += z
            for a in range(sizes[i]):
                out[i, w, a] /= total


def route_b_stage(const double[::1] p_x, const long long[::1] sizes,
                  double[::1] pw, double[:, :, ::1] chans,
                  double mu, double delta1,
                  double eg_step, double grow, double shrink,
                  int max_backtracks, long long max_iters, double tol,
                  long long patience, double feas_cut,
                  double[::1] best_pw, double[:, :, ::1] best_chans,
                  double best_hcond):
    """One penalty stage of exponentiated-gradient ascent, in place.

    Mirror of _kernels_py.route_b_stage; see there for the contract.
    """
    cdef Py_ssize_t n_vars = sizes.shape[0]
    cdef Py_ssize_t w_size = pw.shape[0]
    cdef Py_ssize_t max_s = chans.shape[2]
    cdef Py_ssize_t cells = p_x.shape[0]
    cdef Py_ssize_t c, w, i, a
    cdef int bt
    cdef long long it, iters = 0, stall = 0
    cdef bint active, accepted
    cdef double kl, hcond, obj, step, improvement
    cdef double kl_c, hcond_c, obj_c, gval, ch

    digits_np = np.empty((n_vars, cells), dtype=np.int64)
    cdef long long[:, ::1] digits = digits_np
    _fill_digits(sizes, digits)

    table_np = np.empty((w_size, cells))
    cdef double[:, ::1] table = table_np
    q_np = np.empty(cells)
    cdef double[::1] q = q_np
    hw_np = np.empty(w_size)
    cdef double[::1] hw = hw_np
    aw_np = np.empty(w_size)
    cdef double[::1] a_w = aw_np
    b_np = np.empty((n_vars, w_size, max_s))
    cdef double[:, :, ::1] b = b_np

    gpw_np = np.empty(w_size)
    cdef double[::1] g_pw = gpw_np
    logpw_np = np.empty(w_size)
    cdef double[::1] log_pw = logpw_np
    gch_np = np.zeros((n_vars, w_size, max_s))
    cdef double[:, :, ::1] g_ch = gch_np
    logch_np = np.zeros((n_vars, w_size, max_s))
    cdef double[:, :, ::1] log_ch = logch_np

    pwc_np = np.empty(w_size)
    cdef double[::1] pw_c = pwc_np
    chc_np = np.zeros((n_vars, w_size, max_s))
    cdef double[:, :, ::1] ch_c = chc_np
    tablec_np = np.empty((w_size, cells))
    cdef double[:, ::1] table_c = tablec_np
    qc_np = np.empty(cells)
    cdef double[::1] q_c = qc_np
    hwc_np = np.empty(w_size)
    cdef double[::1] hw_c = hwc_np
    awc_np = np.empty(w_size)
    cdef double[::1] a_c = awc_np
    bc_np = np.empty((n_vars, w_size, max_s))
    cdef double[:, :, ::1] b_c = bc_np

    kl = _aux_fill(p_x, digits, sizes, pw, chans, table, q, hw, a_w, b)
    hcond = 0.0
    for w in range(w_size):
        hcond += pw[w] * hw[w]
    if kl <= feas_cut and hcond > best_hcond:
        best_hcond = hcond
        for w in range(w_size):
            best_pw[w] = pw[w]
        for i in range(n_vars):
            for w in range(w_size):
                for a in range(max_s):
                    best_chans[i, w, a] = chans[i, w, a]
    if kl == INFINITY:
        obj = -INFINITY
    else:
        gval = kl - delta1
        obj = hcond - mu * (gval if gval > 0.0 else 0.0)
    step = eg_step

    for it in range(1, max_iters + 1):
        iters = it
        if obj == -INFINITY:
            break
        active = kl > delta1
        for w in range(w_size):
            g_pw[w] = hw[w] + (mu * a_w[w] / LN2 if active else 0.0)
            log_pw[w] = log(pw[w])
        for i in range(n_vars):
            for w in range(w_size):
                for a in range(sizes[i]):
                    ch = chans[i, w, a]
                    gval = pw[w] * (-log2(ch) - 1.0 / LN2)
                    if active:
                        gval += mu * pw[w] * b[i, w, a] / (ch * LN2)
                    g_ch[i, w, a] = gval
                    log_ch[i, w, a] = log(ch)

        accepted = False
        improvement = 0.0
        for bt in range(max_backtracks):
            _eg_vec(log_pw, g_pw, step, pw_c)
            _eg_chan_rows(log_ch, g_ch, sizes, step, ch_c)
            kl_c = _aux_fill(p_x, digits, sizes, pw_c, ch_c,
                             table_c, q_c, hw_c, a_c, b_c)
            hcond_c = 0.0
            for w in range(w_size):
                hcond_c += pw_c[w] * hw_c[w]
            if kl_c == INFINITY:
                obj_c = -INFINITY
            else:
                gval = kl_c - delta1
                obj_c = hcond_c - mu * (gval if gval > 0.0 else 0.0)
            if obj_c >= obj - 1e-15:
                for w in range(w_size):
                    pw[w] = pw_c[w]
                    hw[w] = hw_c[w]
                    a_w[w] = a_c[w]
                for i in range(n_vars):
                    for w in range(w_size):
                        for a in range(max_s):
                            chans[i, w, a] = ch_c[i, w, a]
                            b[i, w, a] = b_c[i, w, a]
                kl = kl_c
                hcond = hcond_c
                if kl <= feas_cut and hcond > best_hcond:
                    best_hcond = hcond
                    for w in range(w_size):
                        best_pw[w] = pw[w]
                    for i in range(n_vars):
                        for w in range(w_size):
                            for a in range(max_s):
                                best_chans[i, w, a] = chans[i, w, a]
                improvement = obj_c - obj
                obj = obj_c
                step = step * grow
                if step > 64.0:
                    step = 64.0
                accepted = True
                break
            step *= shrink
        if not accepted:
            break
        if improvement < tol:
            stall += 1
            if stall >= patience:
                break
        else:
            stall = 0
    return hcond, kl, iters, obj, best_hcond
