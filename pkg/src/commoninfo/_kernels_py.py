"""Numpy reference kernels for the optimizer inner loops.

Mirrored by the compiled extension in _kernels_cy; keep the two in lockstep.
All entropic quantities are in bits. Conventions:
  p_x     flat source law over cells, row-major
  digits  int64 (N, cells): digits[i, c] = symbol of variable i in cell c
  sizes   int64 (N,) alphabet sizes
  r       (cells, |W|) rows r(.|x)
  chans   padded (N, |W|, max_s); row w of channel i lives in [:sizes[i]]
"""
import math

import numpy as np
from scipy.special import xlogy

LN2 = math.log(2.0)
PFLOOR = 1e-30


def route_a_step(p_x, digits, sizes, r, eta, beta, r_new):
    """One damped fixed-point step of the penalized test-channel iteration.

    Writes the updated channel into r_new and returns (mi, t_ci) of the
    *input* r: mi = I(X;W), t_ci = sum_i H(X_i|W) - H(X|W), both in bits.
    The update is r'(w|x) proportional to p(w) prod_i q_i(x_i|w)^eta with
    geometric damping beta in log space.
    """
    n_vars = sizes.shape[0]
    w_size = r.shape[1]
    shape = tuple(int(s) for s in sizes)

    joint = p_x[:, None] * r                       # (cells, w)
    p_w = joint.sum(axis=0)
    jt = joint.reshape(shape + (w_size,))

    # pair marginals q_i(x_i, w) and their entropy contributions
    h_pairs = 0.0
    log_cond = []                                  # log q_i(x_i|w), (s_i, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_pw = np.log(p_w)
        for i in range(n_vars):
            axes = tuple(a for a in range(n_vars) if a != i)
            q_i = jt.sum(axis=axes)                # (s_i, w)
            h_pairs += -xlogy(q_i, q_i).sum() / LN2
            log_cond.append(np.log(q_i) - log_pw[None, :])

    h_w = -xlogy(p_w, p_w).sum() / LN2
    h_joint = -xlogy(joint, joint).sum() / LN2
    # I = H(W) - H(W|X); H(W|X) = H(XW) - H(X); T from the same pieces
    h_x = -xlogy(p_x, p_x).sum() / LN2
    mi = h_x + h_w - h_joint
    t_ci = (h_pairs - n_vars * h_w) - (h_joint - h_w)

    with np.errstate(divide="ignore", invalid="ignore"):
        target = log_pw[None, :].repeat(p_x.shape[0], axis=0)
        for i in range(n_vars):
            target += eta * log_cond[i][digits[i], :]
        mixed = beta * target
        if beta != 1.0:
            mixed += (1.0 - beta) * np.log(r)
    np.nan_to_num(mixed, copy=False, nan=-np.inf)
    top = mixed.max(axis=1)
    dead = ~np.isfinite(top)
    if np.any(dead):
        mixed[dead] = 0.0
        top[dead] = 0.0
    out = np.exp(mixed - top[:, None])
    out /= out.sum(axis=1)[:, None]
    r_new[...] = out
    return float(mi), float(t_ci)


def aux_tables(p_w, chans, sizes, p_x):
    """Induced law and penalty tables for the product-channel model.

    Returns (q, kl, hw, a_w, b):
      q    (cells,) induced marginal sum_w p(w) prod_i q_i(x_i|w)
      kl   D(P||Q) in bits, +inf if P escapes Q's support
      hw   (w,) per-state channel entropy sums sum_i H(q_i(.|w)) in bits
      a_w  (w,) sum_x P(x) K_w(x) / Q(x)
      b    (N, w, max_s) with b[i,w,a] = sum over cells with x_i = a of
           P(x) K_w(x) / Q(x); a_w and b are zeroed when kl is +inf
    """
    n_vars = sizes.shape[0]
    w_size = p_w.shape[0]
    shape = tuple(int(s) for s in sizes)
    max_s = chans.shape[2]

    table = np.ones((w_size, 1))
    hw = np.zeros(w_size)
    for i in range(n_vars):
        c = chans[i, :, : shape[i]]
        table = (table[:, :, None] * c[:, None, :]).reshape(w_size, -1)
        hw += -xlogy(c, c).sum(axis=1) / LN2

    q = p_w @ table
    support = p_x > 0.0
    if np.any(q[support] <= 0.0):
        kl = math.inf
        zeros = np.zeros((n_vars, w_size, max_s))
        return q, kl, hw, np.zeros(w_size), zeros

    kl = float((p_x[support] * (np.log(p_x[support]) - np.log(q[support]))).sum() / LN2)
    ratio = np.where(support, p_x / np.where(q > 0.0, q, 1.0), 0.0)
    weighted = table * ratio[None, :]              # (w, cells)
    a_w = weighted.sum(axis=1)
    b = np.zeros((n_vars, w_size, max_s))
    wt = weighted.reshape((w_size,) + shape)
    for i in range(n_vars):
        axes = tuple(1 + a for a in range(n_vars) if a != i)
        b[i, :, : shape[i]] = wt.sum(axis=axes)
    return q, kl, hw, a_w, b


def _eg_rows(log_x, grad, step):
    z = log_x + step * grad
    z = z - z.max(axis=-1, keepdims=True)
    x = np.maximum(np.exp(z), PFLOOR)
    return x / x.sum(axis=-1, keepdims=True)


def route_b_stage(p_x, sizes, pw, chans, mu, delta1,
                  eg_step, grow, shrink, max_backtracks,
                  max_iters, tol, patience, feas_cut,
                  best_pw, best_chans, best_hcond):
    """One penalty stage of exponentiated-gradient ascent, in place.

    Maximizes sum_w p(w) hw(w) - mu max(0, D - delta1) with backtracking
    line search. pw and chans hold the stage's final iterate on return;
    best_pw/best_chans/best_hcond ratchet the best feasible iterate seen.
    Returns (hcond, kl, iters, obj, best_hcond).
    """
    n_vars = sizes.shape[0]
    q, kl, hw, a_w, b = aux_tables(pw, chans, sizes, p_x)
    hcond = float(pw @ hw)
    if kl <= feas_cut and hcond > best_hcond:
        best_hcond = hcond
        best_pw[...] = pw
        best_chans[...] = chans
    obj = hcond - mu * max(0.0, kl - delta1) if math.isfinite(kl) else -math.inf
    step = eg_step
    stall = 0
    iters = 0
    for iters in range(1, max_iters + 1):
        if not math.isfinite(obj):
            break
        active = kl > delta1
        g_pw = hw.copy()
        if active:
            g_pw += mu * a_w / LN2
        log_pw = np.log(pw)
        g_ch = np.zeros_like(chans)
        for i in range(n_vars):
            s = sizes[i]
            block = chans[i, :, :s]
            g = pw[:, None] * (-np.log2(block) - 1.0 / LN2)
            if active:
                g = g + mu * pw[:, None] * b[i, :, :s] / (block * LN2)
            g_ch[i, :, :s] = g

        accepted = False
        improvement = 0.0
        for _ in range(max_backtracks):
            pw_c = _eg_rows(log_pw, g_pw, step)
            ch_c = np.zeros_like(chans)
            for i in range(n_vars):
                s = sizes[i]
                ch_c[i, :, :s] = _eg_rows(np.log(chans[i, :, :s]),
                                          g_ch[i, :, :s], step)
            q_c, kl_c, hw_c, a_c, b_c = aux_tables(pw_c, ch_c, sizes, p_x)
            hcond_c = float(pw_c @ hw_c)
            obj_c = (hcond_c - mu * max(0.0, kl_c - delta1)
                     if math.isfinite(kl_c) else -math.inf)
            if obj_c >= obj - 1e-15:
                pw[...] = pw_c
                chans[...] = ch_c
                kl, hw, a_w, b, hcond = kl_c, hw_c, a_c, b_c, hcond_c
                if kl <= feas_cut and hcond > best_hcond:
                    best_hcond = hcond
                    best_pw[...] = pw
                    best_chans[...] = chans
                improvement = obj_c - obj
                obj = obj_c
                step = min(step * grow, 64.0)
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
