"""Operational simulators for the two coding-theoretic readings of the
common-information rate.

generator_sim drives N memoryless channels from a common codebook and
measures how fast the synthesized block law approaches the target in
normalized divergence. gw_codec_sim runs the random-codebook, binning and
joint-typicality codec for the shared-branch network and tallies its three
error events. Both are exact at desk scale where budgets allow and honest
Monte Carlo elsewhere; identical seeds give identical reports.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .dist import JointPMF, kl_divergence_raw
from .errors import BudgetExceeded, IncompatibleAux, InvalidConfig
from .graywyner import MARGINAL_TOL, RateTuple
from .models import AuxModel

EXACT_CELL_CAP = 2 ** 20        # enumerated x^n histories in exact mode
CODEBOOK_CAP = 2 ** 16          # stored common codewords
SEQ_CAP = 2 ** 20               # per-variable sequence space for binning
HASH_P = (1 << 61) - 1


@dataclass(frozen=True)
class Codebook:
    """M length-n rows over the W alphabet, drawn i.i.d. from w_prior."""

    entries: np.ndarray
    gen_seed: int

    def __post_init__(self):
        e = np.ascontiguousarray(self.entries, dtype=np.int64)
        if e.ndim != 2 or e.shape[0] < 1:
            raise InvalidConfig("codebook needs at least one row")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class GenSimConfig:
    model: AuxModel
    n: int
    rate: float                       # M = ceil(2^(n*rate)) codewords
    codebook_trials: int = 16
    estimator: str = "exact"          # "exact" | "monte_carlo"
    samples: int = 2000               # per-trial draws in monte_carlo mode
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise InvalidConfig(f"block length must be >= 1, got {self.n}")
        if self.rate < 0.0:
            raise InvalidConfig("rate must be >= 0")
        if self.codebook_trials < 1:
            raise InvalidConfig("codebook_trials must be >= 1")
        if self.estimator not in ("exact", "monte_carlo"):
            raise InvalidConfig(f"unknown estimator {self.estimator!r}")
        if self.estimator == "monte_carlo" and self.samples < 2:
            raise InvalidConfig("monte_carlo needs at least 2 samples")

    @property
    def m(self) -> int:
        return int(np.ceil(2.0 ** (self.n * self.rate)))


@dataclass(frozen=True)
class CodecSimConfig:
    pmf: JointPMF
    witness: AuxModel
    n: int
    rates: RateTuple
    typicality_eps: float = 0.1
    trials: int = 1000
    seed: int = 0
    # optimizer-exported witnesses match the source only to their
    # convergence scale; widen to the tolerance they were accepted under
    marginal_tol: float = MARGINAL_TOL

    def __post_init__(self):
        if self.n < 1:
            raise InvalidConfig(f"block length must be >= 1, got {self.n}")
        if self.typicality_eps <= 0.0:
            raise InvalidConfig("typicality_eps must be > 0")
        if self.trials < 1:
            raise InvalidConfig("trials must be >= 1")
        if len(self.rates.r) != self.pmf.nvars:
            raise InvalidConfig(
                f"rate tuple carries {len(self.rates.r)} private rates for "
                f"{self.pmf.nvars} variables")

    @property
    def m0(self) -> int:
        return int(np.ceil(2.0 ** (self.n * self.rates.r0)))


@dataclass(frozen=True)
class SimReport:
    """Outcome of one simulator invocation.

    config is a plain-value echo sufficient to reproduce the run; per_trial
    holds one entry per codebook (generator) or source block (codec).
    wall_time is informational and excluded from serialized records.
    """

    kind: str
    config: dict
    per_trial: tuple
    summary: dict
    wall_time: float = field(compare=False)


def _draw_codebook(w_prior, m, n, seed, trial) -> Codebook:
    rng = np.random.default_rng(np.random.SeedSequence((seed, trial)))
    entries = rng.choice(w_prior.shape[0], size=(m, n), p=w_prior)
    return Codebook(entries, trial)


def _kron_power(row: np.ndarray, n: int) -> np.ndarray:
    """Product law of n i.i.d. letters, last letter fastest."""
    out = row
    for _ in range(n - 1):
        out = np.kron(out, row)
    return out


def _exact_divergence(table, book, p_block, n) -> float:
    """(1/n) D(P^n || Q^n) in bits with Q^n the codebook mixture."""
    q_block = np.zeros_like(p_block)
    for m in range(book.m):
        q = table[book.entries[m, 0]]
        for t in range(1, n):
            q = np.kron(q, table[book.entries[m, t]])
        q_block += q
    q_block /= book.m
    return kl_divergence_raw(p_block, q_block) / n


def _mc_divergence(table, p_row, book, n, samples, rng) -> Tuple[float, float]:
    """Sampled (1/n) D(P^n || Q^n) plus its standard error."""
    draws = rng.choice(p_row.shape[0], size=(samples, n), p=p_row)
    log_p = np.log2(p_row[draws]).sum(axis=1)
    # Q^n(x) = mean over codewords of the per-letter channel products
    q_vals = np.zeros(samples)
    for m in range(book.m):
        q_vals += np.prod(table[book.entries[m], draws], axis=1)
    q_vals /= book.m
    with np.errstate(divide="ignore"):
        vals = (log_p - np.log2(q_vals)) / n
    d = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / np.sqrt(samples))
    return d, se


def generator_sim(cfg: GenSimConfig) -> SimReport:
    """Synthesize blocks through the model's channels and measure D_n.

    Per codebook trial: draw M common codewords i.i.d. from w_prior, form
    the mixture block law Q^n, and evaluate the normalized divergence of
    the model's own product block law P^n from it, exactly (budget
    permitting) or by sampling. A target cell reachable under P but missed
    by every codeword makes the trial +inf rather than an exception.
    """
    t0 = time.perf_counter()
    model = cfg.model
    cells = int(np.prod(model.sizes))
    m = cfg.m
    if m > CODEBOOK_CAP:
        raise BudgetExceeded(
            f"M = 2^({cfg.n}*{cfg.rate:g}) = {m} codewords exceed the "
            f"{CODEBOOK_CAP} cap")
    if cfg.estimator == "exact" and cells ** cfg.n > EXACT_CELL_CAP:
        raise BudgetExceeded(
            f"{cells}^{cfg.n} block histories exceed the {EXACT_CELL_CAP} "
            f"exact-evaluation cap; use monte_carlo")

    table = model.cell_table()                    # (w, cells)
    p_row = model.w_prior @ table                 # per-letter law
    p_block = _kron_power(p_row, cfg.n) if cfg.estimator == "exact" else None
    per_trial = []
    for k in range(cfg.codebook_trials):
        book = _draw_codebook(model.w_prior, m, cfg.n, cfg.seed, k)
        if cfg.estimator == "exact":
            d = _exact_divergence(table, book, p_block, cfg.n)
            per_trial.append((k, d, 0.0))
        else:
            rng = np.random.default_rng(
                np.random.SeedSequence((cfg.seed, k, 1)))
            d, se = _mc_divergence(table, p_row, book, cfg.n, cfg.samples, rng)
            per_trial.append((k, d, se))

    values = np.array([v for _, v, _ in per_trial])
    summary = {
        "d_min": float(values.min()),
        "d_mean": float(values.mean()),
        "d_max": float(values.max()),
        "m": m,
        "finite_trials": int(np.isfinite(values).sum()),
    }
    if cfg.estimator == "monte_carlo":
        summary["se_mean"] = float(np.mean([s for _, _, s in per_trial]))
    config = {
        "sim": "generator", "n": cfg.n, "rate": cfg.rate, "m": m,
        "codebook_trials": cfg.codebook_trials, "estimator": cfg.estimator,
        "samples": cfg.samples if cfg.estimator == "monte_carlo" else 0,
        "seed": cfg.seed, "w_size": model.w_size,
        "sizes": list(model.sizes),
    }
    return SimReport("generator", config, tuple(per_trial), summary,
                     time.perf_counter() - t0)


def _digit_table(size: int, n: int) -> np.ndarray:
    """digits[s, t] = letter t of sequence index s, last letter fastest."""
    idx = np.arange(size ** n)
    out = np.empty((size ** n, n), dtype=np.int64)
    for t in range(n):
        out[:, t] = (idx // size ** (n - 1 - t)) % size
    return out


def _batch_typical(counts, probs, n, eps):
    """Row mask: empirical L-inf within eps and no mass on null cells."""
    flat_p = probs.reshape(1, -1)
    freq = counts.reshape(counts.shape[0], -1) / n
    # the slack keeps exact-boundary counts (|k/n - p| == eps) inside
    ok = np.max(np.abs(freq - flat_p), axis=1) <= eps + 1e-12
    ok &= ~np.any((flat_p <= 0.0) & (counts.reshape(freq.shape) > 0), axis=1)
    return ok


def gw_codec_sim(cfg: CodecSimConfig) -> SimReport:
    """Random-codebook, binning and typicality codec; error-event tally.

    One common codebook and one seeded bin hash per variable are fixed per
    run; each trial encodes a fresh source block. The encoder sends the
    smallest codeword index jointly typical with the block (index 0 when
    none exists), each private encoder sends its sequence's bin, and every
    decoder searches its bin for the unique sequence pair-typical with the
    common codeword.
    """
    t0 = time.perf_counter()
    pmf, wit = cfg.pmf, cfg.witness
    if wit.sizes != pmf.sizes:
        raise IncompatibleAux(
            f"witness alphabet {wit.sizes} does not match source {pmf.sizes}")
    gap = float(np.max(np.abs(wit.induced_joint().probs - pmf.probs)))
    if gap > cfg.marginal_tol:
        raise IncompatibleAux(
            f"witness marginal is off by {gap:.3e} in sup norm")

    n, m0 = cfg.n, cfg.m0
    sizes = pmf.sizes
    w_size = wit.w_size
    if m0 > CODEBOOK_CAP:
        raise BudgetExceeded(
            f"M0 = 2^({n}*{cfg.rates.r0:g}) = {m0} codewords exceed the "
            f"{CODEBOOK_CAP} cap")
    for i, s in enumerate(sizes):
        if s ** n > SEQ_CAP:
            raise BudgetExceeded(
                f"variable {i} has {s}^{n} sequences, over the {SEQ_CAP} "
                f"binning cap")

    cells = pmf.spec.ncells
    # witness coupling laws: the typicality references of the construction
    joint_xw = wit.w_prior[None, :] * wit.cell_table().T      # (cells, w)
    pair_xw = [(wit.w_prior[:, None] * c).T for c in wit.channels]

    # unpack joint cells into per-variable symbols once
    idx = np.arange(cells)
    cell_sym = np.empty((len(sizes), cells), dtype=np.int64)
    stride = cells
    for i, s in enumerate(sizes):
        stride //= s
        cell_sym[i] = (idx // stride) % s

    # trial indices stay below 2^32, so these namespaces cannot collide
    book = _draw_codebook(wit.w_prior, m0, n, cfg.seed, 1 << 32)
    flat_book = book.entries                      # (m0, n)

    # per-variable bin hashes and full sequence tables
    n_bins = [max(1, int(np.ceil(2.0 ** (n * r)))) for r in cfg.rates.r]
    seq_digits = [_digit_table(s, n) for s in sizes]
    seq_bins = []
    hash_rng = np.random.default_rng(
        np.random.SeedSequence((cfg.seed, (1 << 32) + 1)))
    for i, s in enumerate(sizes):
        a = np.uint64(int(hash_rng.integers(1, 1 << 40)))
        b = np.uint64(int(hash_rng.integers(0, HASH_P)))
        seq_idx = np.arange(s ** n, dtype=np.uint64)
        seq_bins.append(((a * seq_idx + b) % np.uint64(HASH_P))
                        % np.uint64(n_bins[i]))

    # typicality of every codeword against a block: counts over (cells, w)
    def encode(block_cells):
        pair = block_cells[None, :] * w_size + flat_book       # (m0, n)
        offs = (np.arange(m0)[:, None] * (cells * w_size) + pair).ravel()
        counts = np.bincount(offs, minlength=m0 * cells * w_size)
        counts = counts.reshape(m0, cells * w_size)
        ok = _batch_typical(counts.reshape(m0, cells, w_size), joint_xw,
                            n, cfg.typicality_eps)
        hits = np.flatnonzero(ok)
        return (int(hits[0]), False) if hits.size else (0, True)

    def decode_one(i, w_row, own_idx):
        members = np.flatnonzero(seq_bins[i] == seq_bins[i][own_idx])
        syms = seq_digits[i][members]                          # (B, n)
        pair = syms * w_size + w_row[None, :]
        offs = (np.arange(members.size)[:, None]
                * (sizes[i] * w_size) + pair).ravel()
        counts = np.bincount(offs,
                             minlength=members.size * sizes[i] * w_size)
        counts = counts.reshape(members.size, sizes[i], w_size)
        ok = _batch_typical(counts, pair_xw[i], n, cfg.typicality_eps)
        own_pos = int(np.searchsorted(members, own_idx))
        own_typical = bool(ok[own_pos])
        impostor = bool(np.any(ok & (members != own_idx)))
        err = not (own_typical and not impostor)
        return own_typical, impostor, err

    per_trial = []
    e1_n = e2_n = e3_n = err_n = 0
    e2_seq = e3_seq = 0            # sequential counts for the union bound
    powers = [s ** np.arange(n - 1, -1, -1) for s in sizes]
    for trial in range(cfg.trials):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, trial)))
        block_cells = rng.choice(cells, size=n, p=pmf.probs)
        m_star, e1 = encode(block_cells)
        w_row = flat_book[m_star]
        e2 = e3 = err = False
        for i in range(len(sizes)):
            sym_row = cell_sym[i][block_cells]
            own_idx = int(sym_row @ powers[i])
            own_ok, impostor, dec_err = decode_one(i, w_row, own_idx)
            e2 |= not own_ok
            e3 |= impostor
            err |= dec_err
        e1_n += e1
        e2_n += e2
        e3_n += e3
        e2_seq += e2 and not e1
        e3_seq += e3 and not e1 and not e2
        err_n += err
        per_trial.append((trial, int(e1), int(e2), int(e3), int(err)))

    trials = cfg.trials
    n_e1c = trials - e1_n
    n_e12c = n_e1c - e2_seq
    summary = {
        "p_e": err_n / trials,
        "e1_rate": e1_n / trials,
        "e2_rate": e2_n / trials,
        "e3_rate": e3_n / trials,
        # sequential attribution matching the union-bound decomposition
        "e2_given_e1c": e2_seq / n_e1c if n_e1c else 0.0,
        "e3_given_e12c": e3_seq / n_e12c if n_e12c else 0.0,
        "m0": m0,
        "n_bins": n_bins,
    }
    config = {
        "sim": "codec", "n": n, "r0": cfg.rates.r0, "r": list(cfg.rates.r),
        "m0": m0, "typicality_eps": cfg.typicality_eps,
        "marginal_tol": cfg.marginal_tol, "trials": trials,
        "seed": cfg.seed, "w_size": w_size, "sizes": list(sizes),
    }
    return SimReport("codec", config, tuple(per_trial), summary,
                     time.perf_counter() - t0)
