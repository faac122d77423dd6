"""Shared test constructions: standard sources used across the suite."""
import numpy as np

from commoninfo import AlphabetSpec, JointPMF


def dsbs(a0):
    """Uniform binary pair with crossover a0."""
    t = np.array([[(1 - a0) / 2, a0 / 2],
                  [a0 / 2, (1 - a0) / 2]])
    return JointPMF.from_tensor(t)


def random_joint(rng, sizes, alpha=1.0):
    cells = int(np.prod(sizes))
    p = rng.dirichlet(np.full(cells, alpha))
    return JointPMF(AlphabetSpec(tuple(int(s) for s in sizes)), p)


def shared_bit_pair(pv=0.5):
    """X = (X', V), Y = (Y', V) with X', Y', V independent bits, V ~ Bern(pv).

    Symbols are packed as 2*private + v, so each variable has 4 symbols.
    """
    t = np.zeros((4, 4))
    for xp in range(2):
        for yp in range(2):
            for v in range(2):
                mass = 0.25 * (pv if v else 1 - pv)
                t[2 * xp + v, 2 * yp + v] = mass
    return JointPMF.from_tensor(t)


def shared_bits_triple():
    """X = (X',U,V), Y = (Y',V,W), Z = (Z',W,U), six independent fair bits.

    Symbols pack the carried pair into the low bits: x = 4x' + 2u + v,
    y = 4y' + 2v + w, z = 4z' + 2w + u. Every pair shares exactly one bit.
    """
    t = np.zeros((8, 8, 8))
    for xp in range(2):
        for yp in range(2):
            for zp in range(2):
                for u in range(2):
                    for v in range(2):
                        for w in range(2):
                            x = 4 * xp + 2 * u + v
                            y = 4 * yp + 2 * v + w
                            z = 4 * zp + 2 * w + u
                            t[x, y, z] += 1.0 / 64
    return JointPMF.from_tensor(t)


def block_joint(rng, sizes, n_blocks):
    """Random joint whose common part has exactly n_blocks components.

    Each variable's alphabet is split into n_blocks contiguous groups and
    mass factorizes within a block, so the support graph has one component
    per block.
    """
    sizes = tuple(int(s) for s in sizes)
    assert all(s >= n_blocks for s in sizes)
    weights = rng.dirichlet(np.full(n_blocks, 2.0))
    bounds = [np.linspace(0, s, n_blocks + 1).astype(int) for s in sizes]
    t = np.zeros(sizes)
    for b in range(n_blocks):
        factors = []
        for i, s in enumerate(sizes):
            lo, hi = bounds[i][b], bounds[i][b + 1]
            col = np.zeros(s)
            col[lo:hi] = rng.dirichlet(np.ones(hi - lo))
            factors.append(col)
        block = factors[0]
        for f in factors[1:]:
            block = np.multiply.outer(block, f)
        t += weights[b] * block
    return JointPMF.from_tensor(t / t.sum())
