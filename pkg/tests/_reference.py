"""Naive re-implementations used as test oracles.

Everything here works on plain 0/1 sequences and follows the definitions
literally, with no bit packing or shortcuts.
"""

import math

import numba
import numpy as np


def block_len(n):
    return int(math.log(n) ** 2) + 2


def leading(bits, value):
    k = 0
    for b in bits:
        if b != value:
            break
        k += 1
    return k


def trapzeros(bits, L):
    n = len(bits)
    x1, x2 = bits[0], bits[1]
    if x1 == 1 and x2 == 0:
        return 1
    if x1 == 0 and x2 == 1:
        return 0
    if x1 == 0 and x2 == 0:
        return 2 * n + leading(bits, 0)
    if all(bits[i] == 1 for i in range(2, L)):
        return 3 * n + leading(bits, 1)
    return n + leading(bits, 1)


def schema(bits, L):
    if bits[0] == 1 and bits[1] == 1:
        return "SStar" if all(bits[i] == 1 for i in range(L)) else "S1NonStar"
    if bits[0] == 0 and bits[1] == 0:
        return "S0"
    return "Prefix10" if bits[0] == 1 else "Prefix01"


def classify(pop, L):
    """(side, rho, loia, loib) straight from the decomposition definitions."""
    fits = [trapzeros(b, L) for b in pop]
    best = max(fits)
    s1 = [i for i, b in enumerate(pop) if b[0] == 1 and b[1] == 1]
    s0 = [i for i, b in enumerate(pop) if b[0] == 0 and b[1] == 0]
    best_s1 = max((fits[i] for i in s1), default=None)
    best_s0 = max((fits[i] for i in s0), default=None)
    loia = sum(1 for i in s1 if fits[i] == best_s1)
    loib = sum(1 for i in s0 if fits[i] == best_s0)
    top = [i for i, f in enumerate(fits) if f == best]
    if all(i in s1 for i in top):
        return "A", min(sum(pop[i][2:]) for i in top), loia, loib
    if all(i in s0 for i in top):
        return "B", min(len(pop[i]) - 2 - sum(pop[i][2:]) for i in top), loia, loib
    return "E0", None, loia, loib


def bit_matrix(n):
    """Row x holds the bits of integer x, position i = bit i."""
    x = np.arange(1 << n)[:, None]
    return ((x >> np.arange(n)[None, :]) & 1).astype(np.int64)


@numba.njit(cache=True)
def naive_fitness_row(bits, L):
    n = bits.shape[0]
    if bits[0] == 1 and bits[1] == 0:
        return 1
    if bits[0] == 0 and bits[1] == 1:
        return 0
    lead = 0
    for i in range(n):
        if bits[i] != bits[0]:
            break
        lead += 1
    if bits[0] == 0:
        return 2 * n + lead
    intact = True
    for i in range(2, L):
        if bits[i] != 1:
            intact = False
    if intact:
        return 3 * n + lead
    return n + lead


@numba.njit(cache=True)
def naive_classify_rows(B, idx, L):
    """Same as ``classify`` for population rows ``idx`` of bit matrix ``B``,
    also returning the S0 and S* head counts. Side codes: 0 E0, 1 A, 2 B."""
    n = B.shape[1]
    N = idx.shape[0]
    fits = np.empty(N, dtype=np.int64)
    for k in range(N):
        fits[k] = naive_fitness_row(B[idx[k]], L)
    best = fits.max()
    best1 = -1
    best0 = -1
    in_s0 = 0
    in_star = 0
    for k in range(N):
        b = B[idx[k]]
        if b[0] == 1 and b[1] == 1:
            best1 = max(best1, fits[k])
            star = True
            for i in range(L):
                if b[i] != 1:
                    star = False
            if star:
                in_star += 1
        if b[0] == 0 and b[1] == 0:
            best0 = max(best0, fits[k])
            in_s0 += 1
    loia = 0
    loib = 0
    for k in range(N):
        b = B[idx[k]]
        if b[0] == 1 and b[1] == 1 and fits[k] == best1:
            loia += 1
        if b[0] == 0 and b[1] == 0 and fits[k] == best0:
            loib += 1
    side = 0
    rho = -1
    for k in range(N):
        if fits[k] != best:
            continue
        b = B[idx[k]]
        ones = 0
        for i in range(2, n):
            ones += b[i]
        if b[0] == 1 and b[1] == 1:
            side = 1
            m = ones
        elif b[0] == 0 and b[1] == 0:
            side = 2
            m = n - 2 - ones
        else:
            continue
        if rho < 0 or m < rho:
            rho = m
    return side, rho, loia, loib, in_s0, in_star


def hitting_times_by_enumeration(n, fitness):
    """E[tau | x] of the (1+1) EA from a dense matrix built bit by bit."""
    size = 1 << n
    P = np.zeros((size, size))
    for x in range(size):
        for y in range(size):
            d = bin(x ^ y).count("1")
            p = (1 / n) ** d * (1 - 1 / n) ** (n - d)
            if fitness[y] >= fitness[x]:
                P[x, y] += p
            else:
                P[x, x] += p
    opt = int(np.argmax(fitness))
    keep = [x for x in range(size) if x != opt]
    Q = P[np.ix_(keep, keep)]
    t = np.linalg.solve(np.eye(len(keep)) - Q, np.ones(len(keep)))
    out = np.zeros(size)
    out[keep] = t
    return out, P
