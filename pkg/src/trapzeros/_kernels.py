"""Compiled inner loops shared by the simulator and the exact-chain oracle.

Genomes are bit-packed into ``uint64`` words; bit ``i`` of a genome (position
``i + 1`` counting from one) lives in word ``i >> 6`` at bit ``i & 63``. Bits above
``n`` in the last word are always zero.
"""

import math

import numba
import numpy as np

TRAPZEROS = 0
ONEMAX = 1

SIDE_E0 = 0
SIDE_A = 1
SIDE_B = 2

EXIT_OPEN = 0
EXIT_UP = 1
EXIT_DOWN = 2
EXIT_SWITCH = 3

# segment columns
SEG_SIDE, SEG_RHO, SEG_ENTRY, SEG_TAKEOVER, SEG_EXIT, SEG_KIND = range(6)

_ONE = np.uint64(1)
_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)
_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_S1 = np.uint64(1)
_S2 = np.uint64(2)
_S4 = np.uint64(4)
_S56 = np.uint64(56)
_THREE = np.uint64(3)

jit = numba.njit(cache=True, nogil=True)


def n_words(n):
    return (n + 63) // 64


@jit
def popcount64(x):
    x = x - ((x >> _S1) & _M1)
    x = (x & _M2) + ((x >> _S2) & _M2)
    x = (x + (x >> _S4)) & _M4
    return np.int64((x * _H01) >> _S56)


@jit
def ones_count(w):
    c = 0
    for k in range(w.shape[0]):
        c += popcount64(w[k])
    return c


@jit
def ones_count_row(w, i):
    c = 0
    for k in range(w.shape[1]):
        c += popcount64(w[i, k])
    return c


@jit
def leading_run(w, n, value):
    """Number of leading positions equal to ``value`` (0 or 1)."""
    return leading_run_row(w.reshape((1, w.shape[0])), 0, n, value)


@jit
def leading_run_row(w, i, n, value):
    count = 0
    for k in range(w.shape[1]):
        x = w[i, k]
        if value == 0:
            x = ~x
        if x == _ALL:
            t = 64
        else:
            # x ^ (x + 1) sets the trailing ones plus the first zero
            t = popcount64((x ^ (x + _ONE)) >> _S1)
        count += t
        if t < 64:
            break
    return min(count, n)


@jit
def trapzeros_words(w, n, block):
    return trapzeros_row(w.reshape((1, w.shape[0])), 0, n, block)


@jit
def trapzeros_row(w, i, n, block):
    head = w[i, 0] & _THREE
    if head == 0:
        return 2 * n + leading_run_row(w, i, n, 0)
    if head == _THREE:
        lead = leading_run_row(w, i, n, 1)
        if lead >= block:
            return 3 * n + lead
        return n + lead
    if head == _ONE:  # x1 = 1, x2 = 0
        return 1
    return 0


@jit
def fitness_words(w, n, code, block):
    return fitness_row(w.reshape((1, w.shape[0])), 0, n, code, block)


@jit
def fitness_row(w, i, n, code, block):
    if code == TRAPZEROS:
        return trapzeros_row(w, i, n, block)
    return ones_count_row(w, i)


@jit
def optimum_value(n, code):
    if code == TRAPZEROS:
        return 4 * n
    return n


# ---------------------------------------------------------------- operators


@jit
def mutate_into(gen, src, dst, n):
    """Copy ``src`` to ``dst`` and flip each bit with probability 1/n.

    Flip positions are found by geometric skipping, one uniform draw per
    flip plus one to step past the end. Returns the number of flips.
    """
    W = src.shape[0]
    return mutate_row(gen, src.reshape((1, W)), 0, dst.reshape((1, W)), 0, n, log_keep(n))


@jit
def log_keep(n):
    """log(1 - 1/n); -inf when n == 1."""
    if n == 1:
        return -np.inf
    return math.log1p(-1.0 / n)


@jit
def mutate_row(gen, src, i, dst, j, n, log_q):
    for k in range(src.shape[1]):
        dst[j, k] = src[i, k]
    if n == 1:
        dst[j, 0] ^= _ONE
        return 1
    flips = 0
    pos = -1
    while True:
        u = gen.random()
        pos += int(math.floor(math.log1p(-u) / log_q)) + 1
        if pos >= n:
            break
        dst[j, pos >> 6] ^= _ONE << np.uint64(pos & 63)
        flips += 1
    return flips


@jit
def sample_flip_counts(gen, n, samples):
    src = np.zeros((1, n_words_jit(n)), dtype=np.uint64)
    dst = np.zeros_like(src)
    out = np.empty(samples, dtype=np.int64)
    log_q = log_keep(n)
    for s in range(samples):
        out[s] = mutate_row(gen, src, 0, dst, 0, n, log_q)
    return out


@jit
def n_words_jit(n):
    return (n + 63) // 64


@jit
def init_population(gen, pop_w, pop_f, n, code, block):
    N = pop_w.shape[0]
    for i in range(N):
        for k in range(pop_w.shape[1]):
            pop_w[i, k] = 0
        for pos in range(n):
            if gen.random() < 0.5:
                pop_w[i, pos >> 6] |= _ONE << np.uint64(pos & 63)
        pop_f[i] = fitness_row(pop_w, i, n, code, block)


@jit
def select_into(pop_w, pop_f, off_w, off_f, cand_w, cand_f):
    """Truncation selection of parents+offspring back into ``pop_w``/``pop_f``.

    Candidates are ranked by fitness; ties go to offspring before parents,
    then to the lower index within each group.
    """
    N = pop_f.shape[0]
    if N == 1:
        if off_f[0] >= pop_f[0]:
            for k in range(pop_w.shape[1]):
                pop_w[0, k] = off_w[0, k]
            pop_f[0] = off_f[0]
        return
    select_sorted(pop_w, pop_f, off_w, off_f, cand_w, cand_f)


@jit
def select_sorted(pop_w, pop_f, off_w, off_f, cand_w, cand_f):
    N = pop_f.shape[0]
    for i in range(N):
        cand_f[i] = off_f[i]
        cand_f[N + i] = pop_f[i]
        for k in range(pop_w.shape[1]):
            cand_w[i, k] = off_w[i, k]
            cand_w[N + i, k] = pop_w[i, k]
    order = np.argsort(-cand_f, kind="mergesort")
    took_offspring = False
    for r in range(N):
        j = order[r]
        took_offspring = took_offspring or j < N
        pop_f[r] = cand_f[j]
        for k in range(pop_w.shape[1]):
            pop_w[r, k] = cand_w[j, k]
    return took_offspring


@jit
def step_inplace(gen, pop_w, pop_f, off_w, off_f, cand_w, cand_f, n, code, block):
    N = pop_f.shape[0]
    log_q = log_keep(n)
    for i in range(N):
        mutate_row(gen, pop_w, i, off_w, i, n, log_q)
        off_f[i] = fitness_row(off_w, i, n, code, block)
    if N == 1:
        if off_f[0] >= pop_f[0]:
            for k in range(pop_w.shape[1]):
                pop_w[0, k] = off_w[0, k]
            pop_f[0] = off_f[0]
    else:
        select_sorted(pop_w, pop_f, off_w, off_f, cand_w, cand_f)


# ------------------------------------------------------------ decomposition


@jit
def classify(pop_w, pop_f, n, block):
    """Decomposition label and counts of a TrapZeros population.

    Returns (side, rho, loia, loib, in_s0, in_sstar). ``loia``/``loib`` are
    the multiplicities of the fittest S1 / S0 members (zero when absent).
    """
    N = pop_f.shape[0]
    fmax = pop_f[0]
    for i in range(1, N):
        if pop_f[i] > fmax:
            fmax = pop_f[i]
    best_s1 = -1
    best_s0 = -1
    in_s0 = 0
    in_sstar = 0
    for i in range(N):
        head = pop_w[i, 0] & _THREE
        if head == _THREE:
            if pop_f[i] > best_s1:
                best_s1 = pop_f[i]
            if leading_run_row(pop_w, i, n, 1) >= block:
                in_sstar += 1
        elif head == 0:
            in_s0 += 1
            if pop_f[i] > best_s0:
                best_s0 = pop_f[i]
    loia = 0
    loib = 0
    side = SIDE_E0
    rho = -1
    for i in range(N):
        head = pop_w[i, 0] & _THREE
        f = pop_f[i]
        if head == _THREE and f == best_s1:
            loia += 1
            if f == fmax:
                side = SIDE_A
                m = ones_count_row(pop_w, i) - 2
                if rho < 0 or m < rho:
                    rho = m
        elif head == 0 and f == best_s0:
            loib += 1
            if f == fmax:
                side = SIDE_B
                m = n - 2 - ones_count_row(pop_w, i)
                if rho < 0 or m < rho:
                    rho = m
    return side, rho, loia, loib, in_s0, in_sstar


@jit
def record(t, side, rho, loia, loib, in_s0, in_sstar, N, threshold, seg, nseg, ev):
    """Advance the event timeline by one generation; returns (seg, nseg).

    ``ev`` holds [first_s0, first_sstar, b_full, last_t, open_flag].
    """
    if t <= ev[3]:
        raise ValueError("generations must be recorded in increasing order")
    ev[3] = t
    if ev[0] < 0 and in_s0 > 0:
        ev[0] = t
    if ev[1] < 0 and in_sstar > 0:
        ev[1] = t
    if ev[2] < 0 and in_s0 == N:
        ev[2] = t
    if ev[4] == 1:
        cur = nseg - 1
        if seg[cur, SEG_SIDE] != side or seg[cur, SEG_RHO] != rho:
            seg[cur, SEG_EXIT] = t
            if seg[cur, SEG_SIDE] == side:
                if rho > seg[cur, SEG_RHO]:
                    seg[cur, SEG_KIND] = EXIT_UP
                    if seg[cur, SEG_TAKEOVER] < 0:
                        seg[cur, SEG_TAKEOVER] = t
                else:
                    seg[cur, SEG_KIND] = EXIT_DOWN
            else:
                seg[cur, SEG_KIND] = EXIT_SWITCH
            ev[4] = 0
    if ev[4] == 0 and side != SIDE_E0:
        if nseg == seg.shape[0]:
            grown = np.empty((2 * seg.shape[0], 6), dtype=np.int64)
            grown[:nseg] = seg[:nseg]
            seg = grown
        seg[nseg, SEG_SIDE] = side
        seg[nseg, SEG_RHO] = rho
        seg[nseg, SEG_ENTRY] = t
        seg[nseg, SEG_TAKEOVER] = -1
        seg[nseg, SEG_EXIT] = -1
        seg[nseg, SEG_KIND] = EXIT_OPEN
        nseg += 1
        ev[4] = 1
    if ev[4] == 1:
        cur = nseg - 1
        if seg[cur, SEG_TAKEOVER] < 0:
            count = loia if side == SIDE_A else loib
            if count >= threshold:
                seg[cur, SEG_TAKEOVER] = t
    return seg, nseg


@jit
def _trailing_run(x, n):
    if x == _ALL:
        return min(64, n)
    return min(popcount64((x ^ (x + _ONE)) >> _S1), n)


@jit
def fitness_scalar(x, n, code, block):
    """Fitness of a genome that fits in one word (n <= 64)."""
    if code != TRAPZEROS:
        return popcount64(x)
    head = x & _THREE
    if head == 0:
        return 2 * n + _trailing_run(~x, n)
    if head == _THREE:
        lead = _trailing_run(x, n)
        if lead >= block:
            return 3 * n + lead
        return n + lead
    if head == _ONE:
        return 1
    return 0


@jit
def _single_word_loop(gen, n, code, block, budget, threshold, early_abort, pop_w, pop_f, seg, nseg, ev):
    # N = 1 and n <= 64: same draws as step_inplace, without array traffic
    track = code == TRAPZEROS
    target = optimum_value(n, code)
    abort_floor = 2 * n + block
    log_q = log_keep(n)
    x = pop_w[0, 0]
    fx = pop_f[0]
    t = 1
    hit = False
    aborted = False
    changed = True
    while True:
        if track and changed:
            pop_w[0, 0] = x
            pop_f[0] = fx
            side, rho, loia, loib, in_s0, in_sstar = classify(pop_w, pop_f, n, block)
            seg, nseg = record(t, side, rho, loia, loib, in_s0, in_sstar, 1, threshold, seg, nseg, ev)
        if fx == target:
            hit = True
            break
        if early_abort and track and changed and (x & _THREE) == 0 and fx >= abort_floor:
            aborted = True
            break
        if t + 1 > budget:
            break
        y = x
        if n == 1:
            y ^= _ONE
        else:
            pos = -1
            while True:
                u = gen.random()
                pos += int(math.floor(math.log1p(-u) / log_q)) + 1
                if pos >= n:
                    break
                y ^= _ONE << np.uint64(pos)
        fy = fitness_scalar(y, n, code, block)
        t += 1
        changed = fy >= fx
        if changed:
            x = y
            fx = fy
    pop_w[0, 0] = x
    pop_f[0] = fx
    return hit, t, aborted, seg, nseg


@jit
def run_trial_kernel(gen, n, N, code, block, budget, threshold, early_abort):
    """Run one (N+N) EA trial until the optimum is held or the budget is spent.

    Generation 1 is the initial population, which costs N evaluations; each
    further generation costs N more. The timeline is only updated in
    generations where an offspring survived, since otherwise nothing in it
    can change.
    """
    W = n_words_jit(n)
    pop_w = np.zeros((N, W), dtype=np.uint64)
    pop_f = np.zeros(N, dtype=np.int64)
    seg = np.empty((16, 6), dtype=np.int64)
    nseg = 0
    ev = np.array([-1, -1, -1, 0, 0], dtype=np.int64)
    init_population(gen, pop_w, pop_f, n, code, block)
    if N == 1 and W == 1:
        hit, t, aborted, seg, nseg = _single_word_loop(
            gen, n, code, block, budget, threshold, early_abort, pop_w, pop_f, seg, nseg, ev
        )
        return hit, t, aborted, ev[:3].copy(), seg[:nseg].copy(), pop_w, pop_f

    off_w = np.zeros((N, W), dtype=np.uint64)
    off_f = np.zeros(N, dtype=np.int64)
    cand_w = np.zeros((2 * N, W), dtype=np.uint64)
    cand_f = np.zeros(2 * N, dtype=np.int64)
    track = code == TRAPZEROS
    target = optimum_value(n, code)
    abort_floor = 2 * n + block
    log_q = log_keep(n)
    t = 1
    hit = False
    aborted = False
    changed = True
    while True:
        if changed:
            if track:
                side, rho, loia, loib, in_s0, in_sstar = classify(pop_w, pop_f, n, block)
                seg, nseg = record(t, side, rho, loia, loib, in_s0, in_sstar, N, threshold, seg, nseg, ev)
            best = pop_f[0]
            for i in range(1, N):
                if pop_f[i] > best:
                    best = pop_f[i]
            if best == target:
                hit = True
                break
            if early_abort and track:
                trapped = True
                for i in range(N):
                    if (pop_w[i, 0] & _THREE) != 0 or pop_f[i] < abort_floor:
                        trapped = False
                        break
                if trapped:
                    aborted = True
                    break
        if (t + 1) * N > budget:
            break
        for i in range(N):
            mutate_row(gen, pop_w, i, off_w, i, n, log_q)
            off_f[i] = fitness_row(off_w, i, n, code, block)
        t += 1
        if N == 1:
            changed = off_f[0] >= pop_f[0]
            if changed:
                for k in range(W):
                    pop_w[0, k] = off_w[0, k]
                pop_f[0] = off_f[0]
        else:
            changed = select_sorted(pop_w, pop_f, off_w, off_f, cand_w, cand_f)
    return hit, t, aborted, ev[:3].copy(), seg[:nseg].copy(), pop_w, pop_f


# ---------------------------------------------------------- exact (N = 1)


@jit
def fitness_table(n, code, block):
    size = 1 << n
    out = np.empty(size, dtype=np.int64)
    w = np.zeros(1, dtype=np.uint64)
    for x in range(size):
        w[0] = np.uint64(x)
        out[x] = fitness_words(w, n, code, block)
    return out


@jit
def mask_weights(n):
    """Probability of each flip mask, indexed by mask."""
    p = 1.0 / n
    by_distance = np.empty(n + 1)
    for d in range(n + 1):
        by_distance[d] = p**d * (1.0 - p) ** (n - d)
    size = 1 << n
    out = np.empty(size)
    for m in range(size):
        out[m] = by_distance[popcount64(np.uint64(m))]
    return out


@jit
def transition_row(x, f, wm):
    """Accepted targets of state ``x`` and their probabilities, self-loop last."""
    size = f.shape[0]
    ys = np.empty(size, dtype=np.int64)
    ps = np.empty(size)
    k = 0
    stay = wm[0]
    fx = f[x]
    for m in range(1, size):
        y = x ^ m
        if f[y] >= fx:
            ys[k] = y
            ps[k] = wm[m]
            k += 1
        else:
            stay += wm[m]
    ys[k] = x
    ps[k] = stay
    return ys[: k + 1], ps[: k + 1]


@jit
def level_system(states, local, f, V, wm, level_fitness):
    """Dense system for one fitness level given solved values above it."""
    m = states.shape[0]
    size = f.shape[0]
    A = np.zeros((m, m))
    b = np.ones(m)
    for i in range(m):
        x = states[i]
        leave = 0.0
        for mask in range(1, size):
            y = x ^ mask
            fy = f[y]
            if fy > level_fitness:
                p = wm[mask]
                b[i] += p * V[y]
                leave += p
            elif fy == level_fitness:
                p = wm[mask]
                A[i, local[y]] -= p
                leave += p
        A[i, i] += leave
    return A, b


@jit
def level_matvec(states, local, f, wm, level_fitness, v):
    m = states.shape[0]
    size = f.shape[0]
    out = np.zeros(m)
    for i in range(m):
        x = states[i]
        leave = 0.0
        acc = 0.0
        for mask in range(1, size):
            y = x ^ mask
            fy = f[y]
            if fy > level_fitness:
                leave += wm[mask]
            elif fy == level_fitness:
                p = wm[mask]
                acc -= p * v[local[y]]
                leave += p
        out[i] = acc + leave * v[i]
    return out


@jit
def level_rhs(states, f, V, wm, level_fitness):
    m = states.shape[0]
    size = f.shape[0]
    b = np.ones(m)
    for i in range(m):
        x = states[i]
        for mask in range(1, size):
            y = x ^ mask
            if f[y] > level_fitness:
                b[i] += wm[mask] * V[y]
    return b


@jit
def one_step_drift(f, V, wm):
    """Exact expected one-step decrease of ``V`` from every state."""
    size = f.shape[0]
    out = np.zeros(size)
    for x in range(size):
        fx = f[x]
        vx = V[x]
        acc = 0.0
        for m in range(1, size):
            y = x ^ m
            if f[y] >= fx:
                acc += wm[m] * (vx - V[y])
        out[x] = acc
    return out


@jit
def walsh_hadamard(a):
    h = 1
    size = a.shape[0]
    while h < size:
        for i in range(0, size, 2 * h):
            for j in range(i, i + h):
                u = a[j]
                v = a[j + h]
                a[j] = u + v
                a[j + h] = u - v
        h *= 2


@jit
def rejected_mass(f, wm):
    size = f.shape[0]
    out = np.zeros(size)
    for x in range(size):
        fx = f[x]
        for m in range(1, size):
            if f[x ^ m] < fx:
                out[x] += wm[m]
    return out


@jit
def iterate_distribution(pi0, f, wm, level_ids, n_levels, horizon, target):
    """P(state == target at t) for t = 0..horizon under the elitist chain.

    One step is a masked XOR convolution: mass at ``x`` reaches ``y`` with
    weight ``wm[x ^ y]`` when f(y) >= f(x). Levels are processed with
    cumulative Walsh-Hadamard transforms.
    """
    size = f.shape[0]
    w_hat = wm.copy()
    walsh_hadamard(w_hat)
    reject = rejected_mass(f, wm)
    pi = pi0.copy()
    out = np.empty(horizon + 1)
    out[0] = pi[target]
    level_hat = np.zeros((n_levels, size))
    buf = np.empty(size)
    for t in range(1, horizon + 1):
        for lv in range(n_levels):
            for x in range(size):
                level_hat[lv, x] = 0.0
        for x in range(size):
            level_hat[level_ids[x], x] = pi[x]
        for lv in range(n_levels):
            walsh_hadamard(level_hat[lv])
        for lv in range(1, n_levels):
            for x in range(size):
                level_hat[lv, x] += level_hat[lv - 1, x]
        new = np.empty(size)
        for lv in range(n_levels):
            for x in range(size):
                buf[x] = level_hat[lv, x] * w_hat[x]
            walsh_hadamard(buf)
            for y in range(size):
                if level_ids[y] == lv:
                    new[y] = buf[y] / size + pi[y] * reject[y]
        pi = new
        out[t] = pi[target]
    return out
