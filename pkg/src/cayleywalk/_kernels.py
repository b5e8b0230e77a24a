"""Array kernels shared by the walk, samplers and geodesic modules.

Everything here is 0-based and allocation-light. Kernels never touch a random
generator: callers pass pre-drawn uniforms or transposition indices, which
keeps the numba and pure-Python paths bit-identical.

Cycle tracker layout (used by several kernels):
    img    permutation image
    lab    cycle label of each element
    csize  size of the cycle carrying each label (0 for unused labels)
    free   stack of unused labels, ``meta[0]`` entries deep
    meta   int64 counters, see the ``M_*`` offsets
"""
from __future__ import annotations

import numpy as np

from ._accel import jit

M_NFREE = 0
M_NCYC = 1
M_NCOMP = 2
M_STEPS = 3
M_FRAG = 4
META_SIZE = 5


@jit
def count_cycles(img):
    n = img.shape[0]
    seen = np.zeros(n, dtype=np.bool_)
    c = 0
    for s in range(n):
        if seen[s]:
            continue
        c += 1
        x = s
        while not seen[x]:
            seen[x] = True
            x = img[x]
    return c


@jit
def cycle_lengths(img):
    """Cycle lengths in order of each cycle's least element."""
    n = img.shape[0]
    seen = np.zeros(n, dtype=np.bool_)
    out = np.empty(n, dtype=np.int64)
    c = 0
    for s in range(n):
        if seen[s]:
            continue
        m = 0
        x = s
        while not seen[x]:
            seen[x] = True
            x = img[x]
            m += 1
        out[c] = m
        c += 1
    return out[:c]


@jit
def element_cycle_sizes(img):
    """Size of the cycle containing each element."""
    n = img.shape[0]
    out = np.zeros(n, dtype=np.int64)
    for s in range(n):
        if out[s] != 0:
            continue
        m = 1
        x = img[s]
        while x != s:
            x = img[x]
            m += 1
        out[s] = m
        x = img[s]
        while x != s:
            out[x] = m
            x = img[x]
    return out


@jit
def same_cycle(img, i, j):
    if i == j:
        return True
    x = img[i]
    while x != i:
        if x == j:
            return True
        x = img[x]
    return False


@jit
def init_tracker(img, lab, csize, free, meta):
    n = img.shape[0]
    for x in range(n):
        lab[x] = -1
        csize[x] = 0
    c = 0
    for s in range(n):
        if lab[s] >= 0:
            continue
        m = 0
        x = s
        while lab[x] < 0:
            lab[x] = c
            x = img[x]
            m += 1
        csize[c] = m
        c += 1
    nfree = 0
    for lbl in range(n - 1, c - 1, -1):
        free[nfree] = lbl
        nfree += 1
    meta[M_NFREE] = nfree
    meta[M_NCYC] = c


@jit
def _relabel(img, start, new, lab):
    x = start
    while True:
        lab[x] = new
        x = img[x]
        if x == start:
            break


@jit
def swap_step(img, lab, csize, free, meta, i, j):
    """Right-multiply by (i j) keeping labels current. Returns 1 on
    fragmentation, 0 on coagulation. Cost is linear in the smaller piece."""
    li = lab[i]
    lj = lab[j]
    if li != lj:
        if csize[li] < csize[lj]:
            _relabel(img, i, lj, lab)
            keep = lj
            drop = li
        else:
            _relabel(img, j, li, lab)
            keep = li
            drop = lj
        csize[keep] += csize[drop]
        csize[drop] = 0
        free[meta[M_NFREE]] = drop
        meta[M_NFREE] += 1
        meta[M_NCYC] -= 1
        t = img[i]
        img[i] = img[j]
        img[j] = t
        return 0
    t = img[i]
    img[i] = img[j]
    img[j] = t
    # walk both new cycles in lockstep; the first to close is the smaller
    x = img[i]
    y = img[j]
    cnt = 1
    while x != i and y != j:
        x = img[x]
        y = img[y]
        cnt += 1
    start = i if x == i else j
    meta[M_NFREE] -= 1
    new = free[meta[M_NFREE]]
    _relabel(img, start, new, lab)
    csize[new] = cnt
    csize[li] -= cnt
    meta[M_NCYC] += 1
    return 1


@jit
def dsu_find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@jit
def dsu_add_edge(parent, dsz, dedge, meta, i, j):
    ri = dsu_find(parent, i)
    rj = dsu_find(parent, j)
    if ri == rj:
        dedge[ri] += 1
        return
    if dsz[ri] < dsz[rj]:
        t = ri
        ri = rj
        rj = t
    parent[rj] = ri
    dsz[ri] += dsz[rj]
    dedge[ri] += dedge[rj] + 1
    meta[M_NCOMP] -= 1


@jit
def walk_run(img, lab, csize, free, parent, dsz, dedge, meta, ti, tj, kinds, dists,
             stop_dist, abort_on_frag):
    """Apply transpositions (ti[s], tj[s]) in order, coupling the random graph.

    Stops after the step at which the distance first equals ``stop_dist``
    (when non-negative) or after the first fragmentation (when
    ``abort_on_frag``). Returns the number of transpositions consumed.
    """
    n = img.shape[0]
    total = ti.shape[0]
    for s in range(total):
        i = ti[s]
        j = tj[s]
        kind = swap_step(img, lab, csize, free, meta, i, j)
        dsu_add_edge(parent, dsz, dedge, meta, i, j)
        meta[M_STEPS] += 1
        meta[M_FRAG] += kind
        d = n - meta[M_NCYC]
        kinds[s] = kind
        dists[s] = d
        if stop_dist >= 0 and d == stop_dist:
            return s + 1
        if abort_on_frag and kind == 1:
            return s + 1
    return total


@jit
def distance_after_steps(img, ti, tj, dists):
    """Distance series of img * t_0 * t_1 * ... (img is modified)."""
    n = img.shape[0]
    lab = np.empty(n, dtype=np.int64)
    csize = np.empty(n, dtype=np.int64)
    free = np.empty(n, dtype=np.int64)
    meta = np.zeros(META_SIZE, dtype=np.int64)
    init_tracker(img, lab, csize, free, meta)
    best = n - meta[M_NCYC]
    for s in range(ti.shape[0]):
        swap_step(img, lab, csize, free, meta, ti[s], tj[s])
        d = n - meta[M_NCYC]
        dists[s] = d
        if d < best:
            best = d
    return best


@jit
def greedy_fragment(img, u1, u2, out_i, out_j):
    """Split cycles until the identity is reached.

    Each step picks an unordered pair uniformly among all pairs lying in a
    common cycle: first an element x with weight |C_x| - 1, then a partner
    uniformly among the other members of C_x. Returns the number of steps.
    """
    n = img.shape[0]
    lab = np.empty(n, dtype=np.int64)
    csize = np.empty(n, dtype=np.int64)
    free = np.empty(n, dtype=np.int64)
    meta = np.zeros(META_SIZE, dtype=np.int64)
    init_tracker(img, lab, csize, free, meta)
    s = 0
    while meta[M_NCYC] < n:
        w = 0
        for x in range(n):
            w += csize[lab[x]] - 1
        target = u1[s] * w
        acc = 0.0
        pick = -1
        for x in range(n):
            wx = csize[lab[x]] - 1
            if wx == 0:
                continue
            pick = x
            acc += wx
            if target < acc:
                break
        m = csize[lab[pick]]
        r = 1 + int(u2[s] * (m - 1))
        if r > m - 1:
            r = m - 1
        y = pick
        for _ in range(r):
            y = img[y]
        a = pick if pick < y else y
        b = y if pick < y else pick
        out_i[s] = a
        out_j[s] = b
        swap_step(img, lab, csize, free, meta, a, b)
        s += 1
    return s


@jit
def _left_mult(R, Rinv, i, j):
    x1 = Rinv[i]
    x2 = Rinv[j]
    R[x1] = j
    R[x2] = i
    Rinv[i] = x2
    Rinv[j] = x1


@jit
def _right_mult(R, Rinv, i, j):
    t = R[i]
    R[i] = R[j]
    R[j] = t
    Rinv[R[i]] = i
    Rinv[R[j]] = j


@jit
def shadow_kernel(gimg, ti, tj, applied, k_hist, gap_hist, stuck_hist):
    """Reverse a walk into a path of pure fragmentations.

    ``gimg`` starts as the walk endpoint and is turned into the residual
    endpoint in place. Transposition t is applied when it splits a cycle of
    the current path point and skipped otherwise; it joins the deferred set K
    when skipped or when it shares an element with a member of K.

    Alongside K the kernel tracks R = X^{-1} gamma exactly, X being the walk
    point whose next increment is examined, so ``gap_hist`` is the true
    distance between the walk and the path at each stage.
    """
    n = gimg.shape[0]
    lab = np.empty(n, dtype=np.int64)
    csize = np.empty(n, dtype=np.int64)
    free = np.empty(n, dtype=np.int64)
    meta = np.zeros(META_SIZE, dtype=np.int64)
    init_tracker(gimg, lab, csize, free, meta)
    R = np.arange(n)
    Rinv = np.arange(n)
    kcount = np.zeros(n, dtype=np.int64)
    ksize = 0
    dR = 0
    total = ti.shape[0]
    s = 0
    for t in range(total - 1, -1, -1):
        i = ti[t]
        j = tj[t]
        stuck = kcount[i] > 0 or kcount[j] > 0
        if lab[i] == lab[j]:
            swap_step(gimg, lab, csize, free, meta, i, j)
            applied[t] = 1
            if stuck:
                _left_mult(R, Rinv, i, j)
                _right_mult(R, Rinv, i, j)
        else:
            applied[t] = 0
            # does left-multiplying R by (i j) merge or split?
            same = False
            x = R[i]
            while x != i:
                if x == j:
                    same = True
                    break
                x = R[x]
            if same:
                dR -= 1
            else:
                dR += 1
            _left_mult(R, Rinv, i, j)
        if applied[t] == 0 or stuck:
            kcount[i] += 1
            kcount[j] += 1
            ksize += 1
        stuck_hist[s] = 1 if (stuck and applied[t] == 1) else 0
        k_hist[s] = ksize
        gap_hist[s] = dR
        s += 1
    return ksize


@jit
def logarithmic_inverse(u, cdf):
    """Smallest j >= 1 with u <= cdf[j]; len(cdf) when u is in the tail."""
    j = 1
    top = cdf.shape[0]
    while j < top and u > cdf[j]:
        j += 1
    return j


@jit
def kolchin_fill(u, cdf, m, n, sizes, done, attempts):
    """Rejection stage of the conditioned-sum sampler.

    Draws blocks of ``m`` logarithmic variates from the uniform stream ``u``
    and keeps those summing to exactly ``n``, writing accepted rows of
    ``sizes`` from row ``done[0]`` onwards. A partially consumed attempt at
    the end of the stream is discarded. Returns the number of uniforms used.
    """
    pos = 0
    total_u = u.shape[0]
    rows = sizes.shape[0]
    while done[0] < rows:
        if total_u - pos < m:
            return pos
        attempts[0] += 1
        row = done[0]
        acc = 0
        ok = True
        for r in range(m):
            v = logarithmic_inverse(u[pos], cdf)
            pos += 1
            sizes[row, r] = v
            acc += v
            # every remaining block has size >= 1
            if acc + (m - r - 1) > n:
                ok = False
                break
        if ok and acc == n:
            done[0] += 1
    return pos


@jit
def blocks_to_perm(order, sizes, img):
    """Cut ``order`` into consecutive blocks and close each into a cycle."""
    s = 0
    for b in range(sizes.shape[0]):
        m = sizes[b]
        for q in range(m - 1):
            img[order[s + q]] = order[s + q + 1]
        img[order[s + m - 1]] = order[s]
        s += m


@jit
def _union_sized(parent, size, x, y):
    rx = dsu_find(parent, x)
    ry = dsu_find(parent, y)
    if rx == ry:
        return
    if size[rx] < size[ry]:
        t = rx
        rx = ry
        ry = t
    parent[ry] = rx
    size[rx] += size[ry]


@jit
def join_components(sig, pi, parent):
    """Union-find over the partition join of the cycles of sig and pi.
    Returns the component size of each element."""
    n = sig.shape[0]
    for x in range(n):
        parent[x] = x
    size = np.ones(n, dtype=np.int64)
    for x in range(n):
        _union_sized(parent, size, x, sig[x])
        _union_sized(parent, size, x, pi[x])
    out = np.empty(n, dtype=np.int64)
    for x in range(n):
        out[x] = size[dsu_find(parent, x)]
    return out


@jit
def crp_fill(r, img):
    """Sequential insertion: element i opens a new cycle when r[i] == i,
    otherwise it is spliced in right after element r[i]. Returns the cycle count."""
    n = img.shape[0]
    c = 0
    for i in range(n):
        k = r[i]
        if k == i:
            img[i] = i
            c += 1
        else:
            img[i] = img[k]
            img[k] = i
    return c


@jit
def blocks_to_perm_batch(orders, sizes, out):
    for s in range(orders.shape[0]):
        blocks_to_perm(orders[s], sizes[s], out[s])
