"""Numba kernel for the interval partitioning process on [0, R).

State layout
------------
Segments live in a pool of parallel arrays. Each segment sits on two linked
lists: the chromosome list (``prev``/``next``, ordered by position, tiling
[0, R)) and the list of its block (``bnext``, ordered by position). Blocks
live in a second pool; the active ones are kept in a dense array so that a
uniform pair can be drawn in O(1), and their spans are stored in a Fenwick
tree so that a block can be drawn proportionally to its span in O(log B).
"""
import numpy as np
from numba import njit

NIL = -1
RECOMPUTE_EVERY = 100_000


@njit(cache=True)
def _seed(seed):
    np.random.seed(seed)


@njit(cache=True)
def _fw_add(tree, i, delta):
    i += 1
    n = tree.shape[0] - 1
    while i <= n:
        tree[i] += delta
        i += i & (-i)


@njit(cache=True)
def _fw_find(tree, target, logn):
    # smallest index whose prefix sum exceeds target
    pos = 0
    step = 1 << logn
    n = tree.shape[0] - 1
    while step > 0:
        nxt = pos + step
        if nxt <= n and tree[nxt] <= target:
            pos = nxt
            target -= tree[nxt]
        step >>= 1
    return pos


@njit(cache=True)
def _fw_build(tree, values):
    tree[:] = 0.0
    n = tree.shape[0] - 1
    for i in range(n):
        tree[i + 1] += values[i]
        j = (i + 1) + ((i + 1) & (-(i + 1)))
        if j <= n:
            tree[j] += tree[i + 1]


@njit(cache=True)
def run_interval(starts, labels, R, rho, t_end, seed, cap_seg, cap_blk):
    """Simulate from the partition given by ``starts``/``labels`` until ``t_end``.

    Returns ``(status, starts, labels, n_events, max_drift)``. ``status`` is 0 on
    success and 1 if a pool overflowed (the caller retries with larger pools).
    Labels of the returned partition are raw block ids, not canonical.
    """
    _seed(seed)
    m = starts.shape[0]

    seg_start = np.empty(cap_seg)
    seg_end = np.empty(cap_seg)
    seg_lab = np.empty(cap_seg, np.int64)
    seg_prev = np.empty(cap_seg, np.int64)
    seg_next = np.empty(cap_seg, np.int64)
    seg_bnext = np.empty(cap_seg, np.int64)
    free_seg = np.empty(cap_seg, np.int64)
    n_free_seg = 0
    for s in range(cap_seg - 1, m - 1, -1):
        free_seg[n_free_seg] = s
        n_free_seg += 1

    blk_head = np.full(cap_blk, NIL, np.int64)
    blk_tail = np.full(cap_blk, NIL, np.int64)
    blk_pos = np.full(cap_blk, NIL, np.int64)
    spans = np.zeros(cap_blk)
    active = np.empty(cap_blk, np.int64)
    logn = 0
    while (1 << (logn + 1)) <= cap_blk:
        logn += 1
    tree = np.zeros(cap_blk + 1)

    # initial state; labels are assumed to be 0..k-1
    k = 0
    for i in range(m):
        if labels[i] + 1 > k:
            k = labels[i] + 1
    if k > cap_blk:
        return 1, starts, labels, 0, 0.0
    for b in range(k):
        active[b] = b
        blk_pos[b] = b
    free_blk = np.empty(cap_blk, np.int64)
    n_free_blk = 0
    for b in range(cap_blk - 1, k - 1, -1):
        free_blk[n_free_blk] = b
        n_free_blk += 1

    for i in range(m):
        seg_start[i] = starts[i]
        seg_end[i] = starts[i + 1] if i + 1 < m else R
        seg_lab[i] = labels[i]
        seg_prev[i] = i - 1
        seg_next[i] = i + 1 if i + 1 < m else NIL
        seg_bnext[i] = NIL
        b = labels[i]
        if blk_head[b] == NIL:
            blk_head[b] = i
        else:
            seg_bnext[blk_tail[b]] = i
        blk_tail[b] = i
    for b in range(k):
        spans[b] = seg_end[blk_tail[b]] - seg_start[blk_head[b]]
    _fw_build(tree, spans)
    total_span = 0.0
    for b in range(k):
        total_span += spans[b]
    n_seg = m

    t = 0.0
    n_events = 0
    max_drift = 0.0
    status = 0
    while True:
        coag = 0.5 * k * (k - 1)
        frag = rho * total_span
        total = coag + frag
        if total <= 0.0:
            break
        t -= np.log(1.0 - np.random.random()) / total
        if t >= t_end:
            break
        n_events += 1
        if np.random.random() * total < coag:
            i = int(np.random.random() * k)
            j = int(np.random.random() * (k - 1))
            if j >= i:
                j += 1
            a = active[i]
            b = active[j]
            # merge the position-ordered lists of a and b, fusing neighbours
            sa = blk_head[a]
            sb = blk_head[b]
            tail = NIL
            head = NIL
            while sa != NIL or sb != NIL:
                if sb == NIL or (sa != NIL and seg_start[sa] < seg_start[sb]):
                    s = sa
                    sa = seg_bnext[sa]
                else:
                    s = sb
                    sb = seg_bnext[sb]
                    seg_lab[s] = a
                if tail != NIL and seg_prev[s] == tail:
                    # chromosome neighbours now share a label: fuse s into tail
                    seg_end[tail] = seg_end[s]
                    nx = seg_next[s]
                    seg_next[tail] = nx
                    if nx != NIL:
                        seg_prev[nx] = tail
                    free_seg[n_free_seg] = s
                    n_free_seg += 1
                    n_seg -= 1
                else:
                    if tail == NIL:
                        head = s
                    else:
                        seg_bnext[tail] = s
                    tail = s
            seg_bnext[tail] = NIL
            blk_head[a] = head
            blk_tail[a] = tail
            new_span = seg_end[tail] - seg_start[head]
            total_span += new_span - spans[a] - spans[b]
            _fw_add(tree, a, new_span - spans[a])
            _fw_add(tree, b, -spans[b])
            spans[a] = new_span
            spans[b] = 0.0
            # retire b
            pb = blk_pos[b]
            last = active[k - 1]
            active[pb] = last
            blk_pos[last] = pb
            blk_pos[b] = NIL
            blk_head[b] = NIL
            blk_tail[b] = NIL
            k -= 1
            free_blk[n_free_blk] = b
            n_free_blk += 1
        else:
            a = _fw_find(tree, np.random.random() * total_span, logn)
            if a >= cap_blk or spans[a] <= 0.0:
                continue
            lo = seg_start[blk_head[a]]
            hi = seg_end[blk_tail[a]]
            x = lo + (hi - lo) * np.random.random()
            if x <= lo or x >= hi:
                continue
            if n_free_blk == 0 or n_free_seg == 0:
                status = 1
                break
            prev = NIL
            s = blk_head[a]
            while seg_end[s] <= x:
                prev = s
                s = seg_bnext[s]
            nb = free_blk[n_free_blk - 1]
            n_free_blk -= 1
            if seg_start[s] < x:
                s2 = free_seg[n_free_seg - 1]
                n_free_seg -= 1
                seg_start[s2] = x
                seg_end[s2] = seg_end[s]
                seg_end[s] = x
                nx = seg_next[s]
                seg_prev[s2] = s
                seg_next[s2] = nx
                seg_next[s] = s2
                if nx != NIL:
                    seg_prev[nx] = s2
                seg_bnext[s2] = seg_bnext[s]
                seg_bnext[s] = NIL
                if blk_tail[a] == s:
                    blk_tail[nb] = s2
                else:
                    blk_tail[nb] = blk_tail[a]
                blk_tail[a] = s
                blk_head[nb] = s2
                n_seg += 1
            else:
                seg_bnext[prev] = NIL
                blk_tail[nb] = blk_tail[a]
                blk_tail[a] = prev
                blk_head[nb] = s
            r = blk_head[nb]
            while r != NIL:
                seg_lab[r] = nb
                r = seg_bnext[r]
            span_a = seg_end[blk_tail[a]] - seg_start[blk_head[a]]
            span_b = seg_end[blk_tail[nb]] - seg_start[blk_head[nb]]
            total_span += span_a + span_b - spans[a]
            _fw_add(tree, a, span_a - spans[a])
            _fw_add(tree, nb, span_b)
            spans[a] = span_a
            spans[nb] = span_b
            active[k] = nb
            blk_pos[nb] = k
            k += 1

        if n_events % RECOMPUTE_EVERY == 0:
            fresh = 0.0
            for i in range(k):
                fresh += spans[active[i]]
            drift = abs(fresh - total_span) / max(fresh, 1e-300)
            if drift > max_drift:
                max_drift = drift
            total_span = fresh
            _fw_build(tree, spans)

    # compact output in chromosome order
    out_starts = np.empty(n_seg)
    out_labels = np.empty(n_seg, np.int64)
    s = 0
    i = 0
    while s != NIL:
        out_starts[i] = seg_start[s]
        out_labels[i] = seg_lab[s]
        i += 1
        s = seg_next[s]
    return status, out_starts, out_labels, n_events, max_drift
