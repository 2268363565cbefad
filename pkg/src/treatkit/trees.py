"""Array-based CART trees with weighted split search.

One builder serves three growth criteria:

* ``MODE_GINI``   - weighted gini impurity decrease, leaf = positive fraction
* ``MODE_SSE``    - weighted squared-error reduction on a response column,
                    leaf = sum(w*a) / (sum(w*b) + lam)   (Newton step)
* ``MODE_NEWTON`` - second-order gain with L2 penalty ``lam`` and minimum
                    gain ``gamma``, leaf = -sum(g) / (sum(h) + lam)

Splits send rows with ``x < threshold`` left. Ties are broken by lowest
column index, then lowest threshold (first maximum wins in the scan).
Per-node column subsampling draws from a caller-supplied pool of random
integers so the result is identical with and without numba.
"""

import numpy as np

from .accel import jit

MODE_GINI = 0
MODE_SSE = 1
MODE_NEWTON = 2

LEAF = -1


@jit
def _scan_feature(xs, wy, wh, ws, pos, min_leaf, mode, lam, gamma, min_child_h):
    """Best split on one feature at one node.

    xs: feature values for the node's rows; wy/wh/ws: weighted response,
    weighted hessian and weights per row; pos: 1.0 for rows with positive
    weight. Returns (gain, threshold); gain <= 0 means no usable split.
    """
    order = np.argsort(xs)
    n = xs.shape[0]

    ty = 0.0
    th = 0.0
    tw = 0.0
    tn = 0.0
    for i in range(n):
        r = order[i]
        ty += wy[r]
        th += wh[r]
        tw += ws[r]
        tn += pos[r]

    if mode == MODE_GINI:
        parent = 2.0 * ty * (tw - ty) / tw if tw > 0 else 0.0
    elif mode == MODE_SSE:
        parent = -ty * ty / tw if tw > 0 else 0.0
    else:
        parent = -0.5 * ty * ty / (th + lam) - gamma

    best_gain = -np.inf
    best_pos = -1
    yl = 0.0
    hl = 0.0
    wl = 0.0
    nl = 0.0
    for i in range(n - 1):
        r = order[i]
        yl += wy[r]
        hl += wh[r]
        wl += ws[r]
        nl += pos[r]
        if xs[order[i + 1]] <= xs[r]:
            continue
        nr = tn - nl
        if nl < min_leaf or nr < min_leaf:
            continue
        yr = ty - yl
        hr = th - hl
        wr = tw - wl
        if mode == MODE_GINI:
            if wl <= 0 or wr <= 0:
                continue
            gain = parent - 2.0 * yl * (wl - yl) / wl - 2.0 * yr * (wr - yr) / wr
        elif mode == MODE_SSE:
            if wl <= 0 or wr <= 0:
                continue
            gain = yl * yl / wl + yr * yr / wr + parent
        else:
            if hl < min_child_h or hr < min_child_h:
                continue
            gain = 0.5 * (yl * yl / (hl + lam) + yr * yr / (hr + lam)) + parent
        if gain > best_gain:
            best_gain = gain
            best_pos = i
    if best_pos < 0 or best_gain <= 1e-12:
        return -np.inf, 0.0
    return best_gain, 0.5 * (xs[order[best_pos]] + xs[order[best_pos + 1]])


@jit
def _build_tree(
    X,
    resp,
    hess,
    w,
    idx,
    mode,
    max_depth,
    min_leaf,
    mtry,
    lam,
    gamma,
    min_child_h,
    rand_pool,
    feature,
    threshold,
    left,
    right,
    value,
    cover,
):
    """Grow one tree over the rows listed in ``idx`` (duplicates allowed).

    Node arrays are preallocated by the caller (size >= 2*len(idx)+1).
    Returns the number of nodes written.
    """
    p = X.shape[1]
    n = idx.shape[0]
    pool_len = rand_pool.shape[0]
    pool_ptr = 0

    cols = np.arange(p)
    buf = np.empty(n, dtype=idx.dtype)
    xs_buf = np.empty(n)
    wy_buf = np.empty(n)
    wh_buf = np.empty(n)
    ws_buf = np.empty(n)
    pos_buf = np.empty(n)

    # frame: node id, segment [start, end), depth
    max_stack = 2 * n + 4
    st_node = np.empty(max_stack, dtype=np.int64)
    st_lo = np.empty(max_stack, dtype=np.int64)
    st_hi = np.empty(max_stack, dtype=np.int64)
    st_depth = np.empty(max_stack, dtype=np.int64)

    n_nodes = 1
    sp = 0
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = n
    st_depth[0] = 0
    sp = 1

    while sp > 0:
        sp -= 1
        node = st_node[sp]
        lo = st_lo[sp]
        hi = st_hi[sp]
        depth = st_depth[sp]
        seg = idx[lo:hi]

        sw = 0.0
        sy = 0.0
        sh = 0.0
        npos = 0.0
        for i in range(seg.shape[0]):
            r = seg[i]
            sw += w[r]
            sy += w[r] * resp[r]
            sh += w[r] * hess[r]
            if w[r] > 0:
                npos += 1.0

        make_leaf = depth >= max_depth or npos < 2 * min_leaf

        best_gain = -np.inf
        best_col = -1
        best_thr = 0.0
        if not make_leaf:
            if mtry < p:
                # partial Fisher-Yates over the column index array
                for i in range(mtry):
                    j = i + int(rand_pool[pool_ptr % pool_len] % np.uint32(p - i))
                    pool_ptr += 1
                    tmp = cols[i]
                    cols[i] = cols[j]
                    cols[j] = tmp
                chosen = np.sort(cols[:mtry])
            else:
                chosen = cols

            m = seg.shape[0]
            xs = xs_buf[:m]
            wy = wy_buf[:m]
            wh = wh_buf[:m]
            ws = ws_buf[:m]
            pos = pos_buf[:m]
            for i in range(m):
                r = seg[i]
                wy[i] = w[r] * resp[r]
                wh[i] = w[r] * hess[r]
                ws[i] = w[r]
                pos[i] = 1.0 if w[r] > 0 else 0.0
            for c in range(chosen.shape[0]):
                col = chosen[c]
                for i in range(m):
                    xs[i] = X[seg[i], col]
                gain, thr = _scan_feature(
                    xs, wy, wh, ws, pos, min_leaf, mode, lam, gamma, min_child_h
                )
                if gain > best_gain:
                    best_gain = gain
                    best_col = col
                    best_thr = thr

        if best_col < 0:
            feature[node] = LEAF
            if mode == MODE_GINI:
                value[node] = sy / sw if sw > 0 else 0.5
                cover[node] = sw
            elif mode == MODE_SSE:
                denom = sh + lam
                value[node] = sy / denom if denom > 0 else 0.0
                cover[node] = sw
            else:
                value[node] = -sy / (sh + lam) if sh + lam > 0 else 0.0
                cover[node] = sh
            continue

        # stable partition of the segment: x < thr goes left
        nl = 0
        for i in range(seg.shape[0]):
            if X[seg[i], best_col] < best_thr:
                buf[nl] = seg[i]
                nl += 1
        nr = nl
        for i in range(seg.shape[0]):
            if not (X[seg[i], best_col] < best_thr):
                buf[nr] = seg[i]
                nr += 1
        idx[lo:hi] = buf[: hi - lo]

        lchild = n_nodes
        rchild = n_nodes + 1
        n_nodes += 2
        feature[node] = best_col
        threshold[node] = best_thr
        left[node] = lchild
        right[node] = rchild
        value[node] = 0.0
        cover[node] = sw

        st_node[sp] = rchild
        st_lo[sp] = lo + nl
        st_hi[sp] = hi
        st_depth[sp] = depth + 1
        sp += 1
        st_node[sp] = lchild
        st_lo[sp] = lo
        st_hi[sp] = lo + nl
        st_depth[sp] = depth + 1
        sp += 1

    return n_nodes


@jit
def _predict_tree(feature, threshold, left, right, value, X, out):
    for i in range(X.shape[0]):
        node = 0
        while feature[node] != LEAF:
            if X[i, feature[node]] < threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] += value[node]


class Tree:
    """A fitted binary tree in flat-array form."""

    __slots__ = ("feature", "threshold", "left", "right", "value", "cover")

    def __init__(self, feature, threshold, left, right, value, cover):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value
        self.cover = cover

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    def predict(self, X):
        out = np.zeros(X.shape[0])
        _predict_tree(
            self.feature, self.threshold, self.left, self.right, self.value,
            np.ascontiguousarray(X, dtype=np.float64), out,
        )
        return out

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "cover": self.cover.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=np.float64),
            np.asarray(d["cover"], dtype=np.float64),
        )


_EMPTY_POOL = np.zeros(1, dtype=np.uint32)


def grow_tree(
    X,
    resp,
    hess=None,
    weights=None,
    idx=None,
    mode=MODE_GINI,
    max_depth=10**9,
    min_leaf=1,
    mtry=None,
    lam=0.0,
    gamma=0.0,
    min_child_h=0.0,
    rand_pool=None,
):
    """Build one tree and trim its node arrays. See module docstring."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, p = X.shape
    resp = np.asarray(resp, dtype=np.float64)
    hess = np.ones(n) if hess is None else np.asarray(hess, dtype=np.float64)
    weights = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    idx = np.arange(n, dtype=np.int64) if idx is None else np.asarray(idx, dtype=np.int64).copy()
    mtry = p if mtry is None else min(mtry, p)
    if rand_pool is None:
        rand_pool = _EMPTY_POOL

    cap = 2 * idx.shape[0] + 1
    feature = np.empty(cap, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.zeros(cap, dtype=np.int64)
    right = np.zeros(cap, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)
    cover = np.zeros(cap, dtype=np.float64)

    n_nodes = _build_tree(
        X, resp, hess, weights, idx,
        mode, max_depth, min_leaf, mtry,
        lam, gamma, min_child_h,
        rand_pool,
        feature, threshold, left, right, value, cover,
    )
    s = slice(0, n_nodes)
    return Tree(
        feature[s].copy(), threshold[s].copy(), left[s].copy(),
        right[s].copy(), value[s].copy(), cover[s].copy(),
    )


def fit_cart(X, y, weights=None, max_depth=10**9, min_leaf=1):
    """Weighted gini CART; leaf value is the weighted positive-class fraction."""
    return grow_tree(X, y, weights=weights, mode=MODE_GINI,
                     max_depth=max_depth, min_leaf=min_leaf)
