"""Primal network simplex on the bipartite transportation graph.

Nodes are the ``n`` source rows, the ``m`` target columns and an artificial
root.  Real arcs run row -> column; artificial arcs run row -> root and
root -> column with a big-M cost, and together they form the initial basis
(all flows positive).  Every iteration recomputes node potentials with a
breadth-first walk of the basis tree from the root, prices the real arcs,
and pivots around the cycle closed by the entering arc.

Two pivot rules, both free of cycling:

``"block"``
    Most negative reduced cost within a rotating block of arcs; the leaving
    arc is the last blocking arc met when walking the cycle from its apex
    along the entering arc's orientation, which keeps the tree strongly
    feasible.
``"bland"``
    Lowest-index arc with negative reduced cost enters; the lowest-index
    blocking arc leaves.  Slow on degenerate instances; kept as a reference.

Written as plain loops over arrays so that numba can compile it; without
numba it runs as ordinary (slow) Python.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

STATUS_OPTIMAL = 0
STATUS_MAX_ITER = 1
STATUS_BROKEN_TREE = 2
STATUS_ARTIFICIAL_FLOW = 3

RULE_BLOCK = 0
RULE_BLAND = 1


@njit(cache=True)
def _arc_ends(e, n, m):
    nm = n * m
    if e < nm:
        i = e // m
        return i, n + (e - i * m)
    if e < nm + n:
        return e - nm, n + m
    return n + m, n + (e - nm - n)


@njit(cache=True)
def _arc_cost(e, n, m, cost, big_m):
    nm = n * m
    if e < nm:
        i = e // m
        return cost[i, e - i * m]
    return big_m


@njit(cache=True)
def _walk_tree(n, m, arcs, cost, big_m, pot, parent_arc, parent_node, depth,
               queue, adj_start, adj_arc, fill):
    """Potentials (``pot[head] = pot[tail] + cost``) and parents from the root."""
    nodes = n + m + 1
    root = n + m
    k = arcs.shape[0]
    for t in range(nodes + 1):
        fill[t] = 0
    for s in range(k):
        a, b = _arc_ends(arcs[s], n, m)
        fill[a + 1] += 1
        fill[b + 1] += 1
    adj_start[0] = 0
    for t in range(nodes):
        adj_start[t + 1] = adj_start[t] + fill[t + 1]
        fill[t + 1] = 0
    for s in range(k):
        a, b = _arc_ends(arcs[s], n, m)
        adj_arc[adj_start[a] + fill[a + 1]] = s
        fill[a + 1] += 1
        adj_arc[adj_start[b] + fill[b + 1]] = s
        fill[b + 1] += 1
    for t in range(nodes):
        depth[t] = -1
    depth[root] = 0
    parent_arc[root] = -1
    parent_node[root] = -1
    pot[root] = 0.0
    head = 0
    tail = 1
    queue[0] = root
    while head < tail:
        node = queue[head]
        head += 1
        for q in range(adj_start[node], adj_start[node + 1]):
            s = adj_arc[q]
            a, b = _arc_ends(arcs[s], n, m)
            other = b if node == a else a
            if depth[other] >= 0:
                continue
            depth[other] = depth[node] + 1
            parent_arc[other] = s
            parent_node[other] = node
            c = _arc_cost(arcs[s], n, m, cost, big_m)
            if other == b:
                pot[other] = pot[node] + c
            else:
                pot[other] = pot[node] - c
            queue[tail] = other
            tail += 1
    return tail


@njit(cache=True)
def _solve(a, b, cost, rule, max_iter, tol, block):
    n = a.shape[0]
    m = b.shape[0]
    nm = n * m
    nodes = n + m + 1
    k = n + m
    big_m = (n + m + 1) * (np.abs(cost).max() + 1.0)
    arcs = np.empty(k, dtype=np.int64)
    flow = np.empty(k)
    for i in range(n):
        arcs[i] = nm + i
        flow[i] = a[i]
    for j in range(m):
        arcs[n + j] = nm + n + j
        flow[n + j] = b[j]
    pot = np.zeros(nodes)
    parent_arc = np.empty(nodes, dtype=np.int64)
    parent_node = np.empty(nodes, dtype=np.int64)
    depth = np.empty(nodes, dtype=np.int64)
    queue = np.empty(nodes, dtype=np.int64)
    adj_start = np.empty(nodes + 1, dtype=np.int64)
    adj_arc = np.empty(2 * k, dtype=np.int64)
    fill = np.empty(nodes + 1, dtype=np.int64)
    down = np.empty(nodes, dtype=np.int64)
    up = np.empty(nodes, dtype=np.int64)
    start = 0
    iters = 0
    status = STATUS_OPTIMAL
    while True:
        reached = _walk_tree(n, m, arcs, cost, big_m, pot, parent_arc,
                             parent_node, depth, queue, adj_start, adj_arc, fill)
        if reached != nodes:
            status = STATUS_BROKEN_TREE
            break
        enter = -1
        if rule == RULE_BLAND:
            for e in range(nm):
                i = e // m
                j = e - i * m
                if cost[i, j] + pot[i] - pot[n + j] < -tol:
                    enter = e
                    break
        else:
            best = -tol
            scanned = 0
            pos = start
            while scanned < nm:
                i = pos // m
                j = pos - i * m
                r = cost[i, j] + pot[i] - pot[n + j]
                if r < best:
                    best = r
                    enter = pos
                scanned += 1
                pos += 1
                if pos == nm:
                    pos = 0
                if enter >= 0 and scanned % block == 0:
                    break
            start = pos
        if enter < 0:
            break
        if iters >= max_iter:
            status = STATUS_MAX_ITER
            break
        iters += 1
        tail_node = enter // m
        head_node = n + (enter - tail_node * m)
        # down: arcs from the tail node up to the apex; up: from the head node
        p = tail_node
        q = head_node
        nd = 0
        nu = 0
        while depth[p] > depth[q]:
            down[nd] = parent_arc[p]
            nd += 1
            p = parent_node[p]
        while depth[q] > depth[p]:
            up[nu] = parent_arc[q]
            nu += 1
            q = parent_node[q]
        while p != q:
            down[nd] = parent_arc[p]
            nd += 1
            p = parent_node[p]
            up[nu] = parent_arc[q]
            nu += 1
            q = parent_node[q]
        # Orientation: apex -> tail node (down reversed), entering arc,
        # head node -> apex (up in order).  An arc is pushed backwards when
        # its direction opposes that walk.
        theta = np.inf
        leave = -1
        leave_key = nm + n + m
        for s in range(nd - 1, -1, -1):
            slot = down[s]
            child = _arc_ends(arcs[slot], n, m)[1]
            # walking parent -> child; backward if the arc points child -> parent
            is_back = parent_arc[child] != slot
            if is_back:
                x = flow[slot]
                if rule == RULE_BLAND:
                    if x < theta or (x == theta and arcs[slot] < leave_key):
                        theta = x
                        leave = slot
                        leave_key = arcs[slot]
                elif x <= theta:
                    theta = x
                    leave = slot
        for s in range(nu):
            slot = up[s]
            tail_of_arc = _arc_ends(arcs[slot], n, m)[0]
            # walking child -> parent; backward if the arc points parent -> child
            is_back = parent_arc[tail_of_arc] != slot
            if is_back:
                x = flow[slot]
                if rule == RULE_BLAND:
                    if x < theta or (x == theta and arcs[slot] < leave_key):
                        theta = x
                        leave = slot
                        leave_key = arcs[slot]
                elif x <= theta:
                    theta = x
                    leave = slot
        for s in range(nd):
            slot = down[s]
            child = _arc_ends(arcs[slot], n, m)[1]
            if parent_arc[child] != slot:
                flow[slot] -= theta
                if flow[slot] < 0.0:
                    flow[slot] = 0.0
            else:
                flow[slot] += theta
        for s in range(nu):
            slot = up[s]
            tail_of_arc = _arc_ends(arcs[slot], n, m)[0]
            if parent_arc[tail_of_arc] != slot:
                flow[slot] -= theta
                if flow[slot] < 0.0:
                    flow[slot] = 0.0
            else:
                flow[slot] += theta
        arcs[leave] = enter
        flow[leave] = theta
    if status == STATUS_OPTIMAL:
        for s in range(k):
            if arcs[s] >= nm and flow[s] > 1e-12:
                status = STATUS_ARTIFICIAL_FLOW
    u = -pot[:n].copy()
    v = pot[n:n + m].copy()
    return arcs, flow, u, v, iters, status


def network_simplex(a, b, cost, rule="block", max_iter=None, tol=None):
    """Solve ``min <cost, x>`` over couplings of positive masses ``a`` and ``b``.

    Returns ``(plan, u, v, iterations, status)`` where ``u`` and ``v`` are
    optimal duals: ``u[i] + v[j] <= cost[i, j]`` with equality on the support
    of the plan.  ``b`` is rescaled to the total of ``a``.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    n, m = cost.shape
    b = b * (a.sum() / b.sum())
    scale = max(1.0, float(np.abs(cost).max()) if cost.size else 1.0)
    if tol is None:
        tol = 1e-11 * scale
    if max_iter is None:
        max_iter = max(200_000, 50 * n * m)
    codes = {"block": RULE_BLOCK, "bland": RULE_BLAND}
    block = max(16, int(np.sqrt(n * m)))
    arcs, flow, u, v, iters, status = _solve(
        a, b, cost, codes[rule], int(max_iter), float(tol), int(block)
    )
    plan = np.zeros((n, m))
    real = arcs < n * m
    rows, cols = np.divmod(arcs[real], m)
    np.add.at(plan, (rows, cols), flow[real])
    return plan, u, v, int(iters), int(status)
