"""Pure-Python kernels, used when the compiled extension is unavailable.

Every function and class mirrors ``_core.pyx`` name for name and returns
identical results for identical inputs.
"""

import numpy as np

from .errors import InvalidInputError


def pivot_assign(indptr, indices, order, rank, deg, interesting, K):
    indptr = indptr.tolist()
    indices = indices.tolist()
    rank = rank.tolist()
    deg = deg.tolist()
    interesting = interesting.tolist()
    n = len(order)
    labels = list(range(n))
    is_pivot = [0] * n
    claimed = [False] * n
    for u in order.tolist():
        if claimed[u] or not interesting[u]:
            continue
        is_pivot[u] = 1
        claimed[u] = True
        rv = rank[u]
        for k in range(indptr[u], indptr[u + 1]):
            w = indices[k]
            if claimed[w]:
                continue
            claimed[w] = True
            if rv * deg[w] < K:
                labels[w] = u
    return np.array(labels, dtype=np.int64), np.array(is_pivot, dtype=np.uint8)


def batch_pivot_costs(indptr, indices, edge_u, edge_v, deg, orders, K):
    n = orders.shape[1]
    deg_l = deg.tolist()
    eu = edge_u.tolist()
    ev = edge_v.tolist()
    costs = np.zeros(orders.shape[0], dtype=np.int64)
    for t, order in enumerate(orders):
        rank = np.empty(n, dtype=np.int64)
        rank[order] = np.arange(1, n + 1)
        interesting = [d == 0 or r * d < K for r, d in zip(rank.tolist(), deg_l)]
        labels, _ = pivot_assign(indptr, indices, order, rank, deg, np.array(interesting, np.uint8), K)
        labels = labels.tolist()
        cost = 0
        size = [0] * n
        inner = [0] * n
        for a, b in zip(eu, ev):
            if labels[a] == labels[b]:
                inner[labels[a]] += 1
            else:
                cost += 1
        for lab in labels:
            size[lab] += 1
        for s, k in zip(size, inner):
            cost += s * (s - 1) // 2 - k
        costs[t] = cost
    return costs


def greedy_fill(indptr, indices, edge_ids, revealed, room, unlimited, node_order):
    out = []
    for x in node_order.tolist():
        if unlimited[x] or room[x] <= 0:
            continue
        for k in range(int(indptr[x]), int(indptr[x + 1])):
            e = int(edge_ids[k])
            if revealed[e]:
                continue
            y = int(indices[k])
            if not unlimited[y]:
                if room[y] <= 0:
                    continue
                room[y] -= 1
            revealed[e] = 1
            room[x] -= 1
            out.append(e)
            if room[x] <= 0:
                break
    return np.array(out, dtype=np.int64)


def cross_edges(indptr, indices, edge_ids, revealed, room, dead, candidates):
    used = np.zeros(len(room), dtype=bool)
    out = []
    for x in candidates.tolist():
        if used[x]:
            continue
        best, best_y, best_kind = -1, -1, -1
        for k in range(int(indptr[x]), int(indptr[x + 1])):
            e = int(edge_ids[k])
            if revealed[e]:
                continue
            y = int(indices[k])
            if dead[y]:
                kind = 2
            elif room[y] > 0:
                kind = 1
            elif not used[y]:
                kind = 0
            else:
                continue
            if kind > best_kind:
                best, best_y, best_kind = e, y, kind
                if kind == 2:
                    break
        if best < 0:
            continue
        revealed[best] = 1
        used[x] = True
        if best_kind == 1:
            room[best_y] -= 1
        elif best_kind == 0:
            used[best_y] = True
        out.append(best)
    return np.array(out, dtype=np.int64)


class StreamState:
    """Per-node stored-neighbor sets; see the compiled twin for semantics."""

    def __init__(self, n, mode, K=0.0, rank=None, bits=None, rank_bits=0, theta0=1,
                 capacity=1024, audit_events=None):
        self.n = n
        self.mode = mode
        self.K = K
        self.theta0 = theta0
        self.rank_bits = rank_bits
        self.num_events = 0
        self.slots = 0
        self.peak = 0
        self.audits_done = 0
        self._rank = None if rank is None else [int(r) for r in rank]
        self._bits = None if bits is None else [int(b) for b in bits]
        self._deg = [0] * n
        self._bound = [theta0] * n
        self._switches = [0] * n
        self._dead = [False] * n
        self._stored = [[] for _ in range(n)]
        self._seen = set()
        self._eu = []
        self._ev = []
        self._trace = []
        self._deletions = []
        self._mismatches = []
        audit = [] if audit_events is None else sorted(int(a) for a in audit_events)
        self._audit = set(audit)

    def _kill(self, x, event):
        cnt = len(self._stored[x])
        self._stored[x] = []
        self._dead[x] = True
        self.slots -= cnt
        self._deletions.append((x, event, cnt))

    def _touch(self, x, other, event):
        if self.mode == 0:
            if not self._dead[x] and self._rank[x] * self._deg[x] >= self.K:
                self._kill(x, event)
        elif self._deg[x] > self._bound[x]:
            self._bound[x] *= 2
            self._switches[x] += 1
            j = self._switches[x]
            if j > self.rank_bits:
                raise RuntimeError(f"node {x} switched classes more than {self.rank_bits} times")
            bit = (self._bits[x] >> (self.rank_bits - j)) & 1
            if bit and not self._dead[x]:
                self._kill(x, event)
        if not self._dead[x]:
            self._stored[x].append(other)
            self.slots += 1

    def push(self, u, v):
        u, v = int(u), int(v)
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise InvalidInputError(f"stream edge ({u}, {v}) outside [0, {self.n})")
        if u == v:
            raise InvalidInputError(f"stream self-loop at node {u}")
        key = (min(u, v), max(u, v))
        if key in self._seen:
            raise InvalidInputError(f"duplicate stream edge {key}")
        self._seen.add(key)
        event = self.num_events + 1
        self._eu.append(u)
        self._ev.append(v)
        self._deg[u] += 1
        self._deg[v] += 1
        self._touch(u, v, event)
        self._touch(v, u, event)
        self.num_events = event
        self._trace.append(self.slots)
        self.peak = max(self.peak, self.slots)
        if event in self._audit:
            got = self.recount()
            self.audits_done += 1
            if got != self.slots:
                self._mismatches.append((event, self.slots, got))

    def push_many(self, eu, ev):
        for u, v in zip(np.asarray(eu).tolist(), np.asarray(ev).tolist()):
            self.push(u, v)

    def recount(self):
        return sum(len(s) for s in self._stored)

    def degree(self, u):
        return self._deg[u]

    def is_dead(self, u):
        return self._dead[u]

    def degrees(self):
        return np.array(self._deg, dtype=np.int64)

    def dead(self):
        return np.array(self._dead, dtype=bool)

    def switches(self):
        return np.array(self._switches, dtype=np.int64)

    def trace(self):
        return np.array(self._trace, dtype=np.int64)

    def deletions(self):
        return list(self._deletions)

    def audit_mismatches(self):
        return list(self._mismatches)

    def events(self):
        return np.array(self._eu, dtype=np.int64), np.array(self._ev, dtype=np.int64)

    def stored_neighbors(self, x):
        return list(self._stored[x])

    def stored_csr(self):
        counts = [len(s) for s in self._stored]
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        indices = np.array([w for s in self._stored for w in sorted(s)], dtype=np.int64)
        return indptr, indices
