# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled kernels.  ``_fallback.py`` mirrors every public name here."""

from libc.stdint cimport int64_t, uint8_t, uint64_t
from libcpp.unordered_set cimport unordered_set

import numpy as np

from corrclust.errors import InvalidInputError


def pivot_assign(const int64_t[:] indptr, const int64_t[:] indices,
                 const int64_t[:] order, const int64_t[:] rank,
                 const int64_t[:] deg, const uint8_t[:] interesting, double K):
    """Greedy MIS over interesting nodes in ``order`` plus guarded joins.

    Returns ``(labels, is_pivot)``.  A pivot claims every still-unclaimed
    neighbor ``w`` and labels it with itself when ``rank[pivot] * deg[w] < K``;
    a claimed neighbor failing the guard stays a singleton.
    """
    cdef Py_ssize_t n = order.shape[0]
    labels_arr = np.arange(n, dtype=np.int64)
    pivot_arr = np.zeros(n, dtype=np.uint8)
    claimed_arr = np.zeros(n, dtype=np.uint8)
    cdef int64_t[:] labels = labels_arr
    cdef uint8_t[:] is_pivot = pivot_arr
    cdef uint8_t[:] claimed = claimed_arr
    cdef Py_ssize_t i, k
    cdef int64_t u, w
    cdef double rv
    for i in range(n):
        u = order[i]
        if claimed[u] or not interesting[u]:
            continue
        is_pivot[u] = 1
        claimed[u] = 1
        rv = <double>rank[u]
        for k in range(indptr[u], indptr[u + 1]):
            w = indices[k]
            if claimed[w]:
                continue
            claimed[w] = 1
            if rv * deg[w] < K:
                labels[w] = u
    return labels_arr, pivot_arr


def batch_pivot_costs(const int64_t[:] indptr, const int64_t[:] indices,
                      const int64_t[:] edge_u, const int64_t[:] edge_v,
                      const int64_t[:] deg, const int64_t[:, :] orders, double K):
    """Disagreements of truncated pivot for every row of ``orders``."""
    cdef Py_ssize_t T = orders.shape[0], n = orders.shape[1], m = edge_u.shape[0]
    cdef Py_ssize_t t, i, k, e
    cdef int64_t u, w, cost, s
    costs_arr = np.zeros(T, dtype=np.int64)
    cdef int64_t[:] costs = costs_arr
    cdef int64_t[:] rank = np.empty(n, dtype=np.int64)
    cdef int64_t[:] labels = np.empty(n, dtype=np.int64)
    cdef int64_t[:] size = np.empty(n, dtype=np.int64)
    cdef int64_t[:] inner = np.empty(n, dtype=np.int64)
    cdef uint8_t[:] claimed = np.empty(n, dtype=np.uint8)
    cdef uint8_t[:] interesting = np.empty(n, dtype=np.uint8)
    cdef double rv
    for t in range(T):
        for i in range(n):
            rank[orders[t, i]] = i + 1
        for u in range(n):
            labels[u] = u
            claimed[u] = 0
            size[u] = 0
            inner[u] = 0
            interesting[u] = deg[u] == 0 or <double>(rank[u] * deg[u]) < K
        for i in range(n):
            u = orders[t, i]
            if claimed[u] or not interesting[u]:
                continue
            claimed[u] = 1
            rv = <double>rank[u]
            for k in range(indptr[u], indptr[u + 1]):
                w = indices[k]
                if claimed[w]:
                    continue
                claimed[w] = 1
                if rv * deg[w] < K:
                    labels[w] = u
        cost = 0
        for e in range(m):
            if labels[edge_u[e]] == labels[edge_v[e]]:
                inner[labels[edge_u[e]]] += 1
            else:
                cost += 1
        for u in range(n):
            size[labels[u]] += 1
        for u in range(n):
            s = size[u]
            cost += s * (s - 1) // 2 - inner[u]
        costs[t] = cost
    return costs_arr


def greedy_fill(const int64_t[:] indptr, const int64_t[:] indices,
                const int64_t[:] edge_ids, uint8_t[:] revealed,
                int64_t[:] room, const uint8_t[:] unlimited,
                const int64_t[:] node_order):
    """Reveal unrevealed edges while both endpoints have room.

    Nodes in ``node_order`` drive the scan; a partner flagged ``unlimited``
    accepts any number of edges.  Mutates ``revealed`` and ``room`` and
    returns the emitted edge ids in order.
    """
    cdef Py_ssize_t i, k, cnt = 0
    cdef int64_t x, y, e
    out_arr = np.empty(edge_ids.shape[0] // 2 + 1, dtype=np.int64)
    cdef int64_t[:] out = out_arr
    for i in range(node_order.shape[0]):
        x = node_order[i]
        if unlimited[x] or room[x] <= 0:
            continue
        for k in range(indptr[x], indptr[x + 1]):
            e = edge_ids[k]
            if revealed[e]:
                continue
            y = indices[k]
            if unlimited[y]:
                pass
            elif room[y] > 0:
                room[y] -= 1
            else:
                continue
            revealed[e] = 1
            room[x] -= 1
            out[cnt] = e
            cnt += 1
            if room[x] <= 0:
                break
    return out_arr[:cnt].copy()


def cross_edges(const int64_t[:] indptr, const int64_t[:] indices,
                const int64_t[:] edge_ids, uint8_t[:] revealed,
                int64_t[:] room, const uint8_t[:] dead,
                const int64_t[:] candidates):
    """Pick one unrevealed edge per candidate that pushes it into the next class.

    Partners are preferred in the order: dropped node, live node with room
    (which absorbs the edge without switching), live full node not yet used
    in this batch (which switches as well).
    """
    cdef Py_ssize_t n = room.shape[0], i, k, cnt = 0
    cdef int64_t x, y, e, best, best_y
    cdef int kind, best_kind
    used_arr = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[:] used = used_arr
    out_arr = np.empty(candidates.shape[0], dtype=np.int64)
    cdef int64_t[:] out = out_arr
    for i in range(candidates.shape[0]):
        x = candidates[i]
        if used[x]:
            continue
        best = -1
        best_y = -1
        best_kind = -1
        for k in range(indptr[x], indptr[x + 1]):
            e = edge_ids[k]
            if revealed[e]:
                continue
            y = indices[k]
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
        used[x] = 1
        if best_kind == 1:
            room[best_y] -= 1
        elif best_kind == 0:
            used[best_y] = 1
        out[cnt] = best
        cnt += 1
    return out_arr[:cnt].copy()


cdef class StreamState:
    """Single-pass edge-slot bookkeeping for both streaming variants.

    ``mode`` 0 keeps a fixed rank per node and drops a node once
    ``rank * degree >= K``.  ``mode`` 1 tracks geometric degree classes and
    reveals one hidden rank bit per class switch; a 1 bit drops the node.
    Slot ``2e`` belongs to the first endpoint of event ``e``, ``2e+1`` to
    the second.
    """

    cdef readonly Py_ssize_t n
    cdef readonly int mode
    cdef readonly double K
    cdef readonly int64_t theta0
    cdef readonly int rank_bits
    cdef readonly int64_t num_events
    cdef readonly int64_t slots
    cdef readonly int64_t peak
    cdef int64_t[:] _rank
    cdef uint64_t[:] _bits
    cdef int64_t[:] _deg
    cdef int64_t[:] _bound
    cdef int64_t[:] _switches
    cdef uint8_t[:] _dead
    cdef int64_t[:] _head
    cdef int64_t[:] _eu
    cdef int64_t[:] _ev
    cdef int64_t[:] _nxt
    cdef uint8_t[:] _flag
    cdef int64_t[:] _trace
    cdef object _arrays
    cdef Py_ssize_t _cap
    cdef unordered_set[int64_t] _seen
    cdef int64_t[:] _audit
    cdef Py_ssize_t _audit_pos
    cdef list _deletions
    cdef list _mismatches
    cdef readonly int64_t audits_done

    def __init__(self, Py_ssize_t n, int mode, double K=0.0, rank=None, bits=None,
                 int rank_bits=0, int64_t theta0=1, Py_ssize_t capacity=1024,
                 audit_events=None):
        self.n = n
        self.mode = mode
        self.K = K
        self.theta0 = theta0
        self.rank_bits = rank_bits
        self.num_events = 0
        self.slots = 0
        self.peak = 0
        self.audits_done = 0
        if mode == 0:
            self._rank = np.ascontiguousarray(rank, dtype=np.int64)
        else:
            self._bits = np.ascontiguousarray(bits, dtype=np.uint64)
        self._deg = np.zeros(n, dtype=np.int64)
        self._bound = np.full(n, theta0, dtype=np.int64)
        self._switches = np.zeros(n, dtype=np.int64)
        self._dead = np.zeros(n, dtype=np.uint8)
        self._head = np.full(n, -1, dtype=np.int64)
        self._cap = 0
        self._arrays = {}
        self._grow(max(capacity, 16))
        if audit_events is None:
            audit_events = np.zeros(0, dtype=np.int64)
        self._audit = np.sort(np.asarray(audit_events, dtype=np.int64))
        self._audit_pos = 0
        self._deletions = []
        self._mismatches = []

    cdef _grow(self, Py_ssize_t cap):
        cdef Py_ssize_t old = self._cap
        specs = {"eu": (cap, np.int64), "ev": (cap, np.int64), "trace": (cap, np.int64),
                 "nxt": (2 * cap, np.int64), "flag": (2 * cap, np.uint8)}
        for name, (size, dt) in specs.items():
            new = np.zeros(size, dtype=dt)
            if old:
                prev = self._arrays[name]
                new[: prev.shape[0]] = prev
            self._arrays[name] = new
        self._eu = self._arrays["eu"]
        self._ev = self._arrays["ev"]
        self._trace = self._arrays["trace"]
        self._nxt = self._arrays["nxt"]
        self._flag = self._arrays["flag"]
        self._cap = cap

    cdef int64_t _kill(self, int64_t x, int64_t event):
        cdef int64_t s = self._head[x], cnt = 0
        while s >= 0:
            if self._flag[s]:
                self._flag[s] = 0
                cnt += 1
            s = self._nxt[s]
        self._head[x] = -1
        self._dead[x] = 1
        self.slots -= cnt
        self._deletions.append((x, event, cnt))
        return cnt

    cdef int _touch(self, int64_t x, int64_t slot, int64_t event) except -1:
        cdef int64_t j
        cdef uint64_t bit
        if self.mode == 0:
            if not self._dead[x] and <double>(self._rank[x] * self._deg[x]) >= self.K:
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
            self._flag[slot] = 1
            self._nxt[slot] = self._head[x]
            self._head[x] = slot
            self.slots += 1
        return 0

    cdef int _push(self, int64_t u, int64_t v) except -1:
        cdef int64_t lo, hi, e
        if u < 0 or v < 0 or u >= self.n or v >= self.n:
            raise InvalidInputError(f"stream edge ({u}, {v}) outside [0, {self.n})")
        if u == v:
            raise InvalidInputError(f"stream self-loop at node {u}")
        lo = u if u < v else v
        hi = v if u < v else u
        if not self._seen.insert(lo * self.n + hi).second:
            raise InvalidInputError(f"duplicate stream edge ({lo}, {hi})")
        e = self.num_events
        if e >= self._cap:
            self._grow(2 * self._cap)
        self._eu[e] = u
        self._ev[e] = v
        self._deg[u] += 1
        self._deg[v] += 1
        self._touch(u, 2 * e, e + 1)
        self._touch(v, 2 * e + 1, e + 1)
        self.num_events = e + 1
        self._trace[e] = self.slots
        if self.slots > self.peak:
            self.peak = self.slots
        while self._audit_pos < self._audit.shape[0] and self._audit[self._audit_pos] <= e + 1:
            if self._audit[self._audit_pos] == e + 1:
                self._run_audit(e + 1)
            self._audit_pos += 1
        return 0

    cdef _run_audit(self, int64_t event):
        cdef int64_t got = self.recount()
        self.audits_done += 1
        if got != self.slots:
            self._mismatches.append((event, self.slots, got))

    def push(self, int64_t u, int64_t v):
        self._push(u, v)

    def push_many(self, const int64_t[:] eu, const int64_t[:] ev):
        cdef Py_ssize_t i
        for i in range(eu.shape[0]):
            self._push(eu[i], ev[i])

    cpdef int64_t recount(self):
        """Count set slot flags directly, independent of the running total."""
        cdef int64_t i, total = 0
        for i in range(2 * self.num_events):
            total += self._flag[i]
        return total

    def degree(self, int64_t u):
        return self._deg[u]

    def is_dead(self, int64_t u):
        return bool(self._dead[u])

    def degrees(self):
        return np.asarray(self._deg).copy()

    def dead(self):
        return np.asarray(self._dead).astype(bool)

    def switches(self):
        return np.asarray(self._switches).copy()

    def trace(self):
        return np.asarray(self._trace)[: self.num_events].copy()

    def deletions(self):
        return list(self._deletions)

    def audit_mismatches(self):
        return list(self._mismatches)

    def events(self):
        k = self.num_events
        return np.asarray(self._eu)[:k].copy(), np.asarray(self._ev)[:k].copy()

    def stored_neighbors(self, int64_t x):
        cdef int64_t s = self._head[x], e
        out = []
        while s >= 0:
            if self._flag[s]:
                e = s >> 1
                out.append(self._ev[e] if (s & 1) == 0 else self._eu[e])
            s = self._nxt[s]
        out.reverse()
        return out

    def stored_csr(self):
        """Adjacency of the stored slots: row ``x`` lists neighbors kept for ``x``."""
        cdef Py_ssize_t n = self.n
        cdef int64_t x, s, e, pos
        indptr_arr = np.zeros(n + 1, dtype=np.int64)
        cdef int64_t[:] indptr = indptr_arr
        for s in range(2 * self.num_events):
            if self._flag[s]:
                e = s >> 1
                x = self._eu[e] if (s & 1) == 0 else self._ev[e]
                indptr[x + 1] += 1
        for x in range(n):
            indptr[x + 1] += indptr[x]
        indices_arr = np.empty(indptr[n], dtype=np.int64)
        cdef int64_t[:] indices = indices_arr
        fill_arr = indptr_arr[:-1].copy()
        cdef int64_t[:] fill = fill_arr
        for s in range(2 * self.num_events):
            if self._flag[s]:
                e = s >> 1
                if (s & 1) == 0:
                    x = self._eu[e]
                    indices[fill[x]] = self._ev[e]
                else:
                    x = self._ev[e]
                    indices[fill[x]] = self._eu[e]
                fill[x] += 1
        for x in range(n):
            indices_arr[indptr[x]:indptr[x + 1]].sort()
        return indptr_arr, indices_arr
