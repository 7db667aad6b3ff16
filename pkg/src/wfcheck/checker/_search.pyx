# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Product search over CSR graphs, compiled implementation.

Same contract and visiting order as ``_search_py``; see there for the
graph encoding.
"""

from libc.stdlib cimport free, malloc
from libc.string cimport memset

ctypedef long long i64
ctypedef unsigned long long u64


cdef struct Ctx:
    i64 B
    const i64* m_off
    const i64* m_tgt
    const u64* labels
    const i64* b_off
    const i64* b_tgt
    const u64* b_pos
    const u64* b_neg


cdef inline i64 _next(Ctx* c, i64 u, i64* k, i64* edge) noexcept nogil:
    cdef i64 s = u // c.B
    cdef i64 q = u % c.B
    cdef i64 m0 = c.m_off[s]
    cdef i64 b0 = c.b_off[q]
    cdef i64 db = c.b_off[q + 1] - b0
    cdef i64 tot = (c.m_off[s + 1] - m0) * db
    cdef i64 e, f, t
    cdef u64 lab
    while k[0] < tot:
        e = m0 + k[0] // db
        f = b0 + k[0] % db
        k[0] += 1
        t = c.m_tgt[e]
        lab = c.labels[t]
        if (c.b_pos[f] & ~lab) == 0 and (c.b_neg[f] & lab) == 0:
            edge[0] = e
            return t * c.B + c.b_tgt[f]
    return -1


cdef list _initial(Ctx* c, i64 b_init):
    cdef list out = []
    cdef u64 lab = c.labels[0]
    cdef i64 f
    for f in range(c.b_off[b_init], c.b_off[b_init + 1]):
        if (c.b_pos[f] & ~lab) == 0 and (c.b_neg[f] & lab) == 0:
            if c.b_tgt[f] not in out:
                out.append(c.b_tgt[f])
    return out


cdef class _Stack:
    """Growable parallel arrays (node, cursor, incoming edge)."""
    cdef i64* node
    cdef i64* cur
    cdef i64* into
    cdef i64 n, cap

    def __cinit__(self):
        self.cap = 1024
        self.n = 0
        self.node = <i64*>malloc(self.cap * sizeof(i64))
        self.cur = <i64*>malloc(self.cap * sizeof(i64))
        self.into = <i64*>malloc(self.cap * sizeof(i64))
        if not self.node or not self.cur or not self.into:
            raise MemoryError()

    def __dealloc__(self):
        free(self.node)
        free(self.cur)
        free(self.into)

    cdef int push(self, i64 v, i64 e) except -1:
        cdef i64* a
        cdef i64* b
        cdef i64* d
        if self.n == self.cap:
            a = <i64*>malloc(2 * self.cap * sizeof(i64))
            b = <i64*>malloc(2 * self.cap * sizeof(i64))
            d = <i64*>malloc(2 * self.cap * sizeof(i64))
            if not a or not b or not d:
                raise MemoryError()
            for i in range(self.n):
                a[i] = self.node[i]
                b[i] = self.cur[i]
                d[i] = self.into[i]
            free(self.node)
            free(self.cur)
            free(self.into)
            self.node, self.cur, self.into = a, b, d
            self.cap *= 2
        self.node[self.n] = v
        self.cur[self.n] = 0
        self.into[self.n] = e
        self.n += 1
        return 0


cdef Ctx _ctx(const i64[:] m_off, const i64[:] m_tgt, const u64[:] labels,
              const i64[:] b_off, const i64[:] b_tgt, const u64[:] b_pos, const u64[:] b_neg):
    cdef Ctx c
    c.B = b_off.shape[0] - 1
    c.m_off = &m_off[0]
    c.m_tgt = &m_tgt[0] if m_tgt.shape[0] else NULL
    c.labels = &labels[0]
    c.b_off = &b_off[0]
    c.b_tgt = &b_tgt[0] if b_tgt.shape[0] else NULL
    c.b_pos = &b_pos[0] if b_pos.shape[0] else NULL
    c.b_neg = &b_neg[0] if b_neg.shape[0] else NULL
    return c


def ndfs(const i64[:] m_off, const i64[:] m_tgt, const u64[:] labels, const i64[:] b_off,
         const i64[:] b_tgt, const u64[:] b_pos, const u64[:] b_neg, const unsigned char[:] b_acc,
         i64 b_init):
    cdef Ctx c = _ctx(m_off, m_tgt, labels, b_off, b_tgt, b_pos, b_neg)
    cdef i64 n = m_off.shape[0] - 1
    cdef i64 total = n * c.B
    cdef unsigned char* blue = <unsigned char*>malloc(total + 1)
    cdef unsigned char* red = <unsigned char*>malloc(total + 1)
    cdef unsigned char* onstack = <unsigned char*>malloc(total + 1)
    if not blue or not red or not onstack:
        free(blue); free(red); free(onstack)
        raise MemoryError()
    memset(blue, 0, total + 1)
    memset(red, 0, total + 1)
    memset(onstack, 0, total + 1)
    cdef _Stack st, rs
    cdef i64 r, u, v, e, i, j, closing, target
    try:
        for r in _initial(&c, b_init):
            if blue[r]:
                continue
            st = _Stack()
            st.push(r, -1)
            blue[r] = 1
            onstack[r] = 1
            while st.n:
                u = st.node[st.n - 1]
                v = _next(&c, u, &st.cur[st.n - 1], &e)
                if v >= 0:
                    if not blue[v]:
                        blue[v] = 1
                        onstack[v] = 1
                        st.push(v, e)
                    continue
                if b_acc[u % c.B]:
                    rs = _Stack()
                    rs.push(u, -1)
                    closing = -1
                    while rs.n:
                        v = _next(&c, rs.node[rs.n - 1], &rs.cur[rs.n - 1], &e)
                        if v < 0:
                            rs.n -= 1
                            continue
                        if onstack[v]:
                            closing = e
                            target = v
                            break
                        if not red[v]:
                            red[v] = 1
                            rs.push(v, e)
                    if closing >= 0:
                        nodes = [st.node[i] for i in range(st.n)]
                        nodes += [rs.node[i] for i in range(1, rs.n)]
                        edges = [st.into[i] for i in range(1, st.n)]
                        edges += [rs.into[i] for i in range(1, rs.n)]
                        edges.append(closing)
                        for j in range(st.n):
                            if st.node[j] == target:
                                break
                        return nodes, edges, j
                st.n -= 1
                onstack[u] = 0
        return None
    finally:
        free(blue)
        free(red)
        free(onstack)


def accepting_scc(const i64[:] m_off, const i64[:] m_tgt, const i64[:] m_pid,
                  const u64[:] labels, const i64[:] b_off, const i64[:] b_tgt,
                  const u64[:] b_pos, const u64[:] b_neg, const unsigned char[:] b_acc,
                  i64 b_init, bint fair):
    cdef Ctx c = _ctx(m_off, m_tgt, labels, b_off, b_tgt, b_pos, b_neg)
    cdef i64 n = m_off.shape[0] - 1
    cdef i64 total = n * c.B
    cdef i64 P = 0
    cdef i64 i
    for i in range(m_pid.shape[0]):
        if m_pid[i] + 1 > P:
            P = m_pid[i] + 1
    cdef i64* index = <i64*>malloc((total + 1) * sizeof(i64))
    cdef i64* low = <i64*>malloc((total + 1) * sizeof(i64))
    cdef i64* comp = <i64*>malloc((total + 1) * sizeof(i64))
    cdef i64* sstack = <i64*>malloc((total + 1) * sizeof(i64))
    cdef unsigned char* onstack = <unsigned char*>malloc(total + 1)
    cdef i64* count = <i64*>malloc((P + 1) * sizeof(i64))
    cdef unsigned char* moved = <unsigned char*>malloc(P + 1)
    cdef unsigned char* seen = <unsigned char*>malloc(P + 1)
    if not (index and low and comp and sstack and onstack and count and moved and seen):
        free(index); free(low); free(comp); free(sstack); free(onstack)
        free(count); free(moved); free(seen)
        raise MemoryError()
    for i in range(total + 1):
        index[i] = -1
        comp[i] = -1
    memset(onstack, 0, total + 1)
    cdef i64 counter = 0, ncomp = 0, sp = 0
    cdef i64 r, u, v, e, w, k, s, p, size, start
    cdef bint acc, internal, ok
    cdef _Stack st
    try:
        for r in _initial(&c, b_init):
            if index[r] >= 0:
                continue
            index[r] = counter
            low[r] = counter
            counter += 1
            sstack[sp] = r
            sp += 1
            onstack[r] = 1
            st = _Stack()
            st.push(r, -1)
            while st.n:
                u = st.node[st.n - 1]
                v = _next(&c, u, &st.cur[st.n - 1], &e)
                if v >= 0:
                    if index[v] < 0:
                        index[v] = counter
                        low[v] = counter
                        counter += 1
                        sstack[sp] = v
                        sp += 1
                        onstack[v] = 1
                        st.push(v, e)
                    elif onstack[v] and index[v] < low[u]:
                        low[u] = index[v]
                    continue
                st.n -= 1
                if st.n and low[u] < low[st.node[st.n - 1]]:
                    low[st.node[st.n - 1]] = low[u]
                if low[u] != index[u]:
                    continue
                start = sp
                while True:
                    sp -= 1
                    w = sstack[sp]
                    onstack[w] = 0
                    comp[w] = ncomp
                    if w == u:
                        break
                # members are sstack[sp:start], popped in reverse
                size = start - sp
                acc = False
                for i in range(sp, start):
                    if b_acc[sstack[i] % c.B]:
                        acc = True
                        break
                ok = False
                if acc:
                    internal = False
                    memset(count, 0, (P + 1) * sizeof(i64))
                    memset(moved, 0, P + 1)
                    for i in range(sp, start):
                        w = sstack[i]
                        s = w // c.B
                        memset(seen, 0, P + 1)
                        for e in range(c.m_off[s], c.m_off[s + 1]):
                            p = m_pid[e]
                            if p >= 0 and not seen[p]:
                                seen[p] = 1
                                count[p] += 1
                        k = 0
                        while True:
                            v = _next(&c, w, &k, &e)
                            if v < 0:
                                break
                            if comp[v] == ncomp:
                                internal = True
                                if m_pid[e] >= 0:
                                    moved[m_pid[e]] = 1
                    ok = internal
                    if ok and fair:
                        for p in range(P):
                            if count[p] == size and not moved[p]:
                                ok = False
                                break
                if ok:
                    return [sstack[i] for i in range(sp, start)]
                ncomp += 1
        return None
    finally:
        free(index); free(low); free(comp); free(sstack); free(onstack)
        free(count); free(moved); free(seen)
