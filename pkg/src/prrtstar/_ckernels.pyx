# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled planning loop.

Mirrors ``planner._plan_python`` operation for operation: the same random
stream, the same order of floating-point operations in every distance, slab
test, RGD step and pose transform, so the trees agree bit for bit.
"""
from libc.math cimport sqrt, log, pow, cos, sin, remainder, M_PI, INFINITY
from libc.stdlib cimport malloc, realloc, free, qsort
from libc.string cimport memcpy

import numpy as np

cdef double TWO_PI = 2.0 * M_PI
cdef int MAX_REJECTIONS = 1000000


# -- geometry -------------------------------------------------------------------

cdef class World:
    cdef int d, m
    cdef double* lo
    cdef double* hi
    cdef double* olo
    cdef double* ohi
    cdef double* goal
    cdef double goal_radius

    def __cinit__(self, lo, hi, obs_lo, obs_hi, goal, double goal_radius):
        cdef int j, i
        self.d = len(lo)
        self.m = len(obs_lo)
        self.lo = <double*>malloc(self.d * sizeof(double))
        self.hi = <double*>malloc(self.d * sizeof(double))
        self.goal = <double*>malloc(self.d * sizeof(double))
        self.olo = <double*>malloc((self.m * self.d + 1) * sizeof(double))
        self.ohi = <double*>malloc((self.m * self.d + 1) * sizeof(double))
        for j in range(self.d):
            self.lo[j] = lo[j]
            self.hi[j] = hi[j]
            self.goal[j] = goal[j]
        for i in range(self.m):
            for j in range(self.d):
                self.olo[i * self.d + j] = obs_lo[i][j]
                self.ohi[i * self.d + j] = obs_hi[i][j]
        self.goal_radius = goal_radius

    def __dealloc__(self):
        free(self.lo)
        free(self.hi)
        free(self.goal)
        free(self.olo)
        free(self.ohi)


cdef inline double dist(const double* a, const double* b, int d) nogil:
    cdef double s = 0.0, t
    cdef int j
    for j in range(d):
        t = a[j] - b[j]
        s += t * t
    return sqrt(s)


cdef inline bint in_bounds(World w, const double* x):
    cdef int j
    for j in range(w.d):
        if not (w.lo[j] <= x[j] <= w.hi[j]):
            return False
    return True


cdef inline bint point_free(World w, const double* x):
    cdef int i, j, d = w.d
    cdef bint inside
    if not in_bounds(w, x):
        return False
    for i in range(w.m):
        inside = True
        for j in range(d):
            if not (w.olo[i * d + j] <= x[j] <= w.ohi[i * d + j]):
                inside = False
                break
        if inside:
            return False
    return True


cdef inline bint seg_hits_box(const double* p0, const double* p1, const double* lo,
                              const double* hi, int d) nogil:
    cdef double t0 = 0.0, t1 = 1.0, dp, ta, tb, tmp, a
    cdef int j
    for j in range(d):
        a = p0[j]
        dp = p1[j] - a
        if dp == 0.0:
            if a < lo[j] or a > hi[j]:
                return False
            continue
        ta = (lo[j] - a) / dp
        tb = (hi[j] - a) / dp
        if ta > tb:
            tmp = ta
            ta = tb
            tb = tmp
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return False
    return True


cdef inline bint segment_free(World w, const double* a, const double* b):
    cdef int i
    if not (in_bounds(w, a) and in_bounds(w, b)):
        return False
    for i in range(w.m):
        if seg_hits_box(a, b, w.olo + i * w.d, w.ohi + i * w.d, w.d):
            return False
    return True


cdef inline double obstacle_distance(World w, const double* x):
    cdef double best = INFINITY, s, t, c
    cdef int i, j, d = w.d
    for i in range(w.m):
        s = 0.0
        for j in range(d):
            c = x[j]
            if c < w.olo[i * d + j]:
                c = w.olo[i * d + j]
            if c > w.ohi[i * d + j]:
                c = w.ohi[i * d + j]
            t = x[j] - c
            s += t * t
        s = sqrt(s)
        if s < best:
            best = s
            if s == 0.0:
                return 0.0
    return best


cdef inline double wrap_angle(double th) nogil:
    cdef double t = remainder(th, TWO_PI)
    if t <= -M_PI:
        t += TWO_PI
    return t


# -- random stream ----------------------------------------------------------------

cdef class _Rng:
    cdef object stream
    cdef double[::1] buf
    cdef int pos, block

    def __cinit__(self, stream):
        self.stream = stream
        self.buf = stream._buf
        self.pos = stream._pos
        self.block = stream.block

    cdef inline double next(self):
        if self.pos == self.block:
            self.buf = self.stream.refill()
            self.pos = 0
        self.pos += 1
        return self.buf[self.pos - 1]

    cdef void sync(self):
        self.stream._buf = np.asarray(self.buf)
        self.stream._pos = self.pos


# -- RGD ----------------------------------------------------------------------

cdef void rgd_c(World w, double* x, int k, double lam, double d_obs, bint raw, double* cand):
    # ``slack`` is a lower bound on the obstacle distance at x. A normalized
    # step moves at most lam, so while the bound stays clear of d_obs (and of
    # lam, for the segment test) the exact checks cannot fail and are skipped.
    cdef int step, j, d = w.d
    cdef double dd, s, slack = -1.0
    cdef double eps = 1e-9
    for step in range(k):
        if raw or slack - eps <= d_obs:
            slack = obstacle_distance(w, x)
            if slack <= d_obs:
                return
        dd = dist(x, w.goal, d)
        if dd == 0.0:
            return
        if raw:
            for j in range(d):
                cand[j] = x[j] + lam * 2.0 * (w.goal[j] - x[j])
        elif dd <= lam:
            for j in range(d):
                cand[j] = w.goal[j]
        else:
            s = lam / dd
            for j in range(d):
                cand[j] = x[j] + s * (w.goal[j] - x[j])
        if raw or slack - eps <= lam:
            if not segment_free(w, x, cand):
                return
        for j in range(d):
            x[j] = cand[j]
        slack -= lam


def rgd_point(World w, x, int k, double lam, double d_obs, bint raw=False):
    """Compiled RGD on one point (testing and benchmarks)."""
    cdef int j
    cdef double* buf = <double*>malloc(2 * w.d * sizeof(double))
    for j in range(w.d):
        buf[j] = x[j]
    rgd_c(w, buf, k, lam, d_obs, raw, buf + w.d)
    out = tuple(buf[j] for j in range(w.d))
    free(buf)
    return out


def segment_free_batch(World w, double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t i, n = a.shape[0]
    out = np.empty(n, dtype=np.bool_)
    cdef unsigned char[::1] o = out.view(np.uint8)
    for i in range(n):
        o[i] = segment_free(w, &a[i, 0], &b[i, 0])
    return out


def obstacle_distance_batch(World w, double[:, ::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = obstacle_distance(w, &x[i, 0])
    return out


# -- tree + grid storage ----------------------------------------------------------

cdef struct Cand:
    double c
    double dv
    int v
    int blocked


cdef int cmp_cand(const void* pa, const void* pb) noexcept nogil:
    cdef const Cand* a = <const Cand*>pa
    cdef const Cand* b = <const Cand*>pb
    if a.c < b.c:
        return -1
    if a.c > b.c:
        return 1
    return (a.v > b.v) - (a.v < b.v)


cdef struct DistId:
    double d
    int v


cdef int cmp_distid(const void* pa, const void* pb) noexcept nogil:
    cdef const DistId* a = <const DistId*>pa
    cdef const DistId* b = <const DistId*>pb
    if a.d < b.d:
        return -1
    if a.d > b.d:
        return 1
    return (a.v > b.v) - (a.v < b.v)


cdef class Store:
    """Growable tree arrays plus the bucket grid over vertex positions."""
    cdef int d, n, cap, m, ncells
    cdef double* pts
    cdef int* parent
    cdef double* cost
    cdef double* edge
    cdef int* first_child
    cdef int* next_sib
    cdef int* prev_sib
    cdef double* heading
    cdef int* prim
    cdef int* next_in_cell
    cdef int* head
    cdef double* glo
    cdef double* ghi
    cdef double* gh
    cdef int* stack
    cdef int* found
    cdef int found_cap

    def __cinit__(self, int d, int m, lo, hi):
        cdef int j
        self.d = d
        self.n = 0
        self.cap = 1024
        self.m = m
        self.ncells = 1
        for j in range(d):
            self.ncells *= m
        self.pts = <double*>malloc(self.cap * d * sizeof(double))
        self.parent = <int*>malloc(self.cap * sizeof(int))
        self.cost = <double*>malloc(self.cap * sizeof(double))
        self.edge = <double*>malloc(self.cap * sizeof(double))
        self.first_child = <int*>malloc(self.cap * sizeof(int))
        self.next_sib = <int*>malloc(self.cap * sizeof(int))
        self.prev_sib = <int*>malloc(self.cap * sizeof(int))
        self.heading = <double*>malloc(self.cap * sizeof(double))
        self.prim = <int*>malloc(self.cap * sizeof(int))
        self.next_in_cell = <int*>malloc(self.cap * sizeof(int))
        self.stack = <int*>malloc(self.cap * sizeof(int))
        self.head = <int*>malloc(self.ncells * sizeof(int))
        self.glo = <double*>malloc(d * sizeof(double))
        self.ghi = <double*>malloc(d * sizeof(double))
        self.gh = <double*>malloc(d * sizeof(double))
        self.found_cap = 1024
        self.found = <int*>malloc(self.found_cap * sizeof(int))
        for j in range(self.ncells):
            self.head[j] = -1
        for j in range(d):
            self.glo[j] = lo[j]
            self.ghi[j] = hi[j]
            self.gh[j] = (self.ghi[j] - self.glo[j]) / m

    def __dealloc__(self):
        free(self.pts); free(self.parent); free(self.cost); free(self.edge)
        free(self.first_child); free(self.next_sib); free(self.prev_sib)
        free(self.heading); free(self.prim); free(self.next_in_cell); free(self.stack)
        free(self.head); free(self.glo); free(self.ghi); free(self.gh); free(self.found)

    cdef void grow(self):
        self.cap *= 2
        self.pts = <double*>realloc(self.pts, self.cap * self.d * sizeof(double))
        self.parent = <int*>realloc(self.parent, self.cap * sizeof(int))
        self.cost = <double*>realloc(self.cost, self.cap * sizeof(double))
        self.edge = <double*>realloc(self.edge, self.cap * sizeof(double))
        self.first_child = <int*>realloc(self.first_child, self.cap * sizeof(int))
        self.next_sib = <int*>realloc(self.next_sib, self.cap * sizeof(int))
        self.prev_sib = <int*>realloc(self.prev_sib, self.cap * sizeof(int))
        self.heading = <double*>realloc(self.heading, self.cap * sizeof(double))
        self.prim = <int*>realloc(self.prim, self.cap * sizeof(int))
        self.next_in_cell = <int*>realloc(self.next_in_cell, self.cap * sizeof(int))
        self.stack = <int*>realloc(self.stack, self.cap * sizeof(int))

    cdef inline int axis_cell(self, int j, double c):
        cdef int a
        if self.gh[j] <= 0:
            return 0
        a = <int>((c - self.glo[j]) / self.gh[j])
        if a < 0:
            a = 0
        if a > self.m - 1:
            a = self.m - 1
        return a

    cdef int cell_of(self, const double* x):
        cdef int j, c = 0, stride = 1
        for j in range(self.d):
            c += self.axis_cell(j, x[j]) * stride
            stride *= self.m
        return c

    cdef int add(self, const double* x, int par, double edge, double heading, int prim):
        cdef int v = self.n, j, cell
        if v == self.cap:
            self.grow()
        for j in range(self.d):
            self.pts[v * self.d + j] = x[j]
        self.parent[v] = par
        self.edge[v] = edge
        self.cost[v] = (self.cost[par] + edge) if par >= 0 else 0.0
        self.first_child[v] = -1
        self.next_sib[v] = -1
        self.prev_sib[v] = -1
        self.heading[v] = heading
        self.prim[v] = prim
        if par >= 0:
            self.link(v, par)
        cell = self.cell_of(x)
        self.next_in_cell[v] = self.head[cell]
        self.head[cell] = v
        self.n += 1
        return v

    cdef inline void link(self, int v, int par):
        cdef int f = self.first_child[par]
        self.next_sib[v] = f
        self.prev_sib[v] = -1
        if f >= 0:
            self.prev_sib[f] = v
        self.first_child[par] = v

    cdef inline void unlink(self, int v):
        cdef int p = self.parent[v], a = self.prev_sib[v], b = self.next_sib[v]
        if a >= 0:
            self.next_sib[a] = b
        else:
            self.first_child[p] = b
        if b >= 0:
            self.prev_sib[b] = a

    cdef void reparent(self, int v, int new_parent, double edge):
        cdef int top, u, c
        cdef double cu
        self.unlink(v)
        self.parent[v] = new_parent
        self.link(v, new_parent)
        self.edge[v] = edge
        self.cost[v] = self.cost[new_parent] + edge
        top = 0
        self.stack[top] = v
        top += 1
        while top > 0:
            top -= 1
            u = self.stack[top]
            cu = self.cost[u]
            c = self.first_child[u]
            while c >= 0:
                self.cost[c] = cu + self.edge[c]
                self.stack[top] = c
                top += 1
                c = self.next_sib[c]

    cdef inline void push_found(self, int v, int* cnt):
        if cnt[0] == self.found_cap:
            self.found_cap *= 2
            self.found = <int*>realloc(self.found, self.found_cap * sizeof(int))
        self.found[cnt[0]] = v
        cnt[0] += 1

    cdef int within(self, const double* x, double r):
        """Fill ``self.found`` with every vertex in the closed ball; returns the count."""
        cdef int j, v, cnt = 0, d = self.d
        cdef int a[8]
        cdef int b[8]
        cdef int idx[8]
        cdef long ncells = 1
        cdef int cell, stride
        for j in range(d):
            if self.gh[j] > 0:
                a[j] = <int>((x[j] - r - self.glo[j]) / self.gh[j]) - 1
                b[j] = <int>((x[j] + r - self.glo[j]) / self.gh[j]) + 1
            else:
                a[j] = 0
                b[j] = 0
            if a[j] < 0: a[j] = 0
            if a[j] > self.m - 1: a[j] = self.m - 1
            if b[j] < 0: b[j] = 0
            if b[j] > self.m - 1: b[j] = self.m - 1
            ncells *= b[j] - a[j] + 1
        if ncells > self.n:
            for v in range(self.n):
                if dist(self.pts + v * d, x, d) <= r:
                    self.push_found(v, &cnt)
            return cnt
        for j in range(d):
            idx[j] = a[j]
        while True:
            cell = 0
            stride = 1
            for j in range(d):
                cell += idx[j] * stride
                stride *= self.m
            v = self.head[cell]
            while v >= 0:
                if dist(self.pts + v * d, x, d) <= r:
                    self.push_found(v, &cnt)
                v = self.next_in_cell[v]
            j = 0
            while j < d:
                idx[j] += 1
                if idx[j] <= b[j]:
                    break
                idx[j] = a[j]
                j += 1
            if j == d:
                break
        return cnt

    cdef int scan_nearest(self, const double* x):
        cdef int v, best_v = -1, d = self.d
        cdef double best = INFINITY, dv
        for v in range(self.n):
            dv = dist(self.pts + v * d, x, d)
            if dv < best:
                best = dv
                best_v = v
        return best_v

    cdef int nearest(self, const double* x):
        cdef int j, v, k, d = self.d, best_v = -1, cell, stride, cheb, off
        cdef double best = INFINITY, dv, lb, t
        cdef int c0[8]
        cdef int a[8]
        cdef int b[8]
        cdef int idx[8]
        cdef long visited = 0
        cdef bint full
        if self.n <= 32:
            return self.scan_nearest(x)
        for j in range(d):
            c0[j] = self.axis_cell(j, x[j])
        k = 0
        while True:
            full = True
            for j in range(d):
                a[j] = c0[j] - k
                b[j] = c0[j] + k
                if a[j] > 0 or b[j] < self.m - 1:
                    full = False
                if a[j] < 0: a[j] = 0
                if b[j] > self.m - 1: b[j] = self.m - 1
                idx[j] = a[j]
            while True:
                cheb = 0
                for j in range(d):
                    off = idx[j] - c0[j]
                    if off < 0: off = -off
                    if off > cheb: cheb = off
                visited += 1
                if cheb == k:
                    cell = 0
                    stride = 1
                    for j in range(d):
                        cell += idx[j] * stride
                        stride *= self.m
                    v = self.head[cell]
                    while v >= 0:
                        dv = dist(self.pts + v * d, x, d)
                        if dv < best or (dv == best and v < best_v):
                            best = dv
                            best_v = v
                        v = self.next_in_cell[v]
                j = 0
                while j < d:
                    idx[j] += 1
                    if idx[j] <= b[j]:
                        break
                    idx[j] = a[j]
                    j += 1
                if j == d:
                    break
            if visited > self.n + 64:
                return self.scan_nearest(x)
            if full:
                return best_v
            lb = INFINITY
            for j in range(d):
                t = x[j] - (self.glo[j] + (c0[j] - k) * self.gh[j])
                if t < lb: lb = t
                t = (self.glo[j] + (c0[j] + k + 1) * self.gh[j]) - x[j]
                if t < lb: lb = t
            if best < lb - 1e-9:
                return best_v
            k += 1

    def arrays(self):
        n, d = self.n, self.d
        pts = np.empty((n, d))
        parent = np.empty(n, dtype=np.int64)
        cost = np.empty(n)
        edge = np.empty(n)
        heading = np.empty(n)
        prim = np.empty(n, dtype=np.int64)
        cdef double[:, ::1] P = pts
        cdef long[::1] Pa = parent
        cdef double[::1] C = cost
        cdef double[::1] E = edge
        cdef double[::1] H = heading
        cdef long[::1] Pr = prim
        cdef int v, j
        for v in range(n):
            for j in range(d):
                P[v, j] = self.pts[v * d + j]
            Pa[v] = self.parent[v]
            C[v] = self.cost[v]
            E[v] = self.edge[v]
            H[v] = self.heading[v]
            Pr[v] = self.prim[v]
        return pts, parent, cost, edge, heading, prim

    # query helpers for tests
    def py_insert(self, x):
        cdef double buf[8]
        cdef int j
        for j in range(self.d):
            buf[j] = x[j]
        return self.add(buf, -1, 0.0, 0.0, -1)

    def py_nearest(self, x):
        cdef double buf[8]
        cdef int j
        for j in range(self.d):
            buf[j] = x[j]
        if self.n == 0:
            return None
        return self.nearest(buf)

    def py_within(self, x, double r):
        cdef double buf[8]
        cdef int cnt, i, j
        for j in range(self.d):
            buf[j] = x[j]
        cnt = self.within(buf, r)
        return sorted(self.found[i] for i in range(cnt))


# -- kinodynamic steering ----------------------------------------------------------

cdef class Prims:
    cdef int P, S
    cdef double* rel      # P * (S+1) * 3
    cdef double* arc
    cdef double reach

    def __cinit__(self, double[:, :, ::1] rel, double[::1] arc, double reach):
        cdef int i, n
        self.P = rel.shape[0]
        self.S = rel.shape[1] - 1
        n = self.P * (self.S + 1) * 3
        self.rel = <double*>malloc(n * sizeof(double))
        self.arc = <double*>malloc(self.P * sizeof(double))
        memcpy(self.rel, &rel[0, 0, 0], n * sizeof(double))
        for i in range(self.P):
            self.arc[i] = arc[i]
        self.reach = reach

    def __dealloc__(self):
        free(self.rel)
        free(self.arc)


cdef bint traj_free(World w, Prims pr, int p, double x, double y, double c, double sn, double* buf):
    cdef int i, b, S1 = pr.S + 1
    cdef double rx, ry, lox, loy, hix, hiy
    cdef const double* r = pr.rel + p * S1 * 3
    for i in range(S1):
        rx = r[3 * i]
        ry = r[3 * i + 1]
        buf[2 * i] = x + (c * rx - sn * ry)
        buf[2 * i + 1] = y + (sn * rx + c * ry)
    lox = hix = buf[0]
    loy = hiy = buf[1]
    for i in range(1, S1):
        if buf[2 * i] < lox: lox = buf[2 * i]
        if buf[2 * i] > hix: hix = buf[2 * i]
        if buf[2 * i + 1] < loy: loy = buf[2 * i + 1]
        if buf[2 * i + 1] > hiy: hiy = buf[2 * i + 1]
    if lox < w.lo[0] or loy < w.lo[1] or hix > w.hi[0] or hiy > w.hi[1]:
        return False
    for b in range(w.m):
        if (hix < w.olo[2 * b] or lox > w.ohi[2 * b]
                or hiy < w.olo[2 * b + 1] or loy > w.ohi[2 * b + 1]):
            continue
        for i in range(S1 - 1):
            if seg_hits_box(buf + 2 * i, buf + 2 * i + 2, w.olo + 2 * b, w.ohi + 2 * b, 2):
                return False
    return True


cdef int steer_c(World w, Prims pr, double x, double y, double th, const double* toward,
                 DistId* order, double* buf, double* out_d):
    """Index of the chosen primitive, or -1 when every primitive collides."""
    cdef int p, S = pr.S
    cdef double c = cos(th), sn = sin(th), rx, ry, e[2]
    for p in range(pr.P):
        rx = pr.rel[(p * (S + 1) + S) * 3]
        ry = pr.rel[(p * (S + 1) + S) * 3 + 1]
        e[0] = x + (c * rx - sn * ry)
        e[1] = y + (sn * rx + c * ry)
        order[p].d = dist(e, toward, 2)
        order[p].v = p
    qsort(order, pr.P, sizeof(DistId), cmp_distid)
    for p in range(pr.P):
        if traj_free(w, pr, order[p].v, x, y, c, sn, buf):
            out_d[0] = order[p].d
            return order[p].v
    return -1


# -- the loop -----------------------------------------------------------------------

def plan_loop(World w, Store st, stream, tracker, root, *, int variant_prrt, double gamma,
              long max_iters, long node_cap, double goal_bias,
              int rgd_k, double rgd_lam, double rgd_dobs, bint rgd_raw,
              double max_edge, int time_stride, Prims prims=None, double start_heading=0.0,
              object perf_counter=None):
    cdef int d = w.d, j, cnt, i, v, parent_i, v_new, par, p_sel, ngoal = 0, goal_cap = 64
    cdef long it = 0, att
    cdef double r, u, dn, s, best = INFINITY, gbest, nc, dv, bd, de, t0
    cdef bint stop = False, kino = prims is not None, in_goal, changed, ok
    cdef double* x = <double*>malloc(2 * d * sizeof(double))
    cdef double* cand = x + d
    cdef int* goal_ids = <int*>malloc(goal_cap * sizeof(int))
    cdef Cand* L = NULL
    cdef int L_cap = 0
    cdef DistId* order = NULL
    cdef DistId* kc = NULL
    cdef int kc_cap = 0
    cdef double* tbuf = NULL
    cdef double cth, sth, rx, ry, rt
    cdef const double* rr
    cdef _Rng rng = _Rng(stream)

    if kino:
        order = <DistId*>malloc(prims.P * sizeof(DistId))
        tbuf = <double*>malloc(2 * (prims.S + 1) * sizeof(double))

    try:
        for j in range(d):
            x[j] = root[j]
        st.add(x, -1, 0.0, wrap_angle(start_heading) if kino else 0.0, -1)
        if dist(x, w.goal, d) <= w.goal_radius:
            goal_ids[0] = 0
            ngoal = 1
            best = 0.0
            if tracker.update(0, 0.0):
                stop = True
        t0 = tracker.t0

        while not stop and it < max_iters and (node_cap < 0 or st.n < node_cap):
            it += 1
            if time_stride > 0 and it % time_stride == 0:
                tracker.m.time_marks.append((it, perf_counter() - t0))

            # sample
            if goal_bias > 0.0 and rng.next() < goal_bias:
                for j in range(d):
                    x[j] = w.goal[j]
            else:
                att = 0
                while True:
                    for j in range(d):
                        x[j] = w.lo[j] + (w.hi[j] - w.lo[j]) * rng.next()
                    if point_free(w, x):
                        break
                    att += 1
                    if att >= MAX_REJECTIONS:
                        raise RuntimeError("degenerate")
            if variant_prrt:
                rgd_c(w, x, rgd_k, rgd_lam, rgd_dobs, rgd_raw, cand)
            if max_edge > 0.0:
                v = st.nearest(x)
                dn = dist(st.pts + v * d, x, d)
                if dn > max_edge:
                    s = max_edge / dn
                    for j in range(d):
                        x[j] = st.pts[v * d + j] + s * (x[j] - st.pts[v * d + j])

            if st.n < 2:
                r = 0.0
            else:
                r = gamma * pow(log(<double>st.n) / st.n, 1.0 / d)
            cnt = st.within(x, r)
            if cnt == 0:
                st.found[0] = st.nearest(x)
                cnt = 1

            if kino:
                if cnt > kc_cap:
                    kc_cap = cnt * 2
                    kc = <DistId*>realloc(kc, kc_cap * sizeof(DistId))
                for i in range(cnt):
                    v = st.found[i]
                    kc[i].d = dist(st.pts + v * d, x, d)
                    kc[i].v = v
                qsort(kc, cnt, sizeof(DistId), cmp_distid)
                bd = INFINITY
                par = -1
                p_sel = -1
                for i in range(cnt):
                    if kc[i].d - prims.reach - 1e-9 > bd:
                        break
                    v = kc[i].v
                    j = steer_c(w, prims, st.pts[2 * v], st.pts[2 * v + 1], st.heading[v], x,
                                order, tbuf, &de)
                    if j < 0:
                        continue
                    if de < bd or (de == bd and v < par):
                        bd = de
                        par = v
                        p_sel = j
                if par < 0:
                    continue
                cth = cos(st.heading[par])
                sth = sin(st.heading[par])
                rr = prims.rel + (p_sel * (prims.S + 1) + prims.S) * 3
                rx = rr[0]
                ry = rr[1]
                rt = rr[2]
                cand[0] = st.pts[2 * par] + (cth * rx - sth * ry)
                cand[1] = st.pts[2 * par + 1] + (sth * rx + cth * ry)
                v_new = st.add(cand, par, prims.arc[p_sel], wrap_angle(st.heading[par] + rt), p_sel)
                if dist(cand, w.goal, d) <= w.goal_radius:
                    if st.cost[v_new] < best:
                        best = st.cost[v_new]
                        stop = tracker.update(it, best)
                continue

            if cnt > L_cap:
                L_cap = cnt * 2
                L = <Cand*>realloc(L, L_cap * sizeof(Cand))
            ok = True
            for i in range(cnt):
                v = st.found[i]
                dv = dist(st.pts + v * d, x, d)
                if dv == 0.0:
                    ok = False
                    break
                L[i].dv = dv
                L[i].c = st.cost[v] + dv
                L[i].v = v
                L[i].blocked = 0
            if not ok:
                continue
            qsort(L, cnt, sizeof(Cand), cmp_cand)
            parent_i = -1
            for i in range(cnt):
                if segment_free(w, st.pts + L[i].v * d, x):
                    parent_i = i
                    break
                L[i].blocked = 1
            if parent_i < 0:
                continue
            v_new = st.add(x, L[parent_i].v, L[parent_i].dv, 0.0, -1)
            in_goal = dist(x, w.goal, d) <= w.goal_radius
            if in_goal:
                if ngoal == goal_cap:
                    goal_cap *= 2
                    goal_ids = <int*>realloc(goal_ids, goal_cap * sizeof(int))
                goal_ids[ngoal] = v_new
                ngoal += 1
            changed = False
            for i in range(cnt):
                v = L[i].v
                nc = st.cost[v_new] + L[i].dv
                if nc < st.cost[v]:
                    if L[i].blocked or not segment_free(w, st.pts + v * d, x):
                        continue
                    st.reparent(v, v_new, L[i].dv)
                    changed = True
            if ngoal > 0 and (changed or in_goal):
                gbest = INFINITY
                for i in range(ngoal):
                    if st.cost[goal_ids[i]] < gbest:
                        gbest = st.cost[goal_ids[i]]
                if gbest < best:
                    best = gbest
                    stop = tracker.update(it, best)
    finally:
        rng.sync()
        free(x)
        free(goal_ids)
        free(L)
        free(order)
        free(kc)
        free(tbuf)
    return it
