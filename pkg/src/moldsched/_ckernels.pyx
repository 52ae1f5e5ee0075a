# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the loops in ``_pykernels``.

Same signatures and results; values are 64-bit integers, so callers must
check magnitudes before dispatching here.
"""

from libc.stdlib cimport malloc, calloc, free

BACKEND = "cython"

ctypedef long long i64


cdef i64* to_c(seq, Py_ssize_t extra=0) except NULL:
    cdef Py_ssize_t m = len(seq)
    cdef i64* out = <i64*> malloc((m + extra + 1) * sizeof(i64))
    if out == NULL:
        raise MemoryError()
    cdef Py_ssize_t k
    for k in range(m):
        out[k] = seq[k]
    return out


def list_schedule(Py_ssize_t n, Py_ssize_t d, caps, alloc, dur, pred_count,
                  succ_ptr, succ_idx, rank, bint fifo):
    cdef i64* c_caps = to_c(caps)
    cdef i64* c_alloc = to_c(alloc)
    cdef i64* c_dur = to_c(dur)
    cdef i64* missing = to_c(pred_count)
    cdef i64* sp = to_c(succ_ptr)
    cdef i64* si = to_c(succ_idx)
    cdef i64* c_rank = to_c(rank if rank is not None else [0] * n)
    cdef i64* avail = to_c(caps)
    cdef i64* start = <i64*> malloc((n + 1) * sizeof(i64))
    cdef i64* q_key = <i64*> malloc((n + 1) * sizeof(i64))
    cdef i64* q_job = <i64*> malloc((n + 1) * sizeof(i64))
    cdef i64* run_end = <i64*> malloc((n + 1) * sizeof(i64))
    cdef i64* run_job = <i64*> malloc((n + 1) * sizeof(i64))
    cdef i64* newly = <i64*> malloc((n + 1) * sizeof(i64))
    cdef Py_ssize_t qn = 0, rn = 0, nn, j, i, k, e, s, pos, w, kept, done = 0
    cdef i64 seq = 0, now = 0, key, base
    cdef bint fits
    try:
        for j in range(n):
            start[j] = -1
        for j in range(n):
            if missing[j] == 0:
                key = seq if fifo else c_rank[j]
                seq += 1
                qn = _q_insert(q_key, q_job, qn, key, j)
        while True:
            kept = 0
            for pos in range(qn):
                j = q_job[pos]
                base = j * d
                fits = True
                for i in range(d):
                    if c_alloc[base + i] > avail[i]:
                        fits = False
                        break
                if fits:
                    for i in range(d):
                        avail[i] -= c_alloc[base + i]
                    start[j] = now
                    run_end[rn] = now + c_dur[j]
                    run_job[rn] = j
                    rn += 1
                else:
                    q_key[kept] = q_key[pos]
                    q_job[kept] = j
                    kept += 1
            qn = kept
            for pos in range(qn):
                base = q_job[pos] * d
                fits = True
                for i in range(d):
                    if c_alloc[base + i] > avail[i]:
                        fits = False
                        break
                if fits:
                    raise AssertionError("single queue pass left a startable job behind")
            if rn == 0:
                break
            now = run_end[0]
            for k in range(1, rn):
                if run_end[k] < now:
                    now = run_end[k]
            nn = 0
            w = 0
            for k in range(rn):
                if run_end[k] == now:
                    j = run_job[k]
                    done += 1
                    base = j * d
                    for i in range(d):
                        avail[i] += c_alloc[base + i]
                    for e in range(sp[j], sp[j + 1]):
                        s = si[e]
                        missing[s] -= 1
                        if missing[s] == 0:
                            newly[nn] = s
                            nn += 1
                else:
                    run_end[w] = run_end[k]
                    run_job[w] = run_job[k]
                    w += 1
            rn = w
            _sort_small(newly, nn)
            for k in range(nn):
                j = newly[k]
                key = seq if fifo else c_rank[j]
                seq += 1
                qn = _q_insert(q_key, q_job, qn, key, j)
        if qn != 0 or done != n:
            raise AssertionError("simulation ended with unscheduled jobs")
        return [start[j] for j in range(n)]
    finally:
        free(c_caps); free(c_alloc); free(c_dur); free(missing); free(sp); free(si)
        free(c_rank); free(avail); free(start); free(q_key); free(q_job)
        free(run_end); free(run_job); free(newly)


cdef inline Py_ssize_t _q_insert(i64* keys, i64* jobs, Py_ssize_t qn, i64 key, i64 job) noexcept nogil:
    # insertion after all entries with a smaller (key, job) pair
    cdef Py_ssize_t pos = qn
    while pos > 0 and (keys[pos - 1] > key or (keys[pos - 1] == key and jobs[pos - 1] > job)):
        keys[pos] = keys[pos - 1]
        jobs[pos] = jobs[pos - 1]
        pos -= 1
    keys[pos] = key
    jobs[pos] = job
    return qn + 1


cdef inline void _sort_small(i64* a, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef i64 v
    for i in range(1, m):
        v = a[i]
        k = i
        while k > 0 and a[k - 1] > v:
            a[k] = a[k - 1]
            k -= 1
        a[k] = v


cdef struct MinL:
    Py_ssize_t n
    i64* order
    i64* pp
    i64* pi
    i64* op
    i64* ot
    i64* oa
    i64* suffix
    i64* finish
    i64* choice
    i64* best_choice
    i64 best
    bint found


cdef void _minl_rec(MinL* st, Py_ssize_t pos, i64 cur_c, i64 cur_a) noexcept nogil:
    cdef Py_ssize_t j, e, o, k
    cdef i64 ready, f, c, a, rest, val
    if pos == st.n:
        val = cur_c if cur_c > cur_a else cur_a
        if val < st.best:
            st.best = val
            st.found = True
            for k in range(st.n):
                st.best_choice[k] = st.choice[k]
        return
    j = st.order[pos]
    ready = 0
    for e in range(st.pp[j], st.pp[j + 1]):
        f = st.finish[st.pi[e]]
        if f > ready:
            ready = f
    rest = st.suffix[pos + 1]
    for o in range(st.op[j], st.op[j + 1]):
        f = ready + st.ot[o]
        c = f if f > cur_c else cur_c
        a = cur_a + st.oa[o]
        if c >= st.best or a + rest >= st.best:
            continue
        st.finish[j] = f
        st.choice[j] = o - st.op[j]
        _minl_rec(st, pos + 1, c, a)


def min_lower_bound(Py_ssize_t n, order, pred_ptr, pred_idx, opt_ptr, opt_time, opt_area, upper):
    cdef MinL st
    cdef Py_ssize_t pos, j, o
    cdef i64 m
    st.n = n
    st.order = to_c(order)
    st.pp = to_c(pred_ptr)
    st.pi = to_c(pred_idx)
    st.op = to_c(opt_ptr)
    st.ot = to_c(opt_time)
    st.oa = to_c(opt_area)
    st.suffix = <i64*> calloc(n + 1, sizeof(i64))
    st.finish = <i64*> calloc(n + 1, sizeof(i64))
    st.choice = <i64*> calloc(n + 1, sizeof(i64))
    st.best_choice = <i64*> calloc(n + 1, sizeof(i64))
    st.best = upper
    st.found = False
    try:
        for pos in range(n - 1, -1, -1):
            j = st.order[pos]
            m = st.oa[st.op[j]]
            for o in range(st.op[j] + 1, st.op[j + 1]):
                if st.oa[o] < m:
                    m = st.oa[o]
            st.suffix[pos] = st.suffix[pos + 1] + m
        with nogil:
            _minl_rec(&st, 0, 0, 0)
        if not st.found:
            return upper, None
        return st.best, [st.best_choice[j] for j in range(n)]
    finally:
        free(st.order); free(st.pp); free(st.pi); free(st.op); free(st.ot); free(st.oa)
        free(st.suffix); free(st.finish); free(st.choice); free(st.best_choice)


cdef struct BB:
    Py_ssize_t n
    Py_ssize_t d
    i64* caps
    i64* pp
    i64* pi
    i64* op
    i64* oalloc
    i64* ot
    i64* tail
    i64* min_work
    char* placed
    i64* start
    i64* end
    i64* used
    i64* choice
    i64* order
    Py_ssize_t norder
    i64* work
    i64* cands
    i64 best
    i64* best_start
    i64* best_choice
    bint found


cdef i64 _earliest(BB* st, i64 est, i64 t, i64 base) noexcept nogil:
    cdef Py_ssize_t nc = 0, a, b, x, k, i
    cdef i64 s, fin, tau, load, need, v
    cdef bint ok, dup
    st.cands[nc] = est
    nc += 1
    for a in range(st.norder):
        v = st.end[st.order[a]]
        if v > est:
            dup = False
            for b in range(nc):
                if st.cands[b] == v:
                    dup = True
                    break
            if not dup:
                st.cands[nc] = v
                nc += 1
    _sort_small(st.cands, nc)
    for x in range(nc):
        s = st.cands[x]
        fin = s + t
        ok = _fits_at(st, s, base)
        if ok:
            for a in range(st.norder):
                tau = st.start[st.order[a]]
                if s < tau and tau < fin:
                    if not _fits_at(st, tau, base):
                        ok = False
                        break
        if ok:
            return s
    return -1


cdef bint _fits_at(BB* st, i64 tau, i64 base) noexcept nogil:
    cdef Py_ssize_t i, a
    cdef i64 need, load, k
    for i in range(st.d):
        need = st.oalloc[base + i]
        if need == 0:
            continue
        load = need
        for a in range(st.norder):
            k = st.order[a]
            if st.start[k] <= tau and tau < st.end[k]:
                load += st.used[k * st.d + i]
        if load > st.caps[i]:
            return False
    return True


cdef void _bb_rec(BB* st, i64 makespan) noexcept nogil:
    cdef Py_ssize_t j, e, o, i, p, k
    cdef i64 est, t, base, s, fin, delta
    cdef bint eligible
    if st.norder == st.n:
        if makespan < st.best:
            st.best = makespan
            st.found = True
            for k in range(st.n):
                st.best_start[k] = st.start[k]
                st.best_choice[k] = st.choice[k]
        return
    for i in range(st.d):
        if st.work[i] >= st.caps[i] * st.best:
            return
    for j in range(st.n):
        if st.placed[j]:
            continue
        est = 0
        eligible = True
        for e in range(st.pp[j], st.pp[j + 1]):
            p = st.pi[e]
            if not st.placed[p]:
                eligible = False
                break
            if st.end[p] > est:
                est = st.end[p]
        if not eligible or est + st.tail[j] >= st.best:
            continue
        for o in range(st.op[j], st.op[j + 1]):
            t = st.ot[o]
            base = o * st.d
            s = _earliest(st, est, t, base)
            fin = s + t
            if fin >= st.best or s + st.tail[j] >= st.best:
                continue
            st.placed[j] = 1
            st.start[j] = s
            st.end[j] = fin
            st.choice[j] = o - st.op[j]
            for i in range(st.d):
                st.used[j * st.d + i] = st.oalloc[base + i]
                st.work[i] += st.oalloc[base + i] * t - st.min_work[j * st.d + i]
            st.order[st.norder] = j
            st.norder += 1
            _bb_rec(st, fin if fin > makespan else makespan)
            st.norder -= 1
            for i in range(st.d):
                st.work[i] -= st.oalloc[base + i] * t - st.min_work[j * st.d + i]
            st.placed[j] = 0


def optimal_makespan(Py_ssize_t n, Py_ssize_t d, caps, pred_ptr, pred_idx, opt_ptr, opt_alloc,
                     opt_time, tail, min_work, upper):
    cdef BB st
    cdef Py_ssize_t j, i
    st.n = n
    st.d = d
    st.caps = to_c(caps)
    st.pp = to_c(pred_ptr)
    st.pi = to_c(pred_idx)
    st.op = to_c(opt_ptr)
    st.oalloc = to_c(opt_alloc)
    st.ot = to_c(opt_time)
    st.tail = to_c(tail)
    st.min_work = to_c(min_work)
    st.placed = <char*> calloc(n + 1, sizeof(char))
    st.start = <i64*> calloc(n + 1, sizeof(i64))
    st.end = <i64*> calloc(n + 1, sizeof(i64))
    st.used = <i64*> calloc(n * d + 1, sizeof(i64))
    st.choice = <i64*> calloc(n + 1, sizeof(i64))
    st.order = <i64*> calloc(n + 1, sizeof(i64))
    st.work = <i64*> calloc(d + 1, sizeof(i64))
    st.cands = <i64*> calloc(n + 2, sizeof(i64))
    st.best_start = <i64*> calloc(n + 1, sizeof(i64))
    st.best_choice = <i64*> calloc(n + 1, sizeof(i64))
    st.norder = 0
    st.best = upper
    st.found = False
    try:
        for j in range(n):
            for i in range(d):
                st.work[i] += st.min_work[j * d + i]
        with nogil:
            _bb_rec(&st, 0)
        if not st.found:
            return upper, None, None
        return (st.best, [st.best_start[j] for j in range(n)],
                [st.best_choice[j] for j in range(n)])
    finally:
        free(st.caps); free(st.pp); free(st.pi); free(st.op); free(st.oalloc); free(st.ot)
        free(st.tail); free(st.min_work); free(st.placed); free(st.start); free(st.end)
        free(st.used); free(st.choice); free(st.order); free(st.work); free(st.cands)
        free(st.best_start); free(st.best_choice)
