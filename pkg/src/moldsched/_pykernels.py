"""Pure-Python inner loops over integer-scaled data.

Every function here has a twin with the same signature in ``_ckernels.pyx``.
Inputs are flat integer sequences (CSR adjacency, row-major allocation
matrices) so that both backends consume identical data.  Python ints never
overflow; the compiled twin is only selected when the caller has checked
that all intermediate values fit in 63 bits.
"""

from bisect import insort
import heapq

BACKEND = "python"


def list_schedule(n, d, caps, alloc, dur, pred_count, succ_ptr, succ_idx, rank, fifo):
    """Event-driven multi-resource list scheduling.

    ``alloc`` is row-major ``n x d``.  With ``fifo`` true the queue is ordered
    by insertion (newly ready jobs of one event enter in index order);
    otherwise by ``rank`` (smaller first, ties by index).  Returns start times.
    """
    avail = list(caps)
    missing = list(pred_count)
    start = [-1] * n
    queue = []  # sorted list of (key, job)
    seq = 0
    for j in range(n):
        if missing[j] == 0:
            insort(queue, (seq if fifo else rank[j], j))
            seq += 1
    running = []
    now = 0
    done = 0
    while True:
        kept = []
        for key, j in queue:
            base = j * d
            for i in range(d):
                if alloc[base + i] > avail[i]:
                    kept.append((key, j))
                    break
            else:
                for i in range(d):
                    avail[i] -= alloc[base + i]
                start[j] = now
                heapq.heappush(running, (now + dur[j], j))
        queue = kept
        for _, j in queue:
            base = j * d
            if all(alloc[base + i] <= avail[i] for i in range(d)):
                raise AssertionError("single queue pass left a startable job behind")
        if not running:
            break
        now = running[0][0]
        finished = []
        while running and running[0][0] == now:
            finished.append(heapq.heappop(running)[1])
        newly = []
        for k in finished:
            done += 1
            base = k * d
            for i in range(d):
                avail[i] += alloc[base + i]
            for e in range(succ_ptr[k], succ_ptr[k + 1]):
                s = succ_idx[e]
                missing[s] -= 1
                if missing[s] == 0:
                    newly.append(s)
        newly.sort()
        for j in newly:
            insort(queue, (seq if fifo else rank[j], j))
            seq += 1
    if queue or done != n:
        raise AssertionError("simulation ended with unscheduled jobs")
    return start


def min_lower_bound(n, order, pred_ptr, pred_idx, opt_ptr, opt_time, opt_area, upper):
    """Exhaustive minimisation of ``max(A, C)`` over one option per job.

    Times and areas share one integer unit.  Jobs are assigned along the
    topological ``order``; a branch is cut once its partial value reaches the
    incumbent.  ``upper`` seeds the incumbent (pass a value above any
    feasible objective).  Returns ``(best, choice)`` with ``choice[j]`` an
    offset into job ``j``'s option range; the lexicographically first optimum
    along ``order`` is reported.
    """
    min_area_suffix = [0] * (n + 1)
    for pos in range(n - 1, -1, -1):
        j = order[pos]
        min_area_suffix[pos] = min_area_suffix[pos + 1] + min(opt_area[opt_ptr[j]:opt_ptr[j + 1]])
    finish = [0] * n
    choice = [0] * n
    best = upper
    best_choice = None

    def rec(pos, cur_c, cur_a):
        nonlocal best, best_choice
        if pos == n:
            val = cur_c if cur_c > cur_a else cur_a
            if val < best:
                best = val
                best_choice = list(choice)
            return
        j = order[pos]
        ready = 0
        for e in range(pred_ptr[j], pred_ptr[j + 1]):
            f = finish[pred_idx[e]]
            if f > ready:
                ready = f
        rest = min_area_suffix[pos + 1]
        for o in range(opt_ptr[j], opt_ptr[j + 1]):
            f = ready + opt_time[o]
            c = f if f > cur_c else cur_c
            a = cur_a + opt_area[o]
            if c >= best or a + rest >= best:
                continue
            finish[j] = f
            choice[j] = o - opt_ptr[j]
            rec(pos + 1, c, a)

    rec(0, 0, 0)
    return best, best_choice


def optimal_makespan(n, d, caps, pred_ptr, pred_idx, opt_ptr, opt_alloc, opt_time, tail, min_work, upper):
    """Branch and bound over serial schedule generation with mode choice.

    Every precedence-feasible job list combined with every option choice is
    decoded by placing each job at its earliest resource-feasible start; the
    decoded set contains an optimal schedule.  ``tail[j]`` is a lower bound on
    the time from the start of ``j`` to the end of the schedule and
    ``min_work[j*d+i]`` the least work of ``j`` on type ``i``.  Returns
    ``(best, starts, choice)`` or ``(upper, None, None)`` if nothing beats
    ``upper``.
    """
    placed = [False] * n
    start = [0] * n
    end = [0] * n
    used = [0] * (n * d)  # allocation of placed jobs, row-major
    choice = [0] * n
    order = []
    work = [0] * d
    for j in range(n):
        for i in range(d):
            work[i] += min_work[j * d + i]
    best = upper
    best_start = None
    best_choice = None

    def earliest(est, t, base):
        cands = sorted({est} | {end[k] for k in order if end[k] > est})
        for s in cands:
            fin = s + t
            points = [s] + [start[k] for k in order if s < start[k] < fin]
            ok = True
            for tau in points:
                for i in range(d):
                    need = opt_alloc[base + i]
                    if need == 0:
                        continue
                    load = need
                    for k in order:
                        if start[k] <= tau < end[k]:
                            load += used[k * d + i]
                    if load > caps[i]:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return s
        raise AssertionError("no feasible start found")

    def rec(makespan):
        nonlocal best, best_start, best_choice
        if len(order) == n:
            if makespan < best:
                best = makespan
                best_start = list(start)
                best_choice = list(choice)
            return
        for i in range(d):
            if work[i] >= caps[i] * best:
                return
        for j in range(n):
            if placed[j]:
                continue
            est = 0
            eligible = True
            for e in range(pred_ptr[j], pred_ptr[j + 1]):
                p = pred_idx[e]
                if not placed[p]:
                    eligible = False
                    break
                if end[p] > est:
                    est = end[p]
            if not eligible or est + tail[j] >= best:
                continue
            for o in range(opt_ptr[j], opt_ptr[j + 1]):
                t = opt_time[o]
                base = o * d
                s = earliest(est, t, base)
                fin = s + t
                if fin >= best or s + tail[j] >= best:
                    continue
                placed[j] = True
                start[j], end[j] = s, fin
                choice[j] = o - opt_ptr[j]
                for i in range(d):
                    used[j * d + i] = opt_alloc[base + i]
                    work[i] += opt_alloc[base + i] * t - min_work[j * d + i]
                order.append(j)
                rec(fin if fin > makespan else makespan)
                order.pop()
                for i in range(d):
                    work[i] -= opt_alloc[base + i] * t - min_work[j * d + i]
                placed[j] = False

    rec(0)
    return best, best_start, best_choice
