# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled cycle loops. Must stay output-identical to ``_reference``."""
import numpy as np

from libc.stdint cimport int64_t, uint64_t, uint8_t

DEF IDLE = 0
DEF WAIT = 1
DEF TX = 2
DEF FB_NONE = 0
DEF FB_DELIVERED = 1
DEF FB_COLLISION = 2


cdef inline uint64_t sm_next(uint64_t* s) noexcept nogil:
    s[0] += 0x9E3779B97F4A7C15ULL
    cdef uint64_t z = s[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline int64_t sm_below(uint64_t* s, int64_t n) noexcept nogil:
    return <int64_t>(((sm_next(s) >> 32) * <uint64_t>n) >> 32)


def run_brs(const int64_t[::1] acyc, const int64_t[::1] anode, int n, int nc, int dur, int preamble,
            int64_t total, int64_t win, const int64_t[::1] static_map, bint dynamic,
            const uint64_t[::1] seeds, int64_t w0, int cmax, bint full_loss):
    cdef Py_ssize_t p = acyc.shape[0]
    delivered_np = np.full(p, -1, dtype=np.int64)
    channel_np = np.full(p, -1, dtype=np.int64)
    single_np = np.zeros(nc, dtype=np.int64)
    coll_np = np.zeros(nc, dtype=np.int64)
    cdef int64_t[::1] delivered_at = delivered_np
    cdef int64_t[::1] chan = channel_np
    cdef int64_t[::1] single = single_np
    cdef int64_t[::1] collc = coll_np

    cdef int64_t[::1] nxt = np.full(max(p, 1), -1, dtype=np.int64)
    cdef int64_t[::1] head = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] tail = np.full(n, -1, dtype=np.int64)
    cdef uint8_t[::1] phase = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] fb = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] collided = np.zeros(n, dtype=np.uint8)
    cdef int64_t[::1] cexp = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] rem = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] tx_ch = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] tx_end = np.zeros(n, dtype=np.int64)
    cdef uint64_t[::1] rng = np.array(seeds, dtype=np.uint64)
    cdef int64_t[::1] started = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] active = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] busy_until = np.zeros(nc, dtype=np.int64)
    cdef int64_t[::1] coll_until = np.zeros(nc, dtype=np.int64)
    cdef int64_t[::1] cnt = np.zeros(nc, dtype=np.int64)

    cdef int64_t collisions = 0, busy_senses = 0, backoffs = 0, max_exp = 0
    cdef int64_t b_coll = 0, b_busy = 0, b_back = 0
    cdef int64_t t, end, pid
    cdef Py_ssize_t ai = 0, i, k, node, ch, n_started, n_active = 0
    cdef uint8_t f

    with nogil:
        for t in range(total):
            if t == win:
                b_coll = collisions
                b_busy = busy_senses
                b_back = backoffs
                max_exp = 0
            while ai < p and acyc[ai] == t:
                node = anode[ai]
                if tail[node] >= 0:
                    nxt[tail[node]] = ai
                else:
                    head[node] = ai
                tail[node] = ai
                ai += 1

            n_started = 0
            for i in range(n):
                f = fb[i]
                if f != FB_NONE:
                    fb[i] = FB_NONE
                    if f == FB_DELIVERED:
                        pid = head[i]
                        head[i] = nxt[pid]
                        if head[i] < 0:
                            tail[i] = -1
                        cexp[i] = 0
                        phase[i] = IDLE
                    else:
                        cexp[i] += 1
                        if cexp[i] > max_exp:
                            max_exp = cexp[i]
                        rem[i] = 1 + sm_below(&rng[i], w0 << (cexp[i] if cexp[i] < cmax else cmax))
                        phase[i] = WAIT
                        backoffs += 1
                if phase[i] == TX:
                    continue
                if phase[i] == WAIT:
                    rem[i] -= 1
                    if rem[i] > 0:
                        continue
                    phase[i] = IDLE
                if head[i] < 0:
                    continue
                if dynamic:
                    ch = 0 if nc == 1 else sm_below(&rng[i], nc)
                else:
                    ch = static_map[i]
                if busy_until[ch] > t:
                    busy_senses += 1
                    rem[i] = 1 + sm_below(&rng[i], w0 << (cexp[i] if cexp[i] < cmax else cmax))
                    phase[i] = WAIT
                    backoffs += 1
                    continue
                phase[i] = TX
                tx_ch[i] = ch
                cnt[ch] += 1
                started[n_started] = i
                n_started += 1

            for k in range(n_started):
                i = started[k]
                ch = tx_ch[i]
                if cnt[ch] >= 2:
                    collided[i] = 1
                    end = t + (dur if full_loss else preamble)
                    if end > coll_until[ch]:
                        coll_until[ch] = end
                else:
                    collided[i] = 0
                    end = t + dur
                tx_end[i] = end
                if end > busy_until[ch]:
                    busy_until[ch] = end
                active[n_active] = i
                n_active += 1
            for ch in range(nc):
                if cnt[ch] >= 2:
                    collisions += 1
                cnt[ch] = 0
                if t >= win:
                    if coll_until[ch] > t:
                        collc[ch] += 1
                    elif busy_until[ch] > t:
                        single[ch] += 1
            k = 0
            while k < n_active:
                i = active[k]
                if tx_end[i] == t + 1:
                    if collided[i]:
                        fb[i] = FB_COLLISION
                    else:
                        pid = head[i]
                        delivered_at[pid] = t + 1
                        chan[pid] = tx_ch[i]
                        fb[i] = FB_DELIVERED
                    n_active -= 1
                    active[k] = active[n_active]
                else:
                    k += 1

    counters = {
        "collisions": collisions - b_coll,
        "busy_senses": busy_senses - b_busy,
        "backoffs": backoffs - b_back,
        "max_exponent": max_exp,
        "token_hops": 0,
        "token_jumps": 0,
        "token_idle_holds": 0,
    }
    return delivered_np, channel_np, counters, single_np, coll_np


def run_token(const int64_t[::1] acyc, const int64_t[::1] anode, int n, int nc, int dur,
              int64_t total, int64_t win, const int64_t[::1] members, const int64_t[::1] ring_off,
              const int64_t[::1] tok_ring, const int64_t[::1] tok_pos0, int64_t hop, int64_t limit):
    cdef Py_ssize_t p = acyc.shape[0]
    delivered_np = np.full(p, -1, dtype=np.int64)
    channel_np = np.full(p, -1, dtype=np.int64)
    single_np = np.zeros(nc, dtype=np.int64)
    coll_np = np.zeros(nc, dtype=np.int64)
    cdef int64_t[::1] delivered_at = delivered_np
    cdef int64_t[::1] chan = channel_np
    cdef int64_t[::1] single = single_np

    cdef int64_t[::1] nxt = np.full(max(p, 1), -1, dtype=np.int64)
    cdef int64_t[::1] head = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] tail = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] holder = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] pos = np.array(tok_pos0, dtype=np.int64)
    cdef uint8_t[::1] held = np.zeros(nc, dtype=np.uint8)
    cdef int64_t[::1] arrive = np.zeros(nc, dtype=np.int64)
    cdef int64_t[::1] busy_until = np.zeros(nc, dtype=np.int64)
    cdef int64_t[::1] served = np.zeros(nc, dtype=np.int64)
    cdef int64_t[::1] ch_end = np.zeros(nc, dtype=np.int64)
    cdef int64_t[::1] ch_pid = np.full(nc, -1, dtype=np.int64)

    cdef int64_t hops = 0, jumps = 0, idle = 0, b_hops = 0, b_jumps = 0, b_idle = 0
    cdef int64_t t, pid, r, size, dest
    cdef Py_ssize_t ai = 0, k, node
    cdef bint broken = False

    with nogil:
        for t in range(total):
            if t == win:
                b_hops = hops
                b_jumps = jumps
                b_idle = idle
            while ai < p and acyc[ai] == t:
                node = anode[ai]
                if tail[node] >= 0:
                    nxt[tail[node]] = ai
                else:
                    head[node] = ai
                tail[node] = ai
                ai += 1

            for k in range(nc):
                if held[k] or arrive[k] != t:
                    continue
                r = tok_ring[k]
                size = ring_off[r + 1] - ring_off[r]
                dest = members[ring_off[r] + pos[k]]
                if holder[dest] >= 0:
                    pos[k] = (pos[k] + 1) % size
                    arrive[k] = t + hop
                    jumps += 1
                else:
                    held[k] = 1
                    served[k] = 0
                    busy_until[k] = t
                    holder[dest] = k

            for k in range(nc):
                if not held[k] or busy_until[k] > t:
                    continue
                r = tok_ring[k]
                size = ring_off[r + 1] - ring_off[r]
                dest = members[ring_off[r] + pos[k]]
                if holder[dest] != k:
                    broken = True
                    break
                if head[dest] >= 0 and (limit == 0 or served[k] < limit):
                    pid = head[dest]
                    head[dest] = nxt[pid]
                    if head[dest] < 0:
                        tail[dest] = -1
                    served[k] += 1
                    busy_until[k] = t + dur
                    ch_end[k] = t + dur
                    ch_pid[k] = pid
                else:
                    holder[dest] = -1
                    if served[k] == 0:
                        idle += 1
                    held[k] = 0
                    pos[k] = (pos[k] + 1) % size
                    arrive[k] = t + hop
                    hops += 1
            if broken:
                break

            for k in range(nc):
                if ch_end[k] > t:
                    if t >= win:
                        single[k] += 1
                    if ch_end[k] == t + 1:
                        delivered_at[ch_pid[k]] = t + 1
                        chan[ch_pid[k]] = k

    if broken:
        raise RuntimeError(f"token bookkeeping corrupted at cycle {t}")
    counters = {
        "collisions": 0,
        "busy_senses": 0,
        "backoffs": 0,
        "max_exponent": 0,
        "token_hops": hops - b_hops,
        "token_jumps": jumps - b_jumps,
        "token_idle_holds": idle - b_idle,
    }
    return delivered_np, channel_np, counters, single_np, coll_np
