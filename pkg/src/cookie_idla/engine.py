"""Compiled simulation kernels, with pure-Python fallbacks.

Two execution styles for the walk:

* honest stepping: one random draw per lattice step, exact step counts and
  local times (the law of ``walk.run_until_exit``, compiled).
* skeleton sampling: stretches of sites with no remaining cookies are
  collapsed into single gambler's-ruin draws, and runs into fresh territory
  are drawn as one truncated geometric.  Only the exit side is produced,
  with exactly the law of the honest walk; this is what makes cluster
  trajectories of length 10^5 tractable (an excursion at cluster time n
  costs O(n) events instead of O(n^2) lattice steps).

Collapse correctness rests on two facts: between two consecutive sites that
still hold cookies the walk is a simple symmetric random walk (so its exit
side is an explicit Bernoulli), and the consecutive first visits beyond the
explored range each consume cookie 1, so the length of such a run is
geometric.  Both reductions are validated in the tests against an exact
finite-state enumeration oracle and against honest stepping.

Replica streams are xoshiro256++ states derived by hashing
(master seed, experiment id, replica index); results are therefore
independent of how replicas are distributed over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import rng as rng_mod
from .environment import CookieEnvironment
from .errors import MaxStepsExceeded, TimeBudgetExceeded

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap


DEFAULT_EVENT_BUDGET = 10**9

_U1 = np.uint64(1)
_U11 = np.uint64(11)
_U17 = np.uint64(17)
_U23 = np.uint64(23)
_U45 = np.uint64(45)
_U64 = np.uint64(64)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53
_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# xoshiro256++ (state = uint64[4], mutated in place)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _next_u64(s):
    x = s[0] + s[3]
    result = ((x << _U23) | (x >> (_U64 - _U23))) + s[0]
    t = s[1] << _U17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = (s[3] << _U45) | (s[3] >> (_U64 - _U45))
    return result


@njit(cache=True)
def _u01(s):
    # uniform on [0, 1)
    return (_next_u64(s) >> _U11) * _INV53


@njit(cache=True)
def _u01pos(s):
    # uniform on (0, 1], safe for log()
    return ((_next_u64(s) >> _U11) + _U1) * _INV53


@njit(cache=True)
def _normal(s):
    return math.sqrt(-2.0 * math.log(_u01pos(s))) * math.cos(_TWO_PI * _u01(s))


# ---------------------------------------------------------------------------
# skeleton excursion sampler
# ---------------------------------------------------------------------------


@njit(cache=True)
def _skeleton_exit_m1(pos, neg, right, left, s, max_events):
    """Exit side for stacks of length <= 1: every visited site is cookie-free,
    so the active set is exactly the two frontier sites and no per-site
    bookkeeping is needed.  Returns 1 (right), 0 (left), -1 (budget)."""
    npos = len(pos)
    nneg = len(neg)
    lp1 = math.log(pos[0]) if npos > 0 else 0.0
    lq1 = math.log(1.0 - neg[0]) if nneg > 0 else 0.0
    x = 0
    cmx = 0  # highest site whose cookie is consumed
    cmn = 0
    ev = 0
    while ev < max_events:
        ev += 1
        r_act = cmx + 1 if (npos > 0 and cmx + 1 < right) else right
        l_act = cmn - 1 if (nneg > 0 and cmn - 1 > left) else left
        if _u01(s) * (r_act - l_act) < (x - l_act):
            if r_act == right:
                return 1
            lim = right - r_act
            t = math.log(_u01pos(s)) / lp1
            if t >= lim:
                return 1
            g = int(t)
            cmx = r_act + g
            x = cmx - 1
        else:
            if l_act == left:
                return 0
            lim = l_act - left
            t = math.log(_u01pos(s)) / lq1
            if t >= lim:
                return 0
            g = int(t)
            cmn = l_act - g
            x = cmn + 1
    return -1


@njit(cache=True)
def _find_up(pos, neg, cnt, stamp, up, epoch, ix, off, w):
    """Index of the nearest cookie-holding site or barrier strictly above ix."""
    npos = len(pos)
    nneg = len(neg)
    j = ix + 1
    while True:
        if j >= w:
            return w
        y = j - off
        if y == 0:
            j += 1
            continue
        if y > 0:
            if npos == 0:
                return w
            if stamp[j] != epoch:
                return j
            if cnt[j] < npos:
                return j
        else:
            if nneg == 0:
                j = off + 1
                continue
            if stamp[j] != epoch:
                return j
            if cnt[j] < nneg:
                return j
        k = up[j]
        if k < w:
            ky = k - off
            if ky != 0 and stamp[k] == epoch:
                mk = npos if ky > 0 else nneg
                if cnt[k] >= mk:
                    up[j] = up[k]
                    k = up[j]
        j = k


@njit(cache=True)
def _find_dn(pos, neg, cnt, stamp, dn, epoch, ix, off, w):
    npos = len(pos)
    nneg = len(neg)
    j = ix - 1
    while True:
        if j <= 0:
            return 0
        y = j - off
        if y == 0:
            j -= 1
            continue
        if y < 0:
            if nneg == 0:
                return 0
            if stamp[j] != epoch:
                return j
            if cnt[j] < nneg:
                return j
        else:
            if npos == 0:
                j = off - 1
                continue
            if stamp[j] != epoch:
                return j
            if cnt[j] < npos:
                return j
        k = dn[j]
        if k > 0:
            ky = k - off
            if ky != 0 and stamp[k] == epoch:
                mk = npos if ky > 0 else nneg
                if cnt[k] >= mk:
                    dn[j] = dn[k]
                    k = dn[j]
        j = k


@njit(cache=True)
def _skeleton_exit_general(pos, neg, right, left, cnt, stamp, up, dn, epoch, s, max_events):
    """Exit side for arbitrary finite stacks.

    Workspace arrays are indexed by site - left and reused across calls via
    the epoch stamp.  ``cnt`` holds consumed cookies per site (255 marks
    permanently fair sites); ``up``/``dn`` are next-candidate pointers over
    exhausted sites, compressed on traversal.
    """
    npos = len(pos)
    nneg = len(neg)
    off = -left
    w = right - left
    lp1 = math.log(pos[0]) if npos > 0 else 0.0
    lq1 = math.log(1.0 - neg[0]) if nneg > 0 else 0.0
    iorg = off
    stamp[iorg] = epoch
    cnt[iorg] = 255
    up[iorg] = iorg + 1
    dn[iorg] = iorg - 1
    x = 0
    mx = 0
    mn = 0
    ev = 0
    while ev < max_events:
        ev += 1
        if x == right:
            return 1
        if x == left:
            return 0
        ix = x + off
        if x > 0:
            m_here = npos
        elif x < 0:
            m_here = nneg
        else:
            m_here = 0
        c = np.int64(cnt[ix]) if stamp[ix] == epoch else np.int64(0)
        if m_here > 0 and c < m_here:
            # consume cookie c+1 at x
            if stamp[ix] != epoch:
                stamp[ix] = epoch
                up[ix] = ix + 1
                dn[ix] = ix - 1
            cnt[ix] = c + 1
            pv = pos[c] if x > 0 else neg[c]
            if _u01(s) < pv:
                x += 1
                if x > mx:
                    mx = x
            else:
                x -= 1
                if x < mn:
                    mn = x
            continue
        # fair at x: collapse the cookie-free stretch around it
        if stamp[ix] != epoch:
            stamp[ix] = epoch
            cnt[ix] = 255
            up[ix] = ix + 1
            dn[ix] = ix - 1
        r_idx = _find_up(pos, neg, cnt, stamp, up, epoch, ix, off, w)
        l_idx = _find_dn(pos, neg, cnt, stamp, dn, epoch, ix, off, w)
        if _u01(s) * (r_idx - l_idx) < (ix - l_idx):
            if r_idx == w:
                return 1
            y = r_idx - off
            if y > mx:
                # fresh frontier: run of first-cookie consumptions
                lim = right - y
                t = math.log(_u01pos(s)) / lp1
                if t >= lim:
                    return 1
                g = int(t)
                for j in range(r_idx, r_idx + g + 1):
                    stamp[j] = epoch
                    cnt[j] = 1
                    up[j] = j + 1
                    dn[j] = j - 1
                mx = y + g
                x = mx - 1
            else:
                x = y
        else:
            if l_idx == 0:
                return 0
            y = l_idx - off
            if y < mn:
                lim = y - left
                t = math.log(_u01pos(s)) / lq1
                if t >= lim:
                    return 0
                g = int(t)
                for j in range(l_idx - g, l_idx + 1):
                    stamp[j] = epoch
                    cnt[j] = 1
                    up[j] = j + 1
                    dn[j] = j - 1
                mn = y - g
                x = mn + 1
            else:
                x = y
    return -1


@njit(cache=True)
def _skeleton_exit_batch(pos, neg, right, left, states, out, max_events):
    replicas = states.shape[0]
    m1 = len(pos) <= 1 and len(neg) <= 1
    w = right - left
    if m1:
        cnt = np.zeros(1, dtype=np.uint8)
        stamp = np.zeros(1, dtype=np.uint32)
        up = np.zeros(1, dtype=np.int32)
        dn = np.zeros(1, dtype=np.int32)
    else:
        cnt = np.zeros(w + 2, dtype=np.uint8)
        stamp = np.zeros(w + 2, dtype=np.uint32)
        up = np.zeros(w + 2, dtype=np.int32)
        dn = np.zeros(w + 2, dtype=np.int32)
    for k in range(replicas):
        s = states[k]
        if m1:
            r = _skeleton_exit_m1(pos, neg, right, left, s, max_events)
        else:
            r = _skeleton_exit_general(
                pos, neg, right, left, cnt, stamp, up, dn, np.uint32(k + 1), s, max_events
            )
        out[k] = np.uint8(2) if r < 0 else np.uint8(r)


@njit(cache=True)
def _idla_path_kernel(pos, neg, n_steps, s, d_out, max_events):
    """Grow the cluster n_steps times, one fresh excursion per step.

    Fills d_out[0..n_steps] with the right boundary; returns 0, or -1 if an
    excursion overran the event budget.
    """
    m1 = len(pos) <= 1 and len(neg) <= 1
    if m1:
        cnt = np.zeros(1, dtype=np.uint8)
        stamp = np.zeros(1, dtype=np.uint32)
        up = np.zeros(1, dtype=np.int32)
        dn = np.zeros(1, dtype=np.int32)
    else:
        cnt = np.zeros(n_steps + 4, dtype=np.uint8)
        stamp = np.zeros(n_steps + 4, dtype=np.uint32)
        up = np.zeros(n_steps + 4, dtype=np.int32)
        dn = np.zeros(n_steps + 4, dtype=np.int32)
    d = 0
    d_out[0] = 0
    for n in range(n_steps):
        right = d + 1
        left = d - n - 1
        if m1:
            r = _skeleton_exit_m1(pos, neg, right, left, s, max_events)
        else:
            r = _skeleton_exit_general(
                pos, neg, right, left, cnt, stamp, up, dn, np.uint32(n + 1), s, max_events
            )
        if r < 0:
            return -1
        d += r
        d_out[n + 1] = d
    return 0


# ---------------------------------------------------------------------------
# honest stepping kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _honest_exit_batch(pos, neg, right, left, states, sides, steps, max_steps):
    npos = len(pos)
    nneg = len(neg)
    off = -left
    w = right - left
    cnt = np.zeros(w + 1, dtype=np.uint8)
    for k in range(states.shape[0]):
        s = states[k]
        cnt[:] = 0
        x = 0
        n = np.int64(0)
        side = np.int8(-1)
        while n < max_steps:
            if x > 0:
                c = cnt[x + off]
                pv = pos[c] if c < npos else 0.5
                if c < npos:
                    cnt[x + off] = c + 1
            elif x < 0:
                c = cnt[x + off]
                pv = neg[c] if c < nneg else 0.5
                if c < nneg:
                    cnt[x + off] = c + 1
            else:
                pv = 0.5
            if _u01(s) < pv:
                x += 1
            else:
                x -= 1
            n += 1
            if x == right:
                side = np.int8(1)
                break
            if x == left:
                side = np.int8(0)
                break
        sides[k] = side
        steps[k] = n


@njit(cache=True)
def _position_after_batch(pos, neg, n_steps, states, out):
    npos = len(pos)
    nneg = len(neg)
    off = n_steps
    cnt = np.zeros(2 * n_steps + 1, dtype=np.uint8)
    for k in range(states.shape[0]):
        s = states[k]
        cnt[:] = 0
        x = 0
        for _ in range(n_steps):
            if x > 0:
                c = cnt[x + off]
                pv = pos[c] if c < npos else 0.5
                if c < npos:
                    cnt[x + off] = c + 1
            elif x < 0:
                c = cnt[x + off]
                pv = neg[c] if c < nneg else 0.5
                if c < nneg:
                    cnt[x + off] = c + 1
            else:
                pv = 0.5
            if _u01(s) < pv:
                x += 1
            else:
                x -= 1
        out[k] = x
    return 0


# ---------------------------------------------------------------------------
# perturbed-BM kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _pbm_final_batch(alpha, beta, n_steps, sqrt_dt, states, out):
    for k in range(states.shape[0]):
        s = states[k]
        y = 0.0
        b = 0.0
        m = 0.0
        i = 0.0
        for _ in range(n_steps):
            b += sqrt_dt * _normal(s)
            y0 = b + alpha * m + beta * i
            if y0 > m:
                y = (b + beta * i) / (1.0 - alpha)
                m = y
            elif y0 < i:
                y = (b + alpha * m) / (1.0 - beta)
                i = y
            else:
                y = y0
        out[k] = y


@njit(cache=True)
def _pbm_exit_batch(alpha, beta, x, dt, t_max, states, out):
    lower = x - 1.0
    sqrt_dt = math.sqrt(dt)
    max_steps = np.int64(t_max / dt)
    for k in range(states.shape[0]):
        s = states[k]
        y = 0.0
        b = 0.0
        m = 0.0
        i = 0.0
        res = np.uint8(2)
        for _ in range(max_steps):
            b += sqrt_dt * _normal(s)
            y0 = b + alpha * m + beta * i
            if y0 > m:
                y = (b + beta * i) / (1.0 - alpha)
                m = y
            elif y0 < i:
                y = (b + alpha * m) / (1.0 - beta)
                i = y
            else:
                y = y0
            if y >= x:
                res = np.uint8(1)
                break
            if y <= lower:
                res = np.uint8(0)
                break
        out[k] = res


@njit(cache=True)
def _pbm_path_from_increments(alpha, beta, db, y_out, b_out, m_out, i_out):
    y = 0.0
    b = 0.0
    m = 0.0
    i = 0.0
    for k in range(db.shape[0]):
        b += db[k]
        y0 = b + alpha * m + beta * i
        if y0 > m:
            y = (b + beta * i) / (1.0 - alpha)
            m = y
        elif y0 < i:
            y = (b + alpha * m) / (1.0 - beta)
            i = y
        else:
            y = y0
        y_out[k] = y
        b_out[k] = b
        m_out[k] = m
        i_out[k] = i


# ---------------------------------------------------------------------------
# pure-Python twins (fallback when numba is unavailable, and an independent
# rendering of the skeleton algorithm for cross-checks)
# ---------------------------------------------------------------------------


def _py_skeleton_exit(pos, neg, right, left, rng, max_events):
    npos = len(pos)
    nneg = len(neg)
    consumed: dict[int, int] = {}

    def remaining(site):
        if site == 0:
            return 0
        m = npos if site > 0 else nneg
        return m - consumed.get(site, 0)

    x = 0
    mx = 0
    mn = 0
    ev = 0
    while ev < max_events:
        ev += 1
        if x == right:
            return 1
        if x == left:
            return 0
        m_here = 0 if x == 0 else (npos if x > 0 else nneg)
        c = consumed.get(x, 0)
        if m_here > 0 and c < m_here:
            consumed[x] = c + 1
            pv = pos[c] if x > 0 else neg[c]
            x += 1 if rng.random() < pv else -1
            mx = max(mx, x)
            mn = min(mn, x)
            continue
        r_site = right
        j = x + 1
        while j < right:
            if j > mx:
                r_site = j if (npos and j > 0) else right
                break
            if remaining(j) > 0:
                r_site = j
                break
            j += 1
        l_site = left
        j = x - 1
        while j > left:
            if j < mn:
                l_site = j if (nneg and j < 0) else left
                break
            if remaining(j) > 0:
                l_site = j
                break
            j -= 1
        if rng.random() * (r_site - l_site) < (x - l_site):
            if r_site == right:
                return 1
            if r_site > mx:
                lim = right - r_site
                t = math.log(1.0 - rng.random()) / math.log(pos[0])
                if t >= lim:
                    return 1
                g = int(t)
                for site in range(r_site, r_site + g + 1):
                    consumed[site] = 1
                mx = r_site + g
                x = mx - 1
            else:
                x = r_site
        else:
            if l_site == left:
                return 0
            if l_site < mn:
                lim = l_site - left
                t = math.log(1.0 - rng.random()) / math.log(1.0 - neg[0])
                if t >= lim:
                    return 0
                g = int(t)
                for site in range(l_site - g, l_site + 1):
                    consumed[site] = 1
                mn = l_site - g
                x = mn + 1
            else:
                x = l_site
    return -1


def _py_honest_exit(pos, neg, right, left, rng, max_steps):
    npos = len(pos)
    nneg = len(neg)
    consumed: dict[int, int] = {}
    x = 0
    n = 0
    while n < max_steps:
        if x == 0:
            pv = 0.5
        else:
            stack = pos if x > 0 else neg
            m = npos if x > 0 else nneg
            c = consumed.get(x, 0)
            if c < m:
                pv = stack[c]
                consumed[x] = c + 1
            else:
                pv = 0.5
        x += 1 if rng.random() < pv else -1
        n += 1
        if x == right:
            return 1, n
        if x == left:
            return 0, n
    return -1, n


def _py_position_after(pos, neg, n_steps, rng):
    npos = len(pos)
    nneg = len(neg)
    consumed: dict[int, int] = {}
    x = 0
    for _ in range(n_steps):
        if x == 0:
            pv = 0.5
        else:
            stack = pos if x > 0 else neg
            m = npos if x > 0 else nneg
            c = consumed.get(x, 0)
            if c < m:
                pv = stack[c]
                consumed[x] = c + 1
            else:
                pv = 0.5
        x += 1 if rng.random() < pv else -1
    return x


def _py_pbm_final(alpha, beta, n_steps, sqrt_dt, rng):
    y = b = m = i = 0.0
    for _ in range(n_steps):
        b += sqrt_dt * rng.standard_normal()
        y0 = b + alpha * m + beta * i
        if y0 > m:
            y = (b + beta * i) / (1.0 - alpha)
            m = y
        elif y0 < i:
            y = (b + alpha * m) / (1.0 - beta)
            i = y
        else:
            y = y0
    return y


def _py_pbm_exit(alpha, beta, x, dt, t_max, rng):
    lower = x - 1.0
    sqrt_dt = math.sqrt(dt)
    y = b = m = i = 0.0
    for _ in range(int(t_max / dt)):
        b += sqrt_dt * rng.standard_normal()
        y0 = b + alpha * m + beta * i
        if y0 > m:
            y = (b + beta * i) / (1.0 - alpha)
            m = y
        elif y0 < i:
            y = (b + alpha * m) / (1.0 - beta)
            i = y
        else:
            y = y0
        if y >= x:
            return 1
        if y <= lower:
            return 0
    return 2


# ---------------------------------------------------------------------------
# dispatchers
# ---------------------------------------------------------------------------


def _env_arrays(env: CookieEnvironment):
    return (
        np.asarray(env.pos_cookies, dtype=np.float64),
        np.asarray(env.neg_cookies, dtype=np.float64),
    )


def _check_barriers(right: int, left: int) -> None:
    if not (left < 0 < right):
        raise ValueError(f"barriers must satisfy left < 0 < right, got ({right}, {left})")


def _chunk_ranges(total: int, workers: int):
    workers = max(1, min(workers, total))
    base = total // workers
    extra = total % workers
    start = 0
    for w in range(workers):
        count = base + (1 if w < extra else 0)
        if count:
            yield start, count
        start += count


def _run_chunks(job, kwargs, total, workers):
    """Run job(start=, count=, **kwargs) over replica ranges, in-order."""
    chunks = list(_chunk_ranges(total, workers))
    if len(chunks) <= 1:
        return [job(start=start, count=count, **kwargs) for start, count in chunks]
    with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
        futures = [pool.submit(job, start=start, count=count, **kwargs) for start, count in chunks]
        return [f.result() for f in futures]


def _exit_sides_chunk(env, right, left, master_seed, experiment_id, honest, max_events, start, count):
    pos, neg = _env_arrays(env)
    out = np.zeros(count, dtype=np.uint8)
    if HAVE_NUMBA:
        states = rng_mod.kernel_states(master_seed, experiment_id, count, start=start)
        if honest:
            steps = np.zeros(count, dtype=np.int64)
            sides = np.zeros(count, dtype=np.int8)
            _honest_exit_batch(pos, neg, right, left, states, sides, steps, max_events)
            if (sides < 0).any():
                raise MaxStepsExceeded(f"walk exceeded {max_events} steps")
            return sides.astype(np.uint8)
        _skeleton_exit_batch(pos, neg, right, left, states, out, max_events)
    else:
        for k in range(count):
            stream = rng_mod.philox_stream(master_seed, experiment_id, start + k)
            if honest:
                r, _ = _py_honest_exit(pos, neg, right, left, stream, max_events)
            else:
                r = _py_skeleton_exit(pos, neg, right, left, stream, max_events)
            out[k] = 2 if r < 0 else r
    if (out > 1).any():
        raise MaxStepsExceeded(f"excursion exceeded its event budget of {max_events}")
    return out


def sample_exit_sides(
    env: CookieEnvironment,
    right: int,
    left: int,
    replicas: int,
    master_seed: int,
    experiment_id: str,
    honest: bool = False,
    max_events: int = DEFAULT_EVENT_BUDGET,
    workers: int = 1,
) -> np.ndarray:
    """Per-replica exit indicators (1 = hit ``right`` first) for fresh walks."""
    _check_barriers(right, left)
    kwargs = dict(
        env=env,
        right=right,
        left=left,
        master_seed=master_seed,
        experiment_id=experiment_id,
        honest=honest,
        max_events=max_events,
    )
    parts = _run_chunks(_exit_sides_chunk, kwargs, replicas, workers)
    return np.concatenate(parts)


def exit_sides_and_steps(
    env: CookieEnvironment,
    right: int,
    left: int,
    replicas: int,
    master_seed: int,
    experiment_id: str,
    max_steps: int = DEFAULT_EVENT_BUDGET,
):
    """Honest-stepping exits with exact step counts."""
    _check_barriers(right, left)
    pos, neg = _env_arrays(env)
    if HAVE_NUMBA:
        states = rng_mod.kernel_states(master_seed, experiment_id, replicas)
        sides = np.zeros(replicas, dtype=np.int8)
        steps = np.zeros(replicas, dtype=np.int64)
        _honest_exit_batch(pos, neg, right, left, states, sides, steps, max_steps)
    else:
        sides = np.zeros(replicas, dtype=np.int8)
        steps = np.zeros(replicas, dtype=np.int64)
        for k in range(replicas):
            stream = rng_mod.philox_stream(master_seed, experiment_id, k)
            r, n = _py_honest_exit(pos, neg, right, left, stream, max_steps)
            sides[k] = r
            steps[k] = n
    if (sides < 0).any():
        raise MaxStepsExceeded(f"walk exceeded {max_steps} steps")
    return sides, steps


def _positions_chunk(env, n_steps, master_seed, experiment_id, start, count):
    pos, neg = _env_arrays(env)
    out = np.zeros(count, dtype=np.int64)
    if HAVE_NUMBA:
        states = rng_mod.kernel_states(master_seed, experiment_id, count, start=start)
        _position_after_batch(pos, neg, n_steps, states, out)
    else:
        for k in range(count):
            stream = rng_mod.philox_stream(master_seed, experiment_id, start + k)
            out[k] = _py_position_after(pos, neg, n_steps, stream)
    return out


def final_positions(
    env: CookieEnvironment,
    n_steps: int,
    replicas: int,
    master_seed: int,
    experiment_id: str,
    workers: int = 1,
) -> np.ndarray:
    """Walk positions after exactly n_steps, one fresh walk per replica."""
    kwargs = dict(env=env, n_steps=n_steps, master_seed=master_seed, experiment_id=experiment_id)
    parts = _run_chunks(_positions_chunk, kwargs, replicas, workers)
    return np.concatenate(parts)


def idla_path(
    env: CookieEnvironment,
    n_steps: int,
    master_seed: int,
    experiment_id: str = "idla",
    replica_index: int = 0,
    max_events: int = DEFAULT_EVENT_BUDGET,
) -> np.ndarray:
    """Right-boundary path d[0..n_steps] of one cluster trajectory."""
    pos, neg = _env_arrays(env)
    d_out = np.zeros(n_steps + 1, dtype=np.int64)
    if HAVE_NUMBA:
        state = rng_mod.kernel_state(master_seed, experiment_id, replica_index)
        rc = _idla_path_kernel(pos, neg, n_steps, state, d_out, max_events)
    else:
        stream = rng_mod.philox_stream(master_seed, experiment_id, replica_index)
        d = 0
        rc = 0
        for n in range(n_steps):
            r = _py_skeleton_exit(pos, neg, d + 1, d - n - 1, stream, max_events)
            if r < 0:
                rc = -1
                break
            d += r
            d_out[n + 1] = d
    if rc < 0:
        raise MaxStepsExceeded(f"excursion exceeded its event budget of {max_events}")
    return d_out


def _idla_final_chunk(env, n_steps, master_seed, experiment_id, max_events, start, count):
    out = np.zeros(count, dtype=np.float64)
    for k in range(count):
        d = idla_path(env, n_steps, master_seed, experiment_id, start + k, max_events)
        out[k] = (d[-1] + 1.0) / (n_steps + 2.0)
    return out


def idla_final_x(
    env: CookieEnvironment,
    n_steps: int,
    replicas: int,
    master_seed: int,
    experiment_id: str = "idla",
    workers: int = 1,
    max_events: int = DEFAULT_EVENT_BUDGET,
) -> np.ndarray:
    """Normalized right boundary x_N for independent cluster trajectories."""
    kwargs = dict(
        env=env,
        n_steps=n_steps,
        master_seed=master_seed,
        experiment_id=experiment_id,
        max_events=max_events,
    )
    parts = _run_chunks(_idla_final_chunk, kwargs, replicas, workers)
    return np.concatenate(parts)


def _pbm_final_chunk(alpha, beta, t_end, dt, master_seed, experiment_id, start, count):
    n_steps = int(round(t_end / dt))
    out = np.zeros(count, dtype=np.float64)
    if HAVE_NUMBA:
        states = rng_mod.kernel_states(master_seed, experiment_id, count, start=start)
        _pbm_final_batch(alpha, beta, n_steps, math.sqrt(dt), states, out)
    else:
        for k in range(count):
            stream = rng_mod.philox_stream(master_seed, experiment_id, start + k)
            out[k] = _py_pbm_final(alpha, beta, n_steps, math.sqrt(dt), stream)
    return out


def pbm_final_values(
    alpha: float,
    beta: float,
    t_end: float,
    dt: float,
    replicas: int,
    master_seed: int,
    experiment_id: str = "pbm",
    workers: int = 1,
) -> np.ndarray:
    """Terminal values Y(t_end) of independent perturbed-BM paths."""
    if alpha >= 1.0 or beta >= 1.0:
        raise ValueError("perturbed BM requires alpha < 1 and beta < 1")
    kwargs = dict(
        alpha=alpha, beta=beta, t_end=t_end, dt=dt, master_seed=master_seed, experiment_id=experiment_id
    )
    parts = _run_chunks(_pbm_final_chunk, kwargs, replicas, workers)
    return np.concatenate(parts)


def _pbm_exit_chunk(alpha, beta, x, dt, t_max, master_seed, experiment_id, start, count):
    out = np.zeros(count, dtype=np.uint8)
    if HAVE_NUMBA:
        states = rng_mod.kernel_states(master_seed, experiment_id, count, start=start)
        _pbm_exit_batch(alpha, beta, x, dt, t_max, states, out)
    else:
        for k in range(count):
            stream = rng_mod.philox_stream(master_seed, experiment_id, start + k)
            out[k] = _py_pbm_exit(alpha, beta, x, dt, t_max, stream)
    return out


def pbm_exit_sides(
    alpha: float,
    beta: float,
    x: float,
    dt: float,
    t_max: float,
    replicas: int,
    master_seed: int,
    experiment_id: str = "pbm-exit",
    workers: int = 1,
) -> np.ndarray:
    """Indicators of hitting x before x-1, one fresh path per replica."""
    if alpha >= 1.0 or beta >= 1.0:
        raise ValueError("perturbed BM requires alpha < 1 and beta < 1")
    if not 0.0 < x < 1.0:
        raise ValueError("x must lie strictly in (0, 1)")
    kwargs = dict(
        alpha=alpha, beta=beta, x=x, dt=dt, t_max=t_max, master_seed=master_seed, experiment_id=experiment_id
    )
    parts = _run_chunks(_pbm_exit_chunk, kwargs, replicas, workers)
    out = np.concatenate(parts)
    if (out > 1).any():
        raise TimeBudgetExceeded(f"a path failed to exit before t_max={t_max} (dt={dt})")
    return out


def pbm_recorded_path(alpha: float, beta: float, increments: np.ndarray):
    """Path arrays (y, b, m, i) driven by the given Brownian increments."""
    db = np.asarray(increments, dtype=np.float64)
    n = db.shape[0]
    y = np.zeros(n)
    b = np.zeros(n)
    m = np.zeros(n)
    i = np.zeros(n)
    if HAVE_NUMBA:
        _pbm_path_from_increments(alpha, beta, db, y, b, m, i)
    else:
        yv = bv = mv = iv = 0.0
        for k in range(n):
            bv += db[k]
            y0 = bv + alpha * mv + beta * iv
            if y0 > mv:
                yv = (bv + beta * iv) / (1.0 - alpha)
                mv = yv
            elif y0 < iv:
                yv = (bv + alpha * mv) / (1.0 - beta)
                iv = yv
            else:
                yv = y0
            y[k] = yv
            b[k] = bv
            m[k] = mv
            i[k] = iv
    return y, b, m, i
