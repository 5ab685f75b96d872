"""Compiled inner loop of :meth:`MarketEngine.run`.

Mirrors ``MarketEngine.step`` exactly; the two paths are cross-checked in the
test suite. Fresh players come from a pre-drawn pool so the loop never calls
back into Python for randomness.
"""
import numpy as np
from numba import njit

INT_MAX = np.iinfo(np.int64).max


@njit(cache=True)
def run_steps(steps, t, hist_index, cum_demand, cognitive, n_hist, board_lot, threshold,
              price0, tables, wealth, gains, in_use, pos_dir, pos_qty, pos_open, pos_step,
              virt_dir, virt_open, pool_strategies, pool_wealth, pool_pos,
              out_price, out_cognitive, out_dp, out_h, out_demand, out_qbuy, out_qsell,
              out_nbuy, out_nsell, out_nrepl, repl_log, repl_count, out_offset):
    """Advance up to ``steps`` steps; stop early when the pool could run dry.

    ``tables`` has shape ``(N, 5**M, S)``; pool tables are ``(K, S, 5**M)``.

    Returns ``(steps_done, t, hist_index, cum_demand, cognitive, pool_pos,
    repl_count)``. Series are written from ``out_offset`` onwards.
    """
    n, s = gains.shape
    pool_size = pool_wealth.shape[0]
    action = np.zeros(n, dtype=np.int8)
    qty = np.zeros(n, dtype=np.int64)
    kind = np.zeros(n, dtype=np.int8)  # 0 idle/hold, 1 open, 2 close
    recs = np.zeros((n, s), dtype=np.int8)
    done = 0
    while done < steps:
        if pool_size - pool_pos < n:
            break
        t += 1
        idx = hist_index
        demand = 0
        q_buy = 0
        q_sell = 0
        n_buy = 0
        n_sell = 0
        # gather first: independent loads overlap their cache misses
        for i in range(n):
            for j in range(s):
                recs[i, j] = tables[i, idx, j]
        for i in range(n):
            rec = recs[i, in_use[i]]
            d = pos_dir[i]
            a = 0
            q = 0
            k = 0
            if d == 0:
                if rec != 0:
                    a = rec
                    q = wealth[i] // board_lot
                    k = 1
            elif rec == -d:
                a = rec
                q = pos_qty[i]
                k = 2
            action[i] = a
            qty[i] = q
            kind[i] = k
            if q > INT_MAX - max(q_buy, q_sell):
                raise OverflowError("order volume exceeds int64")
            if a == 1:
                q_buy += q
                n_buy += 1
            elif a == -1:
                q_sell += q
                n_sell += 1
        demand = q_buy - q_sell
        dp = demand / n
        if abs(cum_demand) > INT_MAX - abs(demand):
            raise OverflowError("cumulative demand exceeds int64")
        cum_demand += demand
        price = price0 + cum_demand / n
        if dp > threshold:
            h = 2
        elif dp > 0:
            h = 1
        elif dp == 0:
            h = 0
        elif dp >= -threshold:
            h = -1
        else:
            h = -2
        cognitive += h
        hist_index = (hist_index * 5 + h + 2) % n_hist

        n_repl = 0
        for i in range(n):
            for j in range(s):
                vr = recs[i, j]
                vd = virt_dir[i, j]
                if vd == 0:
                    if vr != 0:
                        virt_dir[i, j] = vr
                        virt_open[i, j] = cognitive
                elif vr == -vd:
                    gains[i, j] += vd * (cognitive - virt_open[i, j])
                    virt_dir[i, j] = 0
            k = kind[i]
            if k == 1:
                pos_dir[i] = action[i]
                pos_qty[i] = qty[i]
                pos_open[i] = cognitive
                pos_step[i] = t
            elif k == 2:
                gain = pos_dir[i] * (cognitive - pos_open[i])
                if gain != 0 and pos_qty[i] > (INT_MAX - abs(wealth[i])) // abs(gain):
                    raise OverflowError("wealth exceeds int64")
                wealth[i] += gain * pos_qty[i]
                pos_dir[i] = 0
                pos_qty[i] = 0
                if wealth[i] < board_lot:
                    for j in range(s):
                        for r in range(n_hist):
                            tables[i, r, j] = pool_strategies[pool_pos, j, r]
                    wealth[i] = pool_wealth[pool_pos]
                    pool_pos += 1
                    gains[i] = 0
                    in_use[i] = 0
                    pos_open[i] = 0
                    pos_step[i] = 0
                    virt_dir[i] = 0
                    virt_open[i] = 0
                    repl_log[repl_count, 0] = t
                    repl_log[repl_count, 1] = i
                    repl_count += 1
                    n_repl += 1
                elif s > 1:
                    cur = in_use[i]
                    best = cur
                    top = gains[i, cur]
                    for j in range(s):
                        if gains[i, j] > top:
                            top = gains[i, j]
                            best = j
                    if best != cur:
                        virt_dir[i, best] = 0
                        in_use[i] = best

        o = out_offset + done
        out_price[o] = price
        out_cognitive[o] = cognitive
        out_dp[o] = dp
        out_h[o] = h
        out_demand[o] = demand
        out_qbuy[o] = q_buy
        out_qsell[o] = q_sell
        out_nbuy[o] = n_buy
        out_nsell[o] = n_sell
        out_nrepl[o] = n_repl
        done += 1
    return done, t, hist_index, cum_demand, cognitive, pool_pos, repl_count
