"""Step-by-step auditor for the compiled engine.

Advances an engine one step at a time and checks the accounting identities
from state observed before and after each step, without using the engine's
own settlement bookkeeping.
"""
import numpy as np
from numba import njit

from speculation_game.engine import MarketEngine, TrialResult

CHECKS = ("demand_identity", "dp_identity", "price_increment", "cognitive_sum", "wealth_change",
          "wealth_outside_close", "withdrawal_rule", "withdrawal_missed", "entry_wealth",
          "open_quantity", "activity")


@njit(cache=True)
def _check_players(counts, lot, P, w0, d0, q0, o0, w1, d1, q1, replaced):
    for i in range(w0.size):
        closed = d0[i] != 0 and (d1[i] == 0 or replaced[i])
        expected = w0[i]
        if closed:
            expected += d0[i] * (P - o0[i]) * q0[i]
        if replaced[i]:
            if not closed or expected >= lot:
                counts[6] += 1
            if w1[i] < lot or w1[i] > lot + 99:
                counts[8] += 1
        else:
            if w1[i] != expected:
                counts[4] += 1
            if closed and expected < lot:
                counts[7] += 1
        if not closed and w1[i] != w0[i]:
            counts[5] += 1
        if d0[i] == 0 and d1[i] != 0 and q1[i] != w0[i] // lot:
            counts[9] += 1
        if w1[i] < lot:
            counts[10] += 1


class Violations:
    def __init__(self):
        self.array = np.zeros(len(CHECKS), dtype=np.int64)
        self.steps = 0

    @property
    def counts(self):
        return {name: int(c) for name, c in zip(CHECKS, self.array) if c}

    @property
    def total(self):
        return int(self.array.sum())


def audited_run(config, trial=0, violations=None):
    """Run ``config`` step by step, recording accounting violations.

    Returns ``(TrialResult, Violations)``; the trajectory is the one
    ``run_trial(config, trial)`` produces.
    """
    v = violations if violations is not None else Violations()
    counts = v.array
    eng = MarketEngine(config, trial)
    n, lot = config.n_players, config.board_lot
    out = TrialResult.allocate(config.steps, eng.market_price, eng.cognitive_price)
    series = ("price_change", "quantized_move", "excess_demand", "buy_volume", "sell_volume",
              "n_buyers", "n_sellers", "n_replaced")
    replaced = np.zeros(n, dtype=np.bool_)
    cum_h = 0
    start_log = len(eng.replacements)
    for k in range(config.steps):
        w0 = eng.wealth.copy()
        d0 = eng.position_dir.copy()
        q0 = eng.position_qty.copy()
        o0 = eng.position_open.copy()
        p0 = eng.market_price
        n_log = len(eng.replacements)

        step = eng.run(1)
        out.price[k + 1] = step.price[1]
        out.cognitive_price[k + 1] = step.cognitive_price[1]
        for name in series:
            getattr(out, name)[k] = getattr(step, name)[0]

        D = int(step.excess_demand[0])
        P = int(step.cognitive_price[1])
        p1 = float(step.price[1])
        cum_h += int(step.quantized_move[0])
        counts[0] += D != int(step.buy_volume[0]) - int(step.sell_volume[0])
        counts[1] += step.price_change[0] != D / n
        counts[2] += abs((p1 - p0) - D / n) > 1e-9 * max(1.0, abs(p1), abs(p0))
        counts[3] += P != cum_h

        new = eng.replacements[n_log:]
        for _, i in new:
            replaced[i] = True
        _check_players(counts, lot, P, w0, d0, q0, o0, eng.wealth, eng.position_dir,
                       eng.position_qty, replaced)
        for _, i in new:
            replaced[i] = False
        v.steps += 1
    out.replacements = np.array(eng.replacements[start_log:], dtype=np.int64).reshape(-1, 2)
    return out, v
