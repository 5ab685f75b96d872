"""Speculation Game market engine.

One trial is a sequential state machine over ``N`` players.  Each step:

1. every player reads the recommendation of its in-use strategy for the
   current history window;
2. the round-trip rule turns recommendations into effective actions;
3. the market clears on the excess demand of effective orders;
4. the quantized move updates the cognitive price and the history;
5. every strategy of every player advances its unit-volume virtual position
   and books closed round trips into its accumulated gain;
6. players whose real trade closed settle wealth, then either withdraw (and
   are replaced) or review their strategies.

The per-player rules are exposed as small functions that work on scalars and
on numpy arrays alike; :class:`MarketEngine` applies them to all players at
once.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .validation import check_positive_int

QUINARY_DIGITS = (-2, -1, 0, 1, 2)
_INT_LIMIT = float(np.iinfo(np.int64).max)
ACTIONS = (-1, 0, 1)


class Transition(enum.IntEnum):
    IDLE = 0
    OPEN = 1
    HOLD = 2
    CLOSE = 3


@dataclass(frozen=True)
class GameConfig:
    """Model parameters of one Speculation Game trial."""

    n_players: int = 1000
    memory: int = 5
    n_strategies: int = 2
    board_lot: int = 9
    cognitive_threshold: float = 3.0
    initial_price: float = 100.0
    steps: int = 50_000
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.n_players, "n_players")
        check_positive_int(self.memory, "memory")
        check_positive_int(self.n_strategies, "n_strategies")
        check_positive_int(self.board_lot, "board_lot")
        check_positive_int(self.steps, "steps")
        check_positive_int(self.seed, "seed", minimum=0)
        if not self.cognitive_threshold > 0:
            raise ValueError(f"cognitive_threshold must be > 0, got {self.cognitive_threshold}")
        if not np.isfinite(self.initial_price):
            raise ValueError("initial_price must be finite")

    @property
    def n_histories(self):
        return 5 ** self.memory

    def replace(self, **changes):
        values = {**self.__dict__, **changes}
        return GameConfig(**values)


@dataclass
class Position:
    direction: int
    open_step: int
    open_cognitive_price: int
    quantity: int = 1

    def __post_init__(self):
        if self.direction not in (-1, 1):
            raise ValueError("direction must be -1 or +1")
        if self.quantity < 1:
            raise ValueError("quantity must be >= 1")


@dataclass
class PlayerState:
    wealth: int
    strategies: np.ndarray
    gains: np.ndarray
    in_use: int = 0
    real_position: Position | None = None
    virtual_positions: list = field(default_factory=list)

    def __post_init__(self):
        if not self.virtual_positions:
            self.virtual_positions = [None] * len(self.strategies)


@dataclass
class StepRecord:
    excess_demand: int
    price_change: float
    quantized_move: int
    buy_volume: int
    sell_volume: int
    n_buyers: int
    n_sellers: int
    n_replaced: int


@dataclass
class MarketState:
    step: int
    market_price: float
    cognitive_price: int
    history: tuple


# ---------------------------------------------------------------------------
# per-player rules
# ---------------------------------------------------------------------------

def encode_history(history):
    """Map a window of quinary digits (oldest first) to its strategy-table row."""
    index = 0
    for h in history:
        if h not in QUINARY_DIGITS:
            raise ValueError(f"history digit {h!r} outside -2..2")
        index = index * 5 + int(h) + 2
    return index


def decode_history(index, memory):
    digits = []
    for _ in range(memory):
        index, d = divmod(index, 5)
        digits.append(d - 2)
    return tuple(reversed(digits))


def generate_strategy(rng, memory, size=None):
    """Draw strategy tables with i.i.d. uniform entries in {-1, 0, +1}.

    ``size`` prepends extra dimensions, so ``size=(k, S)`` yields a
    ``(k, S, 5**memory)`` block.
    """
    check_positive_int(memory, "memory")
    shape = (5 ** memory,) if size is None else tuple(np.atleast_1d(size)) + (5 ** memory,)
    return rng.integers(-1, 2, size=shape, dtype=np.int8)


def decide_action(recommendation, position):
    """Apply the round-trip rule to a recommendation.

    ``position`` is ``None``/``0`` for a flat player, a :class:`Position`, or
    its direction (scalars or arrays). Returns ``(action, transition)``.
    """
    if position is None:
        direction = 0
    else:
        direction = getattr(position, "direction", position)
    rec = np.asarray(recommendation)
    direction = np.asarray(direction)
    flat = direction == 0
    opening = flat & (rec != 0)
    closing = ~flat & (rec == -direction)
    action = np.where(opening | closing, rec, 0).astype(np.int8)
    transition = np.select(
        [opening, closing, ~flat], [Transition.OPEN, Transition.CLOSE, Transition.HOLD],
        Transition.IDLE)
    if action.ndim == 0:
        return int(action), Transition(int(transition))
    return action, transition.astype(np.int8)


def order_quantity(wealth, board_lot):
    return np.floor_divide(wealth, board_lot)


def clear_market(actions, quantities, n_players):
    """Aggregate effective orders into the price change.

    Returns ``(D, dp, q_buy, q_sell, n_buyers, n_sellers)``; the caller adds
    ``dp`` to the previous price.
    """
    actions = np.asarray(actions)
    quantities = np.asarray(quantities, dtype=np.int64)
    buy = actions == 1
    sell = actions == -1
    if max(quantities[buy].sum(dtype=float), quantities[sell].sum(dtype=float)) >= _INT_LIMIT:
        raise OverflowError("order volume exceeds int64")
    q_buy = int(quantities[buy].sum())
    q_sell = int(quantities[sell].sum())
    demand = q_buy - q_sell
    return demand, demand / n_players, q_buy, q_sell, int(buy.sum()), int(sell.sum())


def quantize(price_change, threshold):
    """Five-level perception of a price change."""
    if price_change > threshold:
        return 2
    if price_change > 0:
        return 1
    if price_change == 0:
        return 0
    if price_change >= -threshold:
        return -1
    return -2


def update_cognition(price_change, threshold, cognitive_price, history):
    """Return ``(h, new cognitive price, new history window)``."""
    h = quantize(price_change, threshold)
    return h, cognitive_price + h, tuple(history[1:]) + (h,)


def settle_round_trip(position, cognitive_price):
    """Strategy gain of closing ``position`` at the given cognitive price."""
    return position.direction * (cognitive_price - position.open_cognitive_price)


def settle_wealth(wealth, gain, quantity, board_lot):
    """Return ``(new wealth, withdraw)`` for a closed real trade."""
    wealth = wealth + gain * quantity
    return wealth, wealth < board_lot


def best_strategy(gains, in_use):
    """Argmax of ``gains`` with ties going to ``in_use``, then the lowest index.

    Works row-wise on 2-d ``gains`` with a vector ``in_use``.
    """
    gains = np.asarray(gains)
    if gains.ndim == 1:
        return int(in_use) if gains[in_use] == gains.max() else int(np.argmax(gains))
    rows = np.arange(gains.shape[0])
    current = gains[rows, in_use]
    return np.where(current == gains.max(axis=1), in_use, gains.argmax(axis=1))


def review_strategies(player):
    """Switch ``player`` to its best strategy, aborting that strategy's virtual trade.

    The aborted virtual round trip is not booked into the gains.
    """
    best = best_strategy(player.gains, player.in_use)
    if best != player.in_use:
        player.virtual_positions[best] = None
        player.in_use = best
    return player.in_use


def new_player_block(rng, config, k):
    """Strategies and entry wealth for ``k`` fresh players."""
    strategies = generate_strategy(rng, config.memory, size=(k, config.n_strategies))
    wealth = np.floor(config.board_lot + rng.random(k) * 100.0).astype(np.int64)
    return strategies, wealth


def replace_player(rng, config):
    strategies, wealth = new_player_block(rng, config, 1)
    return PlayerState(wealth=int(wealth[0]), strategies=strategies[0],
                       gains=np.zeros(config.n_strategies, dtype=np.int64))


class PlayerSource:
    """Buffered stream of fresh players drawn from one generator.

    Players are generated in fixed-size batches, so the sequence handed out
    does not depend on how many are requested at a time.
    """

    def __init__(self, rng, config, batch=4096):
        self.rng = rng
        self.config = config
        self.batch = batch
        self.strategies, self.wealth = new_player_block(rng, config, batch)
        self.pos = 0

    @property
    def remaining(self):
        return self.wealth.size - self.pos

    def ensure(self, k):
        if self.remaining >= k:
            return
        # one draw per batch keeps the stream independent of request sizes
        blocks = [new_player_block(self.rng, self.config, self.batch)
                  for _ in range(-(-(k - self.remaining) // self.batch))]
        self.strategies = np.concatenate([self.strategies[self.pos:]] + [b[0] for b in blocks])
        self.wealth = np.concatenate([self.wealth[self.pos:]] + [b[1] for b in blocks])
        self.pos = 0

    def take(self, k):
        self.ensure(k)
        sl = slice(self.pos, self.pos + k)
        self.pos += k
        return self.strategies[sl].copy(), self.wealth[sl].copy()


def trial_streams(seed, trial=0):
    """Independent generators for one trial, derived from (master seed, trial)."""
    history_seq, players_seq = np.random.SeedSequence([seed, trial]).spawn(2)
    return {"history": np.random.default_rng(history_seq),
            "players": np.random.default_rng(players_seq)}


# ---------------------------------------------------------------------------
# vectorised trial
# ---------------------------------------------------------------------------

class MarketEngine:
    """All player and market state of one trial, held as arrays.

    Real positions: ``position_dir`` (0 when flat), ``position_qty``,
    ``position_open``, ``position_step``. Virtual positions:
    ``virtual_dir``/``virtual_open`` with shape ``(N, S)``.
    """

    def __init__(self, config, trial=0):
        self.config = config
        streams = trial_streams(config.seed, trial)
        self._source = PlayerSource(streams["players"], config)
        history = tuple(int(h) for h in streams["history"].integers(-2, 3, size=config.memory))
        strategies, wealth = self._source.take(config.n_players)
        self._init_state(strategies, wealth, history)

    @classmethod
    def from_tables(cls, config, strategies, wealth, history, rng=None):
        """Build an engine from explicit strategy tables, wealths and history.

        Replacement players (if any withdraw) are drawn from ``rng``, which
        defaults to the trial stream of ``config.seed``.
        """
        self = cls.__new__(cls)
        self.config = config
        rng = rng if rng is not None else trial_streams(config.seed)["players"]
        self._source = PlayerSource(rng, config)
        strategies = np.asarray(strategies, dtype=np.int8)
        expected = (config.n_players, config.n_strategies, config.n_histories)
        if strategies.shape != expected:
            raise ValueError(f"strategies must have shape {expected}, got {strategies.shape}")
        if not np.isin(strategies, ACTIONS).all():
            raise ValueError("strategy entries must be in {-1, 0, 1}")
        wealth = np.asarray(wealth, dtype=np.int64)
        if np.any(wealth < config.board_lot):
            raise ValueError("every player needs wealth >= board_lot")
        if len(history) != config.memory:
            raise ValueError(f"history must hold {config.memory} digits")
        self._init_state(strategies.copy(), wealth.copy(), tuple(history))
        return self

    def _init_state(self, strategies, wealth, history):
        n, s = self.config.n_players, self.config.n_strategies
        # (N, 5**M, S): a player's S entries for one history share a cache line
        self._tables = np.ascontiguousarray(strategies.transpose(0, 2, 1))
        self.wealth = wealth
        self.gains = np.zeros((n, s), dtype=np.int64)
        self.in_use = np.zeros(n, dtype=np.int64)
        self.position_dir = np.zeros(n, dtype=np.int8)
        self.position_qty = np.zeros(n, dtype=np.int64)
        self.position_open = np.zeros(n, dtype=np.int64)
        self.position_step = np.zeros(n, dtype=np.int64)
        self.virtual_dir = np.zeros((n, s), dtype=np.int8)
        self.virtual_open = np.zeros((n, s), dtype=np.int64)
        self.t = 0
        self.cognitive_price = 0
        self._history_index = encode_history(history)
        self._cum_demand = 0
        self.market_price = float(self.config.initial_price)
        self._rows = np.arange(n)
        self.replacements = []
        # settlement of the most recent step, for auditing
        self.last_closed = np.zeros(n, dtype=bool)
        self.last_gain = np.zeros(n, dtype=np.int64)
        self.last_quantity = np.zeros(n, dtype=np.int64)
        self.last_withdrawn = np.zeros(n, dtype=bool)

    @property
    def strategies(self):
        """Strategy tables as an ``(N, S, 5**M)`` view."""
        return self._tables.transpose(0, 2, 1)

    @property
    def history(self):
        return decode_history(self._history_index, self.config.memory)

    @property
    def state(self):
        return MarketState(self.t, self.market_price, self.cognitive_price, self.history)

    def player(self, i):
        """Snapshot of player ``i`` as a :class:`PlayerState`."""
        real = None
        if self.position_dir[i]:
            real = Position(int(self.position_dir[i]), int(self.position_step[i]),
                            int(self.position_open[i]), int(self.position_qty[i]))
        virtual = [Position(int(d), -1, int(o)) if d else None
                   for d, o in zip(self.virtual_dir[i], self.virtual_open[i])]
        return PlayerState(int(self.wealth[i]), self.strategies[i].copy(), self.gains[i].copy(),
                           int(self.in_use[i]), real, virtual)

    def step(self):
        cfg = self.config
        self.t += 1
        rows = self._rows

        recs = self._tables[:, self._history_index, :]
        rec = recs[rows, self.in_use]
        action, transition = decide_action(rec, self.position_dir)
        opening = transition == Transition.OPEN
        closing = transition == Transition.CLOSE
        qty = np.where(opening, order_quantity(self.wealth, cfg.board_lot),
                       np.where(closing, self.position_qty, 0))

        demand, dp, q_buy, q_sell, n_buy, n_sell = clear_market(action, qty, cfg.n_players)
        self._cum_demand += demand
        self.market_price = cfg.initial_price + self._cum_demand / cfg.n_players

        h = quantize(dp, cfg.cognitive_threshold)
        self.cognitive_price += h
        P = self.cognitive_price
        self._history_index = (self._history_index * 5 + h + 2) % cfg.n_histories

        # virtual round trips for every strategy, unit volume
        vdir = self.virtual_dir
        v_open = (vdir == 0) & (recs != 0)
        v_close = (vdir != 0) & (recs == -vdir)
        self.gains += np.where(v_close, vdir * (P - self.virtual_open), 0)
        self.virtual_dir = np.where(v_close, 0, np.where(v_open, recs, vdir)).astype(np.int8)
        self.virtual_open = np.where(v_open, P, self.virtual_open)

        # real settlement
        gain = np.where(closing, self.position_dir * (P - self.position_open), 0)
        change = gain * np.where(closing, self.position_qty, 0)
        if np.any(np.abs(gain.astype(float)) * self.position_qty + np.abs(self.wealth) >= _INT_LIMIT):
            raise OverflowError("wealth exceeds int64")
        self.wealth += change
        self.last_closed = closing
        self.last_gain = gain
        self.last_quantity = np.where(closing, self.position_qty, 0)

        self.position_dir = np.where(opening, rec, np.where(closing, 0, self.position_dir)).astype(np.int8)
        self.position_qty = np.where(opening, qty, np.where(closing, 0, self.position_qty))
        self.position_open = np.where(opening, P, self.position_open)
        self.position_step = np.where(opening, self.t, self.position_step)

        withdrawn = closing & (self.wealth < cfg.board_lot)
        self.last_withdrawn = withdrawn
        n_replaced = int(withdrawn.sum())
        if n_replaced:
            self._replace(np.flatnonzero(withdrawn))

        review = np.flatnonzero(closing & ~withdrawn)
        if review.size and cfg.n_strategies > 1:
            current = self.in_use[review]
            best = best_strategy(self.gains[review], current)
            switched = best != current
            if switched.any():
                who = review[switched]
                self.virtual_dir[who, best[switched]] = 0
                self.in_use[who] = best[switched]

        return StepRecord(demand, dp, h, q_buy, q_sell, n_buy, n_sell, n_replaced)

    def _replace(self, idx):
        strategies, wealth = self._source.take(idx.size)
        self.strategies[idx] = strategies
        self.wealth[idx] = wealth
        self.gains[idx] = 0
        self.in_use[idx] = 0
        self.position_dir[idx] = 0
        self.position_qty[idx] = 0
        self.position_open[idx] = 0
        self.position_step[idx] = 0
        self.virtual_dir[idx] = 0
        self.virtual_open[idx] = 0
        self.replacements.extend([self.t, int(i)] for i in idx)

    def run(self, steps=None, backend="numba"):
        """Advance ``steps`` (default ``config.steps``) and collect the series.

        ``backend="numpy"`` drives :meth:`step` directly; the default runs the
        compiled loop, which produces the identical trajectory.
        """
        steps = self.config.steps if steps is None else steps
        result = TrialResult.allocate(steps, self.market_price, self.cognitive_price)
        start = len(self.replacements)
        if backend == "numpy":
            for k in range(steps):
                rec = self.step()
                result.price[k + 1] = self.market_price
                result.cognitive_price[k + 1] = self.cognitive_price
                result.price_change[k] = rec.price_change
                result.quantized_move[k] = rec.quantized_move
                result.excess_demand[k] = rec.excess_demand
                result.buy_volume[k] = rec.buy_volume
                result.sell_volume[k] = rec.sell_volume
                result.n_buyers[k] = rec.n_buyers
                result.n_sellers[k] = rec.n_sellers
                result.n_replaced[k] = rec.n_replaced
        elif backend == "numba":
            self._run_compiled(steps, result)
        else:
            raise ValueError(f"unknown backend {backend!r}")
        result.replacements = np.array(self.replacements[start:], dtype=np.int64).reshape(-1, 2)
        return result

    def _run_compiled(self, steps, result):
        from ._kernel import run_steps

        cfg = self.config
        src = self._source
        done = 0
        while done < steps:
            src.ensure(cfg.n_players + src.batch // 2)
            # each step consumes at most n players from the pool
            log = np.zeros((min(src.remaining, (steps - done) * cfg.n_players), 2), dtype=np.int64)
            n, self.t, self._history_index, self._cum_demand, self.cognitive_price, src.pos, n_log = run_steps(
                steps - done, self.t, self._history_index, self._cum_demand, self.cognitive_price,
                cfg.n_histories, cfg.board_lot, float(cfg.cognitive_threshold),
                float(cfg.initial_price), self._tables, self.wealth, self.gains, self.in_use,
                self.position_dir, self.position_qty, self.position_open, self.position_step,
                self.virtual_dir, self.virtual_open, src.strategies, src.wealth, src.pos,
                result.price[1:], result.cognitive_price[1:], result.price_change,
                result.quantized_move, result.excess_demand, result.buy_volume,
                result.sell_volume, result.n_buyers, result.n_sellers, result.n_replaced,
                log, 0, done)
            self.replacements.extend(log[:n_log].tolist())
            done += n
        self.market_price = float(result.price[-1])

@dataclass
class TrialResult:
    """Per-step series of one trial.

    ``price`` and ``cognitive_price`` have ``T + 1`` entries (index 0 is the
    initial state); the remaining series have one entry per step.
    """

    price: np.ndarray
    cognitive_price: np.ndarray
    price_change: np.ndarray
    quantized_move: np.ndarray
    excess_demand: np.ndarray
    buy_volume: np.ndarray
    sell_volume: np.ndarray
    n_buyers: np.ndarray
    n_sellers: np.ndarray
    n_replaced: np.ndarray
    replacements: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))

    @classmethod
    def allocate(cls, steps, price0, cognitive0):
        ints = lambda: np.zeros(steps, dtype=np.int64)  # noqa: E731
        price = np.empty(steps + 1)
        price[0] = price0
        cognitive = np.empty(steps + 1, dtype=np.int64)
        cognitive[0] = cognitive0
        return cls(price, cognitive, np.zeros(steps), ints(), ints(), ints(), ints(),
                   ints(), ints(), ints())

    @property
    def steps(self):
        return self.price_change.size

    def columns(self):
        """Series keyed by CSV column name, each of length ``T + 1``."""
        def pad(x):
            return np.concatenate([np.zeros(1, dtype=x.dtype), x])

        return {
            "t": np.arange(self.steps + 1),
            "p": self.price,
            "dp": pad(self.price_change),
            "h": pad(self.quantized_move),
            "P": self.cognitive_price,
            "D": pad(self.excess_demand),
            "q_buy": pad(self.buy_volume),
            "q_sell": pad(self.sell_volume),
            "n_buyers": pad(self.n_buyers),
            "n_sellers": pad(self.n_sellers),
            "n_replaced": pad(self.n_replaced),
        }

    @classmethod
    def from_columns(cls, cols, replacements=None):
        def ints(name):
            return np.asarray(cols[name][1:], dtype=np.int64)

        result = cls(np.asarray(cols["p"], dtype=float), np.asarray(cols["P"], dtype=np.int64),
                     np.asarray(cols["dp"][1:], dtype=float), ints("h"), ints("D"),
                     ints("q_buy"), ints("q_sell"), ints("n_buyers"), ints("n_sellers"),
                     ints("n_replaced"))
        if replacements is not None:
            result.replacements = np.asarray(replacements, dtype=np.int64).reshape(-1, 2)
        return result

    def equals(self, other):
        return all(np.array_equal(a, b) for a, b in
                   zip(self.columns().values(), other.columns().values()))


def run_trial(config, trial=0):
    """Simulate one trial of ``config``; trial ``k`` uses seed substream (seed, k)."""
    return MarketEngine(config, trial).run()
