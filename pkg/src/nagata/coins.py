"""Exact minimum-cost signed representations over layered coin systems.

A *coin system* is a finite list of (value, cost) pairs with distinct
positive integer values and positive integer costs.  The cost of an
integer t is

    N(t) = min { sum_i cost_i * |y_i| + |u| :  t = sum_i y_i * value_i + u }

over all signed integer multiplicities y and integer remainder u (the
remainder is paid at unit rate, i.e. the absolute-value norm on Z).

This is exactly the weight-generated norm of z^t on the cyclic subgroup
generated by a central element z when the weight system consists of the
absolute-value base norm plus overrides cost_i on z^(±value_i): any
factorization collapses, by subadditivity of the base, to a choice of
override multiplicities plus a single remainder letter.

The solver is exact for arbitrarily large |t| (hundreds of bits).  It
relies on the rates cost_i/value_i being strictly increasing as values
decrease, which holds for every admissible construction tower; the
constructor rejects systems without that separation.
"""

from __future__ import annotations

from fractions import Fraction
from math import ceil, floor

from .errors import BudgetExceededError

# Hard caps: exceeding them raises BudgetExceededError rather than stalling.
WINDOW_CAP = 200_000
NODE_BUDGET = 20_000_000


class LayeredCoins:
    """Exact evaluator for layered coin systems (values sorted descending)."""

    def __init__(self, coins: list[tuple[int, int]]):
        merged: dict[int, int] = {}
        for value, cost in coins:
            if value < 1 or cost < 1:
                raise ValueError("coin values and costs must be positive")
            # duplicate values collapse to the cheaper cost
            merged[value] = min(cost, merged.get(value, cost))
        self.coins = sorted(merged.items(), key=lambda vc: -vc[0])
        self.rates = [Fraction(c, v) for v, c in self.coins]
        for r, r_next in zip(self.rates, self.rates[1:] + [Fraction(1)]):
            if not r < r_next:
                raise ValueError(
                    "coin rates must increase strictly as values decrease "
                    "(and stay below the unit remainder rate)"
                )
        self._memo: dict[tuple[int, int], int] = {}
        self._greedy_memo: dict[tuple[int, int], int] = {}
        self._nodes = 0

    def cost(self, t: int) -> int:
        """Exact N(t); symmetric in the sign of t."""
        self._nodes = 0
        return self._solve(0, abs(t))

    # -- internals --

    def _tick(self) -> None:
        self._nodes += 1
        if self._nodes > NODE_BUDGET:
            raise BudgetExceededError(
                "coin solver exceeded its node budget", self._nodes, NODE_BUDGET
            )

    def _greedy(self, j: int, t: int) -> int:
        """Cost of a concrete (near-optimal) representation: upper bound."""
        if j == len(self.coins):
            return t
        key = (j, t)
        cached = self._greedy_memo.get(key)
        if cached is not None:
            return cached
        v, c = self.coins[j]
        q0 = t // v
        best = min(
            c * q + self._greedy(j + 1, abs(t - q * v)) for q in (q0, q0 + 1)
        )
        self._greedy_memo[key] = best
        return best

    def _solve(self, j: int, t: int) -> int:
        """Exact subproblem cost using coins[j:] plus the unit remainder.

        Requires t >= 0.  Soundness of the search window: in any optimal
        representation split t = q*v + w, where v is the best-rate coin of
        the subproblem and w collects everything else, the off-coin mass
        satisfies both sigma2*|w| <= UB and sigma1*t + (sigma2-sigma1)*|w|
        <= UB for any upper bound UB, because every other coin (and the
        remainder) pays at least rate sigma2.  Arguments far above the
        window are first peeled down by whole multiples of v, which is
        exact since every optimal q then exceeds the peeled amount.
        """
        if j == len(self.coins):
            return t
        key = (j, t)
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        self._tick()

        v, c = self.coins[j]
        sigma1 = self.rates[j]
        sigma2 = self.rates[j + 1] if j + 1 < len(self.coins) else Fraction(1)

        ub = self._greedy(j, t)
        w_cap = min(Fraction(ub) / sigma2, (ub - sigma1 * t) / (sigma2 - sigma1))

        y0 = floor(Fraction(t) - w_cap) // v
        if y0 >= 1:
            result = c * y0 + self._solve(j, t - y0 * v)
            self._memo[key] = result
            return result

        q_lo = max(ceil((t - w_cap) / v), -(ub // c))
        q_hi = min(floor((t + w_cap) / v), ub // c)
        if q_hi - q_lo > WINDOW_CAP:
            raise BudgetExceededError(
                "coin solver window exceeded cap", q_hi - q_lo, WINDOW_CAP
            )
        best = ub
        for q in range(q_lo, q_hi + 1):
            self._tick()
            base_cost = c * abs(q)
            residual = abs(t - q * v)
            # sound lower bound for the remaining subproblem
            if base_cost + ceil(sigma2 * residual) >= best and residual > 0:
                continue
            cand = base_cost + self._solve(j + 1, residual)
            if cand < best:
                best = cand
        self._memo[key] = best
        return best
