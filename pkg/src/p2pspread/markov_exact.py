"""Exact expected completion time of the randomized strategy for an unsplit file.

State i counts the peers that already hold the file. In one round every needy
peer asks a uniformly chosen target; each holder that is asked serves exactly
one of its requesters. With H = i + 1 holders (the server included) among T
equally likely targets, the number of holders hit by the N - i requests is
occupancy distributed:

    P(exactly m holders hit) = C(H, m) * Delta^m g(T - H) / T^(N-i),  g(b) = b^(N-i)

where Delta is the forward difference. Under List the targets are the holders
themselves (T = H); under NoList they are the server and the N - 1 other peers
(T = N). Transition rows are kept as exact integers over a common denominator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction

from .core import P2PError

SCENARIOS = ("list", "nolist")
MAX_PEERS = 512


class AbsorbingBeforeTarget(P2PError):
    pass


class ChainTooLarge(P2PError):
    pass


def _check_scenario(scenario: str) -> str:
    s = scenario.lower()
    if s not in SCENARIOS:
        raise ValueError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    return s


@dataclass(frozen=True)
class DisseminationChain:
    n_peers: int
    scenario: str
    # rows[i] = (denominator, numerators for target states i, i+1, ...)
    rows: tuple[tuple[int, tuple[int, ...]], ...]

    def p(self, i: int, j: int) -> Fraction:
        den, nums = self.rows[i]
        k = j - i
        if k < 0 or k >= len(nums):
            return Fraction(0)
        return Fraction(nums[k], den)

    def row(self, i: int) -> list[Fraction]:
        return [self.p(i, j) for j in range(self.n_peers + 1)]


def _targets(n_peers: int, holders: int, scenario: str) -> int:
    return holders if scenario == "list" else n_peers


def _row(n_peers: int, i: int, scenario: str) -> tuple[int, tuple[int, ...]]:
    needy = n_peers - i
    if needy == 0:
        return 1, (1,)
    holders = i + 1
    targets = _targets(n_peers, holders, scenario)
    misses = targets - holders
    depth = min(holders, needy)
    # forward differences of b -> b^needy starting at b = misses
    vals = [(misses + l) ** needy for l in range(depth + 1)]
    diffs = [vals[0]]
    for _ in range(depth):
        vals = [b - a for a, b in zip(vals, vals[1:])]
        diffs.append(vals[0])
    nums = tuple(math.comb(holders, m) * diffs[m] for m in range(depth + 1))
    return targets**needy, nums


def build_chain(n_peers: int, scenario: str, max_peers: int = MAX_PEERS) -> DisseminationChain:
    scenario = _check_scenario(scenario)
    if n_peers < 1:
        raise ValueError("N must be positive")
    if n_peers > max_peers:
        raise ChainTooLarge(f"exact chain limited to N <= {max_peers}")
    rows = tuple(_row(n_peers, i, scenario) for i in range(n_peers + 1))
    return DisseminationChain(n_peers, scenario, rows)


def hitting_times(chain: DisseminationChain, exact: bool = False, precision: int = 50):
    """Expected rounds to completion from every state, by backward recursion.

    With ``exact`` the values are Fractions; otherwise Decimals carried at
    ``precision`` significant digits.
    """
    n = chain.n_peers
    k: list = [None] * (n + 1)
    with localcontext() as ctx:
        ctx.prec = precision
        zero = Fraction(0) if exact else Decimal(0)
        k[n] = zero
        for i in range(n - 1, -1, -1):
            den, nums = chain.rows[i]
            if nums[0] == den:
                raise AbsorbingBeforeTarget(f"state {i} never progresses")
            if exact:
                acc = Fraction(den) + sum(
                    (nums[m] * k[i + m] for m in range(1, len(nums))), Fraction(0)
                )
                k[i] = acc / (den - nums[0])
            else:
                acc = Decimal(den)
                for m in range(1, len(nums)):
                    acc += Decimal(nums[m]) * k[i + m]
                k[i] = acc / Decimal(den - nums[0])
    return k


def expected_makespan(chain: DisseminationChain, exact: bool = False, precision: int = 50):
    """Expected number of rounds from the empty start (state 0)."""
    return hitting_times(chain, exact, precision)[0]


def completion_variance(chain: DisseminationChain) -> Fraction:
    """Exact variance of the number of rounds from state 0."""
    n = chain.n_peers
    k = hitting_times(chain, exact=True)
    second: list[Fraction] = [Fraction(0)] * (n + 1)
    for i in range(n - 1, -1, -1):
        # E[T_i^2] = 1 + 2 E[T_next] + E[T_next^2], solved for the self-loop
        acc = 1 + 2 * sum((chain.p(i, j) * k[j] for j in range(i, n + 1)), Fraction(0))
        acc += sum((chain.p(i, j) * second[j] for j in range(i + 1, n + 1)), Fraction(0))
        second[i] = acc / (1 - chain.p(i, i))
    return second[0] - k[0] ** 2


def alternating_sum_transition(n_peers: int, i: int, m: int) -> Fraction:
    """Alternating-sum form of the occupancy probability, evaluated literally.

    Terms whose factorial arguments are negative do not exist, so they are
    skipped; that leaves 0 whenever m > i.
    """
    if not (0 <= i <= n_peers and 0 <= m <= n_peers - i):
        raise ValueError("need 0 <= i <= N and 0 <= m <= N - i")
    if n_peers < 2:
        raise ValueError("the formula divides by N - 1")
    total = Fraction(0)
    for j in range(i - m, i + 1):
        if j < 0 or i - m < 0:
            continue
        coeff = Fraction(
            (-1) ** (j - i + m) * math.factorial(i),
            math.factorial(i - j) * math.factorial(i - m) * math.factorial(j - i + m),
        )
        total += coeff * Fraction(n_peers - 1 - j, n_peers - 1) ** (n_peers - i)
    return total


def enumerate_transitions(n_peers: int, scenario: str) -> list[list[Fraction]]:
    """Transition matrix by listing every joint target choice (small N only)."""
    import itertools

    scenario = _check_scenario(scenario)
    if n_peers > 6:
        raise ChainTooLarge("enumeration limited to N <= 6")
    out = []
    for i in range(n_peers + 1):
        row = [Fraction(0)] * (n_peers + 1)
        needy = list(range(i + 1, n_peers + 1))  # peers 1..i hold the file
        holders = [0] + list(range(1, i + 1))
        choices = []
        for p in needy:
            if scenario == "list":
                choices.append(holders)
            else:
                choices.append([0] + [q for q in range(1, n_peers + 1) if q != p])
        combos = list(itertools.product(*choices)) if needy else [()]
        for combo in combos:
            hit = {t for t in combo if t in holders}
            row[i + len(hit)] += Fraction(1, len(combos))
        out.append(row)
    return out
