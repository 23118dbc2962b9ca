"""Reference (pure Python) round kernel.

The compiled kernel in ``_ckernel.pyx`` must consume the same uniform draws in
the same order and so return identical round counts. Draw order per round:

1. every incomplete peer, by ascending id, picks a target;
2. every uploader with more than one eligible requester, by ascending id,
   picks the winner, then (if more than one part would help) the part.

A draw ``u`` in [0, 1) selects index ``int(u * k)`` among ``k`` choices.
Nodes are numbered 0 (server) .. N; ``have[0]`` is always the full mask.
"""
from __future__ import annotations

BLOCK = 4096
MAX_REJECTIONS = 32


class DrawStream:
    """Uniform doubles from a numpy Generator, fetched in blocks."""

    def __init__(self, gen):
        self.gen = gen
        self.buf = []
        self.pos = 0

    def next(self) -> float:
        if self.pos == len(self.buf):
            self.buf = self.gen.random(BLOCK).tolist()
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return u

    def index(self, k: int) -> int:
        return int(self.next() * k)


def _nth_bit(mask: int, idx: int) -> int:
    while idx:
        mask &= mask - 1
        idx -= 1
    return (mask & -mask).bit_length() - 1


def step(have: list[int], n: int, full: int, use_list: bool, draws: DrawStream) -> int:
    """Play one synchronous round in place; return the number of transfers."""
    requests: list[list[int]] = [[] for _ in range(n + 1)]
    holders = [j for j in range(n + 1) if have[j]] if use_list else None
    useful_by_need: dict[int, list[int]] = {}  # a peer never helps itself

    for p in range(1, n + 1):
        need = full & ~have[p]
        if not need:
            continue
        if use_list:
            target = -1
            for _ in range(MAX_REJECTIONS):
                j = holders[draws.index(len(holders))]
                if j != p and have[j] & need:
                    target = j
                    break
            if target < 0:
                useful = useful_by_need.get(need)
                if useful is None:
                    useful = [j for j in holders if have[j] & need]
                    useful_by_need[need] = useful
                target = useful[draws.index(len(useful))]
        else:
            k = draws.index(n)
            target = 0 if k == 0 else (k if k < p else k + 1)
        if have[target] & need:
            requests[target].append(p)

    transfers = []
    for u in range(n + 1):
        reqs = requests[u]
        if not reqs:
            continue
        winner = reqs[draws.index(len(reqs))] if len(reqs) > 1 else reqs[0]
        useful = have[u] & ~have[winner]
        count = useful.bit_count()
        part = _nth_bit(useful, draws.index(count) if count > 1 else 0)
        transfers.append((winner, part))
    for p, part in transfers:
        have[p] |= 1 << part
    return len(transfers)


def run(n: int, m: int, use_list: bool, gen) -> int:
    """Rounds until every peer holds all ``m`` parts."""
    full = (1 << m) - 1
    have = [full] + [0] * n
    draws = DrawStream(gen)
    rounds = 0
    remaining = n
    while remaining:
        moved = step(have, n, full, use_list, draws)
        if use_list and moved == 0:
            raise AssertionError("stalled round under List")
        rounds += 1
        remaining = sum(1 for p in range(1, n + 1) if have[p] != full)
    return rounds
