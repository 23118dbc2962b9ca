"""Optimal broadcast of an M-part file when every node has the same capacity.

The schedule is built in synchronous rounds of length 1/(M*C):

* rounds 1..n (n = floor(log2 N)): every peer holding a part copies it to an
  empty peer, the server seeds part min(r, M);
* round n+1: every holder uploads once more, arranged so that the peers fall
  into the five groups {a,b}, {a,p}, {a}, {b}, {p} where a, b are the two
  lowest unfinished parts and p is any higher part;
* rounds n+2..n+M-1: the same grouping is re-established with (a, b) shifted
  up by one part each round;
* round n+M: the last two parts are completed.

Ties (which member of a group serves which member of another) are broken by
ascending peer id.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core import SERVER, InvalidSchedule, RoundSchedule, Instance, to_fraction, verify_schedule


def floor_log2(n: int) -> int:
    if n < 1:
        raise ValueError("n must be positive")
    return n.bit_length() - 1


def optimal_rounds(n_peers: int, n_parts: int) -> int:
    if n_peers < 1 or n_parts < 1:
        raise ValueError("N and M must be positive")
    return n_parts + floor_log2(n_peers)


def optimal_makespan_equal(n_peers: int, n_parts: int, common_capacity=1) -> Fraction:
    cap = to_fraction(common_capacity)
    if cap <= 0:
        raise ValueError("capacity must be positive")
    return (1 + Fraction(floor_log2(n_peers), n_parts)) / cap


class _Builder:
    def __init__(self, n_peers: int, n_parts: int):
        self.N = n_peers
        self.M = n_parts
        self.n = floor_log2(n_peers)
        self.x = n_peers - 2**self.n + 1
        self.holds: list[set[int]] = [set(range(1, n_parts + 1))] + [
            set() for _ in range(n_peers)
        ]
        self.rounds: list[frozenset] = []

    def commit(self, triples: list[tuple[int, int, int]]) -> None:
        ups = [u for u, _, _ in triples]
        downs = [d for _, d, _ in triples]
        assert len(set(ups)) == len(ups) and len(set(downs)) == len(downs)
        for u, d, k in triples:
            assert k in self.holds[u] and k not in self.holds[d], (u, d, k)
        for _, d, k in triples:
            self.holds[d].add(k)
        self.rounds.append(frozenset(triples))

    def peers(self, pred) -> list[int]:
        return [p for p in range(1, self.N + 1) if pred(self.holds[p])]

    # -- phase 1: doubling ------------------------------------------------

    def seed_round(self, r: int) -> None:
        empty = self.peers(lambda h: not h)
        holders = self.peers(bool)
        triples = [(SERVER, empty[0], min(r, self.M))]
        for src, dst in zip(holders, empty[1:]):
            triples.append((src, dst, min(self.holds[src])))
        self.commit(triples)

    def finish_single_part(self) -> None:
        empty = self.peers(lambda h: not h)
        uploaders = [SERVER] + self.peers(bool)
        self.commit([(u, d, 1) for u, d in zip(uploaders, empty)])

    # -- round n+1 --------------------------------------------------------

    def split_round_small(self) -> None:
        """Round n+1 when M = 2 or n = 1 (the explicit two-part case)."""
        n, x = self.n, self.x
        f, g = x // 2, (x + 1) // 2
        a1 = self.peers(lambda h: h == {1})
        a2 = self.peers(lambda h: h == {2})
        a0 = self.peers(lambda h: not h)
        half = 2 ** (n - 1)
        triples = []
        if x == 1:
            to_a2, to_a0 = half - 1, 1
        else:
            to_a2, to_a0 = half - f, f
        targets = a2[:to_a2] + a0[:to_a0]
        a0_rest = a0[to_a0:]
        assert len(targets) == len(a1)
        triples += [(u, d, 1) for u, d in zip(a1, targets)]
        b_targets = a1[: half - g] + a0_rest[: g - 1]
        assert len(b_targets) == len(a2)
        triples += [(u, d, 2) for u, d in zip(a2, b_targets)]
        if x == 1:
            triples.append((SERVER, a1[half - g], 2))
        else:
            triples.append((SERVER, a0_rest[g - 1], 2))
        self.commit(triples)

    def split_round(self) -> None:
        """Round n+1 for M >= 3 and n >= 2: produce the five-group layout."""
        n, x = self.n, self.x
        f, g = x // 2, (x + 1) // 2
        q = 2 ** (n - 2)
        s1 = self.peers(lambda h: h == {1})
        s2 = self.peers(lambda h: h == {2})
        sp = self.peers(lambda h: len(h) == 1 and min(h) >= 3)
        a0 = self.peers(lambda h: not h)
        assert (len(s1), len(s2), len(sp), len(a0)) == (2 * q, q, q - 1, x)

        b0 = max(0, f - q)  # part-2 copies into empty peers
        c0 = max(0, g - q)  # higher-part copies into empty peers
        a2 = q - f + b0
        a3 = q - g + c0
        a0_count = x - b0 - c0
        b1, c1 = q - b0, q - c0

        a0_for_1 = a0[:a0_count]
        a0_for_2 = a0[a0_count : a0_count + b0]
        a0_for_p = a0[a0_count + b0 :]
        triples = []
        part1_targets = s2[:a2] + sp[:a3] + a0_for_1
        triples += [(u, d, 1) for u, d in zip(s1, part1_targets)]
        part2_targets = s1[:b1] + a0_for_2
        triples += [(u, d, 2) for u, d in zip(s2, part2_targets)]
        p_uploads = [(SERVER, min(n + 1, self.M))] + [(u, min(self.holds[u])) for u in sp]
        p_targets = s1[b1 : b1 + c1] + a0_for_p
        assert len(p_uploads) == len(p_targets) == q
        triples += [(u, d, k) for (u, k), d in zip(p_uploads, p_targets)]
        self.commit(triples)

    # -- rounds n+2 .. n+M ------------------------------------------------

    def groups(self, a: int):
        b = a + 1
        done = set(range(1, a))
        out = {"ab": [], "ap": [], "a": [], "b": [], "p": []}
        for peer in range(1, self.N + 1):
            rest = self.holds[peer] - done
            assert done <= self.holds[peer]
            if rest == {a, b}:
                out["ab"].append(peer)
            elif a in rest and len(rest) == 2 and max(rest) > b:
                out["ap"].append(peer)
            elif rest == {a}:
                out["a"].append(peer)
            elif rest == {b}:
                out["b"].append(peer)
            elif len(rest) == 1 and min(rest) > b:
                out["p"].append(peer)
            else:
                raise AssertionError(f"peer {peer} holds unexpected parts {sorted(rest)}")
        return out

    def shift_round(self, r: int, a: int) -> None:
        """Complete part a, double part b and every higher part."""
        b, c = a + 1, a + 2
        x = self.x
        f, g = x // 2, (x + 1) // 2
        grp = self.groups(a)
        triples = []
        a_targets = sorted(grp["b"] + grp["p"])
        assert len(a_targets) == x - 1 and len(grp["a"]) == x
        triples += [(u, d, a) for u, d in zip(grp["a"], a_targets)]

        get_b = grp["a"][:g]
        get_p = grp["a"][g:]
        b_up = sorted(grp["ab"] + grp["b"])
        b_targets = sorted(grp["ap"] + get_b)
        assert len(b_up) == len(b_targets)
        triples += [(u, d, b) for u, d in zip(b_up, b_targets)]

        p_up = [(SERVER, min(r, self.M))]
        p_up += [(u, max(self.holds[u])) for u in sorted(grp["ap"] + grp["p"])]
        assert len(p_up) == len(grp["ab"]) + len(get_p)
        if c == self.M:
            assignment = list(zip(p_up, grp["ab"] + get_p))
        else:
            # exactly floor(x/2) peers must end up holding only part c
            j_c = sum(1 for u in grp["p"] if max(self.holds[u]) == c)
            need = f - j_c
            c_up = [t for t in p_up if t[1] == c]
            other_up = [t for t in p_up if t[1] != c]
            assert 0 <= need <= len(c_up) and len(get_p) - need <= len(other_up)
            assignment = list(zip(c_up[:need], get_p[:need]))
            assignment += list(zip(other_up[: len(get_p) - need], get_p[need:]))
            rest = c_up[need:] + other_up[len(get_p) - need :]
            rest.sort(key=lambda t: (t[0] != SERVER, t[0]))
            assignment += list(zip(rest, grp["ab"]))
        triples += [(u, d, k) for (u, k), d in assignment]
        self.commit(triples)

    def final_round(self, a: int) -> None:
        b = a + 1
        done = set(range(1, a))
        only_a = self.peers(lambda h: h - done == {a})
        only_b = self.peers(lambda h: h - done == {b})
        both = self.peers(lambda h: h - done == {a, b})
        assert len(only_a) == self.x and len(only_b) == self.x - 1
        triples = [(u, d, a) for u, d in zip(only_a, only_b)]
        b_up = [SERVER] + sorted(both + only_b)
        triples += [(u, d, b) for u, d in zip(b_up, only_a)]
        self.commit(triples)

    def build(self) -> RoundSchedule:
        N, M, n = self.N, self.M, self.n
        if N == 1:
            for k in range(1, M + 1):
                self.commit([(SERVER, 1, k)])
        else:
            for r in range(1, n + 1):
                self.seed_round(r)
            if M == 1:
                self.finish_single_part()
            else:
                if M == 2 or n == 1:
                    self.split_round_small()
                else:
                    self.split_round()
                for a in range(1, M - 1):
                    self.shift_round(n + a + 1, a)
                self.final_round(M - 1)
        return RoundSchedule(N, M, tuple(self.rounds))


def build_schedule(n_peers: int, n_parts: int) -> RoundSchedule:
    """Constructive schedule finishing in exactly M + floor(log2 N) rounds."""
    if n_peers < 1 or n_parts < 1:
        raise ValueError("N and M must be positive")
    sched = _Builder(n_peers, n_parts).build()
    assert len(sched) == optimal_rounds(n_peers, n_parts)
    return sched


@dataclass(frozen=True)
class ReplicaProfile:
    """``counts[t][k-1]`` = peers holding part k at the end of round t (t=0 is the start)."""

    n_peers: int
    n_parts: int
    counts: tuple[tuple[int, ...], ...]

    def count(self, round_: int, part: int) -> int:
        return self.counts[round_][part - 1]

    def rows(self):
        for t, row in enumerate(self.counts):
            for k, c in enumerate(row, start=1):
                yield t, k, c


def replica_profile(sched: RoundSchedule, n_peers: int, n_parts: int) -> ReplicaProfile:
    inst = Instance.equal(n_peers, n_parts)
    problems = sched.check_rounds()
    report = verify_schedule(inst, sched.to_continuous())
    if problems or not report.valid:
        detail = problems or [report.summary()]
        raise InvalidSchedule("; ".join(detail))
    counts = [0] * n_parts
    out = [tuple(counts)]
    for rnd in sched.rounds:
        for _, _, k in rnd:
            counts[k - 1] += 1
        out.append(tuple(counts))
    return ReplicaProfile(n_peers, n_parts, tuple(out))


def replica_count_formula(n_peers: int, n_parts: int, round_: int, part: int) -> int:
    """Replica count the construction attains at the end of round n+j, 0 <= j < M.

    Parts below j are finished; part k (k < M) has 2^(n+j-k) copies and the
    last part 2^(n+j-M+1) - 1. Entries that would be below one read as zero.
    """
    n = floor_log2(n_peers)
    j = round_ - n
    if not 0 <= j < n_parts:
        raise ValueError("round outside n..n+M-1")
    if part <= j - 1:
        return n_peers
    if part < n_parts:
        e = n + j - part
        return 2**e if e >= 0 else 0
    e = n + j - n_parts + 1
    return 2**e - 1 if e >= 0 else 0


def unused_upload_slots(sched: RoundSchedule) -> int:
    """Sum over rounds of (nodes holding some part) - (uploads made)."""
    holding = [False] * (sched.n_peers + 1)
    holding[SERVER] = True
    unused = 0
    for rnd in sched.rounds:
        unused += sum(holding) - len(rnd)
        for _, d, _ in rnd:
            holding[d] = True
    return unused
