"""Minimal makespan for arbitrary capacities by exhaustive search on a time grid.

Time is cut into intervals of length ``tau``. An upload by node j occupies
``ceil(1 / (M * C_j * tau))`` whole intervals; when every such duration is an
exact multiple of ``tau`` the grid loses nothing and the answer is exact,
otherwise it overestimates the optimum by at most ``N * M * tau``.

:func:`feasible` is a depth-first search over event times. At each event the
free uploaders are assigned (downloader, part) jobs or left idle; uploads only
ever start at time 0 or when another upload finishes, which loses no
optimality for single-upload schedules. Whole jobs are emitted, so the
continuity and stopping rules of the time-indexed integer program hold by
construction. :func:`min_makespan` bisects the horizon.

Search order, and hence the schedule returned, is deterministic: events in
time order, uploaders by ascending id, each trying its jobs by ascending
(downloader, part) before idling. The first feasible schedule in that order is
returned.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

from .core import (
    SERVER,
    ContinuousSchedule,
    Instance,
    P2PError,
    Upload,
    to_fraction,
    validate_instance,
)


class BudgetExceeded(P2PError):
    def __init__(self, nodes: int):
        super().__init__(f"search node limit reached after {nodes} nodes")
        self.nodes = nodes


class SizeGuard(P2PError):
    pass


# -- grid step ------------------------------------------------------------


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def capacity_scale(inst: Instance) -> tuple[Fraction, list[int]]:
    """Return (unit, integer capacities) with C = unit * c for every positive C."""
    caps = [c for c in inst.capacities if c > 0]
    num = reduce(math.gcd, (c.numerator for c in caps))
    den = reduce(_lcm, (c.denominator for c in caps))
    unit = Fraction(num, den)
    return unit, [int(c / unit) for c in caps]


def exact_tau(inst: Instance) -> Fraction:
    """Grid step 1/(M L)^(M N) in rescaled time, mapped back to seconds.

    Capacities are rescaled to integers by their rational gcd; L is the lcm of
    the rescaled values.
    """
    validate_instance(inst)
    unit, ints = capacity_scale(inst)
    lcm = reduce(_lcm, ints)
    m, n = inst.n_parts, inst.n_peers
    return Fraction(1, (m * lcm) ** (m * n)) / unit


def default_tau(inst: Instance) -> Fraction:
    """Coarsest step on which every job duration is a whole number of steps."""
    validate_instance(inst)
    unit, ints = capacity_scale(inst)
    lcm = reduce(_lcm, ints)
    return Fraction(1, inst.n_parts * lcm) / unit


def _grid_durations(inst: Instance, tau: Fraction) -> tuple[list[int | None], bool]:
    out: list[int | None] = []
    aligned = True
    for cap in inst.capacities:
        if cap == 0:
            out.append(None)
            continue
        steps = 1 / (inst.n_parts * cap * tau)
        out.append(math.ceil(steps))
        aligned = aligned and steps.denominator == 1
    return out, aligned


# -- discretized integer-program view -------------------------------------


@dataclass
class DiscretizedProblem:
    """Time-indexed view of a grid-aligned schedule.

    ``x[(i, j, k)]`` is the set of intervals t during which peer i downloads
    part k from node j; ``p[(i, k)][t]`` is the fraction of part k peer i holds
    at the start of interval t and ``xi[(i, k)][t]`` flags ``p == 1``.
    """

    instance: Instance
    tau: Fraction
    horizon: int
    x: dict = field(default_factory=dict)
    p: dict = field(default_factory=dict)
    xi: dict = field(default_factory=dict)

    @classmethod
    def from_schedule(cls, inst: Instance, sched: ContinuousSchedule, tau, horizon: int):
        tau = to_fraction(tau)
        prob = cls(inst, tau, horizon)
        for up in sched.uploads:
            s, e = up.start / tau, up.end / tau
            if s.denominator != 1 or e.denominator != 1:
                raise ValueError("schedule is not aligned to the grid")
            key = (up.downloader, up.uploader, up.part)
            prob.x.setdefault(key, set()).update(range(int(s), int(e)))
        m = inst.n_parts
        for i in range(0, inst.n_peers + 1):
            for k in range(1, m + 1):
                if i == SERVER:
                    prob.p[(i, k)] = [Fraction(1)] * (horizon + 1)
                    prob.xi[(i, k)] = [1] * (horizon + 1)
                    continue
                acc, row = Fraction(0), []
                for t in range(horizon + 1):
                    row.append(acc)
                    acc += m * tau * sum(
                        inst.capacity(j)
                        for j in range(inst.n_peers + 1)
                        if t in prob.x.get((i, j, k), ())
                    )
                prob.p[(i, k)] = row
                prob.xi[(i, k)] = [1 if v == 1 else 0 for v in row]
        return prob

    def check(self) -> list[str]:
        """Names of the violated constraints (empty when all hold)."""
        bad = set()
        n, m, h = self.instance.n_peers, self.instance.n_parts, self.horizon
        for (i, k), row in self.p.items():
            if any(v < 0 or v > 1 for v in row):
                bad.add("regional")
            if i != SERVER and row[h] != 1:
                bad.add("completion")
        for (i, j, k), ts in self.x.items():
            for t in ts:
                if self.xi[(j, k)][t] != 1:
                    bad.add("source availability")
                if self.xi[(i, k)][t] == 1:
                    bad.add("stopping")
                if t + 1 < h and t + 1 not in ts and self.xi[(i, k)][t + 1] != 1:
                    bad.add("continuity")
        for j in range(n + 1):
            for t in range(h):
                if sum(1 for (i, jj, k), ts in self.x.items() if jj == j and t in ts) > 1:
                    bad.add("connection")
        for i in range(1, n + 1):
            for k in range(1, m + 1):
                for t in range(h):
                    if sum(1 for (ii, j, kk), ts in self.x.items()
                           if ii == i and kk == k and t in ts) > 1:
                        bad.add("exclusivity")
        return sorted(bad)


# -- search ---------------------------------------------------------------


@dataclass
class SolveResult:
    makespan: Fraction
    schedule: ContinuousSchedule
    status: str  # "exact" or "approximate"
    gap_bound: Fraction
    lower_bound: Fraction
    tau: Fraction
    nodes_explored: int

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "makespan": self.makespan,
            "makespan_float": float(self.makespan),
            "lower_bound": self.lower_bound,
            "gap_bound": self.gap_bound,
            "tau": self.tau,
            "nodes_explored": self.nodes_explored,
            "schedule": self.schedule.to_json(),
        }


class _Search:
    def __init__(self, inst: Instance, tau: Fraction, horizon: int, node_limit: int | None):
        self.inst = inst
        self.tau = tau
        self.h = horizon
        self.node_limit = node_limit
        self.nodes = 0
        self.n = inst.n_peers
        self.m = inst.n_parts
        self.full = (1 << self.m) - 1
        self.dur, _ = _grid_durations(inst, tau)
        self.uploaders = [j for j in range(self.n + 1) if self.dur[j] is not None]
        self.failed: set = set()
        self.perms = self._symmetries()

    def _symmetries(self) -> list[tuple[int, ...]]:
        caps = self.inst.peer_capacities
        classes: dict[Fraction, list[int]] = {}
        for i, c in enumerate(caps, start=1):
            classes.setdefault(c, []).append(i)
        total = math.prod(math.factorial(len(v)) for v in classes.values())
        if total > 720:
            return [tuple(range(self.n + 1))]
        perms = []
        groups = list(classes.values())
        for choice in itertools.product(*(itertools.permutations(g) for g in groups)):
            mapping = list(range(self.n + 1))
            for g, img in zip(groups, choice):
                for a, b in zip(g, img):
                    mapping[a] = b
            perms.append(tuple(mapping))
        return perms

    def _key(self, t, have, jobs):
        best = None
        for pm in self.perms:
            h = [0] * (self.n + 1)
            for i in range(self.n + 1):
                h[pm[i]] = have[i]
            js = tuple(sorted((e, pm[u], pm[d], k) for (e, u, d, k) in jobs))
            key = (tuple(h), js)
            if best is None or key < best:
                best = key
        return (t,) + best

    def _bound_ok(self, t, have, jobs) -> bool:
        busy = [t] * (self.n + 1)
        arriving = {}
        for e, u, d, k in jobs:
            busy[u] = e
            arriving[(d, k)] = e
        unserved = 0
        for i in range(1, self.n + 1):
            missing = self.full & ~have[i]
            for k in range(self.m):
                if missing >> k & 1 and (i, k) not in arriving:
                    unserved += 1
        if unserved == 0:
            return True
        capacity = 0
        earliest = None
        for j in self.uploaders:
            free = max(t, busy[j])
            if self.h - free >= self.dur[j]:
                capacity += (self.h - free) // self.dur[j]
                fin = free + self.dur[j]
                earliest = fin if earliest is None else min(earliest, fin)
        return earliest is not None and capacity >= unserved

    def run(self):
        have = [self.full] + [0] * self.n
        path: list[tuple[int, int, int, int, int]] = []
        if self._dfs(0, have, (), path):
            return path
        return None

    def _dfs(self, t, have, jobs, path) -> bool:
        self.nodes += 1
        if self.node_limit is not None and self.nodes > self.node_limit:
            raise BudgetExceeded(self.nodes)
        if all(h == self.full for h in have[1:]) and not jobs:
            return True
        key = self._key(t, have, jobs)
        if key in self.failed or not self._bound_ok(t, have, jobs):
            self.failed.add(key)
            return False

        busy_nodes = {u for _, u, _, _ in jobs}
        taken = {(d, k) for _, _, d, k in jobs}
        free = [j for j in self.uploaders if j not in busy_nodes and have[j]]
        found = self._assign(t, have, jobs, path, free, 0, taken, [])
        if not found:
            self.failed.add(key)
        return found

    def _assign(self, t, have, jobs, path, free, idx, taken, chosen) -> bool:
        if idx == len(free):
            new_jobs = list(jobs) + [(t + self.dur[u], u, d, k) for (u, d, k) in chosen]
            if not new_jobs:
                return False
            nxt = min(e for e, _, _, _ in new_jobs)
            new_have = list(have)
            remaining = []
            for e, u, d, k in new_jobs:
                if e == nxt:
                    new_have[d] |= 1 << k
                else:
                    remaining.append((e, u, d, k))
            for u, d, k in chosen:
                path.append((t, t + self.dur[u], u, d, k))
            if self._dfs(nxt, new_have, tuple(remaining), path):
                return True
            for _ in chosen:
                path.pop()
            return False

        u = free[idx]
        end = t + self.dur[u]
        if end <= self.h:
            held = have[u]
            for d in range(1, self.n + 1):
                if d == u:
                    continue
                useful = held & ~have[d]
                k = 0
                while useful >> k:
                    if useful >> k & 1 and (d, k) not in taken:
                        taken.add((d, k))
                        chosen.append((u, d, k))
                        ok = self._assign(t, have, jobs, path, free, idx + 1, taken, chosen)
                        chosen.pop()
                        taken.discard((d, k))
                        if ok:
                            return True
                    k += 1
        return self._assign(t, have, jobs, path, free, idx + 1, taken, chosen)


def _to_schedule(inst: Instance, tau: Fraction, path) -> ContinuousSchedule:
    uploads = []
    for s, _e, u, d, k in path:
        start = s * tau
        uploads.append(Upload(start, start + inst.job_duration(u), u, d, k + 1))
    return ContinuousSchedule(tuple(uploads))


def feasible(inst: Instance, T, tau, node_limit: int | None = None):
    """A schedule finishing by ``T`` on the ``tau`` grid, or ``None`` if none exists.

    Raises :class:`BudgetExceeded` when ``node_limit`` search nodes are used up
    before the question is settled.
    """
    schedule, _ = _feasible(inst, T, tau, node_limit)
    return schedule


def _feasible(inst, T, tau, node_limit):
    validate_instance(inst)
    T, tau = to_fraction(T), to_fraction(tau)
    if tau <= 0:
        raise ValueError("tau must be positive")
    steps = T / tau
    if steps.denominator != 1:
        raise ValueError("tau must divide T")
    search = _Search(inst, tau, int(steps), node_limit)
    path = search.run()
    if path is None:
        return None, search.nodes
    return _to_schedule(inst, tau, path), search.nodes


def volume_lower_bound(inst: Instance) -> Fraction:
    """N MB must be uploaded in total, by the server at first."""
    total = inst.server_capacity + sum(inst.peer_capacities)
    return max(1 / inst.server_capacity, Fraction(inst.n_peers) / total)


def min_makespan(inst: Instance, tau=None, node_limit: int | None = None) -> SolveResult:
    """Smallest grid horizon that admits a schedule, found by bisection."""
    validate_instance(inst)
    tau = default_tau(inst) if tau is None else to_fraction(tau)
    if tau <= 0:
        raise ValueError("tau must be positive")
    durations, aligned = _grid_durations(inst, tau)
    n, m = inst.n_peers, inst.n_parts
    lo = math.ceil(1 / (inst.server_capacity * tau)) - 1  # infeasible
    hi = n * m * durations[SERVER]  # server alone, one job after another
    nodes = 0
    best = None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        sched, used = _feasible(inst, mid * tau, tau, node_limit)
        nodes += used
        if sched is None:
            lo = mid
        else:
            hi, best = mid, sched
    if best is None:
        best, used = _feasible(inst, hi * tau, tau, node_limit)
        nodes += used
    makespan = best.makespan
    if aligned:
        status, gap, lower = "exact", Fraction(0), makespan
    else:
        status, gap = "approximate", n * m * tau
        lower = min(makespan, max(makespan - gap, volume_lower_bound(inst)))
    return SolveResult(makespan, best, status, gap, lower, tau, nodes)


# -- closed forms for small cases -----------------------------------------


def n2_m1_makespan(server_capacity, peer_capacity) -> Fraction:
    """Two peers, unsplit file: both from the server, or a relay through one peer."""
    cs, c1 = to_fraction(server_capacity), to_fraction(peer_capacity)
    if cs <= 0 or c1 < 0:
        raise ValueError("need C_S > 0 and C_1 >= 0")
    if c1 == 0:
        return 2 / cs
    return 1 / cs + min(1 / cs, 1 / c1)


TIE_ORDER = ("A", "C", "D", "B")


def two_peer_cases(server_capacity, peer_capacity) -> dict[str, Fraction]:
    """Makespan of each source pattern for N = M = 2 with both peers at C_1."""
    cs, c1 = to_fraction(server_capacity), to_fraction(peer_capacity)
    if cs <= 0 or c1 <= 0:
        raise ValueError("capacities must be positive")
    half_s, half_1 = 1 / (2 * cs), 1 / (2 * c1)
    return {
        "A": 2 / cs,
        "B": half_s + half_1 + max(half_s, half_1),
        "C": half_s + max(1 / cs, half_1),
        "D": 1 / cs + half_1,
    }


def two_by_two_makespan(server_capacity, peer_capacity) -> tuple[Fraction, str]:
    """Best of the four cases; ties go to A, then C, then D, then B."""
    cases = two_peer_cases(server_capacity, peer_capacity)
    best = min(cases.values())
    label = next(c for c in TIE_ORDER if cases[c] == best)
    return best, label


# -- round-based oracle ---------------------------------------------------


def brute_force_rounds(n_peers: int, n_parts: int, max_peers: int = 4, max_parts: int = 3) -> int:
    """Fewest synchronous rounds to spread every part, by breadth-first search.

    In a round each node uploads at most one part and each peer downloads at
    most one. Holding more parts never hurts, so only maximal rounds (no
    further transfer could be added) are expanded, and states are identified
    up to relabelling of peers.
    """
    if n_peers < 1 or n_parts < 1:
        raise ValueError("N and M must be positive")
    if n_peers > max_peers or n_parts > max_parts:
        raise SizeGuard(f"brute force limited to N <= {max_peers}, M <= {max_parts}")
    full = (1 << n_parts) - 1
    start = (0,) * n_peers
    goal = (full,) * n_peers
    frontier = {start}
    seen = {start}
    rounds = 0
    while goal not in frontier:
        rounds += 1
        nxt = set()
        for state in frontier:
            for succ in _maximal_rounds(state, full):
                if succ not in seen:
                    seen.add(succ)
                    nxt.add(succ)
        if not nxt:
            raise AssertionError("search stalled")
        frontier = nxt
    return rounds


def _maximal_rounds(state: tuple[int, ...], full: int):
    n = len(state)
    holds = (full,) + state  # node 0 is the server
    results = set()
    recv = [0] * n

    def rec(i, used):
        if i == n:
            for u in range(n + 1):
                if used >> u & 1 or not holds[u]:
                    continue
                for d in range(n):
                    if not recv[d] and d + 1 != u and holds[u] & ~state[d]:
                        return  # another transfer fits; not maximal
            results.add(tuple(sorted(state[d] | recv[d] for d in range(n))))
            return
        for u in range(n + 1):
            if used >> u & 1 or u == i + 1:
                continue
            useful = holds[u] & ~state[i]
            while useful:
                bit = useful & -useful
                useful ^= bit
                recv[i] = bit
                rec(i + 1, used | (1 << u))
                recv[i] = 0
        rec(i + 1, used)

    rec(0, 0)
    return results
