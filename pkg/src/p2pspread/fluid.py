"""Fluid-limit makespans (file split into infinitely many parts).

Every user i owns a file of size F_i that all other users want. The optimum is
the largest of the individual bounds F_i / C_i and the aggregate bound
(N-1) F / C, and it is attained by a two-hop plan: a fraction alpha[i][i] of
file i goes straight to every other user, a fraction alpha[i][j] goes to j
only, who forwards it to the remaining N-2 users.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import P2PError, Violation, to_fraction


class DegenerateInstance(P2PError):
    pass


class NotCase2(P2PError):
    """Raised when the aggregate bound already dominates."""


@dataclass(frozen=True)
class FluidInstance:
    file_sizes: tuple[Fraction, ...]
    capacities: tuple[Fraction, ...]

    def __post_init__(self):
        sizes = tuple(to_fraction(f) for f in self.file_sizes)
        caps = tuple(to_fraction(c) for c in self.capacities)
        object.__setattr__(self, "file_sizes", sizes)
        object.__setattr__(self, "capacities", caps)
        if len(sizes) != len(caps):
            raise DegenerateInstance("file_sizes and capacities differ in length")
        if len(sizes) < 2:
            raise DegenerateInstance("need at least two users")
        if any(f < 0 for f in sizes):
            raise DegenerateInstance("file sizes must be nonnegative")
        if any(c <= 0 for c in caps):
            raise DegenerateInstance("capacities must be positive")
        if not any(f > 0 for f in sizes):
            raise DegenerateInstance("at least one file size must be positive")

    @property
    def n_users(self) -> int:
        return len(self.file_sizes)

    @property
    def total_size(self) -> Fraction:
        return sum(self.file_sizes, Fraction(0))

    @property
    def total_capacity(self) -> Fraction:
        return sum(self.capacities, Fraction(0))

    @classmethod
    def single_server(cls, n_peers: int, server_capacity, peer_capacity) -> "FluidInstance":
        """Server as user 0 with the whole 1 MB file, peers with nothing."""
        return cls(
            (Fraction(1),) + (Fraction(0),) * n_peers,
            (to_fraction(server_capacity),) + (to_fraction(peer_capacity),) * n_peers,
        )


def fluid_general_makespan(fi: FluidInstance) -> Fraction:
    n = fi.n_users
    terms = [f / c for f, c in zip(fi.file_sizes, fi.capacities)]
    terms.append((n - 1) * fi.total_size / fi.total_capacity)
    return max(terms)


def fluid_single_server(n_peers: int, server_capacity, peer_capacity) -> tuple[Fraction, Fraction]:
    """Makespan and the fraction each peer fetches from other peers.

    Each peer takes 1 - alpha from the server and alpha/(N-1) from every other
    peer; alpha is chosen so both downloads finish together.
    """
    cs, c1 = to_fraction(server_capacity), to_fraction(peer_capacity)
    if n_peers < 1 or cs <= 0 or c1 < 0:
        raise ValueError("need N >= 1, C_S > 0, C_1 >= 0")
    if n_peers == 1:
        return 1 / cs, Fraction(0)
    n = n_peers
    if c1 / (n - 1) <= cs / n:
        return n / (cs + n * c1), n * c1 / (cs + n * c1)
    return 1 / cs, Fraction(n - 1, n)


@dataclass(frozen=True)
class CapacityReduction:
    gamma: tuple[Fraction | None, ...]  # None for users with nothing to send
    delta: Fraction
    reduced_capacities: tuple[Fraction, ...]
    order: tuple[int, ...]  # users by decreasing F_i / C_i


def _ratio_order(fi: FluidInstance) -> tuple[int, ...]:
    ratios = [f / c for f, c in zip(fi.file_sizes, fi.capacities)]
    return tuple(sorted(range(fi.n_users), key=lambda i: -ratios[i]))


def reduce_capacities(fi: FluidInstance) -> CapacityReduction:
    """Lower capacities so the aggregate bound rises to meet the top ratio.

    The reduced capacity is the interpolation
    ``C'_i = delta * C_i + (1 - delta) * F_i * C_1 / F_1`` (user 1 being the
    one with the largest F/C), which equals ``(N-1)(C_1/F_1) gamma_i F_i``
    whenever F_i > 0 and scales C_i by delta when F_i = 0.
    """
    n = fi.n_users
    if n < 3:
        raise NotCase2("capacity reduction needs at least three users")
    order = _ratio_order(fi)
    top = order[0]
    f1, c1 = fi.file_sizes[top], fi.capacities[top]
    F, C = fi.total_size, fi.total_capacity
    if not f1 / c1 > (n - 1) * F / C:
        raise NotCase2("aggregate bound dominates")
    delta = (n - 2) * F * c1 / (f1 * C - F * c1)
    reduced = tuple(
        delta * c + (1 - delta) * f * c1 / f1 for f, c in zip(fi.file_sizes, fi.capacities)
    )
    gamma = tuple(
        (delta * (c / f) * (f1 / c1) + 1 - delta) / (n - 1) if f > 0 else None
        for f, c in zip(fi.file_sizes, fi.capacities)
    )
    return CapacityReduction(gamma, delta, reduced, order)


@dataclass(frozen=True)
class TransferPlan:
    alpha: tuple[tuple[Fraction, ...], ...]
    makespan: Fraction
    capacities_used: tuple[Fraction, ...]
    case: str  # "direct", "aggregate" or "reduced"

    def rates(self, fi: FluidInstance) -> list[list[Fraction]]:
        """Constant rate of each first-hop stream: alpha_ij F_i / T."""
        return [
            [a * f / self.makespan for a in row]
            for row, f in zip(self.alpha, fi.file_sizes)
        ]

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "makespan": self.makespan,
            "capacities_used": list(self.capacities_used),
            "alpha": [list(row) for row in self.alpha],
        }


def _equal_share_alpha(fi: FluidInstance, caps: Sequence[Fraction]) -> list[Fraction]:
    n = fi.n_users
    F, C = fi.total_size, sum(caps, Fraction(0))
    return [
        Fraction(n - 1) * c / ((n - 2) * C) - f / ((n - 2) * F)
        for f, c in zip(fi.file_sizes, caps)
    ]


def build_transfer_plan(fi: FluidInstance) -> TransferPlan:
    n = fi.n_users
    T = fluid_general_makespan(fi)
    if n == 2:
        alpha = tuple(
            tuple(Fraction(1 if i == j and f > 0 else 0) for j in range(n))
            for i, f in enumerate(fi.file_sizes)
        )
        return TransferPlan(alpha, T, fi.capacities, "direct")
    try:
        caps = reduce_capacities(fi).reduced_capacities
        case = "reduced"
    except NotCase2:
        caps, case = fi.capacities, "aggregate"
    star = _equal_share_alpha(fi, caps)
    # alpha[k][i] = alpha*_i for every k: each user relays the same share of all files
    alpha = tuple(tuple(star) for _ in range(n))
    return TransferPlan(alpha, T, tuple(caps), case)


def upload_volume(fi: FluidInstance, alpha, i: int) -> Fraction:
    """Data user i sends: own file direct and to relays, plus forwarding."""
    n = fi.n_users
    f = fi.file_sizes
    vol = alpha[i][i] * f[i] * (n - 1)
    vol += sum(alpha[i][k] * f[i] for k in range(n) if k != i)
    vol += sum(alpha[k][i] * f[k] * (n - 2) for k in range(n) if k != i)
    return vol


@dataclass
class PlanReport:
    valid: bool
    violations: list[Violation]
    makespan: Fraction
    completion_times: list[Fraction]  # volume / capacity used by the plan

    def summary(self) -> str:
        if self.valid:
            return f"valid, makespan {self.makespan}"
        return "invalid: " + "; ".join(v.detail for v in self.violations)


def verify_plan(fi: FluidInstance, plan: TransferPlan) -> PlanReport:
    n = fi.n_users
    bad: list[Violation] = []

    def fail(name, detail):
        bad.append(Violation(name, (), None, detail))

    alpha = plan.alpha
    if len(alpha) != n or any(len(row) != n for row in alpha):
        fail("shape", f"alpha must be {n}x{n}")
        return PlanReport(False, bad, plan.makespan, [])
    for i in range(n):
        for j in range(n):
            if alpha[i][j] < 0:
                fail("nonnegative", f"alpha[{i}][{j}] = {alpha[i][j]}")
        if fi.file_sizes[i] > 0:
            if sum(alpha[i]) != 1:
                fail("row sum", f"row {i} sums to {sum(alpha[i])}")
            for r in range(n):
                if r == i:
                    continue
                # direct copy, first hop to r itself, or forwarded by a relay k != r
                got = alpha[i][i] + alpha[i][r]
                got += sum(alpha[i][k] for k in range(n) if k not in (i, r))
                if got != 1:
                    fail("two-hop", f"user {r} receives {got} of file {i}")
        if n == 2 and any(alpha[i][j] for j in range(n) if j != i):
            fail("two-hop", "no relay exists with two users")
    times = []
    for i in range(n):
        vol = upload_volume(fi, alpha, i)
        if vol > plan.capacities_used[i] * plan.makespan or plan.capacities_used[i] > fi.capacities[i]:
            fail("capacity", f"user {i} needs {vol} MB, has {fi.capacities[i] * plan.makespan}")
        times.append(vol / plan.capacities_used[i])
    if plan.makespan != fluid_general_makespan(fi):
        fail("optimality", f"plan makespan {plan.makespan} is not the fluid optimum")
    return PlanReport(not bad, bad, plan.makespan, times)
