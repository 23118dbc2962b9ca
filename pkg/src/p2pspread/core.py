"""Domain types for the uplink-sharing model and the schedule verifier.

Node id 0 is the server; peers are 1..N. The file has size 1 MB and is cut
into M parts of size 1/M. All times and capacities are exact
:class:`fractions.Fraction` values; floats only appear when printing.

The verifier works on schedules in normal form: every node uploads at most
one part at a time at its full capacity, so an upload by node ``j`` lasts
exactly ``1 / (M * C_j)``.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

SERVER = 0


class P2PError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class InvalidInstance(P2PError):
    def __init__(self, field_name: str, reason: str):
        super().__init__(f"{field_name}: {reason}")
        self.field = field_name
        self.reason = reason


class EmptySchedule(P2PError):
    pass


class InvalidSchedule(P2PError):
    pass


def to_fraction(value) -> Fraction:
    """Convert ints, "p/q" strings, decimal text or Fractions exactly.

    Floats are converted through their shortest decimal repr, so ``0.1``
    becomes ``1/10`` rather than the binary approximation.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {value!r} to a rational")


def fraction_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Instance:
    n_peers: int
    n_parts: int
    server_capacity: Fraction
    peer_capacities: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "server_capacity", to_fraction(self.server_capacity))
        object.__setattr__(
            self, "peer_capacities", tuple(to_fraction(c) for c in self.peer_capacities)
        )

    @classmethod
    def equal(cls, n_peers: int, n_parts: int, capacity=1) -> "Instance":
        c = to_fraction(capacity)
        return cls(n_peers, n_parts, c, (c,) * n_peers)

    def capacity(self, node: int) -> Fraction:
        if node == SERVER:
            return self.server_capacity
        return self.peer_capacities[node - 1]

    @property
    def capacities(self) -> tuple[Fraction, ...]:
        """Capacities indexed by node id (server first)."""
        return (self.server_capacity,) + self.peer_capacities

    def job_duration(self, node: int) -> Fraction:
        return 1 / (self.n_parts * self.capacity(node))

    def to_json(self) -> dict:
        return {
            "n_peers": self.n_peers,
            "n_parts": self.n_parts,
            "server_capacity": fraction_str(self.server_capacity),
            "peer_capacities": [fraction_str(c) for c in self.peer_capacities],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Instance":
        try:
            inst = cls(
                int(data["n_peers"]),
                int(data["n_parts"]),
                to_fraction(data["server_capacity"]),
                tuple(to_fraction(c) for c in data["peer_capacities"]),
            )
        except KeyError as exc:
            raise InvalidInstance(exc.args[0], "missing field") from None
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise InvalidInstance("instance", str(exc)) from None
        return inst


def validate_instance(inst: Instance) -> None:
    """Raise :class:`InvalidInstance` for the first violated invariant."""
    if not isinstance(inst.n_peers, int) or inst.n_peers < 1:
        raise InvalidInstance("n_peers", "must be a positive integer")
    if not isinstance(inst.n_parts, int) or inst.n_parts < 1:
        raise InvalidInstance("n_parts", "must be a positive integer")
    if inst.server_capacity <= 0:
        raise InvalidInstance("server_capacity", "must be positive")
    if len(inst.peer_capacities) != inst.n_peers:
        raise InvalidInstance(
            "peer_capacities",
            f"expected {inst.n_peers} entries, got {len(inst.peer_capacities)}",
        )
    if any(c < 0 for c in inst.peer_capacities):
        raise InvalidInstance("peer_capacities", "capacities must be nonnegative")


@dataclass(frozen=True, order=True)
class Upload:
    """One job: ``uploader`` sends ``part`` to ``downloader`` over [start, end)."""

    start: Fraction
    end: Fraction
    uploader: int
    downloader: int
    part: int

    def __post_init__(self):
        object.__setattr__(self, "start", to_fraction(self.start))
        object.__setattr__(self, "end", to_fraction(self.end))

    def to_json(self) -> dict:
        return {
            "uploader": self.uploader,
            "downloader": self.downloader,
            "part": self.part,
            "start": fraction_str(self.start),
            "end": fraction_str(self.end),
        }

    @classmethod
    def from_json(cls, d: dict) -> "Upload":
        return cls(
            to_fraction(d["start"]),
            to_fraction(d["end"]),
            int(d["uploader"]),
            int(d["downloader"]),
            int(d["part"]),
        )


@dataclass(frozen=True)
class ContinuousSchedule:
    uploads: tuple[Upload, ...]

    def __post_init__(self):
        object.__setattr__(self, "uploads", tuple(sorted(self.uploads, key=_upload_key)))

    @property
    def makespan(self) -> Fraction:
        return schedule_makespan(self)

    def to_json(self) -> dict:
        return {"uploads": [u.to_json() for u in self.uploads]}

    @classmethod
    def from_json(cls, data: dict) -> "ContinuousSchedule":
        return cls(tuple(Upload.from_json(u) for u in data["uploads"]))


def _upload_key(u: Upload):
    return (u.start, u.end, u.uploader, u.downloader, u.part)


Triple = tuple[int, int, int]  # (uploader, downloader, part)


@dataclass(frozen=True)
class RoundSchedule:
    """Synchronous rounds; each round is a set of (uploader, downloader, part)."""

    n_peers: int
    n_parts: int
    rounds: tuple[frozenset[Triple], ...]

    def __len__(self) -> int:
        return len(self.rounds)

    def check_rounds(self) -> list[str]:
        """Per-round matching constraints (one upload, one download per node)."""
        problems = []
        for r, rnd in enumerate(self.rounds, start=1):
            ups = [u for u, _, _ in rnd]
            downs = [d for _, d, _ in rnd]
            if len(set(ups)) != len(ups):
                problems.append(f"round {r}: an uploader appears twice")
            if len(set(downs)) != len(downs):
                problems.append(f"round {r}: a downloader appears twice")
        return problems

    def to_continuous(self, capacity=1) -> ContinuousSchedule:
        dur = 1 / (self.n_parts * to_fraction(capacity))
        uploads = []
        for r, rnd in enumerate(self.rounds):
            start, end = r * dur, (r + 1) * dur
            uploads.extend(Upload(start, end, u, d, k) for (u, d, k) in sorted(rnd))
        return ContinuousSchedule(tuple(uploads))


@dataclass(frozen=True)
class Violation:
    constraint: str
    uploads: tuple[Upload, ...]
    time: Fraction | None
    detail: str = ""


@dataclass
class VerificationReport:
    valid: bool
    violations: list[Violation]
    makespan: Fraction | None
    replica_counts: dict[Fraction, tuple[int, ...]] = field(default_factory=dict)

    def summary(self) -> str:
        if self.valid:
            return f"valid, makespan {self.makespan}"
        names = sorted({v.constraint for v in self.violations})
        return f"invalid ({len(self.violations)} violations: {', '.join(names)})"


def schedule_makespan(sched: ContinuousSchedule | Iterable[Upload]) -> Fraction:
    uploads = sched.uploads if isinstance(sched, ContinuousSchedule) else tuple(sched)
    if not uploads:
        raise EmptySchedule("schedule has no uploads")
    return max(u.end for u in uploads)


def _overlaps(intervals: Sequence[tuple[int, int, Upload]]) -> list[tuple[Upload, Upload]]:
    out = []
    ordered = sorted(intervals, key=lambda t: (t[0], t[1], _upload_key(t[2])))
    for prev, nxt in zip(ordered, ordered[1:]):
        if nxt[0] < prev[1]:
            out.append((prev[2], nxt[2]))
    return out


def _common_denominator(values: Iterable[Fraction]) -> int:
    den = 1
    for d in {v.denominator for v in values}:
        den = den * d // math.gcd(den, d)
    return den


def verify_schedule(
    inst: Instance, sched: ContinuousSchedule, check_downloads: bool = False
) -> VerificationReport:
    """Check a schedule against every model constraint and collect violations.

    Nothing is raised for a bad schedule; each problem becomes a
    :class:`Violation`. ``check_downloads`` additionally forbids a peer from
    downloading two parts at once.
    """
    n, m = inst.n_peers, inst.n_parts
    violations: list[Violation] = []
    uploads = sched.uploads

    # integer ticks over a common denominator keep comparisons cheap
    durations = {
        node: (1 / (m * cap) if cap > 0 else None)
        for node, cap in enumerate(inst.capacities)
    }
    den = _common_denominator(
        [u.start for u in uploads] + [u.end for u in uploads]
        + [d for d in durations.values() if d is not None]
    )
    ticks = [
        (u.start.numerator * (den // u.start.denominator),
         u.end.numerator * (den // u.end.denominator), u)
        for u in uploads
    ]
    dur_ticks = {
        node: (d.numerator * (den // d.denominator) if d is not None else None)
        for node, d in durations.items()
    }

    first_arrival: dict[tuple[int, int], int] = {}
    received: dict[tuple[int, int], list[Upload]] = defaultdict(list)
    for s_t, e_t, up in ticks:
        key = (up.downloader, up.part)
        received[key].append(up)
        if key not in first_arrival or e_t < first_arrival[key]:
            first_arrival[key] = e_t

    for s_t, e_t, up in ticks:
        bad = None
        if not (0 <= up.uploader <= n):
            bad = f"unknown uploader {up.uploader}"
        elif not (1 <= up.downloader <= n):
            bad = f"downloader must be a peer, got {up.downloader}"
        elif up.uploader == up.downloader:
            bad = "uploader equals downloader"
        elif not (1 <= up.part <= m):
            bad = f"part {up.part} out of range"
        elif s_t < 0 or e_t <= s_t:
            bad = "empty or negative interval"
        if bad:
            violations.append(Violation("well-formed", (up,), up.start, bad))
            continue
        dur = dur_ticks[up.uploader]
        if dur is None or e_t - s_t != dur:
            violations.append(
                Violation("duration", (up,), up.start, "upload must last 1/(M*capacity)")
            )
        if up.uploader != SERVER:
            got = first_arrival.get((up.uploader, up.part))
            if got is None or got > s_t:
                violations.append(
                    Violation("source availability", (up,), up.start,
                              "uploader does not hold the part yet")
                )

    by_uploader: dict[int, list] = defaultdict(list)
    by_downloader: dict[int, list] = defaultdict(list)
    for t in ticks:
        by_uploader[t[2].uploader].append(t)
        by_downloader[t[2].downloader].append(t)
    for node in sorted(by_uploader):
        for a, b in _overlaps(by_uploader[node]):
            violations.append(Violation("connection", (a, b), b.start))
    if check_downloads:
        for node in sorted(by_downloader):
            for a, b in _overlaps(by_downloader[node]):
                violations.append(Violation("download", (a, b), b.start))

    for key in sorted(received):
        if len(received[key]) > 1:
            violations.append(
                Violation("exclusivity", tuple(received[key]), received[key][1].start)
            )
    for peer in range(1, n + 1):
        for part in range(1, m + 1):
            if (peer, part) not in received:
                violations.append(
                    Violation("completeness", (), None, f"peer {peer} never gets part {part}")
                )

    makespan = max((u.end for u in uploads), default=None)
    counts = _replica_counts(ticks, den, n, m)
    return VerificationReport(not violations, violations, makespan, counts)


def _replica_counts(ticks, den: int, n: int, m: int) -> dict:
    holders: list[set[int]] = [set() for _ in range(m + 1)]
    out: dict[Fraction, tuple[int, ...]] = {}
    ordered = sorted(ticks, key=lambda t: t[1])
    i = 0
    while i < len(ordered):
        t = ordered[i][1]
        while i < len(ordered) and ordered[i][1] == t:
            up = ordered[i][2]
            if 1 <= up.part <= m and 1 <= up.downloader <= n:
                holders[up.part].add(up.downloader)
            i += 1
        out[Fraction(t, den)] = tuple(len(holders[k]) for k in range(1, m + 1))
    return out


def load_json(path) -> dict:
    """Read JSON, keeping decimal literals exact."""
    with open(path, encoding="utf-8") as fh:
        return json.load(fh, parse_float=Fraction)


def dump_json(data, path=None) -> str:
    text = json.dumps(data, indent=2, default=_json_default) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def _json_default(obj):
    if isinstance(obj, Fraction):
        return fraction_str(obj)
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")
