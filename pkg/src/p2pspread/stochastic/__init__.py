"""Monte-Carlo simulation of randomized swarm dissemination in rounds.

Each round every incomplete peer asks one target for a part. Under ``list``
the target is uniform over the nodes (server included) that hold something
the peer lacks; under ``nolist`` it is uniform over the server and the other
N - 1 peers, and the request is wasted if the target has nothing useful. A
node with several requesters serves one of them, chosen uniformly, with a
uniformly chosen useful part.

Randomness: numpy's PCG64. Replication r of master seed s draws from
``Generator(PCG64(SeedSequence(s, spawn_key=(r,))))``, so each replication is
reproducible on its own and results do not depend on execution order.

The round kernel is compiled with Cython when available; set
``P2PSPREAD_KERNEL=python`` to force the pure-Python fallback.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _pykernel

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

SCENARIOS = ("list", "nolist")
Z95 = 1.959963984540054


def _pick_backend():
    if os.environ.get("P2PSPREAD_KERNEL", "").lower() == "python" or _ckernel is None:
        return _pykernel
    return _ckernel


_kernel = _pick_backend()


def backend() -> str:
    return "cython" if _kernel is _ckernel else "python"


def set_backend(name: str) -> None:
    global _kernel
    if name == "python":
        _kernel = _pykernel
    elif name == "cython":
        if _ckernel is None:
            raise RuntimeError("compiled kernel is not built")
        _kernel = _ckernel
    else:
        raise ValueError(f"unknown backend {name!r}")


@dataclass(frozen=True)
class SimConfig:
    n_peers: int
    n_parts: int
    scenario: str
    seed: int
    replications: int
    allow_nolist_parts: bool = False  # extension: NoList with M > 1

    def __post_init__(self):
        object.__setattr__(self, "scenario", self.scenario.lower())
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}")
        if self.n_peers < 1:
            raise ValueError("N must be positive")
        if not 1 <= self.n_parts <= 64:
            raise ValueError("M must lie in 1..64")
        if self.replications < 1:
            raise ValueError("replications must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.scenario == "nolist" and self.n_parts > 1 and not self.allow_nolist_parts:
            raise ValueError("NoList with several parts needs allow_nolist_parts=True")


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(rep,))))


def lower_bound_rounds(n_peers: int, n_parts: int) -> int:
    return n_parts + n_peers.bit_length() - 1


@dataclass
class TrialStats:
    samples: np.ndarray
    n_peers: int = 0
    n_parts: int = 1
    scenario: str = "list"

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    @property
    def sd(self) -> float:
        return float(np.std(self.samples, ddof=1)) if self.n > 1 else 0.0

    @property
    def se(self) -> float:
        return self.sd / math.sqrt(self.n)

    def ci95(self) -> tuple[float, float]:
        """Normal-approximation interval."""
        h = Z95 * self.se
        return self.mean - h, self.mean + h


@dataclass
class SwarmState:
    n_peers: int
    n_parts: int
    have: list[int] = field(default_factory=list)  # bitmask per node, index 0 = server
    round: int = 0

    @classmethod
    def initial(cls, n_peers: int, n_parts: int) -> "SwarmState":
        full = (1 << n_parts) - 1
        return cls(n_peers, n_parts, [full] + [0] * n_peers, 0)

    def parts(self, node: int) -> set[int]:
        return {k + 1 for k in range(self.n_parts) if self.have[node] >> k & 1}

    @property
    def complete(self) -> bool:
        full = (1 << self.n_parts) - 1
        return all(h == full for h in self.have[1:])


def simulate_round(state: SwarmState, scenario: str, rng) -> SwarmState:
    """One synchronous round; ``rng`` is a numpy Generator or a DrawStream."""
    if state.complete:
        raise ValueError("state is already complete")
    draws = rng if isinstance(rng, _pykernel.DrawStream) else _pykernel.DrawStream(rng)
    have = list(state.have)
    _pykernel.step(have, state.n_peers, (1 << state.n_parts) - 1, scenario == "list", draws)
    return SwarmState(state.n_peers, state.n_parts, have, state.round + 1)


def run_replication(cfg: SimConfig, rep: int) -> int:
    return _kernel.run(cfg.n_peers, cfg.n_parts, cfg.scenario == "list", replication_rng(cfg.seed, rep))


def simulate(cfg: SimConfig) -> TrialStats:
    samples = np.fromiter(
        (run_replication(cfg, r) for r in range(cfg.replications)),
        dtype=np.int64,
        count=cfg.replications,
    )
    low = lower_bound_rounds(cfg.n_peers, cfg.n_parts)
    if samples.min() < low:
        raise AssertionError(f"a run beat the optimal {low} rounds")
    return TrialStats(samples, cfg.n_peers, cfg.n_parts, cfg.scenario)


def grid_seed(seed: int, n_peers: int, n_parts: int, scenario: str) -> int:
    """Independent master seed per grid point, derived from the sweep seed."""
    code = SCENARIOS.index(scenario)
    ss = np.random.SeedSequence(seed, spawn_key=(n_peers, n_parts, code))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sweep(n_values, m_values, scenarios, replications: int, seed: int,
          allow_nolist_parts: bool = False) -> list[TrialStats]:
    grid = [(s, n, m) for s in scenarios for m in m_values for n in n_values]
    if not grid:
        raise ValueError("empty grid")
    out = []
    for s, n, m in grid:
        cfg = SimConfig(n, m, s, grid_seed(seed, n, m, s), replications, allow_nolist_parts)
        out.append(simulate(cfg))
    return out
