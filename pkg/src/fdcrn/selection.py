"""Rate-maximizing relay choice across the candidate set.

Each relay owns an independent power-control problem; the network then
activates the single relay whose converged rate is largest.  Ties go to
the smallest index so results are reproducible across orderings.
"""

from dataclasses import dataclass, replace
from typing import Optional

from .model import residual_si
from .optimizer import (
    RelaySolution,
    Scenario,
    SolverConfig,
    alternating_optimize,
    solve_ideal,
)


@dataclass(frozen=True)
class SelectionResult:
    best: RelaySolution
    per_relay: tuple


def select_relay(scenario: Scenario,
                 config: Optional[SolverConfig] = None) -> SelectionResult:
    """Solve every relay's power problem and pick the rate argmax.

    Relays with ideal loopback cancellation route through the specialized
    solver; the rest run the alternating ascent.  A best rate of zero
    means no relay could carry traffic under the cap, reported with
    converged=False.
    """
    n = scenario.channels.k
    if n < 1:
        raise ValueError("need at least one candidate relay")
    per_relay = []
    for k in range(n):
        if residual_si(scenario.channels, scenario.params, k) == 0.0:
            per_relay.append(solve_ideal(scenario, k, config))
        else:
            per_relay.append(alternating_optimize(scenario, k, config))
    best = per_relay[0]
    for sol in per_relay[1:]:
        if sol.rate > best.rate:
            best = sol
    if best.rate == 0.0:
        best = replace(best, converged=False)
    return SelectionResult(best=best, per_relay=tuple(per_relay))
