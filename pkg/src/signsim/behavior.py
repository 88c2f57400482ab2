"""Navigation behavior: stochastic sign recognition, content categories, and
the per-tick decision rule with an exploration fallback.

Each (agent, sign) pair gets one uniform threshold drawn at simulation start;
a sign is recognized on a tick iff its attention meets that threshold. Seen
signs are categorized against the current task leg and the best one drives
the navigation mode, which only ever upgrades within a leg.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .attention import SignScore
from .environment import Environment, NamedPoint, Sign, TaskLeg

_THRESHOLD_STREAM = 0x7D5  # domain tag so threshold draws never collide with other streams


class SignCategory(enum.IntEnum):
    """Lower value = higher priority."""
    AT_TARGET = 1
    DIRECTIONAL_CLUE = 2
    IRRELEVANT = 3


class NavMode(enum.Enum):
    EXPLORING = "exploring"
    FOLLOWING_CLUE = "following_clue"
    TARGET_KNOWN = "target_known"
    ARRIVED = "arrived"
    TIMED_OUT = "timed_out"


_MODE_RANK = {
    NavMode.EXPLORING: 0,
    NavMode.FOLLOWING_CLUE: 1,
    NavMode.TARGET_KNOWN: 2,
    NavMode.ARRIVED: 3,
    NavMode.TIMED_OUT: 3,
}


@dataclass
class NavState:
    mode: NavMode = NavMode.EXPLORING
    clue_goal: NamedPoint | None = None  # set while FOLLOWING_CLUE
    visited_base_points: set[str] = field(default_factory=set)
    current_leg: int = 0


@dataclass(frozen=True)
class Decision:
    chosen_sign: int | None
    mode: NavMode
    goal: tuple[str, tuple[float, float]] | None  # (floor, point); None = keep current


def init_thresholds(agent_ids: Iterable[int], sign_ids: Iterable[int],
                    seed: int, replication: int = 0) -> dict[tuple[int, int], float]:
    """One uniform [0, 1] draw per (agent, sign), constant for the whole run.

    Each draw is derived only from (seed, replication, agent, sign), so the
    table is identical no matter the iteration order.
    """
    table = {}
    for agent in agent_ids:
        for sign in sign_ids:
            ss = np.random.SeedSequence(entropy=seed,
                                        spawn_key=(_THRESHOLD_STREAM, replication, agent, sign))
            table[(agent, sign)] = float(np.random.Generator(np.random.PCG64(ss)).random())
    return table


def categorize_sign(sign: Sign, leg: TaskLeg) -> SignCategory:
    """Match the sign's entries against the leg's target label (case-insensitive)."""
    target = leg.target_label.casefold()
    best = SignCategory.IRRELEVANT
    for entry in sign.entries:
        if entry.label.casefold() != target:
            continue
        if entry.action == "at_target":
            return SignCategory.AT_TARGET
        best = min(best, SignCategory.DIRECTIONAL_CLUE)
    return best


def clue_goal_id(sign: Sign, leg: TaskLeg) -> str | None:
    """Goal point referenced by the sign's first direct_to entry for this leg."""
    target = leg.target_label.casefold()
    for entry in sign.entries:
        if entry.action == "direct_to" and entry.label.casefold() == target:
            return entry.goal
    return None


def decide(env: Environment, leg: TaskLeg, scores: Sequence[SignScore],
           thresholds: dict[tuple[int, int], float], agent_id: int, state: NavState) -> Decision:
    """Pick the best recognized sign and the resulting navigation mode.

    Recognized signs are ranked by category, then attention, then lower id.
    Modes only upgrade (exploring -> following_clue -> target_known); an
    in-progress clue goal is kept until reached, but a target sighting
    interrupts immediately.
    """
    seen = [s for s in scores if s.attention >= thresholds[(agent_id, s.sign_id)]]
    ranked = sorted(
        ((categorize_sign(env.sign_by_id(s.sign_id), leg), s) for s in seen),
        key=lambda item: (item[0], -item[1].attention, item[1].sign_id),
    )
    best_cat, best = ranked[0] if ranked else (SignCategory.IRRELEVANT, None)

    if best is not None and best_cat == SignCategory.AT_TARGET:
        return Decision(chosen_sign=best.sign_id, mode=NavMode.TARGET_KNOWN,
                        goal=(leg.target_floor, leg.target_point))
    if best is not None and best_cat == SignCategory.DIRECTIONAL_CLUE:
        if state.mode == NavMode.TARGET_KNOWN:
            return Decision(chosen_sign=None, mode=NavMode.TARGET_KNOWN, goal=None)
        if state.mode == NavMode.FOLLOWING_CLUE and state.clue_goal is not None:
            return Decision(chosen_sign=None, mode=NavMode.FOLLOWING_CLUE, goal=None)
        goal = env.goal_point_by_id(clue_goal_id(env.sign_by_id(best.sign_id), leg))
        return Decision(chosen_sign=best.sign_id, mode=NavMode.FOLLOWING_CLUE,
                        goal=(goal.floor, goal.point))
    # Nothing useful seen: keep whatever is in progress.
    if state.mode in (NavMode.TARGET_KNOWN, NavMode.FOLLOWING_CLUE):
        return Decision(chosen_sign=None, mode=state.mode, goal=None)
    return Decision(chosen_sign=None, mode=NavMode.EXPLORING, goal=None)


def mode_rank(mode: NavMode) -> int:
    return _MODE_RANK[mode]


def next_exploration_goal(state: NavState, base_points: Sequence[NamedPoint],
                          position: tuple[str, tuple[float, float]],
                          path_length: Callable[[tuple[str, tuple[float, float]], NamedPoint], float],
                          ) -> NamedPoint:
    """Nearest unvisited base point by planned-path length.

    When every base point has been visited the set resets and selection
    starts over. Unreachable points (infinite length) are skipped unless
    nothing else remains.
    """
    if not base_points:
        raise ValueError("no base points defined")
    unvisited = [bp for bp in base_points if bp.id not in state.visited_base_points]
    if not unvisited:
        state.visited_base_points.clear()
        unvisited = list(base_points)
    ranked = sorted(unvisited, key=lambda bp: (path_length(position, bp), bp.id))
    return ranked[0]
