"""Bite-timing policies: the assertiveness threshold rule and baselines.

The learned policy thresholds the predicted time to the next bite: the robot
proceeds when the prediction is at or below the assertiveness threshold tau.
User-facing assertiveness levels 1..5 map to tau = level + 3 seconds, so
level 3 is the 6 s default. Once the utensil is within the commit distance
of the mouth the trajectory always finishes, whatever the model says next.

Baselines: a fixed 45 s schedule, a mouth-open event trigger, and an
always-proceed lower bound.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum

logger = logging.getLogger(__name__)

COMMIT_DISTANCE_M = 0.05
TAU_GRID = (4.0, 5.0, 6.0, 7.0, 8.0)
DEFAULT_TAU = 6.0
MIN_LEVEL = 1
MAX_LEVEL = 5
FIXED_INTERVAL_SECONDS = 45.0

POLICY_NAMES = ("waffle", "fixed-interval", "mouth-open", "always-feed")


class Command(Enum):
    """What the policy tells the robot to do during the current tick."""

    PROCEED = "proceed"
    STOP = "stop"
    TRIGGER_FULL_TRAJECTORY = "trigger_full_trajectory"


@dataclass(frozen=True)
class AssertivenessThreshold:
    """A proceed threshold in seconds and its user-facing 1..5 level."""

    tau: float
    level: int

    def __post_init__(self) -> None:
        if self.tau not in TAU_GRID:
            raise ValueError(f"tau must be one of {TAU_GRID}, got {self.tau}")
        if self.level != int(self.tau) - 3:
            raise ValueError(
                f"level {self.level} does not correspond to tau {self.tau}"
            )


def map_assertiveness(level: int) -> AssertivenessThreshold:
    """Map an assertiveness level 1..5 to its threshold (tau = level + 3 s)."""
    if not MIN_LEVEL <= level <= MAX_LEVEL:
        raise ValueError(
            f"assertiveness level must be in [{MIN_LEVEL}, {MAX_LEVEL}], got {level}"
        )
    return AssertivenessThreshold(tau=float(level + 3), level=level)


def threshold_for_tau(tau: float) -> AssertivenessThreshold:
    """Build the threshold for a tau on the 4..8 s grid."""
    return AssertivenessThreshold(tau=float(tau), level=int(tau) - 3)


def decide(y_hat: float, threshold: AssertivenessThreshold) -> Command:
    """Threshold one prediction: proceed iff y_hat <= tau.

    The boundary is inclusive, so a prediction exactly at tau proceeds.
    Non-finite predictions fail safe to Stop and are logged.
    """
    if not math.isfinite(y_hat):
        logger.warning(
            "non-finite prediction %r, failing safe to Stop", y_hat
        )
        return Command.STOP
    return Command.PROCEED if y_hat <= threshold.tau else Command.STOP


@dataclass(frozen=True)
class PolicyContext:
    """Per-tick state the threshold policy needs beyond the prediction."""

    distance_to_mouth: float
    committed: bool
    session_clock: float


def waffle_step(
    ctx: PolicyContext,
    y_hat: float | None,
    threshold: AssertivenessThreshold,
) -> tuple[Command, PolicyContext]:
    """One tick of the threshold policy with the commit rule applied.

    Within the commit distance, or once committed, the command is Proceed
    regardless of the prediction; the commit latch stays set until the caller
    clears it at bite completion. Outside the commit zone a missing
    prediction (sensor gap) fails safe to Stop.
    """
    if ctx.committed or ctx.distance_to_mouth <= COMMIT_DISTANCE_M:
        return Command.PROCEED, replace(ctx, committed=True)
    if y_hat is None:
        return Command.STOP, ctx
    return decide(y_hat, threshold), ctx


def fixed_interval_step(
    session_clock: float,
    interval_seconds: float = FIXED_INTERVAL_SECONDS,
    tick_seconds: float = 0.5,
) -> Command:
    """Trigger a full trajectory at every multiple of the interval.

    Fires on the one control tick nearest each multiple (k >= 1), Stop on
    every other tick. The schedule runs on the session clock.
    """
    if interval_seconds <= 0:
        raise ValueError(f"interval must be positive, got {interval_seconds}")
    k = round(session_clock / interval_seconds)
    offset = session_clock - k * interval_seconds
    if k >= 1 and -tick_seconds / 2 <= offset < tick_seconds / 2:
        return Command.TRIGGER_FULL_TRAJECTORY
    return Command.STOP


def mouth_open_step(mouth_open_event: bool) -> Command:
    """Trigger a full trajectory on a mouth-open event, Stop otherwise."""
    return Command.TRIGGER_FULL_TRAJECTORY if mouth_open_event else Command.STOP


def always_feed_step() -> Command:
    """The always-proceed lower bound."""
    return Command.PROCEED


@dataclass(frozen=True)
class TickInputs:
    """Everything a policy may look at during one control tick."""

    session_clock: float
    distance_to_mouth: float
    at_staging: bool
    bite_completed: bool
    y_hat: float | None = None
    mouth_open_event: bool = False


class WafflePolicy:
    """Stateful wrapper around waffle_step for closed-loop runs."""

    name = "waffle"
    needs_predictions = True

    def __init__(self, threshold: AssertivenessThreshold) -> None:
        self.threshold = threshold
        self._committed = False

    def reset(self) -> None:
        self._committed = False

    def step(self, inputs: TickInputs) -> Command:
        if inputs.bite_completed:
            # The trajectory just finished, so there is no remainder left to
            # commit to. Clear the latch and go straight to the threshold
            # rule: the utensil is still at the mouth on this tick, and
            # letting the commit zone re-latch here would lock the policy
            # into proceeding forever.
            self._committed = False
            if inputs.y_hat is None:
                return Command.STOP
            return decide(inputs.y_hat, self.threshold)
        ctx = PolicyContext(
            distance_to_mouth=inputs.distance_to_mouth,
            committed=self._committed,
            session_clock=inputs.session_clock,
        )
        command, ctx = waffle_step(ctx, inputs.y_hat, self.threshold)
        self._committed = ctx.committed
        return command


class FixedIntervalPolicy:
    """Trigger on the 45 s schedule whenever the robot is ready at staging."""

    name = "fixed-interval"
    needs_predictions = False

    def __init__(self, interval_seconds: float = FIXED_INTERVAL_SECONDS) -> None:
        self.interval_seconds = interval_seconds

    def reset(self) -> None:
        pass

    def step(self, inputs: TickInputs) -> Command:
        command = fixed_interval_step(inputs.session_clock, self.interval_seconds)
        if command is Command.TRIGGER_FULL_TRAJECTORY and not inputs.at_staging:
            # Schedule fired mid-cycle; full trajectories only start at
            # staging, so this slot is skipped.
            return Command.STOP
        return command


class MouthOpenPolicy:
    """Trigger a full trajectory when the user opens their mouth at staging.

    Events arriving while a trajectory is already in flight are ignored; the
    robot only accepts a new trigger once it is back at staging.
    """

    name = "mouth-open"
    needs_predictions = False

    def reset(self) -> None:
        pass

    def step(self, inputs: TickInputs) -> Command:
        if inputs.at_staging:
            return mouth_open_step(inputs.mouth_open_event)
        return Command.STOP


class AlwaysFeedPolicy:
    """Proceed on every tick."""

    name = "always-feed"
    needs_predictions = False

    def reset(self) -> None:
        pass

    def step(self, inputs: TickInputs) -> Command:
        return always_feed_step()


def make_policy(
    name: str,
    threshold: AssertivenessThreshold | None = None,
):
    """Construct a policy by its log name."""
    if name == "waffle":
        return WafflePolicy(threshold or threshold_for_tau(DEFAULT_TAU))
    if name == "fixed-interval":
        return FixedIntervalPolicy()
    if name == "mouth-open":
        return MouthOpenPolicy()
    if name == "always-feed":
        return AlwaysFeedPolicy()
    raise ValueError(f"unknown policy {name!r}, expected one of {POLICY_NAMES}")
