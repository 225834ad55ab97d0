"""Evaluation criteria computed from tick traces.

A trace is a list of per-tick records (dicts, one JSON object per line on
disk).  Metrics are pure functions of the trace, so recomputing them from a
stored file reproduces the original report exactly.

Definitions:
  contact     k_conf consecutive non-empty detections.
  loss        while in contact, loss_gap seconds pass without a confirmation;
              the episode starts at the last raw detection before the gap.
  success     a confirmed re-detection before the trace ends.
  SR          successful episodes / all loss episodes (None when no episode).
  TR          fraction of ticks believed visible with a detection in hand.
  ART         mean restore time over successful episodes.
  FT          time at which the irrecoverable timeout fired, if it did.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

VISIBLE_INDEX = 0


@dataclass(frozen=True)
class LossEpisode:
    loss_time: float
    restored: bool
    restore_time: Optional[float] = None  # seconds from loss to confirmed contact


@dataclass(frozen=True)
class TrialMetrics:
    episodes: tuple[LossEpisode, ...]
    tracking_ratio: float
    restoring_times: tuple[float, ...]
    failure_time: Optional[float]
    duration: float
    ticks: int
    action_outcomes: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def success_ratio(self) -> Optional[float]:
        if not self.episodes:
            return None
        return sum(e.restored for e in self.episodes) / len(self.episodes)

    @property
    def average_restoring_time(self) -> Optional[float]:
        if not self.restoring_times:
            return None
        return float(np.mean(self.restoring_times))

    def to_dict(self) -> dict:
        return {
            "episodes": [
                {"loss_time": e.loss_time, "restored": e.restored,
                 "restore_time": e.restore_time}
                for e in self.episodes
            ],
            "success_ratio": self.success_ratio,
            "tracking_ratio": self.tracking_ratio,
            "restoring_times": list(self.restoring_times),
            "average_restoring_time": self.average_restoring_time,
            "failure_time": self.failure_time,
            "duration": self.duration,
            "ticks": self.ticks,
            "action_outcomes": self.action_outcomes,
        }


@dataclass
class MetricsConfig:
    k_conf: int = 3
    loss_gap: float = 1.5
    detection_gate: float = 0.8  # streak continuity gate, matches the agent's


class MetricsAccumulator:
    """Streaming metric computation; feed one trace record at a time."""

    def __init__(self, config: Optional[MetricsConfig] = None):
        self.cfg = config or MetricsConfig()
        self.ticks = 0
        self.visible_detected_ticks = 0
        self.streak = 0
        self._prev_z: Optional[list] = None
        self.in_contact = False
        self.lost_since: Optional[float] = None
        self.last_raw_detection: Optional[float] = None
        self.last_confirm: Optional[float] = None
        self.episodes: list[LossEpisode] = []
        self.failure_time: Optional[float] = None
        self.last_t = 0.0
        self.action_outcomes: dict[str, dict[str, int]] = {}

    def push(self, record: dict) -> None:
        t = float(record["t"])
        self.last_t = t
        self.ticks += 1
        detected = record.get("z") is not None
        belief = record.get("belief") or []
        believed_visible = bool(belief) and int(np.argmax(belief)) == VISIBLE_INDEX
        if believed_visible and detected:
            self.visible_detected_ticks += 1

        z = record.get("z")
        if detected:
            if (self._prev_z is not None
                    and math.hypot(z[0] - self._prev_z[0],
                                   z[1] - self._prev_z[1]) <= self.cfg.detection_gate):
                self.streak += 1
            else:
                self.streak = 1
            self._prev_z = z
        else:
            self.streak = 0
            self._prev_z = None
        confirmed = self.streak >= self.cfg.k_conf

        if confirmed:
            if self.lost_since is not None:
                self.episodes.append(LossEpisode(self.lost_since, True,
                                                 restore_time=t - self.lost_since))
                self.lost_since = None
            self.in_contact = True
            self.last_confirm = t
        if detected and self.in_contact and self.lost_since is None:
            self.last_raw_detection = t

        if (self.in_contact and self.lost_since is None
                and self.last_confirm is not None
                and t - self.last_confirm > self.cfg.loss_gap):
            self.lost_since = self.last_raw_detection if self.last_raw_detection is not None else self.last_confirm

        phase = record.get("phase")
        if phase in ("complete", "failed"):
            action = record.get("action", "?")
            slot = self.action_outcomes.setdefault(action, {"complete": 0, "failed": 0})
            slot[phase] += 1

        if "irrecoverable" in (record.get("flags") or ()):
            if self.failure_time is None:
                self.failure_time = t

    def finalize(self) -> TrialMetrics:
        if self.lost_since is not None:
            self.episodes.append(LossEpisode(self.lost_since, False))
        restores = tuple(e.restore_time for e in self.episodes
                         if e.restored and e.restore_time is not None)
        tr = self.visible_detected_ticks / self.ticks if self.ticks else 0.0
        return TrialMetrics(
            episodes=tuple(self.episodes),
            tracking_ratio=tr,
            restoring_times=restores,
            failure_time=self.failure_time,
            duration=self.last_t,
            ticks=self.ticks,
            action_outcomes=self.action_outcomes,
        )

    def snapshot_dict(self) -> dict:
        """Metrics so far, for live streaming (no episode finalization)."""
        tr = self.visible_detected_ticks / self.ticks if self.ticks else 0.0
        done = [e for e in self.episodes]
        return {
            "ticks": self.ticks,
            "tracking_ratio": tr,
            "episodes": len(done),
            "episodes_restored": sum(e.restored for e in done),
            "failure_time": self.failure_time,
        }


def compute_metrics(trace: list[dict], config: Optional[MetricsConfig] = None) -> TrialMetrics:
    acc = MetricsAccumulator(config)
    for record in trace:
        acc.push(record)
    return acc.finalize()


# ---------------------------------------------------------------------------
# batch aggregation
# ---------------------------------------------------------------------------

#: field-scale results reported alongside desk-scale numbers for context
REFERENCE_RESULTS = {
    "success_ratio": {"mean": 0.82, "std": 0.097},
    "tracking_ratio": {"mean": 0.71, "std": 0.096},
    "average_restoring_time_s": {"mean": 10.22, "std": 7.9},
    "failure_time_s": {"mean": 232.0, "std": 44.2},
    "action_success": {"track": 0.88, "search": 0.74},
}


def _mean_std(values: list[float]) -> Optional[dict]:
    if not values:
        return None
    arr = np.asarray(values, dtype=float)
    return {"mean": float(arr.mean()), "std": float(arr.std()), "n": len(values)}


def aggregate_metrics(per_trial: list[TrialMetrics]) -> dict:
    episodes = [e for m in per_trial for e in m.episodes]
    restores = [t for m in per_trial for t in m.restoring_times]
    fts = [m.failure_time for m in per_trial if m.failure_time is not None]
    pooled_sr = (sum(e.restored for e in episodes) / len(episodes)) if episodes else None
    actions: dict[str, dict[str, int]] = {}
    for m in per_trial:
        for action, counts in m.action_outcomes.items():
            slot = actions.setdefault(action, {"complete": 0, "failed": 0})
            slot["complete"] += counts.get("complete", 0)
            slot["failed"] += counts.get("failed", 0)
    action_success = {
        a: (c["complete"] / (c["complete"] + c["failed"]))
        for a, c in actions.items() if (c["complete"] + c["failed"]) > 0
    }
    return {
        "trials": len(per_trial),
        "episodes": len(episodes),
        "success_ratio": pooled_sr,
        "success_ratio_per_trial": _mean_std(
            [m.success_ratio for m in per_trial if m.success_ratio is not None]),
        "tracking_ratio": _mean_std([m.tracking_ratio for m in per_trial]),
        "restore_time": _mean_std(restores),
        "restore_time_median": float(np.median(restores)) if restores else None,
        "failure_time": _mean_std(fts),
        "failures_triggered": len(fts),
        "action_outcomes": actions,
        "action_success": action_success,
        "reference": REFERENCE_RESULTS,
    }
