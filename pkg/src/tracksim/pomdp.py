"""Discrete belief planner over the four tracking contexts.

States: visible / occluded / disappearance / irrecoverable (absorbing).
Actions: track / active_move / search.  Observations: the 16 possible
4-bit feature vectors, with per-feature Bernoulli likelihoods assumed
conditionally independent given the state.

Action selection is an exact finite-horizon expansion of the belief tree
(all actions x all observation symbols), with reward 10 for the visible
state accumulated under a discount.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Optional

import numpy as np

from .sensing import FeatureVector

N_STATES = 4
N_ACTIONS = 3
N_OBS = 16


class ContextState(IntEnum):
    VISIBLE = 0
    OCCLUDED = 1
    DISAPPEARANCE = 2
    IRRECOVERABLE = 3

    @property
    def label(self) -> str:
        return self.name.lower()


class HlAction(IntEnum):
    # order is the fixed tie-break order for planning
    TRACK = 0
    ACTIVE_MOVE = 1
    SEARCH = 2

    @property
    def label(self) -> str:
        return self.name.lower()


RECOVERABLE = (ContextState.VISIBLE, ContextState.OCCLUDED, ContextState.DISAPPEARANCE)


class BeliefUpdateError(RuntimeError):
    """The observation assigned zero likelihood to every believed state."""


@dataclass(frozen=True)
class ContextBelief:
    """Probability simplex over the four context states."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        if p.shape != (N_STATES,):
            raise ValueError("belief must have 4 entries")
        if np.any(p < -1e-15) or abs(float(p.sum()) - 1.0) > 1e-12:
            raise ValueError(f"belief must be a probability simplex, got {p}")

    @staticmethod
    def uniform() -> "ContextBelief":
        return ContextBelief(np.full(N_STATES, 0.25))

    @staticmethod
    def uniform_recoverable() -> "ContextBelief":
        p = np.zeros(N_STATES)
        p[list(map(int, RECOVERABLE))] = 1.0 / len(RECOVERABLE)
        return ContextBelief(p)

    @staticmethod
    def point_mass(s: ContextState) -> "ContextBelief":
        p = np.zeros(N_STATES)
        p[int(s)] = 1.0
        return ContextBelief(p)

    def argmax(self) -> ContextState:
        return ContextState(int(np.argmax(self.probs)))

    def p(self, s: ContextState) -> float:
        return float(self.probs[int(s)])

    def as_list(self) -> list[float]:
        return [float(v) for v in self.probs]


def _default_transitions() -> np.ndarray:
    """T[s, a, s']: matched action/state pairs succeed toward visible,
    mismatched pairs mostly self-loop with small leakage."""
    V, O, D, I = range(4)
    T = np.zeros((N_STATES, N_ACTIONS, N_STATES))
    T[V, HlAction.TRACK] = (0.85, 0.10, 0.05, 0.00)
    T[V, HlAction.ACTIVE_MOVE] = (0.72, 0.16, 0.12, 0.00)
    T[V, HlAction.SEARCH] = (0.70, 0.15, 0.15, 0.00)
    T[O, HlAction.TRACK] = (0.15, 0.80, 0.00, 0.05)
    T[O, HlAction.ACTIVE_MOVE] = (0.70, 0.20, 0.10, 0.00)
    T[O, HlAction.SEARCH] = (0.20, 0.65, 0.10, 0.05)
    T[D, HlAction.TRACK] = (0.05, 0.00, 0.85, 0.10)
    T[D, HlAction.ACTIVE_MOVE] = (0.05, 0.00, 0.85, 0.10)
    T[D, HlAction.SEARCH] = (0.60, 0.00, 0.30, 0.10)
    T[I, :, I] = 1.0
    return T


def _default_feature_likelihoods(p_d: float = 0.9) -> np.ndarray:
    """L[feature, s] = p(theta_feature = 1 | s)."""
    V, O, D, I = range(4)
    L = np.empty((4, N_STATES))
    L[0] = (p_d, 0.05, 0.05, 0.05)   # target seen
    L[1] = (0.10, 0.80, 0.10, 0.10)  # occluder overlap
    L[2] = (0.10, 0.70, 0.10, 0.10)  # depth drop
    L[3] = (0.30, 0.30, 0.80, 0.30)  # human in view
    return L


@dataclass(frozen=True)
class PomdpTables:
    """Transition, observation and reward tables plus planning parameters."""

    transitions: np.ndarray = field(default_factory=_default_transitions)
    feature_likelihoods: np.ndarray = field(default_factory=_default_feature_likelihoods)
    rewards: np.ndarray = field(default_factory=lambda: np.array([10.0, 0.0, 0.0, 0.0]))
    discount: float = 0.95
    horizon: int = 3

    def __post_init__(self):
        T = np.asarray(self.transitions, dtype=float)
        L = np.asarray(self.feature_likelihoods, dtype=float)
        r = np.asarray(self.rewards, dtype=float)
        object.__setattr__(self, "transitions", T)
        object.__setattr__(self, "feature_likelihoods", L)
        object.__setattr__(self, "rewards", r)
        if T.shape != (N_STATES, N_ACTIONS, N_STATES):
            raise ValueError("transition table must be 4x3x4")
        rowsums = T.sum(axis=2)
        if np.any(T < -1e-12) or not np.allclose(rowsums, 1.0, atol=1e-9):
            raise ValueError("every transition row must be a distribution")
        I = int(ContextState.IRRECOVERABLE)
        if not np.allclose(T[I, :, :], np.eye(N_STATES)[I], atol=1e-12):
            raise ValueError("irrecoverable must be absorbing under every action")
        if L.shape != (4, N_STATES) or np.any(L < 0.0) or np.any(L > 1.0):
            raise ValueError("feature likelihoods must be 4x4 probabilities")
        if r.shape != (N_STATES,):
            raise ValueError("rewards must have one entry per state")
        if not (0.0 < self.discount < 1.0):
            raise ValueError("discount must lie in (0, 1)")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")

    @cached_property
    def symbol_likelihoods(self) -> np.ndarray:
        """(16, 4) likelihood of each observation symbol given each state."""
        L = self.feature_likelihoods
        out = np.empty((N_OBS, N_STATES))
        for sym in range(N_OBS):
            bits = [(sym >> 3) & 1, (sym >> 2) & 1, (sym >> 1) & 1, sym & 1]
            probs = np.where(np.array(bits)[:, None] == 1, L, 1.0 - L)
            out[sym] = probs.prod(axis=0)
        return out


def reward(s: ContextState, tables: Optional[PomdpTables] = None) -> float:
    """Per-state reward; positive only for the visible state by default."""
    t = tables if tables is not None else PomdpTables()
    return float(t.rewards[int(s)])


def expected_reward(b: ContextBelief, tables: PomdpTables) -> float:
    return float(b.probs @ tables.rewards)


def belief_predict(b: ContextBelief, a: HlAction, tables: PomdpTables) -> ContextBelief:
    """Push the belief through the transition table for a completed action."""
    p = b.probs @ tables.transitions[:, int(a), :]
    return ContextBelief(p / p.sum())


def observation_likelihood(theta: FeatureVector, s: ContextState,
                           tables: PomdpTables) -> float:
    """p(theta | s) as a product of four Bernoulli factors."""
    L = tables.feature_likelihoods
    bits = theta.as_tuple()
    out = 1.0
    for i, bit in enumerate(bits):
        out *= L[i, int(s)] if bit else 1.0 - L[i, int(s)]
    return float(out)


def belief_update(b_pred: ContextBelief, theta: FeatureVector,
                  tables: PomdpTables) -> ContextBelief:
    """Bayes reweighting of the predicted belief by the observation."""
    lik = tables.symbol_likelihoods[theta.symbol]
    raw = b_pred.probs * lik
    total = float(raw.sum())
    if not math.isfinite(total) or total <= 0.0:
        raise BeliefUpdateError("observation has zero likelihood under the belief")
    return ContextBelief(raw / total)


# ---------------------------------------------------------------------------
# exact finite-horizon planning
# ---------------------------------------------------------------------------

def _values(beliefs: np.ndarray, depth: int, tables: PomdpTables) -> np.ndarray:
    """V(b, depth) for a batch of beliefs, shape (M, 4) -> (M,).

    V(b, 1) collapses analytically: averaging the posterior over observation
    outcomes restores the predicted belief, so the final expansion level is
    max_a rho(T_a b).  Deeper levels branch over all actions and symbols.
    """
    rho = beliefs @ tables.rewards
    if depth <= 0:
        return rho
    T = tables.transitions
    if depth == 1:
        pred = np.einsum("ms,sat->mat", beliefs, T)
        future = (pred @ tables.rewards).max(axis=1)
        return rho + tables.discount * future
    Lsym = tables.symbol_likelihoods  # (16, 4)
    pred = np.einsum("ms,sat->mat", beliefs, T)          # (M, A, S)
    raw = pred[:, :, None, :] * Lsym[None, None, :, :]   # (M, A, O, S)
    p_obs = raw.sum(axis=3)                              # (M, A, O)
    safe = np.where(p_obs[..., None] > 0.0, p_obs[..., None], 1.0)
    children = raw / safe
    m, a, o, s = children.shape
    child_vals = _values(children.reshape(m * a * o, s), depth - 1, tables)
    child_vals = child_vals.reshape(m, a, o)
    future = (p_obs * child_vals).sum(axis=2).max(axis=1)
    return rho + tables.discount * future


def plan(b: ContextBelief, tables: PomdpTables) -> tuple[HlAction, float]:
    """Best action and its value for the configured horizon.

    Ties are broken by the fixed action order track < active_move < search.
    """
    depth = tables.horizon
    rho = expected_reward(b, tables)
    T = tables.transitions
    q_vals = np.empty(N_ACTIONS)
    if depth == 1:
        for a in range(N_ACTIONS):
            q_vals[a] = rho + tables.discount * float((b.probs @ T[:, a, :]) @ tables.rewards)
    else:
        Lsym = tables.symbol_likelihoods
        for a in range(N_ACTIONS):
            pred = b.probs @ T[:, a, :]
            raw = pred[None, :] * Lsym          # (O, S)
            p_obs = raw.sum(axis=1)             # (O,)
            safe = np.where(p_obs[:, None] > 0.0, p_obs[:, None], 1.0)
            children = raw / safe
            vals = _values(children, depth - 1, tables)
            q_vals[a] = rho + tables.discount * float(p_obs @ vals)
    best = int(np.argmax(q_vals))
    return HlAction(best), float(q_vals[best])
