"""
Two-query attack on correlated passwords.

A user queries w1, then later w2 drawn from a similarity kernel around w1
restricted to passwords outside the leak. Seeing both bucket ids b1 and b2,
the attacker ranks each w that bucket b2 can hold by its posterior

    score(w) = 1/|buckets(u, w)| * sum over w1 with b1 in buckets(u, w1) of
               kernel(u, w1)(w) * p(u, w1) / |buckets(u, w1)|

where kernel rows are normalized over the non-leaked passwords. Passwords
with zero probability never contribute as w1.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import numpy as np

from ..enums import Game
from ..errors import EmptyInputError
from .attacker import AttackerModel, attack_candidates
from .bucketizers import Bucketizer
from .games import TRIALS_PER_CHUNK, GameResult, sample_states
from .world import SyntheticWorld

logger = logging.getLogger(__name__)


LEET = {"a": "4", "e": "3", "i": "1", "o": "0", "s": "5", "t": "7"}


class CorrelatedModel(ABC):
    """Similarity kernel over the password universe."""

    @abstractmethod
    def weight(self, u: str, w1: str, w2: str) -> float:
        """Nonnegative unnormalized weight of w2 following w1."""

    def row(self, u: str, w1: str, universe: Tuple[str, ...]) -> np.ndarray:
        return np.array([self.weight(u, w1, w2) for w2 in universe], dtype=np.float64)


class IdentityKernel(CorrelatedModel):
    """w2 = w1."""

    def weight(self, u: str, w1: str, w2: str) -> float:
        return 1.0 if w1 == w2 else 0.0


class UniformKernel(CorrelatedModel):
    """w2 independent of w1."""

    def weight(self, u: str, w1: str, w2: str) -> float:
        return 1.0


def tweak_neighbours(w: str) -> Set[str]:
    """
    Single tweaks of w: toggle the case of one letter, step a trailing
    number up or down, or swap one letter for its leet digit (or back).
    """
    out: Set[str] = set()
    for i, c in enumerate(w):
        if c.isalpha():
            out.add(w[:i] + c.swapcase() + w[i + 1:])
        lower = c.lower()
        if lower in LEET:
            out.add(w[:i] + LEET[lower] + w[i + 1:])
        for letter, digit in LEET.items():
            if c == digit:
                out.add(w[:i] + letter + w[i + 1:])
    stem = w.rstrip("0123456789")
    digits = w[len(stem):]
    if digits:
        n = int(digits)
        out.add(stem + str(n + 1))
        if n > 0:
            out.add(stem + str(n - 1))
    else:
        out.add(w + "1")
    out.discard(w)
    return out


@dataclass
class TweakKernel(CorrelatedModel):
    """
    Weight 1 on single-tweak neighbours of w1, `epsilon` elsewhere
    (w1 itself included).
    """
    epsilon: float = 1e-3

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        self._neighbours: Dict[str, Set[str]] = {}

    def weight(self, u: str, w1: str, w2: str) -> float:
        near = self._neighbours.get(w1)
        if near is None:
            near = tweak_neighbours(w1)
            self._neighbours[w1] = near
        return 1.0 if w2 in near else self.epsilon


def _allowed(world: SyntheticWorld, exclude_leaked: bool) -> np.ndarray:
    leaked = world.leaked_passwords if exclude_leaked else frozenset()
    return np.array([w not in leaked for w in world.passwords], dtype=bool)


def _normalized_row(corr: CorrelatedModel, u: str, w1: str, world: SyntheticWorld, allowed: np.ndarray) -> np.ndarray:
    row = corr.row(u, w1, world.passwords) * allowed
    total = row.sum()
    return row / total if total > 0 else row


def correlated_attack(
    world: SyntheticWorld,
    corr: CorrelatedModel,
    b1: int,
    b2: int,
    u: str,
    q: int,
    bucketizer: Bucketizer,
    exclude_leaked: bool = True,
) -> List[str]:
    """
    The q guesses for the second password given both bucket ids.

    Args:
        exclude_leaked: second passwords are never leaked ones

    Returns:
        Passwords of bucket b2 by posterior score descending, ties lexicographic
    """
    if q < 0:
        raise ValueError(f"q must be >= 0, got {q}")
    world.require_exact()
    allowed = _allowed(world, exclude_leaked)
    i = world.user_index(u)
    scores = np.zeros(len(world.passwords))
    for j1, w1 in enumerate(world.passwords):
        p = float(world.joint[i, j1])
        if p <= 0:
            continue
        first = bucketizer.buckets(u, w1)
        if b1 not in first:
            continue
        scores += _normalized_row(corr, u, w1, world, allowed) * (p / len(first))

    candidates = []
    for j, w in enumerate(world.passwords):
        if not allowed[j]:
            continue
        second = bucketizer.buckets(u, w)
        if b2 in second:
            candidates.append((-(scores[j] / len(second)), w))
    candidates.sort()
    return [w for _, w in candidates[:q]]


@dataclass(frozen=True)
class CorrelatedResult:
    """Correlated attacker against a baseline that only uses b2."""
    correlated: GameResult
    baseline: GameResult

    @property
    def gain(self) -> float:
        return self.correlated.rate - self.baseline.rate


def run_correlated_game(
    world: SyntheticWorld,
    corr: CorrelatedModel,
    bucketizer: Bucketizer,
    q: int,
    trials: int,
    seed: Optional[int] = None,
) -> CorrelatedResult:
    """
    Monte-Carlo of the two-query game.

    Each trial draws (u, w1) from the joint, w2 from the kernel row of w1
    over non-leaked passwords, and one bucket of each uniformly. The
    correlated attacker sees (u, b1, b2); the baseline sees (u, b2) and
    ranks by p(u, w) / |buckets(u, w)| over non-leaked passwords.

    Raises:
        EmptyInputError: every password is leaked
    """
    allowed = _allowed(world, True)
    if not allowed.any():
        raise EmptyInputError("no non-leaked passwords to draw the second query from")
    non_leaked = [w for j, w in enumerate(world.passwords) if allowed[j]]
    baseline_attacker = AttackerModel(non_leaked, world.prob, q)
    width = len(world.passwords)

    rows: Dict[Tuple[str, str], np.ndarray] = {}
    attack_cache: Dict[Tuple[str, int, int], FrozenSet[str]] = {}
    baseline_cache: Dict[Tuple[str, int], FrozenSet[str]] = {}
    correlated_wins = baseline_wins = 0
    skipped = 0

    for chunk, start in enumerate(range(0, trials, TRIALS_PER_CHUNK)):
        n = min(TRIALS_PER_CHUNK, trials - start)
        rng = np.random.default_rng(None if seed is None else seed + chunk)
        states = sample_states(world, n, rng)
        for state in states.tolist():
            i, j1 = divmod(state, width)
            u, w1 = world.users[i], world.passwords[j1]
            key = (u, w1)
            row = rows.get(key)
            if row is None:
                row = _normalized_row(corr, u, w1, world, allowed)
                rows[key] = row
            if row.sum() <= 0:
                skipped += 1
                continue
            w2 = world.passwords[int(rng.choice(width, p=row / row.sum()))]
            first = bucketizer.buckets(u, w1)
            second = bucketizer.buckets(u, w2)
            b1 = first[int(rng.integers(len(first)))]
            b2 = second[int(rng.integers(len(second)))]

            guesses = attack_cache.get((u, b1, b2))
            if guesses is None:
                guesses = frozenset(correlated_attack(world, corr, b1, b2, u, q, bucketizer))
                attack_cache[(u, b1, b2)] = guesses
            plain = baseline_cache.get((u, b2))
            if plain is None:
                plain = frozenset(attack_candidates(baseline_attacker, u, b2, bucketizer))
                baseline_cache[(u, b2)] = plain
            correlated_wins += w2 in guesses
            baseline_wins += w2 in plain

    played = trials - skipped
    if skipped:
        logger.warning("%d trials had no non-leaked second password under the kernel", skipped)
    return CorrelatedResult(
        GameResult(Game.BUCKET_GUESS, played, correlated_wins),
        GameResult(Game.BUCKET_GUESS, played, baseline_wins),
    )
