"""
Guessing games: exact advantages and Monte-Carlo estimates.

Guess: the attacker sees u and makes q guesses at w.
BucketGuess: the attacker also sees a bucket drawn uniformly from the
buckets of (u, w), so password w contributes p(u, w) / |buckets(u, w)| to
each of its buckets.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Union

import numpy as np

from ..enums import Game
from ..errors import ConfigurationError
from .attacker import AttackerModel, attack_candidates
from .bucketizers import Bucketizer
from .world import SyntheticWorld

logger = logging.getLogger(__name__)


TRIALS_PER_CHUNK = 10_000


def _top_sum(values: Iterable[float], q: int) -> float:
    """Exactly rounded sum of the q largest values."""
    if q <= 0:
        return 0.0
    ordered = sorted((float(v) for v in values), reverse=True)
    return math.fsum(ordered[:q])


def _check_q(q: int) -> None:
    if q < 0:
        raise ValueError(f"q must be >= 0, got {q}")


def _bucket_loads(world: SyntheticWorld, bucketizer: Bucketizer, i: int) -> Dict[int, List[float]]:
    u = world.users[i]
    loads: Dict[int, List[float]] = defaultdict(list)
    for j, p in enumerate(world.joint[i]):
        if p <= 0:
            continue
        buckets = bucketizer.buckets(u, world.passwords[j])
        share = float(p) / len(buckets)
        for b in buckets:
            loads[b].append(share)
    return loads


# =============================================================================
# Exact
# =============================================================================

def adv_guess(world: SyntheticWorld, q: int) -> float:
    """
    Best q-guess success without bucket information:
    sum over users of the q largest p(u, w).

    Raises:
        ValueError: q < 0
        WorldTooLargeError: world beyond exact-computation size
    """
    _check_q(q)
    world.require_exact()
    return math.fsum(_top_sum(row, q) for row in world.joint)


def adv_bucket(world: SyntheticWorld, bucketizer: Bucketizer, q: int) -> float:
    """
    Best q-guess success with the bucket id:
    sum over users and buckets of the q largest p(u, w) / |buckets(u, w)|
    among the passwords the bucket holds.
    """
    _check_q(q)
    world.require_exact()
    per_user = []
    for i in range(len(world.users)):
        loads = _bucket_loads(world, bucketizer, i)
        per_user.append(math.fsum(_top_sum(shares, q) for shares in loads.values()))
    return math.fsum(per_user)


def security_loss(world: SyntheticWorld, bucketizer: Bucketizer, q: int) -> float:
    """adv_bucket - adv_guess."""
    return adv_bucket(world, bucketizer, q) - adv_guess(world, q)


def attack_success(
    world: SyntheticWorld,
    attacker: AttackerModel,
    bucketizer: Optional[Bucketizer] = None,
) -> float:
    """
    Exact success probability of a given (possibly mis-informed) attacker,
    in the Guess game when bucketizer is None, else in BucketGuess.
    """
    world.require_exact()
    total = []
    for i, u in enumerate(world.users):
        if bucketizer is None:
            total.extend(world.prob(u, w) for w in attacker.guesses(u))
            continue
        for b in _bucket_loads(world, bucketizer, i):
            for w in attack_candidates(attacker, u, b, bucketizer):
                total.append(world.prob(u, w) / bucketizer.size(u, w))
    return math.fsum(total)


# =============================================================================
# Monte Carlo
# =============================================================================

@dataclass(frozen=True)
class GameResult:
    """Monte-Carlo outcome."""
    game: Game
    trials: int
    wins: int

    @property
    def rate(self) -> float:
        return self.wins / self.trials if self.trials else 0.0

    @property
    def sigma(self) -> float:
        """Standard error of the rate."""
        if not self.trials:
            return 0.0
        return math.sqrt(self.rate * (1.0 - self.rate) / self.trials)

    def agrees_with(self, expected: float, k: float = 3.0) -> bool:
        """|rate - expected| within k standard errors of a Bernoulli(expected) mean."""
        if not self.trials:
            return False
        sd = math.sqrt(max(expected * (1.0 - expected), 0.0) / self.trials)
        return abs(self.rate - expected) <= k * sd + 1e-12


def sample_states(world: SyntheticWorld, n: int, rng: np.random.Generator) -> np.ndarray:
    """n flat (user, password) state indices drawn from the joint."""
    flat = world.joint.ravel()
    return rng.choice(flat.size, size=n, p=flat / flat.sum())


def run_game(
    world: SyntheticWorld,
    game: Union[Game, str],
    attacker: AttackerModel,
    trials: int,
    seed: Optional[int] = None,
    bucketizer: Optional[Bucketizer] = None,
) -> GameResult:
    """
    Play `trials` rounds.

    Trials run in chunks of TRIALS_PER_CHUNK; chunk k draws from a
    generator seeded with seed + k, so a fixed seed reproduces the rate.

    Raises:
        ConfigurationError: BucketGuess without a bucketizer
    """
    game = Game.parse(game)
    if trials < 0:
        raise ValueError(f"trials must be >= 0, got {trials}")
    if game is Game.BUCKET_GUESS and bucketizer is None:
        raise ConfigurationError("the bucket-guess game needs a bucketizer")

    width = len(world.passwords)
    guess_sets: Dict[object, frozenset] = {}
    wins = 0
    for chunk, start in enumerate(range(0, trials, TRIALS_PER_CHUNK)):
        n = min(TRIALS_PER_CHUNK, trials - start)
        rng = np.random.default_rng(None if seed is None else seed + chunk)
        states = sample_states(world, n, rng)
        picks = rng.random(n)
        for state, pick in zip(states.tolist(), picks.tolist()):
            i, j = divmod(state, width)
            u, w = world.users[i], world.passwords[j]
            if game is Game.GUESS:
                key = u
                if key not in guess_sets:
                    guess_sets[key] = frozenset(attacker.guesses(u))
            else:
                buckets = bucketizer.buckets(u, w)
                b = buckets[min(int(pick * len(buckets)), len(buckets) - 1)]
                key = (u, b)
                if key not in guess_sets:
                    guess_sets[key] = frozenset(attack_candidates(attacker, u, b, bucketizer))
            wins += w in guess_sets[key]
    logger.debug("%s game: %d/%d wins", game.value, wins, trials)
    return GameResult(game, trials, wins)
