"""
Guessing attackers.

An attacker ranks candidate passwords by an estimated weight p(u, w). With
a bucket id in hand it keeps the candidates the bucket can hold and ranks
them by p(u, w) / |buckets(u, w)|; targeted guesses for compromised users
(their own leaked passwords by default) go first.
"""

from __future__ import annotations

import weakref
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from ..core import LeakDataset
from .bucketizers import Bucketizer
from .world import SyntheticWorld

Weight = Callable[[str, str], float]
TargetedSource = Callable[[str], Sequence[str]]


def _dedupe(items: Sequence[str]) -> List[str]:
    seen = set()
    out = []
    for w in items:
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


class AttackerModel:
    """
    Candidate list plus weight function and budget q.

    Args:
        candidates: passwords the attacker knows of
        weight: (u, w) -> estimated probability
        q: guesses per target
        targeted: u -> passwords to try first (compromised users)
    """

    def __init__(
        self,
        candidates: Sequence[str],
        weight: Weight,
        q: int,
        targeted: Optional[TargetedSource] = None,
    ):
        if q < 0:
            raise ValueError(f"q must be >= 0, got {q}")
        self.candidates = tuple(_dedupe(candidates))
        self.weight = weight
        self.q = q
        self.targeted = targeted
        self._ranked: Dict[str, List[str]] = {}
        self._bucketed = weakref.WeakKeyDictionary()  # bucketizer -> {(u, b): guesses}

    # === Construction ===

    @classmethod
    def optimal(cls, world: SyntheticWorld, q: int, targeted: bool = False) -> "AttackerModel":
        """Knows the joint distribution exactly; targeted guesses from the leak when asked."""
        return cls(world.passwords, world.prob, q, world.leaked_for if targeted else None)

    @classmethod
    def from_estimator(
        cls,
        estimator,
        leak: Union[LeakDataset, Mapping[str, int]],
        q: int,
        tail_samples: int = 0,
        seed: Optional[int] = None,
        targeted: Optional[TargetedSource] = None,
    ) -> "AttackerModel":
        """
        Leaked passwords by frequency, then passwords sampled from the
        estimator's n-gram tail; every candidate weighted by the estimator.
        """
        counts = leak.password_counts() if isinstance(leak, LeakDataset) else dict(leak)
        candidates = sorted(counts, key=lambda w: (-counts[w], w))
        if tail_samples:
            candidates += estimator.sample(tail_samples, seed)
        return cls(candidates, lambda u, w: estimator.estimate(w), q, targeted)

    # === Guessing ===

    def ranked(self, u: str) -> List[str]:
        """Every candidate, weight descending, ties lexicographic."""
        found = self._ranked.get(u)
        if found is None:
            found = sorted(self.candidates, key=lambda w: (-self.weight(u, w), w))
            self._ranked[u] = found
        return found

    def guesses(self, u: str) -> List[str]:
        """The q guesses without bucket information."""
        first = list(self.targeted(u)) if self.targeted else []
        return _dedupe(first + self.ranked(u))[: self.q]


def attack_candidates(attacker: AttackerModel, u: str, b: int, bucketizer: Bucketizer) -> List[str]:
    """
    The attacker's q guesses for user u after seeing bucket b.

    Candidates are restricted to {w : b in buckets(u, w)} and ordered by
    weight(u, w) / |buckets(u, w)| descending, ties lexicographic; the user's
    targeted guesses that fit the bucket come first.
    """
    cache = attacker._bucketed.setdefault(bucketizer, {})
    found = cache.get((u, b))
    if found is not None:
        return found

    def fits(w: str) -> bool:
        return b in bucketizer.buckets(u, w)

    in_bucket = [w for w in attacker.candidates if fits(w)]
    in_bucket.sort(key=lambda w: (-attacker.weight(u, w) / bucketizer.size(u, w), w))
    first = [w for w in attacker.targeted(u) if fits(w)] if attacker.targeted else []
    found = _dedupe(first + in_bucket)[: attacker.q]
    cache[(u, b)] = found
    return found
