"""
Finite credential worlds with an explicit joint distribution.

A SyntheticWorld is small enough that every advantage can be computed
exactly by enumeration; joint[i, j] is the probability that user i picks
password j.
"""

from __future__ import annotations

import json
import logging
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigurationError, WorldTooLargeError

logger = logging.getLogger(__name__)


MAX_EXACT_STATES = 10 ** 6
SUM_TOLERANCE = 1e-9
_PASSWORD_CHARS = string.ascii_lowercase + string.digits


class ExactDistribution:
    """
    A password distribution known exactly; stands in for the estimator when
    the attacker or the FSB server knows p.
    """

    def __init__(self, probabilities: Mapping[str, float]):
        self.probabilities = {w: float(p) for w, p in probabilities.items()}
        self._ranked = sorted(self.probabilities, key=lambda w: (-self.probabilities[w], w))

    def estimate(self, password: str) -> float:
        return self.probabilities.get(password, 0.0)

    def top_q(self, q: int, domain: Optional[Iterable[str]] = None) -> List[str]:
        """The q likeliest passwords, ties lexicographic; all of them when q exceeds the universe."""
        if q < 0:
            raise ValueError(f"q must be >= 0, got {q}")
        if domain is None:
            return self._ranked[:q]
        candidates = set(domain) | set(self.probabilities)
        return sorted(candidates, key=lambda w: (-self.estimate(w), w))[:q]

    def __len__(self) -> int:
        return len(self.probabilities)


@dataclass
class SyntheticWorld:
    """
    Users x passwords with a joint distribution and a designated leak.

    Attributes:
        users: user names, row order of `joint`
        passwords: password universe, column order of `joint`
        joint: nonnegative matrix summing to 1
        leaked: (user, password) pairs in the leak
    """
    users: Tuple[str, ...]
    passwords: Tuple[str, ...]
    joint: np.ndarray = field(repr=False)
    leaked: FrozenSet[Tuple[str, str]] = frozenset()

    def __post_init__(self):
        self.users = tuple(self.users)
        self.passwords = tuple(self.passwords)
        self.joint = np.asarray(self.joint, dtype=np.float64)
        self.leaked = frozenset((u, w) for u, w in self.leaked)
        if len(set(self.users)) != len(self.users) or len(set(self.passwords)) != len(self.passwords):
            raise ValueError("users and passwords must be unique")
        if self.joint.shape != (len(self.users), len(self.passwords)):
            raise ValueError(
                f"joint shape {self.joint.shape} does not match {len(self.users)} users x {len(self.passwords)} passwords"
            )
        if (self.joint < 0).any():
            raise ValueError("joint probabilities must be nonnegative")
        total = float(self.joint.sum())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"joint probabilities must sum to 1, got {total!r}")
        self._user_index = {u: i for i, u in enumerate(self.users)}
        self._password_index = {w: j for j, w in enumerate(self.passwords)}
        for u, w in self.leaked:
            if u not in self._user_index or w not in self._password_index:
                raise ValueError(f"leaked pair outside the world: {(u, w)!r}")

    # === Construction ===

    @classmethod
    def independent(
        cls,
        users: Sequence[str],
        passwords: Sequence[str],
        p_user: Sequence[float],
        p_password: Sequence[float],
        leaked: Iterable[Tuple[str, str]] = (),
    ) -> "SyntheticWorld":
        """p(u, w) = p(u) * p(w)."""
        pu = np.asarray(p_user, dtype=np.float64)
        pw = np.asarray(p_password, dtype=np.float64)
        return cls(tuple(users), tuple(passwords), np.outer(pu / pu.sum(), pw / pw.sum()), frozenset(leaked))

    @classmethod
    def from_password_distribution(cls, probabilities: Mapping[str, float], user: str = "user") -> "SyntheticWorld":
        """Single-user world over a password distribution."""
        passwords = tuple(probabilities)
        return cls.independent((user,), passwords, [1.0], [probabilities[w] for w in passwords])

    @classmethod
    def random(
        cls,
        num_passwords: int,
        num_users: int = 4,
        seed: Optional[int] = None,
        independent: bool = True,
        skew: float = 1.0,
        leak_fraction: float = 0.3,
    ) -> "SyntheticWorld":
        """
        Random world with Zipf-like password popularity.

        Args:
            num_passwords: universe size
            num_users: user count
            seed: RNG seed
            independent: joint = p(u) p(w); otherwise every user has their
                own Dirichlet-perturbed password preferences
            skew: Zipf exponent of password popularity
            leak_fraction: share of users with one leaked credential
        """
        if num_passwords < 1 or num_users < 1:
            raise ValueError(f"world needs >= 1 user and password, got {num_users}, {num_passwords}")
        rng = np.random.default_rng(seed)
        passwords: List[str] = []
        seen = set()
        while len(passwords) < num_passwords:
            length = int(rng.integers(3, 11))
            w = "".join(rng.choice(list(_PASSWORD_CHARS), size=length))
            if w not in seen:
                seen.add(w)
                passwords.append(w)
        users = [f"user{i:03d}" for i in range(num_users)]

        ranks = np.arange(1, num_passwords + 1, dtype=np.float64)
        pw = rng.uniform(0.5, 1.5, size=num_passwords) / ranks ** skew
        pw /= pw.sum()
        pu = rng.dirichlet(np.ones(num_users))
        if independent:
            joint = np.outer(pu, pw)
        else:
            rows = np.vstack([rng.dirichlet(pw * num_passwords + 0.1) for _ in range(num_users)])
            joint = pu[:, None] * rows
        joint /= joint.sum()

        leaked = set()
        for i, u in enumerate(users):
            if rng.random() < leak_fraction:
                row = joint[i] / joint[i].sum()
                leaked.add((u, passwords[int(rng.choice(num_passwords, p=row))]))
        return cls(tuple(users), tuple(passwords), joint, frozenset(leaked))

    # === Queries ===

    @property
    def states(self) -> int:
        return len(self.users) * len(self.passwords)

    def require_exact(self) -> None:
        """Raise WorldTooLargeError beyond MAX_EXACT_STATES."""
        if self.states > MAX_EXACT_STATES:
            raise WorldTooLargeError(
                f"{len(self.users)} x {len(self.passwords)} world exceeds {MAX_EXACT_STATES} states"
            )

    @property
    def user_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    @property
    def password_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=0)

    @property
    def is_independent(self) -> bool:
        return bool(np.allclose(self.joint, np.outer(self.user_marginal, self.password_marginal), rtol=0, atol=1e-12))

    def user_index(self, u: str) -> int:
        return self._user_index[u]

    def password_index(self, w: str) -> int:
        return self._password_index[w]

    def prob(self, u: str, w: str) -> float:
        j = self._password_index.get(w)
        return 0.0 if j is None else float(self.joint[self._user_index[u], j])

    def password_prob(self, w: str) -> float:
        j = self._password_index.get(w)
        return 0.0 if j is None else float(self.password_marginal[j])

    def distribution(self) -> ExactDistribution:
        """Exact password marginal, usable wherever an estimator is."""
        marginal = self.password_marginal
        return ExactDistribution({w: float(marginal[j]) for j, w in enumerate(self.passwords)})

    @property
    def compromised(self) -> FrozenSet[str]:
        return frozenset(u for u, _ in self.leaked)

    @property
    def leaked_passwords(self) -> FrozenSet[str]:
        return frozenset(w for _, w in self.leaked)

    def leaked_for(self, u: str) -> List[str]:
        """The user's leaked passwords, likeliest first."""
        own = [w for v, w in self.leaked if v == u]
        return sorted(own, key=lambda w: (-self.password_prob(w), w))

    def with_joint(self, joint: np.ndarray) -> "SyntheticWorld":
        """Same universe and leak under another joint distribution."""
        return SyntheticWorld(self.users, self.passwords, joint, self.leaked)

    # === Persistence ===

    def to_dict(self) -> Dict[str, object]:
        return {
            "users": list(self.users),
            "passwords": list(self.passwords),
            "joint": self.joint.tolist(),
            "leaked": sorted([u, w] for u, w in self.leaked),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "SyntheticWorld":
        """
        Accepts either an explicit "joint" matrix or independent
        "p_user"/"p_password" vectors.
        """
        try:
            users = data["users"]
            passwords = data["passwords"]
            leaked = [tuple(pair) for pair in data.get("leaked", [])]
            if "joint" in data:
                return cls(tuple(users), tuple(passwords), np.asarray(data["joint"]), frozenset(leaked))
            return cls.independent(users, passwords, data["p_user"], data["p_password"], leaked)
        except (KeyError, TypeError) as e:
            raise ConfigurationError(f"malformed world: missing or bad field {e}") from None
        except ValueError as e:
            raise ConfigurationError(f"malformed world: {e}") from None

    def to_file(self, path: Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1), encoding="utf-8")

    @classmethod
    def from_file(cls, path: Path) -> "SyntheticWorld":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"world file {path} is not JSON: {e}") from None
        world = cls.from_dict(data)
        logger.info("loaded %d x %d world from %s", len(world.users), len(world.passwords), path)
        return world
