"""
Password-composition policies.

A policy restricts what users may pick; the server keeps storing every
leaked password. Policy files are INI:

    [policy]
    min_length = 8
    banned = password, 123456, qwerty
    banned_file = banned.txt      ; optional, one password per line
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, Iterable

import numpy as np

from ..errors import ConfigurationError, EmptyInputError
from .world import SyntheticWorld


@dataclass(frozen=True)
class PasswordPolicy:
    min_length: int = 0
    banned: FrozenSet[str] = frozenset()

    def __post_init__(self):
        if self.min_length < 0:
            raise ValueError(f"min_length must be >= 0, got {self.min_length}")
        object.__setattr__(self, "banned", frozenset(self.banned))

    def admits(self, password: str) -> bool:
        return len(password) >= self.min_length and password not in self.banned

    @classmethod
    def from_file(cls, path: Path) -> "PasswordPolicy":
        path = Path(path)
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        if not parser.read(path, encoding="utf-8") or not parser.has_section("policy"):
            raise ConfigurationError(f"{path} has no [policy] section")
        section = parser["policy"]
        try:
            min_length = section.getint("min_length", fallback=0)
        except ValueError:
            raise ConfigurationError(f"min_length must be an integer in {path}") from None
        banned = {w.strip() for w in section.get("banned", "").split(",") if w.strip()}
        banned_file = section.get("banned_file", "").strip()
        if banned_file:
            listed = Path(banned_file)
            if not listed.is_absolute():
                listed = path.parent / listed
            banned.update(_read_banned(listed))
        return cls(min_length, frozenset(banned))


def _read_banned(path: Path) -> Iterable[str]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read banned list {path}: {e}") from None
    return [line.strip() for line in text.splitlines() if line.strip()]


def policy_filter(world: SyntheticWorld, policy: PasswordPolicy) -> SyntheticWorld:
    """
    The world users live in under the policy: non-conforming passwords get
    probability 0 and the rest is renormalized. Universe and leak stay.

    Raises:
        EmptyInputError: no password with positive probability conforms
    """
    mask = np.array([policy.admits(w) for w in world.passwords], dtype=bool)
    joint = world.joint * mask
    total = float(joint.sum())
    if total <= 0:
        raise EmptyInputError("no password conforms to the policy")
    return world.with_joint(joint / total)
