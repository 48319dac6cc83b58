"""
Security-loss bound checks on exact worlds.

- hpb: adv_bucket(q) <= adv_guess(q * |B|)
- idb: adv_bucket(q) == adv_guess(q)
- fsb, q <= q_bar, exact estimator: adv_bucket(q) == adv_guess(q)
- fsb, q > q_bar, exact estimator:
    upper  loss <= (q - q_bar) * p(w_qbar) - (lambda_q - lambda_qbar)
    lower  adv_bucket(q) >= (lambda_q + lambda_qbar) / 2

lambda_q is adv_guess(q) and w_qbar the q_bar-th likeliest password. The
stronger lower form (lambda_q - lambda_qbar) / 2 <= loss fails whenever no
tail password is split across buckets (|B| = 1 gives loss 0); it is
reported but not asserted. Every scheme also asserts loss >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Union

from ..enums import Scheme
from ..errors import ConfigurationError, TheoremViolation
from .bucketizers import Bucketizer, make_bucketizer
from .games import adv_bucket, adv_guess
from .world import ExactDistribution, SyntheticWorld


TOLERANCE = 1e-12


@dataclass(frozen=True)
class BoundCheck:
    """One inequality: holds when lhs <= rhs (or |lhs - rhs| <= tol for equalities)."""
    name: str
    lhs: float
    rhs: float
    holds: bool
    asserted: bool = True
    note: str = ""

    def line(self) -> str:
        verdict = "ok" if self.holds else "FAILED"
        if not self.asserted:
            verdict += " (not asserted)"
        text = f"  {self.name:<22} {self.lhs:.12g} vs {self.rhs:.12g}  {verdict}"
        return f"{text}  {self.note}" if self.note else text


@dataclass
class TheoremReport:
    """Advantages, loss and every bound evaluated for one configuration."""
    scheme: Scheme
    q: int
    q_bar: Optional[int]
    num_buckets: int
    adv_guess: float
    adv_bucket: float
    checks: List[BoundCheck] = field(default_factory=list)
    world_shape: str = ""

    @property
    def delta(self) -> float:
        return self.adv_bucket - self.adv_guess

    @property
    def passed(self) -> bool:
        return all(c.holds for c in self.checks if c.asserted)

    def failures(self) -> List[BoundCheck]:
        return [c for c in self.checks if c.asserted and not c.holds]

    def verdict(self) -> str:
        return "pass" if self.passed else "FAIL"

    def dump(self) -> str:
        lines = [
            f"{self.scheme.value} q={self.q} q_bar={self.q_bar} |B|={self.num_buckets} world={self.world_shape}",
            f"  adv_guess={self.adv_guess:.12g} adv_bucket={self.adv_bucket:.12g} loss={self.delta:.12g}",
        ]
        lines.extend(c.line() for c in self.checks)
        return "\n".join(lines)


def _leq(name: str, lhs: float, rhs: float, asserted: bool = True, note: str = "") -> BoundCheck:
    return BoundCheck(name, lhs, rhs, lhs <= rhs + TOLERANCE, asserted, note)


def _eq(name: str, lhs: float, rhs: float, asserted: bool = True, note: str = "") -> BoundCheck:
    return BoundCheck(name, lhs, rhs, abs(lhs - rhs) <= TOLERANCE, asserted, note)


def _is_exact(estimator, world: SyntheticWorld) -> bool:
    if not isinstance(estimator, ExactDistribution):
        return False
    marginal = world.password_marginal
    return all(
        abs(estimator.estimate(w) - float(marginal[j])) <= TOLERANCE
        for j, w in enumerate(world.passwords)
    ) and len(estimator) == len(world.passwords)


def theorem_check(
    world: SyntheticWorld,
    scheme: Union[Scheme, str],
    q: int,
    q_bar: Optional[int] = None,
    bits: Optional[int] = None,
    num_buckets: Optional[int] = None,
    estimator=None,
    bucketizer: Optional[Bucketizer] = None,
    strict: bool = True,
) -> TheoremReport:
    """
    Evaluate the scheme's bounds on `world`.

    Beyond q_bar the FSB lower bound is enforced in its derived form,
    adv_bucket >= (lambda_q + lambda_qbar) / 2, which follows from a
    non-negative loss. The literal form (lambda_q - lambda_qbar) / 2 <= loss
    is reported as "fsb lower (literal)" and never asserted; it fails
    whenever the bucket id carries no information, as with |B| = 1.

    Args:
        scheme: hpb, idb or fsb
        q: attacker budget
        q_bar: FSB design budget
        bits: HPB/IDB bucket-id bits
        num_buckets: FSB |B|
        estimator: FSB estimator; the world's exact marginal when None.
            Equality is only asserted when it matches the world exactly.
        bucketizer: overrides the one built from the parameters
        strict: raise TheoremViolation on a failed asserted check

    Raises:
        TheoremViolation: strict and an asserted check failed
    """
    scheme = Scheme.parse(scheme)
    if estimator is None:
        estimator = world.distribution()
    if bucketizer is None:
        bucketizer = make_bucketizer(scheme, bits=bits, num_buckets=num_buckets, q_bar=q_bar, estimator=estimator)

    guess = adv_guess(world, q)
    bucket = adv_bucket(world, bucketizer, q)
    report = TheoremReport(
        scheme, q, q_bar, bucketizer.num_buckets, guess, bucket,
        world_shape=f"{len(world.users)}x{len(world.passwords)}",
    )
    report.checks.append(_leq("loss >= 0", guess, bucket))

    if scheme is Scheme.HPB:
        report.checks.append(_leq("hpb upper", bucket, adv_guess(world, q * bucketizer.num_buckets)))
    elif scheme is Scheme.IDB:
        report.checks.append(_eq("idb equality", bucket, guess))
    else:
        if q_bar is None:
            raise ConfigurationError("fsb bound checks need q_bar")
        exact = _is_exact(estimator, world) and world.is_independent
        note = "" if exact else "estimator differs from the world"
        if q <= q_bar:
            report.checks.append(_eq("fsb equality", bucket, guess, asserted=exact, note=note))
        else:
            lam_q, lam_qbar = guess, adv_guess(world, q_bar)
            p_qbar = estimator.estimate(estimator.top_q(q_bar)[-1])
            loss = bucket - guess
            report.checks.append(_leq(
                "fsb upper", loss, (q - q_bar) * p_qbar - (lam_q - lam_qbar), asserted=exact, note=note,
            ))
            report.checks.append(_leq("fsb lower", (lam_q + lam_qbar) / 2.0, bucket, asserted=exact, note=note))
            report.checks.append(_leq(
                "fsb lower (literal)", (lam_q - lam_qbar) / 2.0, loss, asserted=False,
                note="informational",
            ))

    if strict and not report.passed:
        raise TheoremViolation(report)
    return report
