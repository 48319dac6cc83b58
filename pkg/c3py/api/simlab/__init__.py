"""
c3py.api.simlab - security evaluation of the bucketization schemes.

Exact advantages on small worlds, Monte-Carlo games, bound checks, the
password-policy experiment and the correlated two-query attack:

    from c3py.api.simlab import SyntheticWorld, make_bucketizer, theorem_check
    world = SyntheticWorld.random(20, seed=1)
    report = theorem_check(world, "fsb", q=5, q_bar=3, num_buckets=16)
"""

from .world import ExactDistribution, SyntheticWorld, MAX_EXACT_STATES
from .bucketizers import (
    Bucketizer,
    HpbBucketizer,
    IdbBucketizer,
    FsbBucketizer,
    SingleBucketizer,
    make_bucketizer,
)
from .attacker import AttackerModel, attack_candidates
from .games import GameResult, adv_guess, adv_bucket, security_loss, attack_success, run_game
from .theorems import BoundCheck, TheoremReport, theorem_check
from .correlated import (
    CorrelatedModel,
    IdentityKernel,
    UniformKernel,
    TweakKernel,
    CorrelatedResult,
    correlated_attack,
    run_correlated_game,
    tweak_neighbours,
)
from .policy import PasswordPolicy, policy_filter

__all__ = [
    # World
    "ExactDistribution",
    "SyntheticWorld",
    "MAX_EXACT_STATES",
    # Bucketizers
    "Bucketizer",
    "HpbBucketizer",
    "IdbBucketizer",
    "FsbBucketizer",
    "SingleBucketizer",
    "make_bucketizer",
    # Attack
    "AttackerModel",
    "attack_candidates",
    # Games
    "GameResult",
    "adv_guess",
    "adv_bucket",
    "security_loss",
    "attack_success",
    "run_game",
    # Bounds
    "BoundCheck",
    "TheoremReport",
    "theorem_check",
    # Correlated queries
    "CorrelatedModel",
    "IdentityKernel",
    "UniformKernel",
    "TweakKernel",
    "CorrelatedResult",
    "correlated_attack",
    "run_correlated_game",
    "tweak_neighbours",
    # Policy
    "PasswordPolicy",
    "policy_filter",
]
