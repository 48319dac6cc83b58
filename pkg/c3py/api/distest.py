"""
Password distribution estimator.

A histogram over the t most frequent leaked passwords supplies exact head
probabilities; a smoothed character 3-gram model, rescaled so that head and
tail together carry unit mass, covers every other string.
"""

from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .._io.estimator import EstimatorFile, EstimatorSections
from .core import PRINTABLE_MAX, PRINTABLE_MIN, LeakDataset
from .errors import ConfigurationError, EmptyInputError

logger = logging.getLogger(__name__)


# =============================================================================
# Constants
# =============================================================================

START = "\x02"
END = "\x03"
ALPHABET = "".join(chr(c) for c in range(PRINTABLE_MIN, PRINTABLE_MAX + 1))
NGRAM_ORDER = 3
DEFAULT_SMOOTHING = 0.01
DEFAULT_HEAD_SIZE = 1_000_000
MAX_SAMPLE_LENGTH = 64
PROBABILITY_FLOOR = 1e-9        # keeps out-of-alphabet and fully covered tails positive


# =============================================================================
# Histogram
# =============================================================================

@dataclass(frozen=True)
class HistogramModel:
    """
    Exact frequencies of the most common passwords.

    Attributes:
        counts: (password, count) pairs, count descending then lexicographic
        total: raw corpus size including multiplicity
        t: requested head size
    """
    counts: Tuple[Tuple[str, int], ...]
    total: int
    t: int
    _index: Dict[str, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.total < 1:
            raise ValueError(f"total must be >= 1, got {self.total}")
        if len(self.counts) > self.t:
            raise ValueError(f"{len(self.counts)} entries exceed head size {self.t}")
        object.__setattr__(
            self, "_index", {w: c / self.total for w, c in self.counts}
        )

    @property
    def entries(self) -> List[Tuple[str, float]]:
        """(password, probability), descending."""
        return [(w, c / self.total) for w, c in self.counts]

    @property
    def passwords(self) -> List[str]:
        return [w for w, _ in self.counts]

    @property
    def head_mass(self) -> float:
        return sum(c for _, c in self.counts) / self.total

    def prob(self, password: str) -> Optional[float]:
        """Head probability, or None outside the head."""
        return self._index.get(password)

    def __contains__(self, password: str) -> bool:
        return password in self._index

    def __len__(self) -> int:
        return len(self.counts)


def train_histogram(
    dataset: Union[LeakDataset, Mapping[str, int]],
    t: int,
) -> HistogramModel:
    """
    Top-t passwords by corpus count.

    Args:
        dataset: leak with multiplicities, or a password -> count mapping
        t: head size (>= 1)

    Raises:
        EmptyInputError: empty dataset
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    counts = dataset.password_counts() if isinstance(dataset, LeakDataset) else dict(dataset)
    if not counts:
        raise EmptyInputError("cannot train a histogram on an empty dataset")
    ranked = sorted(counts.items(), key=lambda wc: (-wc[1], wc[0]))[:t]
    return HistogramModel(tuple(ranked), sum(counts.values()), t)


# =============================================================================
# N-gram Model
# =============================================================================

class NGramModel:
    """
    Additively smoothed character n-gram model over ALPHABET plus END.

    Contexts are the previous n-1 symbols, padded with START.
    """

    def __init__(
        self,
        counts: Mapping[str, Mapping[str, int]],
        smoothing: float = DEFAULT_SMOOTHING,
        n: int = NGRAM_ORDER,
        alphabet: str = ALPHABET,
    ):
        if smoothing < 0:
            raise ValueError(f"smoothing must be >= 0, got {smoothing}")
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        self.n = n
        self.smoothing = smoothing
        self.alphabet = alphabet
        self.symbols = alphabet + END
        self._symbol_index = {s: i for i, s in enumerate(self.symbols)}
        self.counts: Dict[str, Dict[str, int]] = {}
        for ctx, nxt in counts.items():
            kept = {s: c for s, c in nxt.items() if s in self._symbol_index}
            if kept:
                self.counts[ctx] = kept
        self._totals = {ctx: sum(nxt.values()) for ctx, nxt in self.counts.items()}
        self._cdf_cache: Dict[str, np.ndarray] = {}

    @property
    def vocabulary_size(self) -> int:
        return len(self.symbols)

    def contexts(self, password: str):
        """Yield (context, next symbol) for each step including END."""
        padded = START * (self.n - 1) + password + END
        for i in range(self.n - 1, len(padded)):
            yield padded[i - self.n + 1:i], padded[i]

    def conditional(self, context: str, symbol: str) -> float:
        """P(symbol | context)."""
        total = self._totals.get(context, 0)
        s = self.smoothing
        V = self.vocabulary_size
        if symbol not in self._symbol_index:
            floor = max(s, PROBABILITY_FLOOR)
            return floor / (total + s * V + floor)
        if total == 0 and s == 0:
            return 1.0 / V
        count = self.counts.get(context, {}).get(symbol, 0)
        return (count + s) / (total + s * V)

    def distribution(self, context: str) -> np.ndarray:
        """Conditional probabilities over `symbols` for a context."""
        total = self._totals.get(context, 0)
        s = self.smoothing
        V = self.vocabulary_size
        if total == 0 and s == 0:
            return np.full(V, 1.0 / V)
        dist = np.full(V, s, dtype=np.float64)
        for symbol, count in self.counts.get(context, {}).items():
            dist[self._symbol_index[symbol]] += count
        return dist / (total + s * V)

    def logprob(self, password: str) -> float:
        """Natural log of the string probability; -inf when zero."""
        total = 0.0
        for context, symbol in self.contexts(password):
            p = self.conditional(context, symbol)
            if p <= 0.0:
                return -math.inf
            total += math.log(p)
        return total

    def prob(self, password: str) -> float:
        return math.exp(self.logprob(password))

    def sample_one(self, rng: np.random.Generator) -> str:
        """Ancestral draw, truncated at MAX_SAMPLE_LENGTH characters."""
        context = START * (self.n - 1)
        out: List[str] = []
        while len(out) < MAX_SAMPLE_LENGTH:
            cdf = self._cdf_cache.get(context)
            if cdf is None:
                cdf = np.cumsum(self.distribution(context))
                self._cdf_cache[context] = cdf
            index = int(np.searchsorted(cdf, rng.random(), side="right"))
            symbol = self.symbols[min(index, len(self.symbols) - 1)]
            if symbol == END:
                break
            out.append(symbol)
            context = (context + symbol)[1:] if self.n > 1 else ""
        return "".join(out)


def train_ngram(
    passwords: Union[Iterable[str], Mapping[str, int]],
    smoothing: float = DEFAULT_SMOOTHING,
    n: int = NGRAM_ORDER,
    alphabet: str = ALPHABET,
) -> NGramModel:
    """
    Count context transitions over a corpus.

    Passwords with a character outside `alphabet` are skipped, so every
    counted transition is one the model assigns probability to.

    Args:
        passwords: iterable of strings, or password -> multiplicity mapping
        smoothing: additive constant
        n: order (3 by default)
        alphabet: modelled characters

    Raises:
        EmptyInputError: empty corpus
    """
    weighted = passwords.items() if isinstance(passwords, Mapping) else ((w, 1) for w in passwords)
    model_counts: Dict[str, Counter] = defaultdict(Counter)
    seen = skipped = 0
    modelled = frozenset(alphabet)
    template = NGramModel({}, smoothing, n, alphabet)
    for password, weight in weighted:
        seen += 1
        if not modelled.issuperset(password):
            skipped += 1
            continue
        for context, symbol in template.contexts(password):
            model_counts[context][symbol] += weight
    if not seen:
        raise EmptyInputError("cannot train an n-gram model on an empty corpus")
    if skipped:
        logger.info("n-gram training skipped %d passwords with unmodelled characters", skipped)
    logger.debug("trained %d-gram model over %d passwords, %d contexts", n, seen - skipped, len(model_counts))
    return NGramModel(model_counts, smoothing, n, alphabet)


# =============================================================================
# Hybrid Estimator
# =============================================================================

class HybridEstimator:
    """
    Histogram head plus rescaled n-gram tail.

    estimate(w) is the head probability for head passwords and
    tail_scale * P_ngram(w) otherwise, where
    tail_scale = (1 - head mass) / (1 - n-gram mass of the head).
    Both numerator and denominator are floored at PROBABILITY_FLOOR so the
    tail stays strictly positive when the head covers the whole corpus.
    """

    def __init__(self, histogram: HistogramModel, ngram: NGramModel):
        self.histogram = histogram
        self.ngram = ngram
        self.ngram_head_mass = sum(ngram.prob(w) for w in histogram.passwords)
        numerator = max(1.0 - histogram.head_mass, PROBABILITY_FLOOR)
        denominator = max(1.0 - self.ngram_head_mass, PROBABILITY_FLOOR)
        self.tail_scale = numerator / denominator
        self._file: Optional[EstimatorFile] = None

    @property
    def head_mass(self) -> float:
        return self.histogram.head_mass

    @property
    def t(self) -> int:
        return self.histogram.t

    def estimate(self, password: str) -> float:
        head = self.histogram.prob(password)
        if head is not None:
            return head
        return self.tail_scale * self.ngram.prob(password)

    def top_q(self, q: int, domain: Optional[Iterable[str]] = None) -> List[str]:
        """
        The q most probable passwords, descending, ties lexicographic.

        Raises:
            ConfigurationError: q exceeds the head and no domain is given
        """
        if q < 0:
            raise ValueError(f"q must be >= 0, got {q}")
        head = self.histogram.passwords
        if domain is None:
            if q > len(head):
                raise ConfigurationError(
                    f"q={q} exceeds the {len(head)}-entry head; supply an enumeration domain"
                )
            return head[:q]
        candidates = set(domain) | set(head)
        ranked = sorted(candidates, key=lambda w: (-self.estimate(w), w))
        return ranked[:q]

    def sample(self, count: int, seed=None) -> List[str]:
        """i.i.d. draws from the n-gram tail model."""
        rng = np.random.default_rng(seed)
        return [self.ngram.sample_one(rng) for _ in range(count)]

    # === Artifact ===

    def _artifact(self) -> EstimatorFile:
        if self._file is None:
            sections = EstimatorSections(
                n=self.ngram.n,
                smoothing=self.ngram.smoothing,
                tail_scale=self.tail_scale,
                t=self.histogram.t,
                alphabet=self.ngram.alphabet,
                total=self.histogram.total,
                head=list(self.histogram.counts),
                contexts=self.ngram.counts,
            )
            self._file = EstimatorFile.build(sections)
        return self._file

    @property
    def digest(self) -> str:
        """Uppercase hex SHA-256 content digest of the serialized artifact."""
        return self._artifact().digest_hex

    def to_bytes(self) -> bytes:
        return self._artifact().write()

    @classmethod
    def from_bytes(cls, data: bytes) -> "HybridEstimator":
        """Decode an artifact; ArtifactError on bad magic, version or digest."""
        block = EstimatorFile.read(data)
        s = block.sections()
        histogram = HistogramModel(tuple(s.head), s.total, s.t)
        ngram = NGramModel(s.contexts, s.smoothing, s.n, s.alphabet)
        estimator = cls(histogram, ngram)
        estimator._file = block
        return estimator

    def save(self, path: Path) -> None:
        self._artifact().to_file(path)
        logger.info("saved estimator %s to %s", self.digest[:12], path)

    @classmethod
    def load(cls, path: Path) -> "HybridEstimator":
        return cls.from_bytes(Path(path).read_bytes())


def train_estimator(
    dataset: LeakDataset,
    t: int = DEFAULT_HEAD_SIZE,
    smoothing: float = DEFAULT_SMOOTHING,
) -> HybridEstimator:
    """Histogram and n-gram trained on the same raw password multiplicities."""
    counts = dataset.password_counts()
    return HybridEstimator(train_histogram(counts, t), train_ngram(counts, smoothing))


# =============================================================================
# Functional Interface
# =============================================================================

def estimate(e: HybridEstimator, w: str) -> float:
    """Estimated probability of w; strictly positive when smoothing > 0."""
    return e.estimate(w)


def sample(e: HybridEstimator, count: int, seed=None) -> List[str]:
    """Deterministic under a fixed seed."""
    return e.sample(count, seed)


def top_q(e: HybridEstimator, q: int, domain: Optional[Sequence[str]] = None) -> List[str]:
    return e.top_q(q, domain)
