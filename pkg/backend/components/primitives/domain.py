"""
Domain, hypothesis, sample and population primitives.

Points of a domain of size n are the indices 0..n-1. A hypothesis is stored
as an integer bit vector: bit x holds the label of point x.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from backend.components.distributions.finite import FiniteDistribution, make_rng
from backend.core.errors import DistributionError, StabilityLabError

MAX_DOMAIN_SIZE = 64

Pair = Tuple[int, int]


@dataclass(frozen=True)
class Domain:
    size: int

    def __post_init__(self):
        if not 1 <= self.size <= MAX_DOMAIN_SIZE:
            raise StabilityLabError(f"domain size must be in 1..{MAX_DOMAIN_SIZE}, got {self.size}")

    @property
    def points(self) -> range:
        return range(self.size)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def all_pairs(self) -> List[Pair]:
        """Every labeled example (x, y) in point-major order."""
        return [(x, y) for x in self.points for y in (0, 1)]


@dataclass(frozen=True, order=True)
class Hypothesis:
    bits: int
    size: int

    def __post_init__(self):
        if not 1 <= self.size <= MAX_DOMAIN_SIZE:
            raise StabilityLabError(f"hypothesis length must be in 1..{MAX_DOMAIN_SIZE}")
        if self.bits < 0 or self.bits >> self.size:
            raise StabilityLabError(f"bit vector {self.bits} does not fit {self.size} points")

    def __call__(self, x: int) -> int:
        return (self.bits >> x) & 1

    def label(self, x: int) -> int:
        return (self.bits >> x) & 1

    def agrees(self, mask: int, labels: int) -> bool:
        """True when the hypothesis matches ``labels`` on every point in ``mask``."""
        return (self.bits & mask) == labels

    def complement(self) -> "Hypothesis":
        return Hypothesis(self.bits ^ ((1 << self.size) - 1), self.size)

    def to_string(self) -> str:
        return "".join(str(self.label(x)) for x in range(self.size))

    @classmethod
    def from_string(cls, text: str) -> "Hypothesis":
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise StabilityLabError(f"not a 0/1 string: {text!r}")
        bits = sum(1 << x for x, ch in enumerate(text) if ch == "1")
        return cls(bits, len(text))

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Hypothesis":
        return cls(sum(1 << x for x, y in enumerate(labels) if y), len(labels))

    @classmethod
    def constant(cls, size: int, label: int) -> "Hypothesis":
        return cls((1 << size) - 1 if label else 0, size)

    def __str__(self) -> str:
        return self.to_string()


def all_functions(domain: Domain) -> Iterator[Hypothesis]:
    """Every function on the domain in bit-vector order."""
    for bits in range(1 << domain.size):
        yield Hypothesis(bits, domain.size)


@dataclass(frozen=True)
class HypothesisClass:
    domain: Domain
    members: Tuple[Hypothesis, ...]
    name: str = "custom"
    _member_set: FrozenSet[Hypothesis] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise StabilityLabError("hypothesis class must be nonempty")
        if len(set(members)) != len(members):
            raise StabilityLabError("hypothesis class has duplicate members")
        if any(h.size != self.domain.size for h in members):
            raise StabilityLabError("member length does not match the domain size")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "_member_set", frozenset(members))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[Hypothesis]:
        return iter(self.members)

    def __contains__(self, h: Hypothesis) -> bool:
        return h in self._member_set

    def bit_rows(self) -> Tuple[int, ...]:
        return tuple(h.bits for h in self.members)

    def label_matrix(self) -> np.ndarray:
        """Boolean matrix with rows = members and columns = points."""
        return np.array([[h.label(x) for x in self.domain.points] for h in self.members], dtype=np.int8)

    def restrict(self, x: int, y: int) -> "HypothesisClass":
        kept = tuple(h for h in self.members if h.label(x) == y)
        return HypothesisClass(self.domain, kept, f"{self.name}|x{x}={y}")

    # Builtins

    @classmethod
    def thresholds(cls, n: int) -> "HypothesisClass":
        """{1[x > k] : k = 1..n} over points 1..n; point p of the domain is the number p + 1."""
        domain = Domain(n)
        members = tuple(Hypothesis(sum(1 << p for p in range(n) if p + 1 > k), n) for k in range(1, n + 1))
        return cls(domain, members, f"thresholds:{n}")

    @classmethod
    def full(cls, n: int) -> "HypothesisClass":
        domain = Domain(n)
        return cls(domain, tuple(all_functions(domain)), f"full:{n}")

    @classmethod
    def singletons(cls, n: int) -> "HypothesisClass":
        return cls(Domain(n), tuple(Hypothesis(1 << i, n) for i in range(n)), f"singletons:{n}")

    @classmethod
    def points(cls, n: int) -> "HypothesisClass":
        members = (Hypothesis(0, n),) + tuple(Hypothesis(1 << i, n) for i in range(n))
        return cls(Domain(n), members, f"points:{n}")

    @classmethod
    def from_lines(cls, lines: Iterable[str], name: str = "file") -> "HypothesisClass":
        rows = [Hypothesis.from_string(line) for line in lines if line.strip() and not line.startswith("#")]
        if not rows:
            raise StabilityLabError("class file has no hypotheses")
        return cls(Domain(rows[0].size), tuple(rows), name)

    def to_lines(self) -> List[str]:
        return [h.to_string() for h in self.members]


BUILTIN_CLASSES = {
    "thresholds": HypothesisClass.thresholds,
    "full": HypothesisClass.full,
    "singletons": HypothesisClass.singletons,
    "points": HypothesisClass.points,
}


def parse_class_spec(spec: str) -> HypothesisClass:
    """``thresholds:8`` style builtin, or ``file:path`` / a plain path to a 0/1 class file."""
    kind, _, arg = spec.partition(":")
    if kind in BUILTIN_CLASSES:
        try:
            n = int(arg)
        except ValueError:
            raise StabilityLabError(f"class spec {spec!r} needs an integer size") from None
        return BUILTIN_CLASSES[kind](n)
    path = arg if kind == "file" else spec
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return HypothesisClass.from_lines(handle, name=f"file:{path}")
    except OSError as e:
        raise StabilityLabError(f"cannot read class file {path!r}: {e}") from e


@dataclass(frozen=True)
class LabeledSample:
    domain: Domain
    pairs: Tuple[Pair, ...] = ()

    def __post_init__(self):
        pairs = tuple((int(x), int(y)) for x, y in self.pairs)
        for x, y in pairs:
            if not 0 <= x < self.domain.size:
                raise StabilityLabError(f"point {x} outside domain of size {self.domain.size}")
            if y not in (0, 1):
                raise StabilityLabError(f"label {y} is not binary")
        object.__setattr__(self, "pairs", pairs)

    @property
    def m(self) -> int:
        return len(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[Pair]:
        return iter(self.pairs)

    def distinct(self) -> frozenset:
        """Set view; consistency depends only on the distinct pairs."""
        return frozenset(self.pairs)

    def is_contradictory(self) -> bool:
        seen: Dict[int, int] = {}
        for x, y in self.pairs:
            if seen.setdefault(x, y) != y:
                return True
        return False

    def pattern(self) -> Optional[Tuple[int, int]]:
        """(mask, labels) of the fixed points, or None when the sample contradicts itself."""
        if self.is_contradictory():
            return None
        mask = labels = 0
        for x, y in self.pairs:
            mask |= 1 << x
            labels |= y << x
        return mask, labels

    def replace(self, index: int, pair: Pair) -> "LabeledSample":
        """Neighbouring sample differing in the example at ``index``."""
        pairs = list(self.pairs)
        pairs[index] = pair
        return LabeledSample(self.domain, tuple(pairs))

    def extend(self, pairs: Iterable[Pair]) -> "LabeledSample":
        return LabeledSample(self.domain, self.pairs + tuple(pairs))

    def __str__(self) -> str:
        return "{" + ",".join(f"({x},{y})" for x, y in self.pairs) + "}"


@dataclass(frozen=True)
class PopulationDistribution:
    """Distribution over labeled examples (x, y) of a domain."""
    domain: Domain
    weights: FiniteDistribution

    def __post_init__(self):
        for atom in self.weights.atoms:
            if not (isinstance(atom, tuple) and len(atom) == 2):
                raise DistributionError(f"population atom {atom!r} is not an (x, y) pair")
            x, y = atom
            if not 0 <= x < self.domain.size or y not in (0, 1):
                raise DistributionError(f"population atom {atom!r} outside the domain")

    @classmethod
    def from_mapping(cls, domain: Domain, mapping: Dict[Pair, object]) -> "PopulationDistribution":
        return cls(domain, FiniteDistribution.from_mapping(mapping))

    @classmethod
    def uniform_over(cls, domain: Domain, pairs: Sequence[Pair]) -> "PopulationDistribution":
        return cls(domain, FiniteDistribution.uniform(tuple(dict.fromkeys(pairs))))

    @classmethod
    def realizable_uniform(cls, target: Hypothesis, points: Optional[Sequence[int]] = None) -> "PopulationDistribution":
        """Uniform marginal over ``points`` (default: all) labeled by the target."""
        domain = Domain(target.size)
        points = list(domain.points) if points is None else list(points)
        return cls.uniform_over(domain, [(x, target.label(x)) for x in points])

    def mass(self, x: int, y: int):
        return self.weights.mass((x, y))

    def support(self) -> Tuple[Pair, ...]:
        return self.weights.support()

    def draw(self, m: int, seed=None) -> LabeledSample:
        """m i.i.d. examples."""
        rng = make_rng(seed)
        return LabeledSample(self.domain, tuple(self.weights.sample_many(m, rng)))

    def sample_distribution(self, m: int) -> FiniteDistribution:
        """Exact law of an ordered sample of size m (atoms are pair tuples)."""
        support = [(a, p) for a, p in self.weights.items() if p > 0]
        atoms, probs = [], []
        for combo in product(support, repeat=m):
            atoms.append(tuple(a for a, _ in combo))
            prob = Fraction(1) if self.weights.is_exact else 1.0
            for _, p in combo:
                prob *= p
            probs.append(prob)
        return FiniteDistribution(tuple(atoms), tuple(probs))
