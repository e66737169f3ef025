"""
Finite probability distributions.

A ``FiniteDistribution`` is an indexed atom list plus a probability vector.
Exact mode stores ``Fraction`` probabilities that sum to exactly one; float
mode stores floats within ``settings.normalization_tolerance`` of one.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from backend.core.errors import DistributionError
from backend.core.settings import settings

Prob = Union[Fraction, float]


def _to_prob(value: Any) -> Prob:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    return float(value)


def make_rng(seed: Union[int, np.random.Generator, None]) -> np.random.Generator:
    """Seeded numpy generator; a generator passes through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class FiniteDistribution:
    atoms: Tuple[Hashable, ...]
    probs: Tuple[Prob, ...]
    _index: Dict[Hashable, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        atoms = tuple(self.atoms)
        probs = tuple(_to_prob(p) for p in self.probs)
        if len(atoms) != len(probs):
            raise DistributionError(f"{len(atoms)} atoms but {len(probs)} probabilities")
        if not atoms:
            raise DistributionError("distribution needs at least one atom")
        index = {atom: i for i, atom in enumerate(atoms)}
        if len(index) != len(atoms):
            raise DistributionError("duplicate atoms")
        if any(p < 0 for p in probs):
            raise DistributionError("negative probability")

        exact = all(isinstance(p, Fraction) for p in probs)
        if not exact:
            probs = tuple(float(p) for p in probs)
            total = float(sum(probs))
            if abs(total - 1.0) > settings.normalization_tolerance * max(1, len(probs)):
                raise DistributionError(f"probabilities sum to {total!r}, not 1")
        elif sum(probs) != 1:
            raise DistributionError(f"probabilities sum to {sum(probs)}, not 1")

        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "_index", index)

    # Constructors

    @classmethod
    def from_weights(cls, atoms: Sequence[Hashable], weights: Sequence[Any]) -> "FiniteDistribution":
        """Normalize nonnegative weights (exact when every weight is rational)."""
        weights = [_to_prob(w) for w in weights]
        total = sum(weights)
        if total <= 0:
            raise DistributionError("weights have zero total mass")
        if all(isinstance(w, Fraction) for w in weights):
            return cls(tuple(atoms), tuple(w / total for w in weights))
        arr = np.asarray([float(w) for w in weights], dtype=float)
        return cls(tuple(atoms), tuple((arr / arr.sum()).tolist()))

    @classmethod
    def from_mapping(cls, mapping: Dict[Hashable, Any]) -> "FiniteDistribution":
        return cls(tuple(mapping.keys()), tuple(mapping.values()))

    @classmethod
    def uniform(cls, atoms: Sequence[Hashable]) -> "FiniteDistribution":
        atoms = tuple(atoms)
        return cls(atoms, tuple(Fraction(1, len(atoms)) for _ in atoms))

    @classmethod
    def point_mass(cls, atom: Hashable, atoms: Optional[Sequence[Hashable]] = None) -> "FiniteDistribution":
        atoms = tuple(atoms) if atoms is not None else (atom,)
        if atom not in atoms:
            raise DistributionError(f"point-mass atom {atom!r} not in the atom list")
        return cls(atoms, tuple(Fraction(1) if a == atom else Fraction(0) for a in atoms))

    # Queries

    @property
    def is_exact(self) -> bool:
        return all(isinstance(p, Fraction) for p in self.probs)

    @property
    def mode(self) -> str:
        return "exact" if self.is_exact else "float"

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, atom: Hashable) -> bool:
        return atom in self._index

    def mass(self, atom: Hashable) -> Prob:
        """Stored probability of an atom; atoms outside the list have mass zero."""
        i = self._index.get(atom)
        if i is None:
            return Fraction(0) if self.is_exact else 0.0
        return self.probs[i]

    def mass_at(self, index: int) -> Prob:
        if not 0 <= index < len(self.probs):
            raise DistributionError(f"atom index {index} out of range 0..{len(self.probs) - 1}")
        return self.probs[index]

    def index_of(self, atom: Hashable) -> int:
        try:
            return self._index[atom]
        except KeyError:
            raise DistributionError(f"atom {atom!r} not in distribution") from None

    def support(self) -> Tuple[Hashable, ...]:
        """Atoms with positive mass, in atom order."""
        return tuple(a for a, p in zip(self.atoms, self.probs) if p > 0)

    def items(self) -> Iterable[Tuple[Hashable, Prob]]:
        return zip(self.atoms, self.probs)

    def as_dict(self) -> Dict[Hashable, Prob]:
        """Positive-mass atoms mapped to their probabilities."""
        return {a: p for a, p in zip(self.atoms, self.probs) if p > 0}

    def max_atom(self) -> Tuple[Hashable, Prob]:
        """Most likely atom (first in atom order on ties)."""
        best = max(range(len(self.probs)), key=lambda i: (self.probs[i], -i))
        return self.atoms[best], self.probs[best]

    def prob_of(self, event: Callable[[Hashable], bool]) -> Prob:
        total = sum((p for a, p in self.items() if event(a)), Fraction(0) if self.is_exact else 0.0)
        return total

    def expectation(self, fn: Callable[[Hashable], Any]):
        zero = Fraction(0) if self.is_exact else 0.0
        return sum((p * fn(a) for a, p in self.items() if p > 0), zero)

    # Transformations

    def map(self, fn: Callable[[Hashable], Hashable]) -> "FiniteDistribution":
        """Pushforward under fn; image atoms keep first-occurrence order."""
        out: Dict[Hashable, Prob] = {}
        for atom, p in self.items():
            image = fn(atom)
            out[image] = out.get(image, 0) + p
        return FiniteDistribution(tuple(out.keys()), tuple(out.values()))

    def condition(self, event: Callable[[Hashable], bool]) -> "FiniteDistribution":
        """Distribution restricted to the event, renormalized; keeps only positive atoms."""
        kept = [(a, p) for a, p in self.items() if p > 0 and event(a)]
        total = sum(p for _, p in kept)
        if not kept or total <= 0:
            raise DistributionError("conditioning event has zero mass")
        return FiniteDistribution(tuple(a for a, _ in kept), tuple(p / total for _, p in kept))

    def product(self, other: "FiniteDistribution") -> "FiniteDistribution":
        atoms = tuple((a, b) for a in self.atoms for b in other.atoms)
        probs = tuple(p * q for p in self.probs for q in other.probs)
        return FiniteDistribution(atoms, probs)

    def restrict_to_support(self) -> "FiniteDistribution":
        support = [(a, p) for a, p in self.items() if p > 0]
        return FiniteDistribution(tuple(a for a, _ in support), tuple(p for _, p in support))

    def to_float(self) -> "FiniteDistribution":
        return FiniteDistribution(self.atoms, tuple(float(p) for p in self.probs))

    # Sampling

    def _cdf(self) -> np.ndarray:
        cdf = np.cumsum(np.asarray([float(p) for p in self.probs], dtype=float))
        cdf[-1] = 1.0
        return cdf

    def sample(self, seed: Union[int, np.random.Generator, None] = None) -> Hashable:
        """Inverse-CDF draw over the fixed atom order; deterministic given the seed."""
        u = make_rng(seed).random()
        return self.atoms[self.inverse_cdf(u)]

    def inverse_cdf(self, u: float) -> int:
        """Index of the atom selected by uniform u in [0, 1)."""
        index = int(np.searchsorted(self._cdf(), u, side="right"))
        return min(index, len(self.atoms) - 1)

    def sample_many(self, count: int, seed: Union[int, np.random.Generator, None] = None) -> List[Hashable]:
        rng = make_rng(seed)
        indices = np.searchsorted(self._cdf(), rng.random(count), side="right")
        indices = np.minimum(indices, len(self.atoms) - 1)
        return [self.atoms[i] for i in indices]

    # Comparison and serialization

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteDistribution):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    def __hash__(self) -> int:
        return hash(frozenset(self.as_dict().items()))

    def to_json_dict(self, atom_encoder: Callable[[Hashable], Any] = str) -> Dict[str, Any]:
        """JSON form ``{atoms: [...], probs: ["p/q", ...]}`` (floats as repr strings)."""
        return {
            "atoms": [atom_encoder(a) for a in self.atoms],
            "probs": [_format_prob(p) for p in self.probs],
        }

    def to_json(self, atom_encoder: Callable[[Hashable], Any] = str) -> str:
        return json.dumps(self.to_json_dict(atom_encoder), sort_keys=True)

    @classmethod
    def from_json(cls, text: str, atom_decoder: Callable[[Any], Hashable] = lambda a: a) -> "FiniteDistribution":
        payload = json.loads(text)
        try:
            atoms = [atom_decoder(a) for a in payload["atoms"]]
            probs = [_parse_prob(p) for p in payload["probs"]]
        except (KeyError, ValueError, ZeroDivisionError) as e:
            raise DistributionError(f"malformed distribution JSON: {e}") from e
        return cls(tuple(atoms), tuple(probs))


def _format_prob(p: Prob) -> str:
    if isinstance(p, Fraction):
        return f"{p.numerator}/{p.denominator}"
    return repr(float(p))


def _parse_prob(text: Any) -> Prob:
    if isinstance(text, str) and "/" in text:
        return Fraction(text)
    if isinstance(text, str) and any(c in text for c in ".eE"):
        return float(text)
    return Fraction(text)


def align(p: FiniteDistribution, q: FiniteDistribution) -> Tuple[Tuple[Hashable, ...], List[Prob], List[Prob]]:
    """Probability vectors of p and q over the union of their atoms (p's order first)."""
    atoms = list(p.atoms) + [a for a in q.atoms if a not in p]
    return tuple(atoms), [p.mass(a) for a in atoms], [q.mass(a) for a in atoms]
