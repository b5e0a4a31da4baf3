"""Orient phase: per-candidate traits computed through an extensible registry.

Each trait is evaluated independently from the candidate's files and the
engine config; adding a trait never changes another trait's value.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType

from lakecompact.errors import TraitEvaluationError
from lakecompact.model import Candidate, EngineConfig, GB


class Direction(str, Enum):
    BENEFIT = "benefit"
    COST = "cost"

    @property
    def sign(self) -> int:
        return 1 if self is Direction.BENEFIT else -1


def file_count_reduction(candidate: Candidate, target_file_size_bytes: int) -> int:
    """Number of files strictly smaller than the target size."""
    return sum(1 for f in candidate.files if f.size_bytes < target_file_size_bytes)


def file_count_reduction_partition_aware(candidate: Candidate, target_file_size_bytes: int) -> int:
    """Like :func:`file_count_reduction`, but a partition holding a single small
    file contributes nothing, since compaction never merges across partitions."""
    per_partition = Counter(
        f.partition_key for f in candidate.files if f.size_bytes < target_file_size_bytes
    )
    return sum(n for n in per_partition.values() if n > 1)


def compute_cost_gbhr(
    candidate: Candidate, executor_memory_gb: float, rewrite_bytes_per_hour: float
) -> float:
    """Executor memory (GB) times hours needed to rewrite the candidate's bytes."""
    return executor_memory_gb * (candidate.stats.total_bytes / rewrite_bytes_per_hour)


def file_entropy(candidate: Candidate, target_file_size_bytes: int) -> float:
    """Mean squared relative shortfall below target, in [0, 1].

    ``(1/N) * sum(max(0, T - s)^2 / T^2)``; 0 for an empty candidate and 0
    exactly when no file is below target.
    """
    n = len(candidate.files)
    if n == 0:
        return 0.0
    t = float(target_file_size_bytes)
    total = 0.0
    for f in candidate.files:
        gap = t - f.size_bytes
        if gap > 0:
            total += (gap / t) ** 2
    return total / n


def small_file_fraction(candidate: Candidate, target_file_size_bytes: int) -> float:
    n = len(candidate.files)
    if n == 0:
        return 0.0
    return file_count_reduction(candidate, target_file_size_bytes) / n


Evaluator = Callable[[Candidate, EngineConfig], float]


@dataclass(frozen=True)
class Trait:
    name: str
    direction: Direction
    evaluate: Evaluator
    description: str = ""


class TraitRegistry:
    """Ordered collection of traits keyed by name."""

    def __init__(self, traits: Iterable[Trait] = ()):
        self._traits: dict[str, Trait] = {}
        for t in traits:
            self.register(t)

    def register(self, trait: Trait) -> None:
        if trait.name in self._traits:
            raise ValueError(f"trait {trait.name!r} already registered")
        self._traits[trait.name] = trait

    def copy(self) -> TraitRegistry:
        return TraitRegistry(self._traits.values())

    def __contains__(self, name: object) -> bool:
        return name in self._traits

    def __getitem__(self, name: str) -> Trait:
        return self._traits[name]

    def __iter__(self) -> Iterator[Trait]:
        return iter(self._traits.values())

    def __len__(self) -> int:
        return len(self._traits)

    def names(self) -> list[str]:
        return list(self._traits)


def default_registry() -> TraitRegistry:
    return TraitRegistry(
        [
            Trait(
                "file_count_reduction",
                Direction.BENEFIT,
                lambda c, cfg: float(file_count_reduction(c, cfg.target_file_size_bytes)),
                "files strictly below target size",
            ),
            Trait(
                "compute_cost_gbhr",
                Direction.COST,
                lambda c, cfg: compute_cost_gbhr(c, cfg.executor_memory_gb, cfg.rewrite_bytes_per_hour),
                "executor GB-hours to rewrite the candidate",
            ),
            Trait(
                "file_entropy",
                Direction.BENEFIT,
                lambda c, cfg: file_entropy(c, cfg.target_file_size_bytes),
                "mean squared shortfall below target",
            ),
            Trait(
                "file_count_reduction_partition_aware",
                Direction.BENEFIT,
                lambda c, cfg: float(file_count_reduction_partition_aware(c, cfg.target_file_size_bytes)),
                "small files in partitions holding at least two of them",
            ),
            Trait(
                "small_file_fraction",
                Direction.BENEFIT,
                lambda c, cfg: small_file_fraction(c, cfg.target_file_size_bytes),
                "file_count_reduction / file_count",
            ),
        ]
    )


@dataclass(frozen=True)
class TraitVector:
    candidate_id: str
    values: Mapping[str, float]
    directions: Mapping[str, Direction]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", MappingProxyType(dict(self.values)))
        object.__setattr__(self, "directions", MappingProxyType(dict(self.directions)))


def compute_traits(
    candidates: Sequence[Candidate],
    config: EngineConfig,
    registry: TraitRegistry | None = None,
) -> list[TraitVector]:
    registry = registry if registry is not None else default_registry()
    if not len(registry):
        raise ValueError("trait registry is empty")
    directions = {t.name: t.direction for t in registry}
    out = []
    for c in candidates:
        values = {}
        for trait in registry:
            v = float(trait.evaluate(c, config))
            if not math.isfinite(v):
                raise TraitEvaluationError(trait.name, c.candidate_id, v)
            values[trait.name] = v
        out.append(TraitVector(c.candidate_id, values, directions))
    return out


__all__ = [
    "Direction",
    "GB",
    "Trait",
    "TraitRegistry",
    "TraitVector",
    "compute_cost_gbhr",
    "compute_traits",
    "default_registry",
    "file_count_reduction",
    "file_count_reduction_partition_aware",
    "file_entropy",
    "small_file_fraction",
]
