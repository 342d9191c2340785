"""
Models for benchmark workloads and their results.
"""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field, ValidationError, computed_field

from src.config import settings
from src.core.errors import InvalidConfigError
from .generators import KeyGenerator, gen_uniform, gen_zipf


class Distribution(str, Enum):
    UNIFORM = "uniform"
    ZIPF = "zipf"


class WorkloadKind(str, Enum):
    WRITE_THEN_READ = "wtr"
    MIXED = "mixed"


class Phase(str, Enum):
    WRITE = "write"
    READ = "read"
    MIXED = "mixed"


class WorkloadSpec(BaseModel):
    """What every participant runs; identical on all participants."""
    kind: WorkloadKind = Field(WorkloadKind.WRITE_THEN_READ, description="Phase plan")
    distribution: Distribution = Field(Distribution.UNIFORM, description="Key distribution")
    count: int = Field(default_factory=lambda: settings.WTR_COUNT, ge=1, description="Pairs per participant (wtr)")
    ops: int = Field(default_factory=lambda: settings.MIXED_OPS, ge=1, description="Operations per participant (mixed)")
    read_ratio: float = Field(default_factory=lambda: settings.READ_RATIO, ge=0.0, le=1.0)
    seed: int = Field(default_factory=lambda: settings.SEED, ge=0)
    zipf_skew: float = Field(default_factory=lambda: settings.ZIPF_SKEW, ge=0.0)
    zipf_range: int = Field(default_factory=lambda: settings.ZIPF_RANGE, ge=1)

    @classmethod
    def create(cls, **kwargs):
        """Build a spec, reporting validation failures as InvalidConfigError."""
        try:
            return cls(**{k: v for k, v in kwargs.items() if v is not None})
        except ValidationError as e:
            raise InvalidConfigError("Invalid workload", str(e)) from e

    def participant_seed(self, rank: int) -> int:
        return self.seed + rank

    def generator(self, rank: int) -> KeyGenerator:
        """Key-number stream of one participant."""
        seed = self.participant_seed(rank)
        if self.distribution is Distribution.ZIPF:
            return gen_zipf(seed, self.zipf_skew, self.zipf_range)
        return gen_uniform(seed)

    @property
    def label(self) -> str:
        if self.distribution is Distribution.ZIPF:
            return f"zipf({self.zipf_skew:g},{self.zipf_range})"
        return self.distribution.value


class BenchResult(BaseModel):
    """Outcome of one benchmark phase, for one participant or aggregated over all."""
    protocol: str
    backend: str
    participants: int
    phase: Phase
    distribution: str
    ops: int = 0
    seconds: float = 0.0
    misses: int = 0
    mismatches: int = 0
    invalidations: int = 0
    evictions: int = 0
    wrong_values: int = 0
    reads: int = 0

    @computed_field
    @property
    def ops_per_sec(self) -> float:
        return self.ops / self.seconds if self.seconds > 0 else 0.0

    @property
    def mismatch_fraction(self) -> Optional[float]:
        """Checksum mismatches per read issued in this phase."""
        return self.mismatches / self.reads if self.reads else None

