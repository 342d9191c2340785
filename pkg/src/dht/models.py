"""
Models for the distributed hash table.
Defines the table configuration, the write outcomes and the per-participant counters.
"""
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.addressing import index_width
from src.config import settings
from src.core.errors import InvalidConfigError
from src.rma.base import WINDOW_HEADER_SIZE
from .layout import BucketLayout, Protocol


class WriteOutcome(str, Enum):
    INSERTED = "inserted"
    UPDATED = "updated"
    EVICTED = "evicted"


class DhtConfig(BaseModel):
    """Table configuration; identical on every participant."""
    model_config = ConfigDict(frozen=True)

    protocol: Protocol = Field(default_factory=lambda: Protocol(settings.PROTOCOL), description="Consistency protocol")
    key_size: int = Field(default_factory=lambda: settings.KEY_SIZE, ge=1, description="Key bytes K")
    value_size: int = Field(default_factory=lambda: settings.VALUE_SIZE, ge=1, description="Value bytes V")
    buckets: int = Field(..., ge=1, description="Buckets per window B")
    participants: int = Field(..., ge=1, description="Participant count P")
    checksum_retries: int = Field(
        default_factory=lambda: settings.CHECKSUM_RETRIES, ge=0,
        description="Re-reads of a checksum-mismatching bucket before it is flagged invalid",
    )

    @field_validator('buckets')
    @classmethod
    def validate_buckets(cls, v):
        """Bucket indices must fit the 64-bit hash."""
        if v > 1 << 64:
            raise ValueError("Bucket count exceeds the 64-bit hash range")
        return v

    @classmethod
    def create(cls, **kwargs):
        """Build a config, reporting validation failures as InvalidConfigError."""
        try:
            return cls(**kwargs)
        except ValidationError as e:
            raise InvalidConfigError("Invalid table configuration", str(e)) from e

    @classmethod
    def fit_window(cls, window_size, **kwargs):
        """Config with as many buckets as fit a window of window_size bytes."""
        protocol = kwargs.get('protocol') or settings.PROTOCOL
        key_size = kwargs.get('key_size') or settings.KEY_SIZE
        value_size = kwargs.get('value_size') or settings.VALUE_SIZE
        stride = BucketLayout.for_protocol(protocol, key_size, value_size).stride
        buckets = (window_size - WINDOW_HEADER_SIZE) // stride
        if buckets < 1:
            raise InvalidConfigError("Window too small for a single bucket", f"{window_size} bytes, stride {stride}")
        return cls.create(**{**kwargs, 'buckets': buckets})

    @property
    def index_width(self) -> int:
        return index_width(self.buckets)

    @property
    def layout(self) -> BucketLayout:
        return BucketLayout.for_protocol(self.protocol, self.key_size, self.value_size)

    def required_window_size(self) -> int:
        return WINDOW_HEADER_SIZE + self.buckets * self.layout.stride


class DhtStats(BaseModel):
    """Counters of one participant's table handle."""
    reads: int = Field(0, description="Completed reads")
    writes: int = Field(0, description="Completed writes")
    read_misses: int = Field(0, description="Reads that found no matching bucket")
    checksum_mismatch_retries: int = Field(0, description="Re-reads caused by a checksum mismatch")
    invalidations: int = Field(0, description="Buckets flagged invalid after persistent mismatches")
    evictions: int = Field(0, description="Writes that overwrote a foreign key")

    def since(self, earlier: "DhtStats") -> "DhtStats":
        """Counter deltas between an earlier snapshot and this one."""
        return DhtStats(**{name: getattr(self, name) - getattr(earlier, name) for name in DhtStats.model_fields})
