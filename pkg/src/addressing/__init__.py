from .hashing import (
    Address,
    address_of,
    candidate_indices,
    hash64,
    index_width,
    target_rank,
)

__all__ = [
    "Address",
    "address_of",
    "candidate_indices",
    "hash64",
    "index_width",
    "target_rank",
]
