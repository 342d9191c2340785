"""
Surrogate-cache demo: 1-D upwind advection with a cached per-cell reaction kernel.

The grid is split into contiguous slices, one per participant. Each step a
participant puts its last cell into the halo slot of its right neighbour, advects
its slice, then runs every cell through the surrogate cache. Rank 0 collects the
per-step hit counts.
"""
import struct
import time
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, computed_field

from src.config import settings
from src.core.errors import InvalidConfigError
from src.dht import DhtConfig, dht_create, dht_free
from src.utils.logging_utils import get_logger
from src.utils.validators import validate_positive
from .cache import CELL_RESULT, SurrogateCache
from .kernel import SPECIES
from .rounding import CELL_INPUT

logger = get_logger('surrogate')

HALO = struct.Struct(f'<{SPECIES}d')
HALO_RESERVE = 80
STEP_COUNTS = struct.Struct('<QQ')

CFL = 0.5
TIME_STEP = 1.0
BACKGROUND = 1e-3
INJECTED = 0.1


class DemoStep(BaseModel):
    step: int
    hits: int
    misses: int

    @computed_field
    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0


class DemoSummary(BaseModel):
    protocol: str
    backend: str
    participants: int
    grid_width: int
    steps: int
    digits: int
    cached: bool
    kernel_calls: int
    hits: int
    misses: int
    seconds: float
    step_results: List[DemoStep] = []

    @computed_field
    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0

    def summary_line(self) -> str:
        mode = f"{self.protocol} cache, {self.digits} digits" if self.cached else "no cache"
        return (
            f"{self.backend} P={self.participants} width={self.grid_width} steps={self.steps} ({mode}): "
            f"{self.kernel_calls} kernel calls, {self.hits} hits, hit rate {self.hit_rate:.1%}, "
            f"{self.seconds:.2f}s"
        )


def partition(grid_width, participants, rank):
    """Half-open cell range [lo, hi) owned by rank; slice sizes differ by at most one."""
    base, extra = divmod(grid_width, participants)
    lo = rank * base + min(rank, extra)
    return lo, lo + base + (1 if rank < extra else 0)


def initial_state(cells):
    """Equilibrated background: every species at the same concentration, a fixed point of the kernel."""
    return np.full((cells, SPECIES), BACKGROUND, dtype=np.float64)


def inflow(inject=True):
    row = np.full(SPECIES, BACKGROUND, dtype=np.float64)
    if inject:
        row[0] = INJECTED
    return row


def advect(state, upstream, cfl=CFL):
    """First-order upwind step for a constant positive velocity; upstream is the cell left of the slice."""
    shifted = np.vstack((upstream, state[:-1]))
    return state - cfl * (state - shifted)


def run_demo(universe, rank, grid_width=None, steps=None, digits=None, cost_us=None,
             protocol=None, use_cache=True, inject=True) -> Optional[DemoSummary]:
    """
    One participant's share of the demo. Collective.

    Args:
        universe (Universe): Universe holding the table and the halo slots
        rank (int): This participant's rank
        grid_width (int, optional): Cells in the grid. Defaults to settings.GRID_WIDTH.
        steps (int, optional): Time steps. Defaults to settings.STEPS.
        digits (int, optional): Significant digits of cache keys. Defaults to settings.DIGITS.
        cost_us (float, optional): Kernel cost. Defaults to settings.KERNEL_COST_US.
        protocol (str, optional): Table protocol. Defaults to settings.PROTOCOL.
        use_cache (bool): False runs the kernel for every cell
        inject (bool): False keeps the left boundary at the background state

    Returns:
        DemoSummary: On rank 0; None on the other ranks
    """
    participants = universe.participants
    grid_width = validate_positive("grid_width", grid_width or settings.GRID_WIDTH)
    steps = validate_positive("steps", steps or settings.STEPS)
    digits = validate_positive("digits", digits or settings.DIGITS)
    protocol = protocol or settings.PROTOCOL
    if grid_width < participants:
        raise InvalidConfigError("Grid needs at least one cell per participant", f"{grid_width} < {participants}")

    halo_offset = (universe.window_size - HALO_RESERVE) & ~7
    handle = None
    if use_cache:
        config = DhtConfig.fit_window(
            halo_offset, protocol=protocol, key_size=CELL_INPUT.size,
            value_size=CELL_RESULT.size, participants=participants,
        )
        handle = dht_create(universe, config, rank)
    cache = SurrogateCache(handle, digits, cost_us)

    lo, hi = partition(grid_width, participants, rank)
    state = initial_state(hi - lo)
    boundary = inflow(inject)
    step_results = []

    universe.barrier()
    start = time.perf_counter()
    for step in range(1, steps + 1):
        if rank < participants - 1:
            universe.remote_put(rank + 1, halo_offset, HALO.pack(*state[-1]))
        universe.barrier()
        if rank == 0:
            upstream = boundary
        else:
            upstream = np.array(HALO.unpack(universe.remote_get(rank, halo_offset, HALO.size)))
        state = advect(state, upstream)

        hits_before, misses_before = cache.counters()
        for i in range(len(state)):
            result = cache.simulate((*state[i], TIME_STEP))
            state[i] = result[:SPECIES]

        # The gather also keeps halo slots stable until every participant has read its own
        counts = STEP_COUNTS.pack(cache.hits - hits_before, cache.misses - misses_before)
        gathered = universe.gather(rank, counts)
        if gathered is not None:
            per_rank = [STEP_COUNTS.unpack(payload) for payload in gathered]
            step_results.append(DemoStep(
                step=step, hits=sum(h for h, _ in per_rank), misses=sum(m for _, m in per_rank),
            ))
    seconds = time.perf_counter() - start

    if handle is not None:
        dht_free(handle)
    if rank != 0:
        return None

    summary = DemoSummary(
        protocol=protocol,
        backend=universe.backend.value,
        participants=participants,
        grid_width=grid_width,
        steps=steps,
        digits=digits,
        cached=use_cache,
        kernel_calls=sum(s.misses for s in step_results),
        hits=sum(s.hits for s in step_results),
        misses=sum(s.misses for s in step_results),
        seconds=seconds,
        step_results=step_results,
    )
    logger.info(summary.summary_line())
    return summary
