"""
Stand-in for an expensive per-cell chemistry solver.

Each species relaxes towards the next one at its own rate over the time step, so a
cell with equal concentrations is left unchanged. The remaining outputs carry the
time step and a few aggregates. A configurable busy-spin emulates solver cost.
"""
import math
import time

from src.config import settings

SPECIES = 9
RESULT_WIDTH = 13
RATES = tuple(0.1 * (i + 1) for i in range(SPECIES))


def expensive_kernel(cell, cost_us=None):
    """
    Simulate one cell.

    Args:
        cell (sequence of float): 9 concentrations followed by the time step
        cost_us (float, optional): Busy-spin duration in microseconds. Defaults to settings.KERNEL_COST_US.

    Returns:
        tuple: 13 floats: the 9 new concentrations, the time step, the total,
        the sum of squares and 1 / (1 + total)
    """
    cost_us = settings.KERNEL_COST_US if cost_us is None else cost_us
    concentrations = [float(c) for c in cell[:SPECIES]]
    dt = float(cell[SPECIES])

    result = []
    for i, c in enumerate(concentrations):
        neighbour = concentrations[(i + 1) % SPECIES]
        result.append(c + (neighbour - c) * -math.expm1(-RATES[i] * dt))
    total = math.fsum(concentrations)
    result.extend((dt, total, math.fsum(c * c for c in concentrations), 1.0 / (1.0 + total)))

    busy_wait(cost_us)
    return tuple(result)


def busy_wait(cost_us):
    if cost_us <= 0:
        return
    deadline = time.perf_counter_ns() + int(cost_us * 1000)
    while time.perf_counter_ns() < deadline:
        pass
