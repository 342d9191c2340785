"""
Logging utilities for the DHT cache library.
Provides the package logger and helpers for logging benchmark phases and table events.
"""
import datetime
import logging
from pathlib import Path

from src.config import settings

# Configure logging
log_level_str = settings.LOG_LEVEL.upper()
log_level = getattr(logging, log_level_str, logging.INFO)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logging.basicConfig(
    level=log_level,
    format=LOG_FORMAT,
    datefmt='%Y-%m-%d %H:%M:%S'
)

# Create logger
logger = logging.getLogger('dht')

if settings.LOG_TO_FILE:
    logs_dir = Path('logs')
    logs_dir.mkdir(exist_ok=True)
    log_file = logs_dir / f'dht_{datetime.datetime.now().strftime("%Y%m%d_%H%M%S")}.log'
    file_handler = logging.FileHandler(log_file)
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(file_handler)


def get_logger(name=None):
    """
    Get the package logger or one of its children.

    Args:
        name (str, optional): Child logger name, e.g. 'rma.sockets'

    Returns:
        logging.Logger: Logger instance
    """
    return logger.getChild(name) if name else logger


def log_phase(result):
    """
    Log the aggregated outcome of one benchmark phase.

    Args:
        result (BenchResult): The phase result
    """
    logger.info(
        f"{result.protocol}/{result.backend} P={result.participants} {result.phase} "
        f"{result.distribution}: {result.ops} ops in {result.seconds:.3f}s "
        f"({result.ops_per_sec:,.0f} ops/s), misses={result.misses} "
        f"mismatches={result.mismatches} invalidations={result.invalidations} "
        f"evictions={result.evictions}"
    )
    if result.wrong_values:
        logger.error(f"{result.wrong_values} reads returned a value embedding a different key")


def log_table_event(event, rank, target, index, detail=None):
    """
    Log a per-bucket table event (eviction, invalidation) when detailed logging is enabled.

    Args:
        event (str): Event name
        rank (int): Initiating participant
        target (int): Target participant
        index (int): Bucket index on the target
        detail (str, optional): Extra context
    """
    if not settings.DETAILED_LOGGING:
        return
    suffix = f" ({detail})" if detail else ""
    logger.debug(f"{event}: participant {rank} -> rank {target} bucket {index}{suffix}")
