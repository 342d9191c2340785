"""
Parallel processing module for the DHT cache library.
Runs one participant function per rank: in a ThreadPoolExecutor over a shared threads
universe, or in spawned processes joined through a sockets universe on loopback.
"""
import concurrent.futures
import multiprocessing
import time

from src.config import settings
from src.core.errors import InvalidConfigError, TransportError
from src.rma import Backend, universe_create
from src.utils.logging_utils import get_logger

logger = get_logger('processing')


def run_participants(func, args=(), participants=None, window_size=None, backend=None, universe_options=None):
    """
    Run func(universe, rank, *args) once per participant and collect the results.

    Args:
        func (callable): Participant function; must be module-level for the sockets backend
        args (tuple): Extra positional arguments passed to every participant
        participants (int, optional): Participant count P. Defaults to settings.PARTICIPANTS.
        window_size (int, optional): Bytes per window. Defaults to settings.WINDOW_SIZE.
        backend (str, optional): 'threads' or 'sockets'. Defaults to settings.BACKEND.
        universe_options (dict, optional): Extra universe options (put_granularity, timeouts)

    Returns:
        list: Participant results in rank order
    """
    participants = participants or settings.PARTICIPANTS
    window_size = window_size or settings.WINDOW_SIZE
    try:
        backend = Backend(backend or settings.BACKEND)
    except ValueError as e:
        raise InvalidConfigError("Unknown backend", str(backend)) from e

    start_time = time.time()
    if backend is Backend.THREADS:
        results = run_thread_participants(func, args, participants, window_size, universe_options)
    else:
        results = run_socket_participants(func, args, participants, window_size, universe_options)
    logger.debug(f"{participants} {backend.value} participants finished in {time.time() - start_time:.2f} seconds")
    return results


def run_thread_participants(func, args, participants, window_size, universe_options=None):
    """Participants as threads sharing one in-process universe."""
    universe = universe_create(participants, window_size, Backend.THREADS, **(universe_options or {}))
    try:
        with concurrent.futures.ThreadPoolExecutor(max_workers=participants) as executor:
            futures = [
                executor.submit(_guarded_participant, func, universe, rank, args)
                for rank in range(participants)
            ]
            return _collect(futures)
    finally:
        universe.close()


def run_socket_participants(func, args, participants, window_size, universe_options=None):
    """Participants as spawned processes; rank 0 publishes its address through a manager queue."""
    context = multiprocessing.get_context('spawn')
    with context.Manager() as manager:
        addresses = manager.Queue()
        with concurrent.futures.ProcessPoolExecutor(max_workers=participants, mp_context=context) as executor:
            futures = [
                executor.submit(
                    socket_participant, func, rank, participants, window_size, addresses, args, universe_options
                )
                for rank in range(participants)
            ]
            return _collect(futures)


def socket_participant(func, rank, participants, window_size, addresses, args=(), universe_options=None):
    """
    Body of one spawned participant process.

    Rank 0 listens on an ephemeral loopback port and hands its address to the other
    ranks, which join with their fixed rank.
    """
    options = universe_options or {}
    if rank == 0:
        def publish(address):
            for _ in range(participants - 1):
                addresses.put(tuple(address))

        universe = universe_create(
            participants, window_size, Backend.SOCKETS,
            listen=(settings.SOCKET_HOST, 0), on_listening=publish, **options,
        )
    else:
        address = addresses.get(timeout=settings.RENDEZVOUS_TIMEOUT)
        universe = universe_create(participants, window_size, Backend.SOCKETS, connect=address, rank=rank, **options)
    try:
        return _guarded_participant(func, universe, rank, args)
    finally:
        universe.close()


def _guarded_participant(func, universe, rank, args):
    try:
        return func(universe, rank, *args)
    except Exception:
        # Release siblings blocked in a barrier on this participant
        universe.abort()
        raise


def _collect(futures):
    """Results in submission order; re-raises the root-cause failure if any participant failed."""
    results, errors = [], []
    for rank, future in enumerate(futures):
        try:
            results.append(future.result())
        except Exception as e:
            logger.error(f"Participant {rank} failed: {e}")
            errors.append(e)
    if errors:
        # Broken barriers are a consequence of the first failure, not its cause
        primary = [e for e in errors if not isinstance(e, TransportError)]
        raise (primary or errors)[0]
    return results
