"""Miscellaneous minor utility functions that don't really belong anywhere else"""
import os
from concurrent.futures import ThreadPoolExecutor
from inspect import signature
from logging import getLogger
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TypeVar

import numpy as np

logger = getLogger('cliffsim')

THREADS_ENV_VAR = 'CLIFFSIM_THREADS'
T = TypeVar('T')


def chunk_sizes(total: int, max_size: int) -> List[int]:
    """Split a sample count into chunk sizes of at most ``max_size``"""
    sizes = [max_size] * (total // max_size)
    if total % max_size:
        sizes.append(total % max_size)
    return sizes


def coalesce(*values: Any, default=None) -> Any:
    """Get the first non-``None`` value in a list of values"""
    return next((v for v in values if v is not None), default)


def get_placeholder_class(original_exception: Exception = None):
    """Create a placeholder type for a class that does not have dependencies installed.
    This allows delaying ImportErrors until init time, rather than at import time.
    """
    msg = 'Dependencies are not installed for this feature'

    def _log_error():
        logger.error(msg)
        raise original_exception or ImportError(msg)

    class Placeholder:
        def __init__(self, *args, **kwargs):
            _log_error()

        def __getattr__(self, *args, **kwargs):
            _log_error()

        def __call__(self, *args, **kwargs):
            _log_error()

        def dumps(self, *args, **kwargs):
            _log_error()

    return Placeholder


def get_valid_kwargs(func: Callable, kwargs: Dict, extras: Iterable[str] = None) -> Dict:
    """Get the subset of non-None ``kwargs`` that are valid params for ``func``"""
    params = list(signature(func).parameters)
    params.extend(extras or [])
    return {k: v for k, v in kwargs.items() if k in params and v is not None}


def default_threads() -> int:
    """Get the default worker count, from ``CLIFFSIM_THREADS`` if set"""
    value = os.getenv(THREADS_ENV_VAR)
    try:
        return max(1, int(value)) if value else 1
    except ValueError:
        logger.warning(f'Ignoring invalid {THREADS_ENV_VAR}={value!r}')
        return 1


def derive_rng(seed: Optional[int], *keys: int) -> np.random.Generator:
    """Get an independent random stream for a task, derived from a root seed and a task counter.
    The same ``(seed, keys)`` always gives the same stream, regardless of scheduling.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(keys)))


def parallel_map(func: Callable[..., T], items: Sequence, threads: int = None) -> List[T]:
    """Map ``func`` over ``items`` with a thread pool, keeping input order"""
    threads = coalesce(threads, default=default_threads())
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, items))


def parity(value: int) -> int:
    """Parity (popcount mod 2) of a non-negative integer"""
    return bin(value).count('1') & 1


def popcount(value: int) -> int:
    return bin(value).count('1')


def derive_seed(seed: Optional[int], *keys: int) -> int:
    """Get an independent integer seed for a task, e.g. one repeat of an experiment"""
    return int(np.random.SeedSequence(seed, spawn_key=tuple(keys)).generate_state(1)[0])
