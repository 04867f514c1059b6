# utils/caching.py - Operator Block Cache
"""
Process-wide cache for immutable operator blocks.

Single-mode ladder operators, quadratures and quadrature eigensystems are
rebuilt constantly inside sweeps at the same handful of cutoffs; they are
cached here keyed by namespace and arguments. Cached numpy arrays are marked
read-only so a cache hit can be shared across threads.
"""

import logging
import threading
from functools import wraps
from typing import Any, Callable, Dict, Hashable, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

_MISSING = object()


def _freeze(value: Any) -> Any:
    """Mark numpy arrays (also inside tuples) read-only."""
    if isinstance(value, np.ndarray):
        value.setflags(write=False)
    elif isinstance(value, tuple):
        for item in value:
            _freeze(item)
    return value


class OperatorCache:
    """Thread-safe in-memory cache without expiry.

    Entries are never invalidated implicitly: operator blocks depend only on
    their arguments.
    """

    def __init__(self, max_entries: int = 512):
        """Initialize cache.

        Args:
            max_entries: Entry limit; the oldest entry is evicted beyond it
        """
        self._cache: Dict[Tuple[str, Hashable], Any] = {}
        self.max_entries = max_entries
        self._hits = 0
        self._misses = 0
        self._lock = threading.RLock()
        logger.debug(f"OperatorCache initialized with max_entries={max_entries}")

    def get(self, namespace: str, key: Hashable) -> Any:
        """Get value from cache, or the module sentinel when absent."""
        full_key = (namespace, key)
        with self._lock:
            value = self._cache.get(full_key, _MISSING)
            if value is _MISSING:
                self._misses += 1
                logger.debug(f"Cache miss: {namespace}:{key}")
            else:
                self._hits += 1
            return value

    def set(self, namespace: str, key: Hashable, value: Any) -> Any:
        """Store a value and return it (frozen)."""
        full_key = (namespace, key)
        with self._lock:
            if full_key not in self._cache and len(self._cache) >= self.max_entries:
                oldest = next(iter(self._cache))
                del self._cache[oldest]
                logger.debug(f"Cache evicted: {oldest[0]}:{oldest[1]}")
            self._cache[full_key] = _freeze(value)
            return self._cache[full_key]

    def get_stats(self) -> Dict[str, Any]:
        """Get cache statistics."""
        with self._lock:
            total_requests = self._hits + self._misses
            hit_rate = (self._hits / total_requests * 100) if total_requests > 0 else 0
            return {
                "size": len(self._cache),
                "hits": self._hits,
                "misses": self._misses,
                "total_requests": total_requests,
                "hit_rate_percent": round(hit_rate, 2),
            }


# Global cache instance
_cache: Optional[OperatorCache] = None
_cache_lock = threading.Lock()


def get_operator_cache() -> OperatorCache:
    """Get or create the global operator cache."""
    global _cache
    with _cache_lock:
        if _cache is None:
            _cache = OperatorCache()
        return _cache


def cached_operator(namespace: str) -> Callable:
    """Decorator caching a pure function of hashable positional arguments.

    Example:
        @cached_operator("annihilation")
        def _annihilation_matrix(cutoff: int) -> np.ndarray:
            ...
    """
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args):
            cache = get_operator_cache()
            value = cache.get(namespace, args)
            if value is _MISSING:
                value = cache.set(namespace, args, func(*args))
            return value
        return wrapper
    return decorator
