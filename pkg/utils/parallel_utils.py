import logging
import os
from concurrent.futures import ThreadPoolExecutor

logger = logging.getLogger(__name__)


def worker_count():
    """HOLOMOTION_THREADS if set, else the CPU count."""
    value = os.getenv("HOLOMOTION_THREADS", "").strip()
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            logger.warning("ignoring HOLOMOTION_THREADS=%r", value)
    return os.cpu_count() or 1


def parallel_map(fn, items, max_workers=None):
    """Ordered map over ``items``; runs inline when one worker is enough."""
    items = list(items)
    workers = min(max_workers or worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))
