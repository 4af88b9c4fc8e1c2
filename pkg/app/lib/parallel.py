import logging
from typing import Callable, Iterable, TypeVar

from django.conf import settings
from joblib import Parallel, delayed

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_n_jobs(n_jobs: int | None = None) -> int:
    """Worker count: explicit value, otherwise SUBTLE_N_JOBS."""
    if n_jobs is None:
        n_jobs = settings.SUBTLE_N_JOBS
    return int(n_jobs) or 1


def parallel_map(
    func: Callable[[T], R],
    items: Iterable[T],
    n_jobs: int | None = None,
    prefer: str | None = None,
) -> list[R]:
    """Applies `func` to every item and returns results in input order.

    Results never depend on `n_jobs`; callers derive any randomness from the
    item itself."""
    n_jobs = resolve_n_jobs(n_jobs)
    items = list(items)
    if n_jobs == 1 or len(items) <= 1:
        return [func(item) for item in items]
    logger.debug(f"running {len(items)} tasks on {n_jobs} workers")
    return Parallel(n_jobs=n_jobs, prefer=prefer)(
        delayed(func)(item) for item in items
    )
