from __future__ import annotations

from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor


def ordered_map[T, R](fn: Callable[[T], R], items: Iterable[T], *, threads: int = 1) -> list[R]:
    """Map `fn` over `items`, returning results in input order for any thread count."""
    values = list(items)
    if threads <= 1 or len(values) <= 1:
        return [fn(value) for value in values]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, values))
