import asyncio
from concurrent.futures import ThreadPoolExecutor
from functools import wraps
from typing import Awaitable, Callable, Iterable, List, TypeVar

from asgiref.sync import sync_to_async as _sync_to_async

T = TypeVar("T")
R = TypeVar("R")

thread_pool = ThreadPoolExecutor(thread_name_prefix="form-worker")


def sync_to_async(sync_fn: Callable[..., R]) -> Callable[..., Awaitable[R]]:
    """Run a blocking function on the shared worker pool from a coroutine"""
    async_fn = _sync_to_async(sync_fn, thread_sensitive=False, executor=thread_pool)

    @wraps(sync_fn)
    async def wrapper(*args, **kwargs):
        return await async_fn(*args, **kwargs)

    return wrapper


async def gather_in_pool(
    sync_fn: Callable[[T], R], items: Iterable[T], limit: int = 8
) -> List[R]:
    """Map a blocking function over items concurrently, keeping input order"""
    async_fn = sync_to_async(sync_fn)
    semaphore = asyncio.Semaphore(max(1, limit))

    async def bounded(item: T) -> R:
        async with semaphore:
            return await async_fn(item)

    return list(await asyncio.gather(*(bounded(item) for item in items)))


def run_sync(coro: Awaitable[R]) -> R:
    """Drive a coroutine to completion from synchronous code"""
    try:
        asyncio.get_running_loop()
    except RuntimeError:
        # No loop running, the normal CLI path
        return asyncio.run(coro)
    # Called from inside a running loop (pytest-asyncio, notebooks)
    return thread_pool.submit(asyncio.run, coro).result()
