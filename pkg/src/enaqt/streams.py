"""Seed discipline: every trajectory owns independent, replayable streams.

A stream is identified by ``(master seed, tag, xi)``; ``tag`` separates
scenario points (e.g. sweep values) that share a master seed.
"""
from __future__ import annotations

import zlib

import numpy as np


def scenario_tag(*parts) -> int:
    """Stable 32-bit tag from printable parts (not Python's salted ``hash``)."""
    return zlib.crc32(repr(parts).encode())


def seed_sequence(seed: int, xi: int, tag: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=(int(tag), int(xi)))


def trajectory_rng(seed: int, xi: int, tag: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, xi, tag))


def trajectory_streams(seed: int, xi: int, tag: int = 0) -> tuple[np.random.Generator, np.random.Generator]:
    """(noise stream, readout stream) for one trajectory."""
    noise, readout = seed_sequence(seed, xi, tag).spawn(2)
    return np.random.default_rng(noise), np.random.default_rng(readout)


def chunk_bounds(count: int, chunk_size: int) -> list[tuple[int, int]]:
    return [(a, min(a + chunk_size, count)) for a in range(0, count, chunk_size)]


def run_chunks(fn, tasks, workers: int = 1) -> list:
    """Evaluate ``fn`` over ``tasks``; results come back in task order.

    The chunk partition, not the worker count, fixes every random stream and
    the reduction order, so outputs are identical for any ``workers``.
    """
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))
