"""Seeding, parallelism and small linear-algebra helpers."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.stats import unitary_group

THREADS_ENV = "FREESPECTRA_THREADS"


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator so every stream is reproducible from one seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def spawn(seed, k: int) -> list[np.random.Generator]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return [np.random.Generator(np.random.Philox(s)) for s in ss.spawn(k)]


def max_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


def parallel_map(fn, items):
    """Order-preserving map, threaded when more than one worker is allowed."""
    items = list(items)
    w = max_workers()
    if w == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


def complex_gaussian(rng, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unitary(rng, n: int) -> np.ndarray:
    if n == 1:
        # scipy's sampler needs n >= 2
        return np.exp(2j * np.pi * rng.uniform()) * np.ones((1, 1))
    return unitary_group.rvs(n, random_state=rng)


def herm(M) -> np.ndarray:
    return 0.5 * (M + M.conj().T)


def lambda_min(M) -> float:
    return float(np.linalg.eigvalsh(herm(M))[0])


def psd_sqrt(M) -> np.ndarray:
    """Positive square root of a Hermitian positive semidefinite matrix."""
    w, V = np.linalg.eigh(herm(M))
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.conj().T


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.abs(a).max()) if a.size else 0.0
