"""Reproducible stream derivation for parallel Monte Carlo.

Every replica's random stream is derived by hashing
(master_seed, experiment_id, replica_index), never by jumping a shared
generator.  Any replica can therefore be reconstructed in any process in
any order, which makes estimates independent of the worker count.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["philox_stream", "kernel_state", "kernel_states"]

# xoshiro256 must never be seeded with the all-zero state
_FALLBACK_WORD = np.uint64(0x9E3779B97F4A7C15)


def _digest(master_seed: int, experiment_id: str, replica_index: int) -> bytes:
    token = f"{master_seed}:{experiment_id}:{replica_index}".encode()
    return hashlib.sha256(token).digest()


def philox_stream(master_seed: int, experiment_id: str, replica_index: int = 0) -> np.random.Generator:
    """Counter-based numpy Generator keyed by (seed, experiment, replica)."""
    key = int.from_bytes(_digest(master_seed, experiment_id, replica_index)[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))


def kernel_state(master_seed: int, experiment_id: str, replica_index: int = 0) -> np.ndarray:
    """256-bit state vector (uint64[4]) for the compiled kernels."""
    state = np.frombuffer(_digest(master_seed, experiment_id, replica_index), dtype=np.uint64).copy()
    if not state.any():
        state[0] = _FALLBACK_WORD
    return state


def kernel_states(master_seed: int, experiment_id: str, replicas: int, start: int = 0) -> np.ndarray:
    """Stack of per-replica kernel states, shape (replicas, 4)."""
    out = np.empty((replicas, 4), dtype=np.uint64)
    for k in range(replicas):
        out[k] = kernel_state(master_seed, experiment_id, start + k)
    return out
