"""Simulations shared by several test modules, cached for the session."""
from functools import lru_cache

from pertcopula.chain import RngStream, simulate_batch
from pertcopula.copulas import preset


@lru_cache(maxsize=None)
def preset_chains(family: str, n: int, replications: int, seed: int):
    return tuple(simulate_batch(preset(family), n, [RngStream(seed, r) for r in range(replications)]))
