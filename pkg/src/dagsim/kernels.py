"""Hot loops, backed by the compiled extension when it is importable.

Set ``DAGSIM_PURE_PYTHON=1`` to force the numpy fallback. Both backends
consume the same counter-based draws and return identical arrays.
"""

from __future__ import annotations

import os
from typing import NamedTuple

import numpy as np

from . import _fallback

_compiled = None
if os.environ.get("DAGSIM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def backend_module(name: str | None = None):
    """The kernel module for ``name`` ("cython" or "python"); default is the active one."""
    name = name or BACKEND
    if name == "python":
        return _fallback
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


class LeafRun(NamedTuple):
    leaf_sizes: np.ndarray
    referenced: np.ndarray
    psi: np.ndarray
    cover_round: int


def simulate_leaves(key: int, s: int, rounds: int, inject_round: int = 0,
                    stop_on_cover: bool = False, backend: str | None = None) -> LeafRun:
    leaf_sizes = np.zeros(rounds + 1, dtype=np.int64)
    referenced = np.zeros(rounds + 1, dtype=np.int64)
    psi = np.zeros(rounds + 1, dtype=np.int64)
    ran, cover = backend_module(backend).simulate_leaves(
        key, s, rounds, inject_round, stop_on_cover, leaf_sizes, referenced, psi
    )
    ran = int(ran)
    return LeafRun(leaf_sizes[: ran + 1], referenced[: ran + 1], psi[: ran + 1], int(cover))


def sample_referenced(key: int, n_leaves: int, s: int, draws: int, backend: str | None = None) -> np.ndarray:
    out = np.zeros(draws, dtype=np.int64)
    backend_module(backend).sample_referenced(key, n_leaves, s, out)
    return out


def walk_exits(key: int, trials: int, horizon: int, p: float, backend: str | None = None) -> np.ndarray:
    out = np.zeros(trials, dtype=np.int64)
    backend_module(backend).walk_exits(key, horizon, float(p), out)
    return out
