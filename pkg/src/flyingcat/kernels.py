"""Backend selection for the per-shot trajectory kernels.

The compiled extension (``flyingcat._kernels``) is used when it was built;
otherwise the numpy implementation in ``flyingcat._pykernels`` is used.
Set ``FLYINGCAT_BACKEND=python`` to force the fallback at import.
Both draw randomness from the same counter-based generator keyed on
``(seed, stream, check, draw)``, so a shot's draws never depend on how shots
are batched or distributed over workers.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from flyingcat import _pykernels

try:
    from flyingcat import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

#: Shots per work block. Aggregates are summed per block, then blocks are
#: reduced in index order, which keeps results independent of ``workers``.
BLOCK = 4096

_BACKENDS = {"python": _pykernels}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled

_active = _BACKENDS.get(os.environ.get("FLYINGCAT_BACKEND", "cython"), _pykernels)


def available_backends():
    return sorted(_BACKENDS)


def get_backend():
    return _active.BACKEND


def set_backend(name):
    """Select ``"cython"`` or ``"python"``; returns the previous backend name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    prev = _active.BACKEND
    _active = _BACKENDS[name]
    return prev


def uniforms(seed, streams, ndraw, check=0):
    return _active.uniforms(seed, streams, ndraw, check)


def sample_checks(states, seed, streams, check, seg_x, seg_z, probs, chk_x, chk_z, abar):
    return _active.sample_checks(states, seed, streams, check, seg_x, seg_z, probs,
                                 chk_x, chk_z, abar)


def repeated_decisions(seed, streams, amps, soft):
    return _active.repeated_decisions(seed, streams, amps, soft)


def blocks(shots, block=BLOCK):
    """Split ``range(shots)`` into consecutive ``(start, stop)`` blocks."""
    return [(s, min(s + block, shots)) for s in range(0, shots, block)]


def map_blocks(fn, shots, workers=1, block=BLOCK):
    """Evaluate ``fn(start, stop)`` per block; results come back in block order."""
    spans = blocks(shots, block)
    if workers <= 1 or len(spans) <= 1:
        return [fn(a, b) for a, b in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), spans))


def ordered_sum(parts):
    """Sum block partials strictly left to right."""
    total = None
    for p in parts:
        total = p if total is None else total + p
    return total


def stream_ids(start, stop):
    return np.arange(start, stop, dtype=np.uint64)
