"""Backend selection for the hot kernels.

The compiled ``_speedups`` extension is used when it imports; otherwise the
pure-Python ``_pure`` module.  ``CREDCHAIN_KERNEL=python`` forces the
fallback, ``CREDCHAIN_KERNEL=cython`` makes a missing extension an error.

Call sites use ``kernel.keccak256(...)`` etc. through the module so that
``set_backend`` takes effect everywhere.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pure

try:
    from . import _speedups
except ImportError:  # not built
    _speedups = None

BACKENDS: dict[str, ModuleType] = {"python": _pure}
if _speedups is not None:
    BACKENDS["cython"] = _speedups

BACKEND = ""
keccak256 = _pure.keccak256
mul_base = _pure.mul_base
mul_add = _pure.mul_add


def set_backend(name: str) -> str:
    global BACKEND, keccak256, mul_base, mul_add
    if name == "auto":
        name = "cython" if "cython" in BACKENDS else "python"
    if name not in BACKENDS:
        raise RuntimeError(
            f"kernel backend {name!r} unavailable (have: {', '.join(sorted(BACKENDS))})"
        )
    mod = BACKENDS[name]
    keccak256, mul_base, mul_add = mod.keccak256, mod.mul_base, mod.mul_add
    BACKEND = name
    return name


set_backend(os.environ.get("CREDCHAIN_KERNEL", "auto"))
