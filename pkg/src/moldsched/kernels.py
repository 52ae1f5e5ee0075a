"""Backend selection for the integer inner loops.

The compiled extension is used when it was built and imports cleanly;
``MOLDSCHED_KERNELS=python`` forces the pure-Python loops.  Calls whose
integer magnitudes could exceed 63 bits always take the Python path.
"""

from __future__ import annotations

import logging
import math
import os
from fractions import Fraction
from types import ModuleType
from typing import Iterable

from . import _pykernels

log = logging.getLogger(__name__)

try:  # pragma: no cover - depends on the build
    from . import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

INT_LIMIT = 1 << 62


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _ckernels is not None else [])


def get_backend(name: str | None = None) -> ModuleType:
    name = name or os.environ.get("MOLDSCHED_KERNELS", "auto")
    if name == "python":
        return _pykernels
    if name in ("cython", "auto"):
        if _ckernels is not None:
            return _ckernels
        if name == "cython":
            raise RuntimeError("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
        return _pykernels
    raise ValueError(f"unknown kernel backend {name!r}")


def pick(magnitude: int, backend: str | None = None) -> ModuleType:
    mod = get_backend(backend)
    if mod is not _pykernels and magnitude >= INT_LIMIT:
        log.debug("values up to %d exceed 63 bits; using python kernels", magnitude)
        return _pykernels
    return mod


def common_denominator(values: Iterable[Fraction]) -> int:
    den = 1
    for v in values:
        den = math.lcm(den, v.denominator)
    return den


def csr(rows: Iterable[Iterable[int]]) -> tuple[list[int], list[int]]:
    ptr, idx = [0], []
    for row in rows:
        idx.extend(row)
        ptr.append(len(idx))
    return ptr, idx
