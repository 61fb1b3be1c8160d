"""Global tolerances, capacity limits and compute-backend selection.

Capacity limits can be overridden through the environment variable
``BETHE_COVER_LIMITS``, a comma-separated list of ``key=value`` pairs with
keys ``enum`` (configuration enumeration limit), ``contract`` (complex
entries allowed in one intermediate tensor) and ``covers`` (covers visited
by the exhaustive mean).

The compiled/pure-numpy kernel split is controlled by
``BETHE_COVER_BACKEND``: ``auto`` (default, use numba when importable),
``numba`` or ``numpy``.
"""

import os
from dataclasses import dataclass


@dataclass
class Tolerances:
    herm: float = 1e-9          # Hermitian defect allowed in a Choi matrix
    psd: float = 1e-9           # eigenvalue slack for the PSD test
    eig: float = 1e-10          # eigendecomposition reconstruction error
    fixed_point: float = 1e-9   # message residual declaring convergence
    zero: float = 1e-12         # degenerate-edge trigger inside the SPA
    z_edge: float = 1e-9        # smallest usable edge normalizer Z_e
    b_one: float = 1e-12        # trigger for the beta_e(0)=1 parameter branch
    b_fragile: float = 1e-6     # below this |1-beta_e(0)| is flagged fragile
    biorth: float = 1e-10       # biorthogonality residual of edge matrices


TOLS = Tolerances()


@dataclass
class Limits:
    enum: int = 2**24        # configurations partition_exact will visit
    contract: int = 2**26    # complex entries of one contraction intermediate
    covers: int = 10**5      # covers averaged by the exhaustive estimator


def _parse_limits(text):
    lim = Limits()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        key, _, value = part.partition("=")
        key = key.strip()
        if key not in ("enum", "contract", "covers"):
            raise ValueError(f"unknown BETHE_COVER_LIMITS key: {key!r}")
        setattr(lim, key, int(value))
    return lim


def limits():
    """Capacity limits, honoring the BETHE_COVER_LIMITS environment."""
    text = os.environ.get("BETHE_COVER_LIMITS")
    if not text:
        return Limits()
    return _parse_limits(text)


def backend():
    """Selected kernel backend: 'numba' or 'numpy'."""
    choice = os.environ.get("BETHE_COVER_BACKEND", "auto").lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"unknown BETHE_COVER_BACKEND: {choice!r}")
    if choice == "auto":
        from . import _kernels

        return "numba" if _kernels.NUMBA_OK else "numpy"
    return choice
