"""Cylinder functions of integer order and complex argument.

Thin, guarded wrappers around :mod:`scipy.special` (AMOS routines).  The guards
enforce the domain in which the downstream solvers operate: integer orders
``0 <= m <= ORDER_CAP``, ``|z| < Z_ABS_MAX`` and, for the Hankel function,
``Im z >= -Z_IM_CAP`` so that the exponential growth of ``H1`` in the lower
half plane stays bounded.

All functions broadcast over array-valued ``z``.
"""

from __future__ import annotations

from typing import Literal

import numpy as np
from scipy import special as sp

from .errors import DomainError, SingularityError

ORDER_CAP = 64
Z_ABS_MAX = 1.0e4
Z_IM_CAP = 10.0

Kind = Literal["J", "H1"]


def _check_order(m) -> int:
    if isinstance(m, (bool, np.bool_)) or not isinstance(m, (int, np.integer)):
        raise DomainError(f"cylinder order must be an integer, got {m!r}")
    m = int(m)
    if m < 0:
        raise DomainError(f"cylinder order must be non-negative, got {m}")
    if m > ORDER_CAP:
        raise DomainError(f"cylinder order {m} exceeds the cap {ORDER_CAP}")
    return m


def _check_argument(z, hankel: bool):
    z = np.asarray(z)
    if not np.all(np.isfinite(z)):
        raise DomainError("argument must be finite")
    if np.any(np.abs(z) >= Z_ABS_MAX):
        raise DomainError(f"|z| must be below {Z_ABS_MAX:g}")
    if hankel:
        if np.any(z == 0):
            raise SingularityError("Hankel function is singular at z = 0")
        if np.iscomplexobj(z) and np.any(z.imag < -Z_IM_CAP):
            raise DomainError(f"Im z must be >= -{Z_IM_CAP:g} for the Hankel function")
    return z


def _unwrap(value):
    return value[()] if isinstance(value, np.ndarray) and value.ndim == 0 else value


def bessel_j(m: int, z):
    """Bessel function of the first kind ``J_m(z)``.

    Parameters
    ----------
    m : int
        Non-negative integer order, at most :data:`ORDER_CAP`.
    z : complex or array_like
        Argument with ``|z| < 1e4``.

    Returns
    -------
    complex or ndarray
        ``J_m(z)``; real input gives real output.
    """
    m = _check_order(m)
    z = _check_argument(z, hankel=False)
    return _unwrap(sp.jv(m, z))


def bessel_y(m: int, z):
    """Bessel function of the second kind ``Y_m(z)`` (same guards as H1)."""
    m = _check_order(m)
    z = _check_argument(z, hankel=True)
    return _unwrap(sp.yv(m, z))


def hankel1(m: int, z):
    """Hankel function of the first kind ``H1_m(z) = J_m(z) + i Y_m(z)``.

    Raises
    ------
    SingularityError
        If any ``z == 0``.
    DomainError
        If ``Im z < -Z_IM_CAP`` or ``|z| >= Z_ABS_MAX``.
    """
    m = _check_order(m)
    z = _check_argument(z, hankel=True)
    return _unwrap(sp.hankel1(m, z))


def cylinder_derivative(kind: Kind, m: int, z):
    """Derivative ``C'_m(z) = (C_{m-1}(z) - C_{m+1}(z)) / 2`` for ``C = J`` or ``H1``.

    For ``m = 0`` the reflection ``C_{-1} = -C_1`` gives ``C'_0 = -C_1``.
    """
    m = _check_order(m)
    if kind == "J":
        z = _check_argument(z, hankel=False)
        func = sp.jv
    elif kind == "H1":
        z = _check_argument(z, hankel=True)
        func = sp.hankel1
    else:
        raise DomainError(f"unknown cylinder function kind {kind!r}")
    if m == 0:
        return _unwrap(-func(1, z))
    return _unwrap(0.5 * (func(m - 1, z) - func(m + 1, z)))
