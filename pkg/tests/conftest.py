"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import mpmath
import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

mpmath.mp.dps = 30


def bessel_zero_oracle(m: int, ell: int) -> float:
    """``ell``-th positive zero of ``J_m`` by sign-change bracketing and bisection.

    Uses mpmath's hypergeometric-series ``besselj``, independent of the AMOS
    routines behind the package.
    """
    f = lambda x: mpmath.besselj(m, x)  # noqa: E731
    x, step, found = mpmath.mpf(m) + mpmath.mpf("0.5"), mpmath.mpf("0.05"), 0
    prev = f(x)
    while True:
        nxt = f(x + step)
        if prev * nxt < 0:
            found += 1
            if found == ell:
                lo, hi = x, x + step
                for _ in range(120):
                    mid = (lo + hi) / 2
                    if f(lo) * f(mid) <= 0:
                        hi = mid
                    else:
                        lo = mid
                return float((lo + hi) / 2)
        x, prev = x + step, nxt


@pytest.fixture(scope="session")
def bessel_zero():
    return bessel_zero_oracle


def dse_limit_oracle(m: int, k: complex) -> float:
    """Continuum limit of ``D_SE`` for the disk pattern ``|J_m(k r) cos(m theta)|^2``.

    With the unit disk sampled uniformly the discrete entropy approaches
    ``log N - D`` where, for a separable density ``f(r) g(theta)``,

    ``D = log(pi) + <log f> + <log g> - log(F G)`` with ``F = int f r dr``,
    ``G = int g dtheta`` and ``<log f> = int f log f r dr / F`` (likewise for
    ``g``).  Both integrals are evaluated by mpmath quadrature, the radial one
    split at the zeros of ``J_m(Re(k) r)`` where ``f log f`` has kinks.
    """
    with mpmath.workdps(20):
        k = mpmath.mpc(k)
        f = lambda r: abs(mpmath.besselj(m, k * r)) ** 2  # noqa: E731
        flogf = lambda r: f(r) * mpmath.log(f(r)) * r if f(r) > 0 else mpmath.mpf(0)  # noqa: E731
        cuts = [mpmath.mpf(0)]
        i = 1
        while True:
            z = mpmath.besseljzero(m, i) / k.real
            if z >= 1:
                break
            cuts.append(z)
            i += 1
        cuts.append(mpmath.mpf(1))
        F = mpmath.quad(lambda r: f(r) * r, cuts)
        FL = mpmath.quad(flogf, cuts)
        c2 = lambda t: mpmath.cos(m * t) ** 2  # noqa: E731
        G = mpmath.quad(c2, [0, 2 * mpmath.pi])
        GL = mpmath.quad(
            lambda t: c2(t) * mpmath.log(c2(t)) if c2(t) > 0 else mpmath.mpf(0),
            mpmath.linspace(0, 2 * mpmath.pi, 4 * m + 1),
        )
        return float(mpmath.log(mpmath.pi) + FL / F + GL / G - mpmath.log(F * G))


@pytest.fixture(scope="session")
def dse_limit():
    return dse_limit_oracle
