"""Nystrom boundary-integral solver for resonances of the elliptic cavity.

Densities live on ``M`` equal-arc-length nodes (``M`` even).  With the
outgoing fundamental solution ``Phi(x, y) = (i/4) H1_0(k |x - y|)`` the
boundary operators are

``S phi(x) = int Phi(x, y) phi(y) ds_y`` and
``K phi(x) = int dPhi/dn_y(x, y) phi(y) ds_y``.

Their logarithmic singularities are split off and integrated with Kress'
product quadrature, giving spectral accuracy on smooth boundaries.

Open cavity (TE/TM), unknowns ``u = psi`` and ``v = d psi/dn`` on the inner
side of the boundary, interior wavenumber ``n k``, exterior ``k``::

    [ I/2 + K_in   -S_in   ] [u]
    [ I/2 - K_out  p S_out ] [v] = 0,     p = 1 (TM), 1/n^2 (TE)

Closed cavity (Dirichlet): ``S_in v = 0``.  Resonances are the ``kR`` at which
the smallest singular value of the system matrix dips to zero.

The ellipse is symmetric under ``y -> -y``; passing ``parity="even"`` or
``"odd"`` restricts the densities to that symmetry class, which halves the
system and separates the near-degenerate ``cos``/``sin`` partners.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy import optimize
from scipy import special as sp

from .disk import ModeRecord
from .errors import DiscretizationError, DomainError, NoResonanceError
from .geometry import (
    BoundaryDiscretization,
    EllipseSpec,
    InteriorMesh,
    Polarization,
    boundary_nodes,
)

Parity = Literal["even", "odd"] | None

MIN_POINTS_PER_WAVELENGTH = 10.0
DEFAULT_POINTS_PER_WAVELENGTH = 12.0
DIP_THRESHOLD = 1e-3
KR_TOLERANCE = 1e-7
EULER_GAMMA = np.euler_gamma
_CHUNK = 2048


# ---------------------------------------------------------------------------
# resolution bookkeeping
# ---------------------------------------------------------------------------


def points_per_wavelength(shape: EllipseSpec, M: int, kR) -> float:
    """Boundary nodes per interior wavelength ``2 pi / (n Re k)``."""
    return 2.0 * np.pi * M / (shape.refractive_index * np.real(kR) * shape.perimeter)


def nodes_for_resolution(shape: EllipseSpec, kR, ppw: float = DEFAULT_POINTS_PER_WAVELENGTH) -> int:
    """Smallest even node count (>= 32) giving ``ppw`` points per interior wavelength."""
    M = int(np.ceil(ppw * shape.refractive_index * np.real(kR) * shape.perimeter / (2.0 * np.pi)))
    M = max(M, 32)
    return M + (M % 2)


def _check_resolution(
    shape: EllipseSpec, M: int, kR, min_ppw: float = MIN_POINTS_PER_WAVELENGTH
) -> None:
    if M % 2:
        raise DiscretizationError(f"M must be even for the Kress quadrature, got {M}")
    ppw = points_per_wavelength(shape, M, kR)
    if ppw < min_ppw * (1.0 - 1e-12):
        raise DiscretizationError(
            f"M={M} gives {ppw:.2f} points per interior wavelength "
            f"(< {min_ppw:g}) at kR={kR}"
        )


# ---------------------------------------------------------------------------
# operator assembly
# ---------------------------------------------------------------------------


def _kress_weights(M: int) -> np.ndarray:
    """``R(t_k)`` for ``t_k = 2 pi k / M`` (Kress log quadrature, ``M = 2 n``)."""
    n = M // 2
    t = 2.0 * np.pi * np.arange(M) / M
    m = np.arange(1, n)
    series = np.cos(np.outer(t, m)) @ (1.0 / m)
    return -(2.0 * np.pi / n) * series - (np.pi / n**2) * np.cos(n * t)


def _kernel_functions(k: complex, r: np.ndarray):
    """``H0, H1, J0, J1`` at ``k r``, evaluated once per distinct distance.

    Distances repeat under the symmetries of the ellipse (transposition and
    both mirror axes; every index difference on the circle), so cylinder
    functions are computed on distances rounded to 1e-13 and scattered back.
    The rounding perturbs the kernels far below the quadrature error.
    """
    key = np.round(r, 13)
    uniq, inverse = np.unique(key, return_inverse=True)
    inverse = inverse.reshape(r.shape)
    kr = k * uniq
    if k.imag == 0.0:
        kr = kr.real
        J0, J1 = sp.j0(kr), sp.j1(kr)
        H0 = J0 + 1j * sp.y0(kr)
        H1 = J1 + 1j * sp.y1(kr)
    else:
        H0, H1 = sp.hankel1(0, kr), sp.hankel1(1, kr)
        J0, J1 = sp.jv(0, kr), sp.jv(1, kr)
    return H0[inverse], H1[inverse], J0[inverse], J1[inverse]


def _layer_operators(
    nodes: BoundaryDiscretization, k: complex, rows: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Rows ``rows`` of the discrete single (S) and double (K) layer operators."""
    M = nodes.M
    n_half = M // 2
    c = nodes.perimeter / (2.0 * np.pi)  # |dx/dsigma|
    x = nodes.points[rows]
    y = nodes.points
    dx = x[:, None, :] - y[None, :, :]
    r = np.hypot(dx[..., 0], dx[..., 1])
    idx = (rows[:, None] - np.arange(M)[None, :]) % M
    diag = idx == 0
    r_safe = np.where(diag, 1.0, r)
    ndot = np.einsum("ijk,jk->ij", dx, nodes.normals)  # n_y . (x - y)

    H0, H1, J0, J1 = _kernel_functions(k, r_safe)
    logterm = np.log(np.where(diag, 1.0, 4.0 * np.sin(np.pi * idx / M) ** 2))

    # single layer: Phi c = A1 log(4 sin^2) + A2
    A1 = -(c / (4.0 * np.pi)) * J0
    A = 0.25j * c * H0
    A2 = A - A1 * logterm
    A2_diag = c * (0.25j - (EULER_GAMMA + np.log(k * c / 2.0)) / (2.0 * np.pi))
    A1 = np.where(diag, -(c / (4.0 * np.pi)), A1)
    A2 = np.where(diag, A2_diag, A2)

    # double layer: dPhi/dn_y c = B1 log(4 sin^2) + B2
    geom = ndot / r_safe
    B = 0.25j * k * c * H1 * geom
    B1 = -(k * c / (4.0 * np.pi)) * J1 * geom
    B2 = B - B1 * logterm
    B2_diag = -c * nodes.curvature[rows] / (4.0 * np.pi)
    B1 = np.where(diag, 0.0, B1)
    B2 = np.where(diag, B2_diag[:, None], B2)

    R = _kress_weights(M)[idx]
    w = np.pi / n_half
    S = R * A1 + w * A2
    K = R * B1 + w * B2
    return S, K


def _parity_indices(M: int, parity: Parity) -> np.ndarray:
    half = M // 2
    if parity is None:
        return np.arange(M)
    if parity == "even":
        return np.arange(half + 1)
    if parity == "odd":
        return np.arange(1, half)
    raise DomainError(f"parity must be 'even', 'odd' or None, got {parity!r}")


def _fold(block: np.ndarray, M: int, parity: Parity) -> np.ndarray:
    """Combine mirror columns ``j`` and ``M - j`` for a symmetric density."""
    if parity is None:
        return block
    cols = _parity_indices(M, parity)
    mirror = (M - cols) % M
    sign = 1.0 if parity == "even" else -1.0
    folded = block[:, cols] + sign * block[:, mirror]
    if parity == "even":
        self_mirror = cols == mirror
        folded[:, self_mirror] = block[:, cols[self_mirror]]
    return folded


def _unfold(values: np.ndarray, M: int, parity: Parity) -> np.ndarray:
    if parity is None:
        return values
    cols = _parity_indices(M, parity)
    full = np.zeros(M, dtype=complex)
    full[cols] = values
    sign = 1.0 if parity == "even" else -1.0
    full[(M - cols) % M] = sign * values
    return full


def system_matrix(
    shape: EllipseSpec,
    nodes: BoundaryDiscretization,
    kR: complex,
    parity: Parity = None,
) -> np.ndarray:
    """Boundary-integral system matrix at ``kR`` (see module docstring)."""
    if parity is not None and nodes.phase != 0.0:
        raise DomainError("parity reduction requires phase-0 (mirror-symmetric) nodes")
    M = nodes.M
    rows = _parity_indices(M, parity)
    n = shape.refractive_index
    k_in = n * complex(kR)
    S_in, K_in = _layer_operators(nodes, k_in, rows)
    if shape.polarization is Polarization.DIRICHLET:
        return _fold(S_in, M, parity)
    p = 1.0 if shape.polarization is Polarization.TM else 1.0 / n**2
    S_out, K_out = _layer_operators(nodes, complex(kR), rows)
    eye = np.zeros((rows.size, M))
    eye[np.arange(rows.size), rows] = 0.5
    top = np.hstack([_fold(eye + K_in, M, parity), -k_in * _fold(S_in, M, parity)])
    bottom = np.hstack([_fold(eye - K_out, M, parity), p * k_in * _fold(S_out, M, parity)])
    return np.vstack([top, bottom])


def _singular_values(shape, nodes, kR, parity) -> np.ndarray:
    return np.linalg.svd(system_matrix(shape, nodes, kR, parity), compute_uv=False)


def bem_min_singular(
    shape: EllipseSpec,
    M: int,
    kR,
    parity: Parity = None,
    phase: float = 0.0,
    relative: bool = False,
    min_ppw: float = MIN_POINTS_PER_WAVELENGTH,
) -> float:
    """Smallest singular value of the boundary-integral system at ``kR``.

    Parameters
    ----------
    shape : EllipseSpec
        Cavity (its polarisation selects the formulation).
    M : int
        Even number of boundary nodes; at least 10 per interior wavelength.
    kR : complex
        Trial wavenumber.
    parity : {"even", "odd", None}
        Optional mirror-symmetry restriction.
    phase : float
        Rigid offset of the node set (see :func:`boundary_nodes`).
    relative : bool
        If true return ``sigma_min / median(sigma)`` instead.

    Raises
    ------
    DiscretizationError
        If the boundary is under-resolved or ``M`` is odd.
    """
    _check_resolution(shape, M, kR, min_ppw)
    nodes = boundary_nodes(shape, M, phase=phase)
    sv = _singular_values(shape, nodes, kR, parity)
    if relative:
        return float(sv[-1] / np.median(sv))
    return float(sv[-1])


# ---------------------------------------------------------------------------
# resonance search
# ---------------------------------------------------------------------------


def bem_find_mode(
    shape: EllipseSpec,
    M: int | None,
    seed_kR,
    parity: Parity = "even",
    mesh: InteriorMesh | None = None,
    quantum_numbers: tuple[int, int] | None = None,
    tol: float = KR_TOLERANCE,
    dip_threshold: float = DIP_THRESHOLD,
    min_ppw: float = MIN_POINTS_PER_WAVELENGTH,
) -> ModeRecord:
    """Locate the resonance nearest to ``seed_kR`` by minimising ``sigma_min``.

    Closed cavities use a bracketing Brent search on the real axis; open
    cavities a Nelder-Mead simplex in the complex plane.  The boundary
    densities of the null vector are kept on the record, and the interior
    field is reconstructed on ``mesh`` when one is given (normalised to
    ``max |psi| = 1``).

    Raises
    ------
    NoResonanceError
        If ``sigma_min / median(sigma)`` at the minimum exceeds ``dip_threshold``.
    DiscretizationError
        If ``M`` gives fewer than ``min_ppw`` points per interior wavelength
        (lowering ``min_ppw`` is only meant for convergence studies).
    """
    seed = complex(seed_kR)
    if M is None:
        M = nodes_for_resolution(shape, seed)
    _check_resolution(shape, M, seed, min_ppw)
    nodes = boundary_nodes(shape, M)
    closed = shape.polarization is Polarization.DIRICHLET

    def objective(k: complex) -> float:
        return _singular_values(shape, nodes, k, parity)[-1] ** 2

    evaluations = 0
    if closed:
        res = optimize.minimize_scalar(
            lambda x: objective(complex(x, 0.0)),
            # downhill bracketing that starts at the seed itself
            bracket=(seed.real, seed.real + 1e-3),
            method="brent",
            options={"xtol": tol * 1e-3, "maxiter": 200},
        )
        kR = complex(float(res.x), 0.0)
        evaluations = int(res.nfev)
    else:
        step = 0.01
        simplex = np.array(
            [[seed.real, seed.imag], [seed.real + step, seed.imag], [seed.real, seed.imag + step]]
        )
        res = optimize.minimize(
            lambda p: objective(complex(p[0], p[1])),
            x0=np.array([seed.real, seed.imag]),
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "xatol": tol * 1e-3,
                "fatol": np.inf,
                "maxiter": 2000,
                "maxfev": 4000,
            },
        )
        kR = complex(float(res.x[0]), float(res.x[1]))
        evaluations = int(res.nfev)
    if not kR.real > 0:
        raise NoResonanceError(f"search from seed {seed} left Re(kR) > 0")

    matrix = system_matrix(shape, nodes, kR, parity)
    _, sv, vh = np.linalg.svd(matrix)
    ratio = float(sv[-1] / np.median(sv))
    if ratio > dip_threshold:
        raise NoResonanceError(
            f"no resonance near seed {seed}: sigma_min/median = {ratio:.2e} at kR={kR}"
        )
    null = vh[-1].conj()
    u, v = _densities_from_null(null, shape, M, kR, parity)
    record = ModeRecord(
        kR=kR,
        shape=shape,
        quantum_numbers=quantum_numbers,
        densities=(u, v),
        M=M,
        info={
            "method": "bem",
            "parity": parity,
            "sigma_ratio": ratio,
            "sigma_min": float(sv[-1]),
            "evaluations": evaluations,
            "seed": [seed.real, seed.imag],
        },
    )
    if mesh is not None:
        record = replace(record, field=interior_field(record, mesh), mesh=mesh)
    return record


def _densities_from_null(null, shape, M, kR, parity):
    if shape.polarization is Polarization.DIRICHLET:
        u = np.zeros(M, dtype=complex)
        v = _unfold(null, M, parity)
    else:
        half = null.size // 2
        u = _unfold(null[:half], M, parity)
        v = shape.refractive_index * complex(kR) * _unfold(null[half:], M, parity)
    # fix the global phase deterministically: largest density entry real positive
    ref = v if not np.any(u) else u
    j = int(np.argmax(np.abs(ref)))
    phase = np.abs(ref[j]) / ref[j]
    return u * phase, v * phase


# ---------------------------------------------------------------------------
# interior field reconstruction
# ---------------------------------------------------------------------------


def _trig_upsample(values: np.ndarray, factor: int) -> np.ndarray:
    """Trigonometric interpolation of periodic nodal values onto ``factor * M`` nodes."""
    if factor == 1:
        return values
    M = values.size
    spec = np.fft.fft(values)
    out = np.zeros(M * factor, dtype=complex)
    half = M // 2
    out[:half] = spec[:half]
    out[-half + 1 :] = spec[half + 1 :]
    # split the Nyquist coefficient symmetrically
    out[half] = 0.5 * spec[half]
    out[-half] = 0.5 * spec[half]
    return np.fft.ifft(out) * factor


def _potential(points, nodes, k, u, v) -> np.ndarray:
    """Trapezoidal ``S[v] - D[u]`` at off-boundary points."""
    out = np.empty(points.shape[0], dtype=complex)
    w = nodes.weights
    has_u = np.any(u)
    for start in range(0, points.shape[0], _CHUNK):
        p = points[start : start + _CHUNK]
        dx = p[:, None, :] - nodes.points[None, :, :]
        r = np.hypot(dx[..., 0], dx[..., 1])
        val = (0.25j * sp.hankel1(0, k * r)) @ (w * v)
        if has_u:
            ndot = np.einsum("ijk,jk->ij", dx, nodes.normals)
            dphi = 0.25j * k * sp.hankel1(1, k * r) * ndot / r
            val = val - dphi @ (w * u)
        out[start : start + _CHUNK] = val
    return out


def _boundary_distance(shape: EllipseSpec, points: np.ndarray, nodes: BoundaryDiscretization):
    """Approximate distance to the boundary (nearest node minus half an element)."""
    d = np.empty(points.shape[0])
    for start in range(0, points.shape[0], _CHUNK):
        p = points[start : start + _CHUNK]
        diff = p[:, None, :] - nodes.points[None, :, :]
        d[start : start + _CHUNK] = np.min(np.hypot(diff[..., 0], diff[..., 1]), axis=1)
    return np.maximum(d - 0.5 * nodes.element_length, 0.0)


def field_at_points(
    shape: EllipseSpec,
    kR,
    densities: tuple[np.ndarray, np.ndarray],
    points: np.ndarray,
    max_oversampling: int = 256,
) -> np.ndarray:
    """Interior field ``psi = S_in[v] - D_in[u]`` at arbitrary interior points.

    Points within two element lengths of the boundary are evaluated with a
    trigonometrically interpolated, oversampled quadrature; the factor grows
    in powers of four (at least 4) until the local node spacing is at most half
    the point's distance to the boundary.
    """
    u, v = densities
    M = u.size
    k = shape.refractive_index * complex(kR)
    nodes = boundary_nodes(shape, M)
    points = np.asarray(points, dtype=float)
    psi = np.empty(points.shape[0], dtype=complex)
    dist = _boundary_distance(shape, points, nodes)
    spacing = nodes.element_length
    factor = np.ones(points.shape[0], dtype=int)
    near = dist < 2.0 * spacing
    factor[near] = 4
    while True:
        grow = near & (spacing / factor > 0.5 * dist) & (factor < max_oversampling)
        if not np.any(grow):
            break
        factor[grow] *= 4
    for f in np.unique(factor):
        sel = factor == f
        if f == 1:
            psi[sel] = _potential(points[sel], nodes, k, u, v)
        else:
            fine = boundary_nodes(shape, M * int(f))
            psi[sel] = _potential(
                points[sel], fine, k, _trig_upsample(u, int(f)), _trig_upsample(v, int(f))
            )
    return psi


@dataclass(frozen=True, eq=False)
class FourierBesselField:
    """Interior field as a Fourier-Bessel series ``sum_m a_m J_m(k r) e^(i m theta)``.

    Every interior Helmholtz solution has this form; for the near-circular
    cavities of the family the series converges up to the boundary.  The
    coefficients are fitted to the boundary-integral representation on rings
    well inside the cavity, where the plain trapezoidal rule is spectrally
    accurate, and the series then evaluates the field anywhere inside at a
    cost independent of the distance to the boundary.

    Attributes
    ----------
    k : complex
        Interior wavenumber ``n kR``.
    orders : ndarray of int
        Retained angular orders ``m``.
    coefficients : ndarray of complex
        ``a_m`` for each retained order.
    """

    k: complex
    orders: np.ndarray
    coefficients: np.ndarray

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        r = np.hypot(points[:, 0], points[:, 1])
        theta = np.arctan2(points[:, 1], points[:, 0])
        out = np.zeros(points.shape[0], dtype=complex)
        for start in range(0, points.shape[0], _CHUNK):
            sl = slice(start, start + _CHUNK)
            radial = sp.jv(self.orders[:, None], self.k * r[None, sl])
            angular = np.exp(1j * self.orders[:, None] * theta[None, sl])
            out[sl] = (self.coefficients[:, None] * radial * angular).sum(axis=0)
        return out


FB_RING_FRACTIONS = (0.6, 0.7, 0.8)
FB_RING_SAMPLES = 512
FB_DROP_TOLERANCE = 1e-13


def fourier_bessel_field(
    shape: EllipseSpec,
    kR,
    densities: tuple[np.ndarray, np.ndarray],
    ring_fractions: tuple[float, ...] = FB_RING_FRACTIONS,
    samples: int = FB_RING_SAMPLES,
) -> FourierBesselField:
    """Fit the Fourier-Bessel series of a boundary-integral interior field.

    The field is evaluated directly on rings of radius ``f * b`` (``b`` the
    minor semi-axis); each ring's FFT gives ``a_m J_m(k r_ring)``, and ``a_m``
    is the least-squares combination over the rings, which stays well
    conditioned where a single ``J_m(k r_ring)`` is close to a zero.  Orders
    whose ring coefficients are at round-off level are dropped so that noise is
    not amplified towards the rim.
    """
    k = shape.refractive_index * complex(kR)
    theta = 2.0 * np.pi * np.arange(samples) / samples
    radii = np.array([f * shape.b for f in ring_fractions])
    orders = np.fft.fftfreq(samples, 1.0 / samples).astype(int)
    ring_coeffs = []
    for r in radii:
        ring = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        ring_coeffs.append(np.fft.fft(field_at_points(shape, kR, densities, ring)) / samples)
    C = np.array(ring_coeffs)
    J = sp.jv(orders[None, :], k * radii[:, None])
    keep = np.max(np.abs(C), axis=0) > FB_DROP_TOLERANCE * np.max(np.abs(C))
    # stay clear of the aliased band near the Nyquist order
    keep &= np.abs(orders) < samples // 4
    J, C = J[:, keep], C[:, keep]
    a = np.sum(np.conj(J) * C, axis=0) / np.sum(np.abs(J) ** 2, axis=0)
    return FourierBesselField(k, orders[keep], a)


def interior_field(mode: ModeRecord, mesh: InteriorMesh) -> np.ndarray:
    """Field of a boundary-integral mode on ``mesh``, normalised to ``max |psi| = 1``."""
    if mode.densities is None:
        raise DomainError("mode carries no boundary densities")
    psi = field_at_points(mode.shape, mode.kR, mode.densities, mesh.points)
    peak = np.max(np.abs(psi))
    if peak == 0:
        return psi
    j = int(np.argmax(np.abs(psi)))
    return psi * (np.abs(psi[j]) / psi[j]) / peak
