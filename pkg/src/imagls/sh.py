"""Complex spherical harmonics, quadrature grids, and discrete transforms.

Conventions used throughout the package:

* orthonormal complex spherical harmonics with the Condon-Shortley phase,
* ACN linear indexing of coefficients, ``index = n*(n+1) + m``,
* quadrature weights summing to the sphere area ``4*pi``, so that weighted
  sums over a grid are discrete surface integrals.

Normalized associated Legendre values are produced by the standard
three-term recurrence over degree with diagonal seeding, which stays finite
far beyond the factorial-overflow limit of the closed-form expressions
(n ~ 10).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

FOUR_PI = 4.0 * math.pi
TWO_PI = 2.0 * math.pi


class GridParseError(ValueError):
    """A grid file is structurally malformed."""


class WeightSumError(ValueError):
    """Quadrature weights do not sum to the sphere area 4*pi."""


class OrthonormalityError(ValueError):
    """A grid failed its discrete orthonormality (Gram matrix) check."""


def acn_index(n: int, m: int) -> int:
    """Linear coefficient index ``n*(n+1) + m`` of the degree/order pair."""
    return n * n + n + m


def _normalize_azimuth(value: float) -> float:
    az = float(value) % TWO_PI
    if az >= TWO_PI:  # float fold-back for tiny negative inputs
        az -= TWO_PI
    return az


@dataclass(frozen=True)
class Direction:
    """A point on the unit sphere.

    ``azimuth`` is normalized into ``[0, 2*pi)``.  ``colatitude`` must lie
    in ``[0, pi]``; out-of-range values are rejected rather than clamped.
    """

    azimuth: float
    colatitude: float

    def __post_init__(self):
        if not (math.isfinite(self.azimuth) and math.isfinite(self.colatitude)):
            raise ValueError("direction angles must be finite")
        object.__setattr__(self, "azimuth", _normalize_azimuth(self.azimuth))
        col = float(self.colatitude)
        if not 0.0 <= col <= math.pi:
            raise ValueError(f"colatitude {col} outside [0, pi]")
        object.__setattr__(self, "colatitude", col)


@dataclass(frozen=True)
class ShCoeffVec:
    """Spherical-harmonics coefficients of one function, ACN-ordered.

    ``coeffs`` has length ``(order + 1)**2``.
    """

    order: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be >= 0")
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.ndim != 1 or coeffs.shape[0] != (self.order + 1) ** 2:
            raise ValueError(
                f"expected {(self.order + 1) ** 2} coefficients for order "
                f"{self.order}, got shape {coeffs.shape}"
            )
        object.__setattr__(self, "coeffs", coeffs)


@dataclass(frozen=True)
class SphericalGrid:
    """Directions with quadrature weights on the unit sphere.

    ``max_exact_order`` declares the highest spherical-harmonics order
    whose products the weights integrate exactly; the cheap invariants
    (positive size, nonnegative weights, weight sum ``4*pi``) are enforced
    here, while the Gram-matrix identity is checked by
    :func:`verify_quadrature` (grids loaded from files are probed up to
    order 10 automatically).
    """

    azimuths: np.ndarray
    colatitudes: np.ndarray
    weights: np.ndarray
    max_exact_order: int

    def __post_init__(self):
        az = np.asarray(self.azimuths, dtype=float).reshape(-1)
        col = np.asarray(self.colatitudes, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if not (az.size == col.size == w.size):
            raise ValueError("directions and weights must have equal length")
        if az.size < 1:
            raise ValueError("a grid needs at least one direction")
        if self.max_exact_order < 0:
            raise ValueError("max_exact_order must be >= 0")
        if not np.all(np.isfinite(az)) or not np.all(np.isfinite(col)):
            raise ValueError("direction angles must be finite")
        if np.any(col < 0.0) or np.any(col > math.pi):
            raise ValueError("colatitudes must lie in [0, pi]")
        az = az % TWO_PI
        az[az >= TWO_PI] -= TWO_PI
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        total = float(w.sum())
        if abs(total - FOUR_PI) > 1e-9 * FOUR_PI:
            raise WeightSumError(
                f"weights sum to {total!r}, expected 4*pi = {FOUR_PI!r}"
            )
        object.__setattr__(self, "azimuths", az)
        object.__setattr__(self, "colatitudes", col)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.azimuths.shape[0]

    def __len__(self) -> int:
        return self.size

    @cached_property
    def directions(self) -> tuple[Direction, ...]:
        return tuple(
            Direction(a, c) for a, c in zip(self.azimuths, self.colatitudes)
        )


def _dirs_to_arrays(dirs) -> tuple[np.ndarray, np.ndarray]:
    """Coerce a direction spec into (azimuths, colatitudes) arrays."""
    if isinstance(dirs, SphericalGrid):
        return dirs.azimuths, dirs.colatitudes
    if isinstance(dirs, Direction):
        return np.array([dirs.azimuth]), np.array([dirs.colatitude])
    if isinstance(dirs, tuple) and len(dirs) == 2 and not isinstance(dirs[0], Direction):
        az = np.atleast_1d(np.asarray(dirs[0], dtype=float))
        col = np.atleast_1d(np.asarray(dirs[1], dtype=float))
        if az.shape != col.shape:
            raise ValueError("azimuth and colatitude arrays must match in shape")
        return az, col
    dirs = list(dirs)
    az = np.array([d.azimuth for d in dirs], dtype=float)
    col = np.array([d.colatitude for d in dirs], dtype=float)
    return az, col


def sh_matrix(order: int, azimuths, colatitudes) -> np.ndarray:
    """Evaluate all spherical harmonics up to ``order`` at given angles.

    Parameters
    ----------
    order : int
        Maximum spherical-harmonics order N >= 0.
    azimuths, colatitudes : array_like
        Angles in radians, equal shapes.

    Returns
    -------
    np.ndarray
        Complex matrix of shape ``(n_points, (order + 1)**2)``; column
        ``acn_index(n, m)`` holds Y_n^m at each point.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    az = np.atleast_1d(np.asarray(azimuths, dtype=float))
    col = np.atleast_1d(np.asarray(colatitudes, dtype=float))
    if az.shape != col.shape or az.ndim != 1:
        raise ValueError("azimuths and colatitudes must be equal-length 1-D arrays")
    x = np.cos(col)
    s = np.sin(col)
    out = np.empty((az.shape[0], (order + 1) ** 2), dtype=complex)
    # p_diag walks the n == m diagonal of the orthonormal associated
    # Legendre table; the Condon-Shortley sign rides in the (-s) factor.
    p_diag = np.full(az.shape[0], math.sqrt(1.0 / FOUR_PI))
    for m in range(order + 1):
        if m > 0:
            p_diag = p_diag * (-s) * math.sqrt((2 * m + 1) / (2.0 * m))
        e_pos = np.exp(1j * m * az)
        neg_sign = -1.0 if m % 2 else 1.0
        p_prev = np.zeros_like(p_diag)
        p_curr = p_diag
        for n in range(m, order + 1):
            if n > m:
                a = math.sqrt((4 * n * n - 1) / (n * n - m * m))
                b = 0.0 if n == m + 1 else math.sqrt(
                    ((n - 1) ** 2 - m * m) / (4.0 * (n - 1) ** 2 - 1)
                )
                p_prev, p_curr = p_curr, a * (x * p_curr - b * p_prev)
            y_pos = p_curr * e_pos
            out[:, acn_index(n, m)] = y_pos
            if m > 0:
                out[:, acn_index(n, -m)] = neg_sign * np.conj(y_pos)
    return out


def sh_basis(n: int, m: int, direction) -> complex:
    """Single orthonormal spherical harmonic Y_n^m at one direction.

    Rejects ``n < 0`` and ``|m| > n``.
    """
    if n < 0:
        raise ValueError(f"degree n must be >= 0, got {n}")
    if abs(m) > n:
        raise ValueError(f"|m| must not exceed n, got (n, m) = ({n}, {m})")
    az, col = _dirs_to_arrays(direction)
    return complex(sh_matrix(n, az, col)[0, acn_index(n, m)])


def analysis_operator(grid: SphericalGrid, order: int) -> np.ndarray:
    """Quadrature analysis operator mapping grid samples to SH coefficients.

    Returns the ``((order+1)**2, Q)`` matrix ``Y^H diag(w)``; applying it to
    sampled values realizes the weighted sums of the forward transform.
    """
    if order > grid.max_exact_order:
        raise ValueError(
            f"order {order} exceeds the grid's exact order "
            f"{grid.max_exact_order}; results would alias"
        )
    y = sh_matrix(order, grid.azimuths, grid.colatitudes)
    return y.conj().T * grid.weights


def sht(grid: SphericalGrid, values, order: int) -> ShCoeffVec:
    """Forward spherical-harmonics transform by quadrature.

    ``coeffs[n, m] = sum_q w_q * values_q * conj(Y_n^m(dir_q))``.  Orders
    above ``grid.max_exact_order`` are rejected since aliasing would
    silently corrupt the result.
    """
    v = np.asarray(values, dtype=complex).reshape(-1)
    if v.shape[0] != grid.size:
        raise ValueError(
            f"got {v.shape[0]} values for a grid of {grid.size} directions"
        )
    coeffs = analysis_operator(grid, order) @ v
    return ShCoeffVec(order, coeffs)


def isht(coeffs: ShCoeffVec, dirs) -> np.ndarray:
    """Inverse transform: synthesize SH coefficients at given directions."""
    az, col = _dirs_to_arrays(dirs)
    return sh_matrix(coeffs.order, az, col) @ coeffs.coeffs


def verify_quadrature(grid: SphericalGrid, order: int | None = None,
                      tol: float = 1e-8) -> float:
    """Check the discrete orthonormality of a grid up to ``order``.

    Forms the Gram matrix of all SH basis functions under the grid's
    weights and compares it to the identity.  Returns the maximum absolute
    entry deviation; raises :class:`OrthonormalityError` when it exceeds
    ``tol``.
    """
    if order is None:
        order = grid.max_exact_order
    y = sh_matrix(order, grid.azimuths, grid.colatitudes)
    gram = (y.conj().T * grid.weights) @ y
    dev = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    if dev > tol:
        raise OrthonormalityError(
            f"Gram matrix deviates from identity by {dev:.3e} at order "
            f"{order} (tolerance {tol:.1e})"
        )
    return dev


def gauss_grid(order: int) -> SphericalGrid:
    """Gauss-Legendre x uniform-azimuth product grid exact to ``order``.

    Uses ``order + 1`` Gauss-Legendre colatitudes and ``2*order + 2``
    equispaced azimuths; weights sum to ``4*pi``.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    nodes, gl_weights = np.polynomial.legendre.leggauss(order + 1)
    colats = np.arccos(nodes[::-1])
    gl_weights = gl_weights[::-1]
    n_az = 2 * order + 2
    azims = TWO_PI * np.arange(n_az) / n_az
    az = np.repeat(azims[None, :], order + 1, axis=0).reshape(-1)
    col = np.repeat(colats, n_az)
    w = np.repeat(gl_weights * (TWO_PI / n_az), n_az)
    return SphericalGrid(az, col, w, order)


def save_grid(grid: SphericalGrid, path) -> None:
    """Write a grid in the text format ``sphgrid v1 <Q> <max_exact_order>``."""
    lines = [f"sphgrid v1 {grid.size} {grid.max_exact_order}"]
    for a, c, w in zip(grid.azimuths, grid.colatitudes, grid.weights):
        lines.append(f"{a:.17g} {c:.17g} {w:.17g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_grid(path) -> SphericalGrid:
    """Read a ``sphgrid v1`` file and validate it.

    The declared ``max_exact_order`` is verified by the Gram check up to
    ``min(declared, 10)`` at load time; run :func:`verify_quadrature` for
    the full check.  Raises :class:`GridParseError` for structural
    problems, :class:`WeightSumError` when the weights do not sum to
    ``4*pi``, and :class:`OrthonormalityError` when the Gram check fails.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise GridParseError(f"{path}: empty grid file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "sphgrid" or head[1] != "v1":
        raise GridParseError(
            f"{path}: bad header {lines[0]!r}; expected 'sphgrid v1 <Q> <order>'"
        )
    try:
        q = int(head[2])
        declared = int(head[3])
    except ValueError as exc:
        raise GridParseError(f"{path}: non-integer size or order in header") from exc
    if q < 1 or declared < 0:
        raise GridParseError(f"{path}: invalid size {q} or order {declared}")
    if len(lines) - 1 != q:
        raise GridParseError(
            f"{path}: header declares {q} nodes, found {len(lines) - 1}"
        )
    try:
        data = np.array(
            [[float(tok) for tok in ln.split()] for ln in lines[1:]], dtype=float
        )
    except ValueError as exc:
        raise GridParseError(f"{path}: non-numeric node line") from exc
    if data.ndim != 2 or data.shape[1] != 3:
        raise GridParseError(
            f"{path}: each node line must be 'azimuth colatitude weight'"
        )
    grid = SphericalGrid(data[:, 0], data[:, 1], data[:, 2], declared)
    verify_quadrature(grid, min(declared, 10))
    return grid
