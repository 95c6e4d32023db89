"""Direction-domain HRTF data model and the rigid-sphere reference.

The analytic reference is the total pressure on a rigid sphere hit by a
unit plane wave, evaluated at two antipodal-ish ear positions.  With the
``e^{+i omega t}`` time convention used here the outgoing radial functions
are spherical Hankel functions of the second kind; HRTFs imported from
sources that use ``e^{-i omega t}`` must be conjugated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.special import spherical_jn, spherical_yn

from .sh import (
    FOUR_PI,
    TWO_PI,
    SphericalGrid,
    ShCoeffVec,
    analysis_operator,
    sh_matrix,
)

MAX_TRANSFER_MAGNITUDE = 1e6


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing positive frequencies, in Hz."""

    freqs_hz: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs_hz, dtype=float).reshape(-1)
        if f.size < 1:
            raise ValueError("frequency grid must not be empty")
        if not np.all(np.isfinite(f)) or np.any(f <= 0.0):
            raise ValueError("frequencies must be finite and > 0")
        if f.size > 1 and np.any(np.diff(f) <= 0.0):
            raise ValueError("frequencies must be strictly increasing")
        object.__setattr__(self, "freqs_hz", f)

    @classmethod
    def uniform(cls, count: int = 96, step_hz: float = 187.5) -> "FrequencyGrid":
        """Uniform grid ``step, 2*step, ..., count*step`` (default 187.5 Hz
        to 18 kHz in 96 bins)."""
        return cls(step_hz * np.arange(1, count + 1))

    @property
    def size(self) -> int:
        return self.freqs_hz.shape[0]

    def __len__(self) -> int:
        return self.size

    def band_indices(self, lo_hz: float, hi_hz: float) -> np.ndarray:
        """Indices of bins with ``lo <= f < hi``."""
        f = self.freqs_hz
        return np.nonzero((f >= lo_hz) & (f < hi_hz))[0]

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        """Composite trapezoid integration weights for this grid."""
        f = self.freqs_hz
        if f.size == 1:
            return np.ones(1)
        w = np.empty_like(f)
        w[0] = 0.5 * (f[1] - f[0])
        w[-1] = 0.5 * (f[-1] - f[-2])
        w[1:-1] = 0.5 * (f[2:] - f[:-2])
        return w


class Provenance(str, Enum):
    """How a set of SH-domain HRTF coefficients was produced."""

    LS = "LS"
    MagLS = "MagLS"
    MagLS_CC = "MagLS_CC"
    iMagLS = "iMagLS"
    Truncation = "Truncation"


@dataclass(frozen=True)
class HrtfSet:
    """Reference HRTF sampled on a spherical grid, both ears.

    ``left`` and ``right`` are complex ``(Q, F)`` matrices over the grid's
    Q directions and the frequency grid's F bins.  ``point_eval``, when
    present, evaluates the underlying model exactly at arbitrary
    directions (``point_eval(azimuths, colatitudes) -> (left, right)``),
    which keeps horizontal-plane evaluations free of nearest-direction
    lookup error.
    """

    grid: SphericalGrid
    freqs: FrequencyGrid
    left: np.ndarray
    right: np.ndarray
    label: str = ""
    point_eval: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        expected = (self.grid.size, self.freqs.size)
        for name in ("left", "right"):
            mat = np.asarray(getattr(self, name), dtype=complex)
            if mat.shape != expected:
                raise ValueError(
                    f"{name} has shape {mat.shape}, expected {expected}"
                )
            if not np.all(np.isfinite(mat)):
                raise ValueError(f"{name} contains non-finite entries")
            if np.max(np.abs(mat)) > MAX_TRANSFER_MAGNITUDE:
                raise ValueError(
                    f"{name} contains magnitudes above {MAX_TRANSFER_MAGNITUDE:g}"
                )
            object.__setattr__(self, name, mat)

    @property
    def ears(self) -> tuple[np.ndarray, np.ndarray]:
        return self.left, self.right


@dataclass(frozen=True)
class ShHrtf:
    """SH-domain HRTF coefficients for both ears.

    ``left`` and ``right`` are complex ``(F, (order + 1)**2)`` matrices:
    one ACN coefficient vector per frequency bin.
    """

    order: int
    freqs: FrequencyGrid
    left: np.ndarray
    right: np.ndarray
    provenance: Provenance
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        expected = (self.freqs.size, (self.order + 1) ** 2)
        for name in ("left", "right"):
            mat = np.asarray(getattr(self, name), dtype=complex)
            if mat.shape != expected:
                raise ValueError(
                    f"{name} has shape {mat.shape}, expected {expected}"
                )
            object.__setattr__(self, name, mat)
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    def coeff_vec(self, ear: str, freq_index: int) -> ShCoeffVec:
        mat = self.left if ear == "left" else self.right
        return ShCoeffVec(self.order, mat[freq_index])


@dataclass(frozen=True)
class SphereModelConfig:
    """Rigid-sphere head model parameters.

    The scattering series is truncated at ``series_order``; adequacy of
    the truncation (last term below 1e-10 of the partial sum at the top
    frequency) is verified whenever the model is evaluated against a
    frequency grid.
    """

    radius_m: float = 0.0875
    ear_azimuths_rad: tuple[float, float] = (math.pi / 2, -math.pi / 2)
    ear_colatitudes_rad: tuple[float, float] = (math.pi / 2, math.pi / 2)
    speed_of_sound_mps: float = 343.0
    series_order: int = 60

    def __post_init__(self):
        if self.radius_m <= 0.0:
            raise ValueError("radius_m must be > 0")
        if self.speed_of_sound_mps <= 0.0:
            raise ValueError("speed_of_sound_mps must be > 0")
        if self.series_order < 1:
            raise ValueError("series_order must be >= 1")
        if len(self.ear_azimuths_rad) != 2 or len(self.ear_colatitudes_rad) != 2:
            raise ValueError("ear positions must be (left, right) pairs")


def _radial_terms(config: SphereModelConfig, freqs: FrequencyGrid) -> np.ndarray:
    """Per-degree radial factors (2n+1) i^(n-1) / ((ka)^2 h2'_n(ka)).

    Shape ``(series_order + 1, F)``.  Degrees whose Hankel derivative
    overflows (deep evanescent regime) contribute exactly zero.
    """
    ka = TWO_PI * freqs.freqs_hz / config.speed_of_sound_mps * config.radius_m
    n = np.arange(config.series_order + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        jp = spherical_jn(n[:, None], ka[None, :], derivative=True)
        yp = spherical_yn(n[:, None], ka[None, :], derivative=True)
    hp = jp - 1j * yp
    finite = np.isfinite(hp)
    inv = np.where(finite, 1.0 / np.where(finite, hp, 1.0), 0.0)
    i_pow = np.array([1, 1j, -1, -1j])[(n - 1) % 4]
    terms = (2 * n[:, None] + 1) * i_pow[:, None] * inv / ka[None, :] ** 2
    # Truncation adequacy at the top frequency, where the series decays
    # slowest; P_n(1) = 1 makes this the worst-case direction.
    top = terms[:, -1]
    partial = np.abs(top.sum())
    if partial == 0.0 or np.abs(top[-1]) >= 1e-10 * partial:
        raise ValueError(
            f"series_order {config.series_order} too low for "
            f"{freqs.freqs_hz[-1]:g} Hz (last-term ratio "
            f"{np.abs(top[-1]) / max(partial, 1e-300):.2e})"
        )
    return terms


def _legendre_matrix(x: np.ndarray, nmax: int) -> np.ndarray:
    """Legendre polynomials P_0..P_nmax of x, shape ``(len(x), nmax + 1)``."""
    p = np.empty((x.shape[0], nmax + 1))
    p[:, 0] = 1.0
    if nmax >= 1:
        p[:, 1] = x
    for k in range(1, nmax):
        p[:, k + 1] = ((2 * k + 1) * x * p[:, k] - k * p[:, k - 1]) / (k + 1)
    return p


def rigid_sphere_pressure(config: SphereModelConfig, azimuths, colatitudes,
                          freqs: FrequencyGrid, ear_azimuth: float,
                          ear_colatitude: float) -> np.ndarray:
    """Total surface pressure at one ear for plane waves from given directions.

    Returns a complex ``(n_directions, F)`` matrix.  The pressure depends
    on source direction only through the great-circle angle to the ear.
    """
    az = np.atleast_1d(np.asarray(azimuths, dtype=float))
    col = np.atleast_1d(np.asarray(colatitudes, dtype=float))
    cos_gamma = (
        np.cos(col) * math.cos(ear_colatitude)
        + np.sin(col) * math.sin(ear_colatitude) * np.cos(az - ear_azimuth)
    )
    cos_gamma = np.clip(cos_gamma, -1.0, 1.0)
    legendre = _legendre_matrix(cos_gamma, config.series_order)
    return legendre @ _radial_terms(config, freqs)


def rigid_sphere_hrtf(config: SphereModelConfig, grid: SphericalGrid,
                      freqs: FrequencyGrid) -> HrtfSet:
    """Analytic rigid-sphere HRTF on a grid, both ears.

    The returned set carries a ``point_eval`` closure so downstream
    horizontal-plane evaluations use the exact model rather than
    nearest-direction lookup.
    """

    def point_eval(azimuths, colatitudes):
        left = rigid_sphere_pressure(
            config, azimuths, colatitudes, freqs,
            config.ear_azimuths_rad[0], config.ear_colatitudes_rad[0])
        right = rigid_sphere_pressure(
            config, azimuths, colatitudes, freqs,
            config.ear_azimuths_rad[1], config.ear_colatitudes_rad[1])
        return left, right

    left, right = point_eval(grid.azimuths, grid.colatitudes)
    return HrtfSet(grid, freqs, left, right, label="rigid-sphere",
                   point_eval=point_eval)


def truncate_reference(ref: HrtfSet, order: int) -> ShHrtf:
    """Order-limited SH representation of a sampled HRTF set.

    Per-frequency, per-ear forward transform by quadrature; rejects orders
    the grid cannot integrate exactly.
    """
    analysis = analysis_operator(ref.grid, order)
    left = (analysis @ ref.left).T
    right = (analysis @ ref.right).T
    return ShHrtf(order, ref.freqs, left, right, Provenance.Truncation)


# ---------------------------------------------------------------------------
# Portable file formats


def save_hrtf(hset: HrtfSet, path) -> None:
    """Write a direction-domain HRTF set as an ``hrtf-json/1`` document.

    Complex matrices are flattened row-major (direction-major) into
    ``[re, im]`` pairs; floats keep full double precision.
    """
    doc = {
        "version": "hrtf-json/1",
        "label": hset.label,
        "freqs_hz": hset.freqs.freqs_hz.tolist(),
        "directions": np.column_stack(
            [hset.grid.azimuths, hset.grid.colatitudes]).tolist(),
        "weights": hset.grid.weights.tolist(),
        "left": _complex_to_pairs(hset.left),
        "right": _complex_to_pairs(hset.right),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"))


def _complex_to_pairs(mat: np.ndarray) -> list:
    flat = mat.reshape(-1)
    return np.column_stack([flat.real, flat.imag]).tolist()


def _pairs_to_complex(pairs, shape) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] != shape[0] * shape[1]:
        raise ValueError(
            f"expected {shape[0] * shape[1]} [re, im] pairs, got {arr.shape}"
        )
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(shape)


def probe_exact_order(azimuths, colatitudes, weights, cap: int = 10,
                      tol: float = 1e-8) -> int:
    """Highest order (up to ``cap``) whose Gram matrix passes on this grid."""
    y = sh_matrix(cap, np.asarray(azimuths, float), np.asarray(colatitudes, float))
    gram = (y.conj().T * np.asarray(weights, float)) @ y
    dev = np.abs(gram - np.eye(gram.shape[0]))
    for order in range(cap, -1, -1):
        k = (order + 1) ** 2
        if dev[:k, :k].max() <= tol:
            return order
    return 0


def load_hrtf(path, grid: SphericalGrid | None = None,
              probe_cap: int = 10) -> HrtfSet:
    """Read an ``hrtf-json/1`` document.

    If ``grid`` is supplied its directions must match the file and its
    weights/order are used.  Otherwise, weights stored in the file are
    used with the exactness order probed up to ``probe_cap``; files
    without weights get uniform weights at order 0, which keeps them
    usable as evaluation targets while rejecting SH analysis above
    order 0.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != "hrtf-json/1":
        raise ValueError(f"{path}: not an hrtf-json/1 document")
    freqs = FrequencyGrid(np.asarray(doc["freqs_hz"], dtype=float))
    dirs = np.asarray(doc["directions"], dtype=float)
    if dirs.ndim != 2 or dirs.shape[1] != 2:
        raise ValueError(f"{path}: directions must be [azimuth, colatitude] pairs")
    az, col = dirs[:, 0], dirs[:, 1]
    q = az.shape[0]
    if grid is not None:
        if grid.size != q:
            raise ValueError(
                f"{path}: grid size {grid.size} does not match file ({q})"
            )
        d_az = np.abs(np.angle(np.exp(1j * (grid.azimuths - az))))
        if d_az.max() > 1e-12 or np.max(np.abs(grid.colatitudes - col)) > 1e-12:
            raise ValueError(f"{path}: supplied grid directions do not match file")
    elif doc.get("weights") is not None:
        w = np.asarray(doc["weights"], dtype=float)
        order = probe_exact_order(az, col, w, cap=probe_cap)
        grid = SphericalGrid(az, col, w, order)
    else:
        grid = SphericalGrid(az, col, np.full(q, FOUR_PI / q), 0)
    shape = (q, freqs.size)
    left = _pairs_to_complex(doc["left"], shape)
    right = _pairs_to_complex(doc["right"], shape)
    return HrtfSet(grid, freqs, left, right, label=doc.get("label", ""))


def save_shhrtf(sh_hrtf: ShHrtf, path) -> None:
    """Write SH-domain coefficients as an ``shhrtf-json/1`` document."""
    doc = {
        "version": "shhrtf-json/1",
        "order": sh_hrtf.order,
        "freqs_hz": sh_hrtf.freqs.freqs_hz.tolist(),
        "provenance": sh_hrtf.provenance.value,
        "left": [_complex_to_pairs(row[None, :]) for row in sh_hrtf.left],
        "right": [_complex_to_pairs(row[None, :]) for row in sh_hrtf.right],
    }
    if sh_hrtf.meta:
        doc["meta"] = sh_hrtf.meta
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"))


def load_shhrtf(path) -> ShHrtf:
    """Read an ``shhrtf-json/1`` document."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != "shhrtf-json/1":
        raise ValueError(f"{path}: not an shhrtf-json/1 document")
    order = int(doc["order"])
    freqs = FrequencyGrid(np.asarray(doc["freqs_hz"], dtype=float))
    k = (order + 1) ** 2

    def rows(key):
        per_freq = doc[key]
        if len(per_freq) != freqs.size:
            raise ValueError(f"{path}: {key} has {len(per_freq)} rows, "
                             f"expected {freqs.size}")
        return np.vstack([_pairs_to_complex(row, (1, k)) for row in per_freq])

    return ShHrtf(order, freqs, rows("left"), rows("right"),
                  Provenance(doc["provenance"]), meta=doc.get("meta", {}))
