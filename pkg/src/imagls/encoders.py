"""SH-domain binaural rendering and the LS / MagLS / MagLS+CC encoders.

Rendering combines a modified Ambisonics signal with SH-domain HRTF
coefficients, ``p(f) = sum_nm conj(a_nm(f)) h_nm(f)`` per ear.  The
encoders all map a direction-domain reference to order-N coefficients:
plain least squares (quadrature analysis), magnitude least squares above
a cutoff frequency (sequential phase continuation), and a per-frequency
2x2 covariance correction that restores the reference's diffuse-field
interaural covariance (global EQ).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .hrtf import FrequencyGrid, HrtfSet, Provenance, ShHrtf, truncate_reference
from .sh import Direction, SphericalGrid, analysis_operator, sh_matrix


@dataclass(frozen=True)
class AmbisonicsSignal:
    """Modified Ambisonics coefficients, one ACN vector per frequency bin."""

    order: int
    freqs: FrequencyGrid
    coeffs: np.ndarray

    def __post_init__(self):
        expected = (self.freqs.size, (self.order + 1) ** 2)
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != expected:
            raise ValueError(f"coeffs shape {coeffs.shape}, expected {expected}")
        object.__setattr__(self, "coeffs", coeffs)


@dataclass(frozen=True)
class MaglsConfig:
    """Cutoff frequency for the magnitude-least-squares switch (hard)."""

    cutoff_hz: float = 2000.0

    def __post_init__(self):
        if not (math.isfinite(self.cutoff_hz) and self.cutoff_hz > 0.0):
            raise ValueError("cutoff_hz must be a positive finite frequency")


def plane_wave_ambisonics(direction: Direction, order: int,
                          freqs: FrequencyGrid) -> AmbisonicsSignal:
    """Unit-amplitude plane-wave encoding from one incident direction.

    Coefficients are ``conj(Y_n^m)`` at the incident direction, identical
    at every frequency, so that rendering against SH-domain HRTF
    coefficients reduces to their synthesis at that direction.
    """
    y = sh_matrix(order, [direction.azimuth], [direction.colatitude])[0]
    coeffs = np.broadcast_to(np.conj(y), (freqs.size, y.shape[0]))
    return AmbisonicsSignal(order, freqs, np.array(coeffs))


def render_binaural(signal: AmbisonicsSignal,
                    h: ShHrtf) -> tuple[np.ndarray, np.ndarray]:
    """Binaural spectra ``p(f) = sum_nm conj(a_nm(f)) h_nm(f)`` per ear."""
    if signal.order != h.order:
        raise ValueError(f"order mismatch: signal {signal.order}, hrtf {h.order}")
    if not np.array_equal(signal.freqs.freqs_hz, h.freqs.freqs_hz):
        raise ValueError("frequency grids do not match")
    a_conj = np.conj(signal.coeffs)
    return (a_conj * h.left).sum(axis=1), (a_conj * h.right).sum(axis=1)


def ls_encode(ref: HrtfSet, order: int) -> ShHrtf:
    """Least-squares encoder: the per-frequency quadrature analysis of the
    reference (its closed-form minimizer)."""
    return replace(truncate_reference(ref, order), provenance=Provenance.LS)


def magls_encode(ref: HrtfSet, order: int, cfg: MaglsConfig) -> ShHrtf:
    """Magnitude-least-squares encoder.

    Bins at or below the cutoff keep the LS solution.  Above it, bins are
    processed in ascending order per ear: the previous bin's solution is
    synthesized on the grid, its phase is attached to the reference
    magnitudes, and the result is re-projected to order N.
    """
    f = ref.freqs.freqs_hz
    if not (f[0] <= cfg.cutoff_hz <= f[-1]):
        raise ValueError(
            f"cutoff {cfg.cutoff_hz} Hz outside the grid span "
            f"[{f[0]}, {f[-1]}] Hz"
        )
    synthesis = sh_matrix(order, ref.grid.azimuths, ref.grid.colatitudes)
    analysis = analysis_operator(ref.grid, order)
    above = np.nonzero(f > cfg.cutoff_hz)[0]
    ears = []
    for samples in ref.ears:
        coeffs = (analysis @ samples).T.copy()
        for fi in above:
            phase = np.angle(synthesis @ coeffs[fi - 1])
            coeffs[fi] = analysis @ (np.abs(samples[:, fi]) * np.exp(1j * phase))
        ears.append(coeffs)
    return ShHrtf(order, ref.freqs, ears[0], ears[1], Provenance.MagLS)


def _cholesky_2x2(r: np.ndarray, eps_scale: float = 1e-12):
    """Lower Cholesky factor of a 2x2 Hermitian PSD matrix.

    Near-singular inputs are regularized by ``eps_scale * trace`` on the
    diagonal; returns ``(L, regularized_flag)``.
    """
    trace = float(np.real(np.trace(r)))
    regularized = False
    eigs = np.linalg.eigvalsh(r)
    if eigs[0] <= eps_scale * max(trace, 1e-300):
        r = r + (eps_scale * trace) * np.eye(2)
        regularized = True
    return np.linalg.cholesky(r), regularized


def covariance_correction(low: ShHrtf, ref: HrtfSet) -> ShHrtf:
    """Per-frequency 2x2 correction matching the reference covariance.

    For each bin, the quadrature-weighted interaural covariance of the
    low-order rendering is mapped onto the reference's by
    ``M = L_ref V U^H L_low^{-1}`` with ``U S V^H = svd(L_low^H L_ref)``,
    applied across the (left, right) ear dimension of the coefficients.
    The unitary factor keeps M at the identity when the two covariances
    already agree.
    """
    if not np.array_equal(low.freqs.freqs_hz, ref.freqs.freqs_hz):
        raise ValueError("frequency grids do not match")
    synthesis = sh_matrix(low.order, ref.grid.azimuths, ref.grid.colatitudes)
    sqrt_w = np.sqrt(ref.grid.weights)
    left = low.left.copy()
    right = low.right.copy()
    regularized_bins = []
    for fi in range(ref.freqs.size):
        a_ref = np.vstack([ref.left[:, fi], ref.right[:, fi]]) * sqrt_w
        a_low = np.vstack([synthesis @ left[fi], synthesis @ right[fi]]) * sqrt_w
        r_ref = a_ref @ a_ref.conj().T
        r_low = a_low @ a_low.conj().T
        l_ref, reg_ref = _cholesky_2x2(r_ref)
        l_low, reg_low = _cholesky_2x2(r_low)
        if reg_ref or reg_low:
            regularized_bins.append(fi)
        u, _, vh = np.linalg.svd(l_low.conj().T @ l_ref)
        m = l_ref @ vh.conj().T @ u.conj().T @ np.linalg.inv(l_low)
        stacked = m @ np.vstack([left[fi], right[fi]])
        left[fi], right[fi] = stacked[0], stacked[1]
    meta = dict(low.meta)
    if regularized_bins:
        meta["regularized_bins"] = regularized_bins
    return ShHrtf(low.order, low.freqs, left, right, Provenance.MagLS_CC,
                  meta=meta)


def interaural_covariance(h: ShHrtf, grid: SphericalGrid,
                          freq_index: int) -> np.ndarray:
    """Quadrature-weighted 2x2 interaural covariance of one bin's rendering."""
    synthesis = sh_matrix(h.order, grid.azimuths, grid.colatitudes)
    sqrt_w = np.sqrt(grid.weights)
    a = np.vstack([synthesis @ h.left[freq_index],
                   synthesis @ h.right[freq_index]]) * sqrt_w
    return a @ a.conj().T
