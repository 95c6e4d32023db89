"""Auditory-band ILD computation and the magnitude/ILD error metrics.

The interaural level difference is the dB ratio of Gammatone-weighted
band energies between the ears, evaluated at ERB-spaced center
frequencies.  The Gammatone enters as its normalized magnitude-squared
frequency response (default order 4, 1.019 ERB bandwidth); no
time-domain filtering is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hrtf import FrequencyGrid, HrtfSet, ShHrtf
from .sh import sh_matrix


class BandEnergyError(ValueError):
    """A Gammatone band has zero energy in one ear (degenerate input)."""


def erb_bandwidth(f0_hz: float) -> float:
    """Glasberg-Moore equivalent rectangular bandwidth at ``f0_hz``."""
    if f0_hz <= 0.0:
        raise ValueError("f0_hz must be > 0")
    return 24.7 * (4.37 * f0_hz / 1000.0 + 1.0)


def erb_rate(f_hz):
    """ERB-rate scale value of a frequency (ERBs below ``f_hz``)."""
    return 21.4 * np.log10(1.0 + 4.37 * np.asarray(f_hz, float) / 1000.0)


def erb_rate_inverse(rate):
    """Frequency whose ERB-rate value is ``rate``."""
    return (np.power(10.0, np.asarray(rate, float) / 21.4) - 1.0) * 1000.0 / 4.37


def gammatone_weight(f0_hz, f_hz, order: int = 4):
    """Normalized magnitude-squared Gammatone response, peak 1 at ``f0``.

    ``G = [1 + ((f - f0) / (1.019 erb(f0)))^2]^(-order)``.
    """
    f0 = np.asarray(f0_hz, dtype=float)
    f = np.asarray(f_hz, dtype=float)
    if np.any(f0 <= 0.0) or np.any(f <= 0.0):
        raise ValueError("frequencies must be > 0")
    bw = 24.7 * (4.37 * f0 / 1000.0 + 1.0)
    detune = (f - f0) / (1.019 * bw)
    return (1.0 + detune * detune) ** (-order)


@dataclass(frozen=True)
class GammatoneBank:
    """ERB-spaced Gammatone weighting rows over a frequency grid.

    ``weights`` has shape ``(n_centers, F)``; rows are zero outside the
    ``[f1_hz, f2_hz]`` band and peak at the grid bin nearest their center.
    """

    freqs: FrequencyGrid
    centers_hz: np.ndarray
    f1_hz: float
    f2_hz: float
    weights: np.ndarray
    filter_order: int = 4

    def __post_init__(self):
        centers = np.asarray(self.centers_hz, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (centers.shape[0], self.freqs.size):
            raise ValueError(
                f"weights shape {weights.shape}, expected "
                f"{(centers.shape[0], self.freqs.size)}"
            )
        if np.any(weights < 0.0):
            raise ValueError("weights must be nonnegative")
        f = self.freqs.freqs_hz
        in_band = (f >= self.f1_hz) & (f <= self.f2_hz)
        if np.any(weights[:, ~in_band] != 0.0):
            raise ValueError("weights must vanish outside [f1, f2]")
        if not np.any(in_band):
            raise ValueError("no frequency bins inside [f1, f2]")
        band_bins = np.nonzero(in_band)[0]
        for i, f0 in enumerate(centers):
            if weights[i].max() > 1.0 + 1e-12:
                raise ValueError("row maxima must not exceed 1")
            nearest = band_bins[np.argmin(np.abs(f[band_bins] - f0))]
            if np.argmax(weights[i]) != nearest:
                raise ValueError(
                    f"row {i} does not peak at the bin nearest {f0:.1f} Hz"
                )
        object.__setattr__(self, "centers_hz", centers)
        object.__setattr__(self, "weights", weights)

    @property
    def n_centers(self) -> int:
        return self.centers_hz.shape[0]


def make_gammatone_bank(freqs: FrequencyGrid, f1_hz: float = 1200.0,
                        f2_hz: float = 18000.0,
                        filter_order: int = 4) -> GammatoneBank:
    """Bank with one filter per ERB spanning ``[f1, f2]``.

    ``f2`` is capped at the grid's top frequency so every center has
    support on the grid.
    """
    f2_hz = min(f2_hz, float(freqs.freqs_hz[-1]))
    if not 0.0 < f1_hz < f2_hz:
        raise ValueError("need 0 < f1 < f2")
    rates = np.arange(erb_rate(f1_hz), erb_rate(f2_hz) + 1e-9, 1.0)
    centers = erb_rate_inverse(rates)
    f = freqs.freqs_hz
    weights = gammatone_weight(centers[:, None], f[None, :], filter_order)
    weights = weights * ((f >= f1_hz) & (f <= f2_hz))
    return GammatoneBank(freqs, centers, f1_hz, f2_hz, weights, filter_order)


def band_energies(spectra: np.ndarray, bank: GammatoneBank) -> np.ndarray:
    """Gammatone-weighted trapezoid band energies of power spectra.

    ``spectra`` is complex with frequency on the last axis; returns the
    energies with that axis replaced by the bank's centers.
    """
    power = np.abs(np.asarray(spectra)) ** 2
    return (power * bank.freqs.trapezoid_weights) @ bank.weights.T


def ild(p_left: np.ndarray, p_right: np.ndarray,
        bank: GammatoneBank) -> np.ndarray:
    """Interaural level difference in dB per bank center.

    Raises :class:`BandEnergyError` when either ear has zero energy in
    some band, instead of returning infinities.
    """
    e_left = band_energies(p_left, bank)
    e_right = band_energies(p_right, bank)
    if np.any(e_left <= 0.0) or np.any(e_right <= 0.0):
        raise BandEnergyError("zero Gammatone band energy in at least one ear")
    return 10.0 * np.log10(e_left / e_right)


@dataclass(frozen=True)
class IldCurve:
    """ILD values over horizontal-plane azimuths.

    ``values_db`` is ``(n_azimuths, n_centers)``, or ``(n_azimuths,)``
    when ``averaged`` marks the frequency-averaged form.
    """

    azimuths_rad: np.ndarray
    values_db: np.ndarray
    averaged: bool = False

    def __post_init__(self):
        az = np.asarray(self.azimuths_rad, dtype=float)
        vals = np.asarray(self.values_db, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("ILD values must be finite")
        expected_ndim = 1 if self.averaged else 2
        if vals.ndim != expected_ndim or vals.shape[0] != az.shape[0]:
            raise ValueError(f"values shape {vals.shape} inconsistent with "
                             f"{az.shape[0]} azimuths (averaged={self.averaged})")
        object.__setattr__(self, "azimuths_rad", az)
        object.__setattr__(self, "values_db", vals)

    def frequency_averaged(self) -> "IldCurve":
        """Unweighted mean over bank centers."""
        if self.averaged:
            return self
        return IldCurve(self.azimuths_rad, self.values_db.mean(axis=1), True)


def default_azimuths(count: int = 72) -> np.ndarray:
    """Horizontal-plane azimuth sampling (default 72 points, 5 degrees)."""
    return 2.0 * math.pi * np.arange(count) / count


def horizontal_binaural(source, azimuths_rad) -> tuple[np.ndarray, np.ndarray]:
    """Binaural spectra for plane waves over horizontal-plane azimuths.

    For SH-domain coefficients this is the plane-wave rendering identity
    evaluated in closed form; for a sampled set the exact model evaluator
    is used when present, otherwise the nearest grid direction.
    Returns two ``(n_azimuths, F)`` matrices.
    """
    az = np.asarray(azimuths_rad, dtype=float)
    colat = np.full_like(az, math.pi / 2)
    if isinstance(source, ShHrtf):
        synthesis = sh_matrix(source.order, az, colat)
        return synthesis @ source.left.T, synthesis @ source.right.T
    if isinstance(source, HrtfSet):
        if source.point_eval is not None:
            return source.point_eval(az, colat)
        cos_dist = (
            np.cos(colat)[:, None] * np.cos(source.grid.colatitudes)[None, :]
            + np.sin(colat)[:, None] * np.sin(source.grid.colatitudes)[None, :]
            * np.cos(az[:, None] - source.grid.azimuths[None, :])
        )
        nearest = np.argmax(cos_dist, axis=1)
        return source.left[nearest], source.right[nearest]
    raise TypeError(f"unsupported source type {type(source).__name__}")


def ild_curve(source, azimuths_rad, bank: GammatoneBank,
              average: bool = False) -> IldCurve:
    """ILD of a rendered or sampled HRTF over horizontal azimuths."""
    p_left, p_right = horizontal_binaural(source, azimuths_rad)
    e_left = band_energies(p_left, bank)
    e_right = band_energies(p_right, bank)
    if np.any(e_left <= 0.0) or np.any(e_right <= 0.0):
        raise BandEnergyError("zero Gammatone band energy in at least one ear")
    curve = IldCurve(azimuths_rad, 10.0 * np.log10(e_left / e_right))
    return curve.frequency_averaged() if average else curve


def ild_error(ref_curve: IldCurve, test_curve: IldCurve) -> np.ndarray:
    """Absolute ILD difference in dB, elementwise.

    Returns ``(n_azimuths, n_centers)`` values, or ``(n_azimuths,)`` for
    averaged curves; average the result over its last axis for the
    frequency-averaged error of unaveraged curves.
    """
    if ref_curve.averaged != test_curve.averaged:
        raise ValueError("cannot mix averaged and unaveraged curves")
    if ref_curve.values_db.shape != test_curve.values_db.shape:
        raise ValueError(
            f"shape mismatch: {ref_curve.values_db.shape} vs "
            f"{test_curve.values_db.shape}"
        )
    return np.abs(ref_curve.values_db - test_curve.values_db)


def mag_error(ref: HrtfSet, test: ShHrtf, ear: str = "both") -> np.ndarray:
    """Squared magnitude error per direction and frequency.

    ``(|H| - |synthesized|)^2`` on the reference grid; ``ear`` selects
    ``"left"``, ``"right"``, or the mean of both (``"both"``).
    """
    if not np.array_equal(ref.freqs.freqs_hz, test.freqs.freqs_hz):
        raise ValueError("frequency grids do not match")
    synthesis = sh_matrix(test.order, ref.grid.azimuths, ref.grid.colatitudes)
    errors = {}
    for name, samples, coeffs in (("left", ref.left, test.left),
                                  ("right", ref.right, test.right)):
        errors[name] = (np.abs(samples) - np.abs(synthesis @ coeffs.T)) ** 2
    if ear == "both":
        return 0.5 * (errors["left"] + errors["right"])
    if ear not in errors:
        raise ValueError(f"ear must be 'left', 'right', or 'both', got {ear!r}")
    return errors[ear]


def mag_error_db(ref: HrtfSet, test: ShHrtf, ear: str = "both") -> np.ndarray:
    """Direction-averaged magnitude error per frequency, in dB.

    ``10 log10(sum_q w_q eps / sum_q w_q |H|^2)``, the normalized
    reporting convention used by the evaluation pipeline.
    """
    eps = mag_error(ref, test, ear)
    if ear == "both":
        ref_power = 0.5 * (np.abs(ref.left) ** 2 + np.abs(ref.right) ** 2)
    else:
        ref_power = np.abs(getattr(ref, ear)) ** 2
    w = ref.grid.weights
    num = w @ eps
    den = w @ ref_power
    return 10.0 * np.log10(num / den)
