"""SOFA (SimpleFreeFieldHRIR) to portable hrtf-json/1 conversion.

SOFA stores head-related impulse responses in an HDF5 container with
source positions in spherical degrees (azimuth counterclockwise from the
front, elevation up).  The converter evaluates each impulse response's
transfer function on a uniform frequency grid by direct DFT,

    H(f) = sum_n h[n] exp(-2j pi f n / fs),

and maps directions to (azimuth in [0, 2*pi), colatitude in [0, pi]).
Quadrature weights are not invented: the output carries no weights, so
consumers attach them from a grid file or restrict spherical-harmonics
analysis accordingly.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import h5py
import numpy as np

CONVENTION = "SimpleFreeFieldHRIR"
COORDINATE_NOTE = ("SOFA spherical degrees (azimuth ccw from front, "
                   "elevation up) mapped to azimuth_rad in [0, 2pi), "
                   "colatitude_rad = pi/2 - elevation")


class SofaFormatError(ValueError):
    """The input file is not a usable SimpleFreeFieldHRIR SOFA set."""


@dataclass(frozen=True)
class SofaImportSpec:
    """Conversion settings.

    The target grid is ``bins`` uniform frequencies ``fmax/bins .. fmax``;
    ``fmax`` must not exceed the Nyquist frequency of the SOFA sample
    rate.  ``window_len`` optionally truncates each impulse response
    before the DFT (default: full length).
    """

    input_path: str
    bins: int = 96
    fmax_hz: float = 18000.0
    window_len: int | None = None

    def __post_init__(self):
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if self.fmax_hz <= 0.0:
            raise ValueError("fmax_hz must be > 0")
        if self.window_len is not None and self.window_len < 1:
            raise ValueError("window_len must be >= 1 when given")

    @property
    def freqs_hz(self) -> np.ndarray:
        return self.fmax_hz / self.bins * np.arange(1, self.bins + 1)


def _attr(obj, name: str) -> str:
    value = obj.attrs.get(name, "")
    return value.decode() if isinstance(value, bytes) else str(value)


def read_sofa(path):
    """Raw SimpleFreeFieldHRIR contents: IRs, sample rate, positions.

    Returns ``(ir, fs, source_positions_deg)`` with ``ir`` of shape
    ``(M, 2, N)`` and positions as SOFA spherical degrees.
    """
    with h5py.File(path, "r") as handle:
        convention = _attr(handle, "SOFAConventions")
        if convention != CONVENTION:
            raise SofaFormatError(
                f"{path}: SOFAConventions is {convention!r}, "
                f"need {CONVENTION!r}")
        ir = np.asarray(handle["Data.IR"][()], dtype=float)
        fs = float(np.ravel(handle["Data.SamplingRate"][()])[0])
        source = np.asarray(handle["SourcePosition"][()], dtype=float)
        pos_type = _attr(handle["SourcePosition"], "Type") or "spherical"
        if pos_type != "spherical":
            raise SofaFormatError(
                f"{path}: SourcePosition Type {pos_type!r} not supported")
        listener = None
        if "ListenerPosition" in handle:
            listener = np.asarray(handle["ListenerPosition"][()], dtype=float)
    if ir.ndim != 3 or ir.shape[1] != 2:
        raise SofaFormatError(
            f"{path}: Data.IR must have shape (M, 2, N), got {ir.shape}")
    if source.ndim != 2 or source.shape[1] != 3 or source.shape[0] != ir.shape[0]:
        raise SofaFormatError(
            f"{path}: SourcePosition shape {source.shape} inconsistent "
            f"with {ir.shape[0]} measurements")
    if listener is not None and np.any(listener != 0.0):
        warnings.warn(f"{path}: nonzero ListenerPosition; directions are "
                      f"used as stored", stacklevel=2)
    return ir, fs, source


def directions_from_sofa(source_deg: np.ndarray) -> np.ndarray:
    """Map SOFA spherical degrees to [azimuth_rad, colatitude_rad] pairs."""
    azimuth = np.deg2rad(source_deg[:, 0]) % (2.0 * np.pi)
    azimuth[azimuth >= 2.0 * np.pi] -= 2.0 * np.pi
    colatitude = np.pi / 2.0 - np.deg2rad(source_deg[:, 1])
    if np.any(colatitude < -1e-9) or np.any(colatitude > np.pi + 1e-9):
        raise SofaFormatError("elevation outside [-90, 90] degrees")
    return np.column_stack([azimuth, np.clip(colatitude, 0.0, np.pi)])


def transfer_functions(ir: np.ndarray, fs: float, freqs_hz: np.ndarray,
                       window_len: int | None = None) -> np.ndarray:
    """DFT of impulse responses at arbitrary frequencies.

    ``ir`` is ``(..., N)``; returns complex values with the trailing axis
    replaced by ``len(freqs_hz)``.
    """
    if window_len is not None:
        ir = ir[..., :window_len]
    n = np.arange(ir.shape[-1])
    kernel = np.exp(-2j * np.pi * np.outer(n, freqs_hz) / fs)
    return ir @ kernel


def sofa_to_portable(spec: SofaImportSpec, out_path) -> Path:
    """Convert a SOFA file to hrtf-json/1.

    Raises :class:`SofaFormatError` for convention problems and
    :class:`ValueError` when ``fmax`` violates Nyquist.
    """
    ir, fs, source = read_sofa(spec.input_path)
    if spec.fmax_hz > fs / 2.0 + 1e-9:
        raise ValueError(
            f"fmax {spec.fmax_hz} Hz exceeds Nyquist {fs / 2.0} Hz "
            f"of the {fs} Hz SOFA sample rate")
    dirs = directions_from_sofa(source)
    spectra = transfer_functions(ir, fs, spec.freqs_hz, spec.window_len)

    def pairs(ear_index: int) -> list:
        flat = spectra[:, ear_index, :].reshape(-1)
        return np.column_stack([flat.real, flat.imag]).tolist()

    doc = {
        "version": "hrtf-json/1",
        "label": f"sofa:{Path(spec.input_path).name}; {COORDINATE_NOTE}",
        "freqs_hz": spec.freqs_hz.tolist(),
        "directions": dirs.tolist(),
        "weights": None,
        "left": pairs(0),
        "right": pairs(1),
    }
    out_path = Path(out_path)
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"))
    return out_path
