"""Conversion against synthetic SOFA fixtures (impulses, delays)."""

import json
import math

import h5py
import numpy as np
import pytest

from sofa_bridge import (
    SofaFormatError,
    SofaImportSpec,
    directions_from_sofa,
    sofa_to_portable,
    transfer_functions,
)


def write_sofa(path, ir, fs, source_deg, convention="SimpleFreeFieldHRIR",
               listener=None, position_type="spherical"):
    with h5py.File(path, "w") as handle:
        handle.attrs["Conventions"] = "SOFA"
        handle.attrs["SOFAConventions"] = convention
        handle.attrs["DataType"] = "FIR"
        handle.create_dataset("Data.IR", data=ir)
        handle.create_dataset("Data.SamplingRate", data=np.array([fs]))
        pos = handle.create_dataset("SourcePosition", data=source_deg)
        pos.attrs["Type"] = position_type
        pos.attrs["Units"] = "degree, degree, metre"
        if listener is not None:
            handle.create_dataset("ListenerPosition", data=listener)
    return path


def ring_positions(count=8):
    az = np.linspace(0.0, 360.0, count, endpoint=False)
    return np.column_stack([az, np.zeros(count), np.full(count, 1.5)])


@pytest.fixture()
def impulse_sofa(tmp_path):
    """Unit impulse at sample 0 for every direction and ear."""
    m, n, fs = 8, 256, 36000.0
    ir = np.zeros((m, 2, n))
    ir[:, :, 0] = 1.0
    return write_sofa(tmp_path / "impulse.sofa", ir, fs, ring_positions(m))


@pytest.fixture()
def delayed_sofa(tmp_path):
    m, n, fs = 6, 256, 36000.0
    delay = 17
    ir = np.zeros((m, 2, n))
    ir[:, :, delay] = 1.0
    return write_sofa(tmp_path / "delayed.sofa", ir, fs,
                      ring_positions(m)), delay, fs


class TestDirections:
    def test_mapping(self):
        source = np.array([[0.0, 0.0, 1.5],
                           [90.0, 0.0, 1.5],
                           [270.0, 45.0, 1.5],
                           [359.0, -90.0, 1.5]])
        dirs = directions_from_sofa(source)
        assert dirs[0] == pytest.approx([0.0, math.pi / 2])
        assert dirs[1] == pytest.approx([math.pi / 2, math.pi / 2])
        assert dirs[2] == pytest.approx([1.5 * math.pi, math.pi / 4])
        assert dirs[3, 1] == pytest.approx(math.pi)

    def test_bad_elevation_rejected(self):
        with pytest.raises(SofaFormatError):
            directions_from_sofa(np.array([[0.0, 120.0, 1.0]]))


class TestTransferFunctions:
    def test_impulse_is_flat(self, impulse_sofa, tmp_path):
        out = tmp_path / "flat.json"
        sofa_to_portable(SofaImportSpec(str(impulse_sofa), bins=96,
                                        fmax_hz=18000.0), out)
        doc = json.loads(out.read_text())
        assert doc["version"] == "hrtf-json/1"
        assert len(doc["freqs_hz"]) == 96
        for key in ("left", "right"):
            values = np.asarray(doc[key])
            mags = np.hypot(values[:, 0], values[:, 1])
            assert np.max(np.abs(mags - 1.0)) < 1e-12

    def test_delay_gives_linear_phase(self, delayed_sofa, tmp_path):
        sofa_path, delay, fs = delayed_sofa
        out = tmp_path / "delayed.json"
        spec = SofaImportSpec(str(sofa_path), bins=64, fmax_hz=fs / 2)
        sofa_to_portable(spec, out)
        doc = json.loads(out.read_text())
        freqs = np.asarray(doc["freqs_hz"])
        values = np.asarray(doc["left"])
        spectra = (values[:, 0] + 1j * values[:, 1]).reshape(6, 64)
        expected = np.exp(-2j * np.pi * freqs * delay / fs)
        assert np.max(np.abs(np.abs(spectra) - 1.0)) < 1e-9
        assert np.max(np.abs(spectra - expected)) < 1e-9

    def test_window_truncation(self, delayed_sofa, tmp_path):
        sofa_path, delay, fs = delayed_sofa
        spec = SofaImportSpec(str(sofa_path), bins=16, fmax_hz=9000.0,
                              window_len=delay)  # cuts the impulse away
        out = sofa_to_portable(spec, tmp_path / "cut.json")
        values = np.asarray(json.loads(out.read_text())["left"])
        assert np.max(np.hypot(values[:, 0], values[:, 1])) == 0.0

    def test_parseval_band_energy(self, tmp_path):
        """Full-band conversion preserves IR energy within 1%."""
        rng = np.random.default_rng(0)
        m, n, fs = 4, 128, 32000.0
        ir = np.zeros((m, 2, n))
        ir[:, :, :32] = rng.standard_normal((m, 2, 32)) * \
            np.hanning(64)[32:]  # decaying random IRs
        path = write_sofa(tmp_path / "rand.sofa", ir, fs, ring_positions(m))
        bins = 256
        spec = SofaImportSpec(str(path), bins=bins, fmax_hz=fs / 2)
        spectra = transfer_functions(ir, fs, spec.freqs_hz)
        time_energy = (ir ** 2).sum(axis=-1)
        df = spec.freqs_hz[1] - spec.freqs_hz[0]
        band_energy = 2.0 * (np.abs(spectra) ** 2).sum(axis=-1) * df / fs
        assert np.max(np.abs(band_energy - time_energy) / time_energy) < 0.01


class TestValidation:
    def test_wrong_convention(self, tmp_path):
        ir = np.zeros((2, 2, 8))
        ir[:, :, 0] = 1.0
        path = write_sofa(tmp_path / "bad.sofa", ir, 8000.0,
                          ring_positions(2), convention="GeneralFIR")
        with pytest.raises(SofaFormatError, match="SOFAConventions"):
            sofa_to_portable(SofaImportSpec(str(path), bins=4,
                                            fmax_hz=2000.0),
                             tmp_path / "x.json")

    def test_nyquist_violation(self, impulse_sofa, tmp_path):
        spec = SofaImportSpec(str(impulse_sofa), bins=8, fmax_hz=20000.0)
        with pytest.raises(ValueError, match="Nyquist"):
            sofa_to_portable(spec, tmp_path / "x.json")

    def test_nonzero_listener_warns(self, tmp_path):
        ir = np.zeros((2, 2, 8))
        ir[:, :, 0] = 1.0
        path = write_sofa(tmp_path / "l.sofa", ir, 8000.0,
                          ring_positions(2),
                          listener=np.array([[0.1, 0.0, 0.0]]))
        with pytest.warns(UserWarning, match="ListenerPosition"):
            sofa_to_portable(SofaImportSpec(str(path), bins=4,
                                            fmax_hz=2000.0),
                             tmp_path / "x.json")

    def test_cartesian_positions_rejected(self, tmp_path):
        ir = np.zeros((2, 2, 8))
        ir[:, :, 0] = 1.0
        path = write_sofa(tmp_path / "c.sofa", ir, 8000.0,
                          np.zeros((2, 3)), position_type="cartesian")
        with pytest.raises(SofaFormatError, match="cartesian"):
            sofa_to_portable(SofaImportSpec(str(path), bins=4,
                                            fmax_hz=2000.0),
                             tmp_path / "x.json")

    def test_counts_preserved(self, impulse_sofa, tmp_path):
        out = sofa_to_portable(SofaImportSpec(str(impulse_sofa), bins=12,
                                              fmax_hz=12000.0),
                               tmp_path / "n.json")
        doc = json.loads(out.read_text())
        assert len(doc["directions"]) == 8
        assert len(doc["left"]) == 8 * 12
        assert len(doc["right"]) == 8 * 12


class TestCoreInterop:
    def test_portable_file_passes_core_validation(self, impulse_sofa,
                                                  tmp_path):
        imagls_hrtf = pytest.importorskip("imagls.hrtf")
        out = sofa_to_portable(SofaImportSpec(str(impulse_sofa), bins=24,
                                              fmax_hz=12000.0),
                               tmp_path / "core.json")
        hset = imagls_hrtf.load_hrtf(out)
        assert hset.grid.size == 8
        assert hset.grid.max_exact_order == 0  # no weights shipped
        assert hset.freqs.size == 24
        assert np.all(np.isfinite(hset.left))
