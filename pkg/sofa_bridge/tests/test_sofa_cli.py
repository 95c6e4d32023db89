"""End-to-end CLI invocation."""

import json

import h5py
import numpy as np

from sofa_bridge.cli import main


def write_impulse_sofa(path, m=4, n=64, fs=36000.0):
    ir = np.zeros((m, 2, n))
    ir[:, :, 0] = 1.0
    az = np.linspace(0.0, 360.0, m, endpoint=False)
    source = np.column_stack([az, np.zeros(m), np.full(m, 1.5)])
    with h5py.File(path, "w") as handle:
        handle.attrs["Conventions"] = "SOFA"
        handle.attrs["SOFAConventions"] = "SimpleFreeFieldHRIR"
        handle.create_dataset("Data.IR", data=ir)
        handle.create_dataset("Data.SamplingRate", data=np.array([fs]))
        pos = handle.create_dataset("SourcePosition", data=source)
        pos.attrs["Type"] = "spherical"
    return path


def test_cli_happy_path(tmp_path):
    sofa = write_impulse_sofa(tmp_path / "in.sofa")
    out = tmp_path / "out.json"
    code = main(["--in", str(sofa), "--bins", "96", "--fmax", "18000",
                 "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["version"] == "hrtf-json/1"
    assert len(doc["freqs_hz"]) == 96
    assert doc["freqs_hz"][-1] == 18000.0
    assert "colatitude_rad = pi/2 - elevation" in doc["label"]


def test_cli_reports_errors(tmp_path):
    sofa = write_impulse_sofa(tmp_path / "in.sofa", fs=16000.0)
    code = main(["--in", str(sofa), "--bins", "8", "--fmax", "18000",
                 "--out", str(tmp_path / "x.json")])
    assert code == 2
    code = main(["--in", str(tmp_path / "missing.sofa"), "--bins", "8",
                 "--fmax", "1000", "--out", str(tmp_path / "x.json")])
    assert code == 2
