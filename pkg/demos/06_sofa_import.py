# Importing measured HRTFs: SOFA -> hrtf-json/1 -> the core toolkit.
#
# The sofa_bridge companion package (installed separately from
# sofa_bridge/) converts SimpleFreeFieldHRIR SOFA sets to the portable
# format by evaluating each impulse response's DFT on a uniform frequency
# grid.  This demo fabricates a small SOFA file first so it runs without
# any measurement data; with a real file, start at the conversion step or
# use the CLI:
#   sofa2hrtf --in measured.sofa --bins 96 --fmax 18000 --out measured.json

import numpy as np

try:
    import h5py
    from sofa_bridge import SofaImportSpec, sofa_to_portable
except ImportError as exc:
    raise SystemExit(f"sofa_bridge not installed ({exc}); "
                     f"pip install -e sofa_bridge/") from None

from imagls import load_hrtf, ls_encode, mag_error_db

# A toy SOFA set: 12 horizontal directions, interaural delay + shadow
# faked with scaled, shifted impulses.
fs, n_samples = 36000.0, 128
azimuths_deg = np.arange(0.0, 360.0, 30.0)
ir = np.zeros((12, 2, n_samples))
for i, az in enumerate(np.deg2rad(azimuths_deg)):
    delay_left = 8 + int(round(4 * np.sin(-az)))
    delay_right = 8 + int(round(4 * np.sin(az)))
    ir[i, 0, delay_left] = 1.0 + 0.4 * np.sin(az)
    ir[i, 1, delay_right] = 1.0 - 0.4 * np.sin(az)

sofa_path = "/tmp/demo_measured.sofa"
with h5py.File(sofa_path, "w") as handle:
    handle.attrs["Conventions"] = "SOFA"
    handle.attrs["SOFAConventions"] = "SimpleFreeFieldHRIR"
    handle.create_dataset("Data.IR", data=ir)
    handle.create_dataset("Data.SamplingRate", data=np.array([fs]))
    positions = np.column_stack([azimuths_deg, np.zeros(12), np.full(12, 1.5)])
    pos = handle.create_dataset("SourcePosition", data=positions)
    pos.attrs["Type"] = "spherical"
print(f"wrote {sofa_path}")

# Convert to the portable format (no quadrature weights are invented).
out_path = sofa_to_portable(
    SofaImportSpec(sofa_path, bins=48, fmax_hz=18000.0),
    "/tmp/demo_measured.json")
print(f"converted to {out_path}")

# The core loads it as an evaluation target; without weights the grid is
# order 0, so SH analysis above order 0 is rejected rather than aliased.
hset = load_hrtf(out_path)
print(f"loaded: {hset.grid.size} directions x {hset.freqs.size} bins, "
      f"max exact order {hset.grid.max_exact_order}")
order0 = ls_encode(hset, 0)
print(f"order-0 encoding, band-mean magnitude error "
      f"{mag_error_db(hset, order0).mean():.1f} dB")
try:
    ls_encode(hset, 1)
except ValueError as exc:
    print(f"order-1 encoding rejected as expected: {exc}")
