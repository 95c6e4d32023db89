"""Command-line pipeline: generate, encode, evaluate, run-all.

Configuration is a single JSON document; command-line flags override file
values.  Reports are plain CSV (header row, ``.`` decimals, LF endings)
and JSON so any plotting tool can consume them.  Exit codes: 0 success,
2 validation error, 3 numerical failure; a non-converged optimization is
flagged in its report and warned about but still exits 0.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .encoders import MaglsConfig, covariance_correction, ls_encode, magls_encode
from .hrtf import (
    FrequencyGrid,
    HrtfSet,
    Provenance,
    ShHrtf,
    SphereModelConfig,
    load_hrtf,
    load_shhrtf,
    rigid_sphere_hrtf,
    save_hrtf,
    save_shhrtf,
    truncate_reference,
)
from .optim import ImaglsConfig, NumericalError, OptimReport, optimize_imagls
from .psychoacoustics import (
    default_azimuths,
    ild_curve,
    ild_error,
    mag_error_db,
    make_gammatone_bank,
)
from .sh import SphericalGrid, gauss_grid, load_grid, save_grid

ILD_JND_DB = 1.0

METHOD_ENCODERS = ("ls", "magls", "magls-cc", "imagls")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one end-to-end run needs.

    ``reference_path`` switches the reference from the built-in rigid
    sphere to a portable HRTF file; ``grid_file`` switches the sampling
    grid from a generated Gauss-Legendre product grid to a loaded one
    (e.g. Lebedev nodes).
    """

    radius_m: float = 0.0875
    ear_azimuths_rad: tuple[float, float] = (math.pi / 2, -math.pi / 2)
    ear_colatitudes_rad: tuple[float, float] = (math.pi / 2, math.pi / 2)
    speed_of_sound_mps: float = 343.0
    series_order: int = 60
    reference_path: str | None = None
    gauss_order: int = 35
    grid_file: str | None = None
    freq_count: int = 96
    freq_step_hz: float = 187.5
    low_order: int = 1
    reference_order: int = 35
    magls_cutoff_hz: float = 2000.0
    lam: float | None = None
    band_lo_hz: float = 1200.0
    band_hi_hz: float = 20000.0
    smooth_eps_db: float = 1e-4
    max_iters: int = 500
    grad_tol: float = 1e-6
    optimizer: str = "bfgs"
    azimuth_count: int = 72
    bank_f1_hz: float = 1200.0
    bank_f2_hz: float = 18000.0
    bank_filter_order: int = 4
    out_dir: str = "out"

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("ear_azimuths_rad", "ear_colatitudes_rad"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(**doc)

    def sphere_config(self) -> SphereModelConfig:
        return SphereModelConfig(
            radius_m=self.radius_m,
            ear_azimuths_rad=self.ear_azimuths_rad,
            ear_colatitudes_rad=self.ear_colatitudes_rad,
            speed_of_sound_mps=self.speed_of_sound_mps,
            series_order=self.series_order,
        )

    def frequency_grid(self) -> FrequencyGrid:
        return FrequencyGrid.uniform(self.freq_count, self.freq_step_hz)

    def spherical_grid(self) -> SphericalGrid:
        if self.grid_file is not None:
            return load_grid(self.grid_file)
        return gauss_grid(self.gauss_order)

    def magls_config(self) -> MaglsConfig:
        return MaglsConfig(self.magls_cutoff_hz)

    def imagls_config(self) -> ImaglsConfig:
        return ImaglsConfig(
            lam=self.lam,
            band_hz=(self.band_lo_hz, self.band_hi_hz),
            smooth_eps_db=self.smooth_eps_db,
            max_iters=self.max_iters,
            grad_tol=self.grad_tol,
            optimizer=self.optimizer,
        )

    def validate_orders(self, grid: SphericalGrid) -> None:
        if not (self.low_order <= self.reference_order <= grid.max_exact_order):
            raise ValueError(
                f"need low_order <= reference_order <= grid order, got "
                f"{self.low_order} <= {self.reference_order} <= "
                f"{grid.max_exact_order}"
            )


def build_reference(cfg: PipelineConfig) -> HrtfSet:
    """Reference HRTF set per config: rigid sphere or portable file."""
    if cfg.reference_path is not None:
        grid = load_grid(cfg.grid_file) if cfg.grid_file else None
        ref = load_hrtf(cfg.reference_path, grid=grid)
    else:
        grid = cfg.spherical_grid()
        ref = rigid_sphere_hrtf(cfg.sphere_config(), grid, cfg.frequency_grid())
    cfg.validate_orders(ref.grid)
    return ref


def cmd_generate(cfg: PipelineConfig, out_path) -> Path:
    """Write the configured rigid-sphere reference as hrtf-json/1.

    The sampling grid is saved alongside (``.sphgrid``) so later SH
    analysis of the portable file can recover the full exactness order.
    """
    out_path = Path(out_path)
    grid = cfg.spherical_grid()
    cfg.validate_orders(grid)
    ref = rigid_sphere_hrtf(cfg.sphere_config(), grid, cfg.frequency_grid())
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_hrtf(ref, out_path)
    save_grid(grid, out_path.with_suffix(".sphgrid"))
    return out_path


def encode_method(ref: HrtfSet, method: str,
                  cfg: PipelineConfig) -> tuple[ShHrtf, OptimReport | None]:
    """Run one named encoder at the configured low order."""
    order = cfg.low_order
    if method == "ls":
        return ls_encode(ref, order), None
    if method == "magls":
        return magls_encode(ref, order, cfg.magls_config()), None
    if method == "magls-cc":
        return covariance_correction(
            magls_encode(ref, order, cfg.magls_config()), ref), None
    if method == "imagls":
        bank = make_gammatone_bank(ref.freqs, cfg.bank_f1_hz, cfg.bank_f2_hz,
                                   cfg.bank_filter_order)
        azimuths = default_azimuths(cfg.azimuth_count)
        ild_ref = ild_curve(reference_renderer(ref, cfg), azimuths, bank)
        solution, report = optimize_imagls(
            ref, order, cfg.imagls_config(), cfg.magls_config(),
            bank=bank, azimuths_rad=azimuths, ild_reference=ild_ref)
        return solution, report
    raise ValueError(f"unknown method {method!r}; expected one of "
                     f"{METHOD_ENCODERS}")


def reference_renderer(ref: HrtfSet, cfg: PipelineConfig):
    """Source used for the reference's horizontal-plane curves.

    The reference ILD is rendered from the order-``reference_order`` SH
    representation, mirroring the use of a high-order representation as
    the evaluation reference; sets that carry an exact model evaluator
    fall back to it only when the grid cannot support that order.
    """
    if cfg.reference_order <= ref.grid.max_exact_order:
        return truncate_reference(ref, cfg.reference_order)
    return ref


def cmd_encode(cfg: PipelineConfig, method: str, reference: HrtfSet | None,
               out_path, report_path=None) -> Path:
    """Encode and write shhrtf-json/1 (plus optreport-json/1 for imagls)."""
    ref = reference if reference is not None else build_reference(cfg)
    encoded, report = encode_method(ref, method, cfg)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_shhrtf(encoded, out_path)
    if report is not None:
        report_path = Path(report_path) if report_path else \
            out_path.with_name(out_path.stem + "_report.json")
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
        if not report.converged:
            print(f"warning: optimization did not converge "
                  f"({report.message})", file=sys.stderr)
    return out_path


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([row[0]] + [_fmt(v) for v in row[1:]])


def cmd_evaluate(cfg: PipelineConfig, ref: HrtfSet,
                 encoded: dict[str, ShHrtf], out_dir,
                 reports: dict[str, OptimReport] | None = None) -> dict:
    """Emit ILD curves/errors, magnitude-error spectra, and a summary.

    ``encoded`` maps method names to SH-domain solutions; all must share
    the reference's frequency grid.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    bank = make_gammatone_bank(ref.freqs, cfg.bank_f1_hz, cfg.bank_f2_hz,
                               cfg.bank_filter_order)
    azimuths = default_azimuths(cfg.azimuth_count)
    az_deg = np.degrees(azimuths)

    ref_curve = ild_curve(reference_renderer(ref, cfg), azimuths, bank)
    curves = {name: ild_curve(h, azimuths, bank) for name, h in encoded.items()}
    errors = {name: ild_error(ref_curve, c).mean(axis=1)
              for name, c in curves.items()}
    mag_db = {name: mag_error_db(ref, h) for name, h in encoded.items()}

    names = list(encoded)
    _write_csv(
        out_dir / "ild_curves.csv",
        ["azimuth_deg", "reference"] + names,
        [[f"{az_deg[i]:g}", ref_curve.frequency_averaged().values_db[i]]
         + [curves[n].frequency_averaged().values_db[i] for n in names]
         for i in range(az_deg.shape[0])],
    )
    _write_csv(
        out_dir / "ild_error.csv",
        ["azimuth_deg"] + names + ["jnd_db"],
        [[f"{az_deg[i]:g}"] + [errors[n][i] for n in names] + [ILD_JND_DB]
         for i in range(az_deg.shape[0])],
    )
    _write_csv(
        out_dir / "mag_error.csv",
        ["freq_hz"] + names,
        [[f"{f:g}"] + [mag_db[n][i] for n in names]
         for i, f in enumerate(ref.freqs.freqs_hz)],
    )

    band = ref.freqs.band_indices(cfg.band_lo_hz, cfg.band_hi_hz)
    summary: dict = {"methods": {}, "band_hz": [cfg.band_lo_hz, cfg.band_hi_hz]}
    for name in names:
        summary["methods"][name] = {
            "mean_ild_error_db": float(np.mean(errors[name])),
            "band_mean_mag_error_db": float(np.mean(mag_db[name][band])),
        }
    if "imagls" in names and "magls" in names:
        summary["imagls_mag_penalty_db_vs_magls"] = float(
            np.mean(mag_db["imagls"][band] - mag_db["magls"][band]))
    if reports:
        summary["reports"] = {name: rep.to_dict()
                              for name, rep in reports.items()}
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    return summary


def run_all(cfg: PipelineConfig) -> dict:
    """Generate, encode every method, and evaluate, all under ``out_dir``."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.reference_path is None:
        cmd_generate(cfg, out_dir / "reference.json")
    ref = build_reference(cfg)
    encoded: dict[str, ShHrtf] = {}
    reports: dict[str, OptimReport] = {}
    for method in METHOD_ENCODERS:
        solution, report = encode_method(ref, method, cfg)
        name = method.replace("-", "_")
        save_shhrtf(solution, out_dir / f"{name}.json")
        encoded[name] = solution
        if report is not None:
            reports[name] = report
            with open(out_dir / f"{name}_report.json", "w",
                      encoding="utf-8") as fh:
                json.dump(report.to_dict(), fh, indent=2)
            if not report.converged:
                print(f"warning: {method} did not converge ({report.message})",
                      file=sys.stderr)
    return cmd_evaluate(cfg, ref, encoded, out_dir, reports=reports)


# ---------------------------------------------------------------------------
# Argument parsing


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--low-order", dest="low_order", type=int)
    parser.add_argument("--reference-order", dest="reference_order", type=int)
    parser.add_argument("--magls-cutoff-hz", dest="magls_cutoff_hz", type=float)
    parser.add_argument("--lambda", dest="lam",
                        help="ILD weight; a number or 'auto'")
    parser.add_argument("--grid-file", dest="grid_file")
    parser.add_argument("--gauss-order", dest="gauss_order", type=int)
    parser.add_argument("--reference", dest="reference_path",
                        help="portable hrtf-json/1 file to use as reference")
    parser.add_argument("--radius-m", dest="radius_m", type=float)
    parser.add_argument("--freq-count", dest="freq_count", type=int)
    parser.add_argument("--freq-step-hz", dest="freq_step_hz", type=float)
    parser.add_argument("--max-iters", dest="max_iters", type=int)
    parser.add_argument("--optimizer", dest="optimizer",
                        choices=("bfgs", "lbfgs"))
    parser.add_argument("--azimuth-count", dest="azimuth_count", type=int)


def _config_from_args(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config \
        else PipelineConfig()
    overrides = {}
    for f in fields(PipelineConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            overrides[f.name] = value
    if getattr(args, "lam", None) is not None:
        overrides["lam"] = None if args.lam == "auto" else float(args.lam)
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imagls",
        description="Low-order SH HRTF encoding and ILD-aware optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate",
                           help="write the rigid-sphere reference HRTF")
    _add_config_flags(p_gen)
    p_gen.add_argument("--out", default="reference.json")

    p_enc = sub.add_parser("encode", help="encode the reference at low order")
    _add_config_flags(p_enc)
    p_enc.add_argument("--method", required=True, choices=METHOD_ENCODERS)
    p_enc.add_argument("--out", default="encoded.json")
    p_enc.add_argument("--report", default=None,
                       help="optimization report path (imagls only)")

    p_eval = sub.add_parser("evaluate", help="emit report tables")
    _add_config_flags(p_eval)
    p_eval.add_argument("--encoded", nargs="+", required=True,
                        help="shhrtf-json/1 files; column names from "
                             "their provenance")
    p_eval.add_argument("--reference-file", default=None,
                        help="hrtf-json/1 reference (defaults to the "
                             "configured reference)")

    p_all = sub.add_parser("run-all", help="generate, encode all, evaluate")
    _add_config_flags(p_all)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "generate":
            cmd_generate(cfg, args.out)
        elif args.command == "encode":
            cmd_encode(cfg, args.method, None, args.out, args.report)
        elif args.command == "evaluate":
            if args.reference_file:
                cfg = replace(cfg, reference_path=args.reference_file)
            ref = build_reference(cfg)
            encoded = {}
            for path in args.encoded:
                h = load_shhrtf(path)
                name = h.provenance.value.lower()
                if name in encoded:
                    name = f"{name}_{len(encoded)}"
                encoded[name] = h
            cmd_evaluate(cfg, ref, encoded, cfg.out_dir)
        elif args.command == "run-all":
            run_all(cfg)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
