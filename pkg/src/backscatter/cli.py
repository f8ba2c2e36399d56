"""Command-line front end: simulate -> spectrum -> fit-shelf -> budget -> project.

Options may also come from a JSON file given with ``--config``; keys are
the option names with dashes replaced by underscores.  Flags given on the
command line win over the file.  Outputs go to ``--out-dir``, defaulting
to ``$BACKSCATTER_OUTPUT_DIR`` or the current directory.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .estimation import fit_shelf, infer_backscatter_power, scale_background
from .exceptions import BackscatterError, InputError
from .io import (
    MANIFEST_NAME,
    RunManifest,
    _jsonable,
    _read_columns,
    _write_columns,
    emit_plot_data,
    read_series,
    read_spectrum,
    write_json,
    write_series,
    write_spectrum,
)
from .model import CarrierState, ScatterPath, quantum_noise_rin
from .opo import OpoParams, scatter_budget
from .projection import (
    QnRelativeSpectrum,
    RequirementConfig,
    isolation_deficit,
    project_backscatter,
    reference_background_points,
    requirement_curve,
)
from .spectra import (
    MotionSpectrum,
    accel_to_displacement,
    estimate_motion_spectrum,
    estimate_rin_spectrum,
    shelf_model_asd,
)
from .synthesis import (
    DriveConfig,
    synthesize_displacement,
    synthesize_from_displacement,
    synthesize_shelf_drive,
)

log = logging.getLogger("backscatter")

OUTPUT_DIR_ENV = "BACKSCATTER_OUTPUT_DIR"

# Per-command defaults; every key is also a valid config-file field.
DEFAULTS = {
    "simulate": {
        "kind": "shelf", "phi_m": 173.0, "f_m": 1.0, "ratio": 1.7e-11, "ps": None,
        "carrier_power": 16.1e-3, "wavelength": 1.064e-6, "pd_efficiency": 0.96,
        "fs": 2000.0, "duration": 60.0, "seed": 0, "shot_noise": True, "noise_rin_asd": None,
        "amplitude": 1e-9, "static_displacement": None, "offset_phase": None,
        "spectral_index": 0.0, "name": "series",
    },
    "spectrum": {
        "input": None, "kind": "rin", "segment_length": None, "resolution": 4.0, "overlap": 0.5,
        "name": "spectrum", "plot": False, "phi_m": None, "f_m": None, "ratio": None,
        "carrier_power": None, "wavelength": 1.064e-6, "pd_efficiency": 0.96,
    },
    "fit-shelf": {
        "input": None, "phi_m": None, "f_m": None, "band": None, "noise_floor": "auto",
        "carrier_power": None, "name": "fit",
    },
    "scale-background": {
        "driven_rin": None, "driven_motion": None, "background_motion": None, "at": None,
        "name": "background",
    },
    "budget": {
        "ps": None, "eta": None, "rho": None, "psp": None, "rin": None, "x": 0.0, "waist": None,
        "theta": 0.0, "wavelength": 1.064e-6, "ps_err": 0.0, "eta_err": 0.0, "rho_err": 0.0,
        "psp_err": 0.0, "rin_err": 0.0, "name": "budget",
    },
    "project": {
        "input": None, "qn_margin": 10.0, "squeezing_factor": 2.0, "carrier_scale": 7.0,
        "name": "margin",
    },
}

REQUIRED = {
    "spectrum": ("input",),
    "fit-shelf": ("input", "phi_m", "f_m"),
    "scale-background": ("driven_rin", "driven_motion", "background_motion", "at"),
    "budget": ("ps", "eta", "rho", "psp", "rin", "waist"),
}


def _band(text):
    try:
        lo, hi = (float(v) for v in str(text).split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"band must look like LOW:HIGH, got {text!r}") from exc
    return lo, hi


def _floats(text):
    try:
        return [float(v) for v in str(text).split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser():
    parser = argparse.ArgumentParser(prog="backscatter", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file of option values")
    common.add_argument("--out-dir", type=Path, help=f"output directory (default ${OUTPUT_DIR_ENV} or .)")
    common.add_argument("--name", help="base name of the output files")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="synthesise a photodiode or motion time series")
    p.add_argument("--kind", choices=("shelf", "tone", "background", "motion"))
    p.add_argument("--phi-m", type=float, help="modulation depth, rad (shelf)")
    p.add_argument("--f-m", type=float, help="drive or tone frequency, Hz")
    p.add_argument("--ratio", type=float, help="backscatter/carrier power ratio")
    p.add_argument("--ps", type=float, help="backscatter power, W (overrides --ratio)")
    p.add_argument("--carrier-power", type=float, help="mean carrier power, W")
    p.add_argument("--wavelength", type=float)
    p.add_argument("--pd-efficiency", type=float)
    p.add_argument("--fs", type=float, help="sample rate, Hz")
    p.add_argument("--duration", type=float, help="seconds")
    p.add_argument("--seed", type=int)
    p.add_argument("--shot-noise", dest="shot_noise", action="store_const", const=True)
    p.add_argument("--no-shot-noise", dest="shot_noise", action="store_const", const=False)
    p.add_argument("--noise-rin-asd", type=float, help="white RIN floor, 1/sqrt(Hz)")
    p.add_argument("--amplitude", type=float,
                   help="tone peak displacement (m) or background ASD at --f-m (m/sqrt(Hz))")
    p.add_argument("--static-displacement", type=float, help="static path offset, m")
    p.add_argument("--offset-phase", type=float, help="static fringe phase of a shelf drive, rad")
    p.add_argument("--spectral-index", type=float, help="background ASD power-law index")

    p = sub.add_parser("spectrum", parents=[common], help="estimate an ASD from a time series")
    p.add_argument("--in", dest="input", type=Path)
    p.add_argument("--kind", choices=("rin", "motion", "accel"))
    p.add_argument("--segment-length", type=int, help="samples per segment (overrides --resolution)")
    p.add_argument("--resolution", type=float, help="target bin width, Hz")
    p.add_argument("--overlap", type=float)
    p.add_argument("--plot", action="store_const", const=True, help="also write plot data")
    p.add_argument("--phi-m", type=float, help="overlay a shelf model with this depth")
    p.add_argument("--f-m", type=float)
    p.add_argument("--ratio", type=float)
    p.add_argument("--carrier-power", type=float, help="normalise plot data to quantum noise")
    p.add_argument("--wavelength", type=float)
    p.add_argument("--pd-efficiency", type=float)

    p = sub.add_parser("fit-shelf", parents=[common], help="fit the shelf model for P_s/P_c")
    p.add_argument("--in", dest="input", type=Path)
    p.add_argument("--phi-m", type=float)
    p.add_argument("--f-m", type=float)
    p.add_argument("--band", type=_band, help="LOW:HIGH in Hz")
    p.add_argument("--noise-floor", help="PSD floor, or 'auto'")
    p.add_argument("--carrier-power", type=float, help="also report P_s in W")

    p = sub.add_parser("scale-background", parents=[common], help="scale a driven run to background motion")
    p.add_argument("--driven-rin", type=Path)
    p.add_argument("--driven-motion", type=Path)
    p.add_argument("--background-motion", type=Path)
    p.add_argument("--at", type=_floats, help="comma-separated frequencies, Hz")

    p = sub.add_parser("budget", parents=[common], help="OPO back-reflectivity and crystal BSDF")
    p.add_argument("--ps", type=float, help="backscatter power at the readout, W")
    p.add_argument("--eta", type=float, help="squeezing-path efficiency")
    p.add_argument("--rho", type=float, help="mode-matched fraction of the spurious light")
    p.add_argument("--psp", type=float, help="spurious power incident on the OPO, W")
    p.add_argument("--rin", type=float, help="input-coupler power reflectivity")
    p.add_argument("--x", type=float, help="normalised parametric interaction strength")
    p.add_argument("--waist", type=float, help="cavity waist at the crystal, m")
    p.add_argument("--theta", type=float, help="scatter/pump relative phase, rad")
    p.add_argument("--wavelength", type=float)
    for name in ("ps", "eta", "rho", "psp", "rin"):
        p.add_argument(f"--{name}-err", type=float, help=f"one-sigma error of --{name}")

    p = sub.add_parser("project", parents=[common], help="requirement margins relative to quantum noise")
    p.add_argument("--in", dest="input", type=Path,
                   help="CSV frequency,value of backscatter/quantum-noise ratios (default: bundled points)")
    p.add_argument("--qn-margin", type=float)
    p.add_argument("--squeezing-factor", type=float)
    p.add_argument("--carrier-scale", type=float)
    return parser


def resolve_options(args):
    """Merge defaults, the config file and explicit flags (flags win)."""
    defaults = DEFAULTS[args.command]
    config = {}
    if args.config is not None:
        if not args.config.exists():
            raise InputError(f"config file {args.config} does not exist")
        try:
            config = json.loads(args.config.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"config file {args.config}: malformed JSON ({exc})") from exc
        if not isinstance(config, dict):
            raise InputError(f"config file {args.config}: top level must be an object")
        unknown = sorted(set(config) - set(defaults))
        if unknown:
            raise InputError(f"config file {args.config}: unknown field(s) {', '.join(unknown)}")
    opts = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        opts[key] = flag if flag is not None else config.get(key, default)
    if isinstance(opts.get("band"), str):
        opts["band"] = _band(opts["band"])
    if isinstance(opts.get("at"), (int, float, str)):
        opts["at"] = _floats(opts["at"])
    for key in REQUIRED.get(args.command, ()):
        if opts.get(key) is None:
            raise InputError(f"missing required option '{key.replace('_', '-')}'")
    return opts


def _out_dir(args):
    if args.out_dir is not None:
        return args.out_dir
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def _carrier(opts):
    return CarrierState(opts["carrier_power"], opts["wavelength"], opts["pd_efficiency"])


def cmd_simulate(opts, out):
    carrier = _carrier(opts)
    ps = opts["ps"] if opts["ps"] is not None else opts["ratio"] * carrier.mean_power
    kind = opts["kind"]
    static = opts["static_displacement"]
    if static is None:
        # fringe position where the linear coupling equals its typical value
        static = carrier.wavelength / 16.0
    scatter = ScatterPath(ps, static_displacement=static)
    if kind == "shelf":
        drive = DriveConfig("sinusoidal_phase", opts["f_m"], opts["phi_m"], seed=opts["seed"],
                            offset_phase=opts["offset_phase"])
        series = synthesize_shelf_drive(carrier, scatter, drive, opts["fs"], opts["duration"],
                                        shot_noise=opts["shot_noise"], noise_rin_asd=opts["noise_rin_asd"])
    else:
        dkind = "tonal_displacement" if kind == "tone" else "stochastic_background"
        drive = DriveConfig(dkind, opts["f_m"], amplitude=opts["amplitude"], seed=opts["seed"],
                            spectral_index=opts["spectral_index"])
        motion = synthesize_displacement(drive, opts["fs"], opts["duration"])
        if kind == "motion":
            series = motion
        else:
            series = synthesize_from_displacement(carrier, scatter, motion, shot_noise=opts["shot_noise"],
                                                  noise_rin_asd=opts["noise_rin_asd"], seed=opts["seed"] + 1)
    csv, side = write_series(series, out / f"{opts['name']}.csv", MANIFEST_NAME)
    return {"series": csv, "sidecar": side}, {}, opts["seed"], None


def _segment_length(opts, fs):
    if opts["segment_length"] is not None:
        return int(opts["segment_length"])
    n = int(round(fs / opts["resolution"]))
    # odd lengths keep the hop incommensurate with periodic drives
    return n if n % 2 else n - 1


def cmd_spectrum(opts, out):
    series = read_series(opts["input"])
    n = _segment_length(opts, series.sample_rate)
    kind = opts["kind"]
    if kind == "rin":
        spec = estimate_rin_spectrum(series, n, opts["overlap"])
    else:
        spec = estimate_motion_spectrum(series, n, opts["overlap"])
        if kind == "accel":
            keep = spec.frequencies > 0
            conv = accel_to_displacement(spec.frequencies[keep], spec.asd[keep])
            spec = MotionSpectrum(conv.frequencies, conv.displacement_asd, spec.resolution, spec.averages,
                                  spec.window, "m/sqrt(Hz)", dict(spec.metadata, converted_from="acceleration"))
    csv, side = write_spectrum(spec, out / f"{opts['name']}.csv", MANIFEST_NAME)
    outputs = {"spectrum": csv, "sidecar": side}
    if opts["plot"]:
        traces, labels = [spec], [opts["name"]]
        if opts["phi_m"] is not None and kind == "rin":
            ratio = opts["ratio"] if opts["ratio"] is not None else 0.0
            traces.append(shelf_model_asd(ratio, opts["phi_m"], opts["f_m"] or 1.0, spec.frequencies))
            labels.append("shelf_model")
        qn = None
        if opts["carrier_power"] is not None and kind == "rin":
            qn = quantum_noise_rin(_carrier(opts))
        files = emit_plot_data(traces, labels, out / "plot", qn_reference=qn, manifest=f"../{MANIFEST_NAME}")
        outputs["plot"] = [str(p) for p in files]
    return outputs, {"segment_length": n}, None, None


def cmd_fit_shelf(opts, out):
    spectrum = read_spectrum(opts["input"], kind="rin")
    floor = opts["noise_floor"]
    if floor != "auto":
        try:
            floor = float(floor)
        except ValueError as exc:
            raise InputError(f"noise-floor must be a number or 'auto', got {floor!r}") from exc
    result = fit_shelf(spectrum, opts["phi_m"], opts["f_m"], opts["band"], floor)
    payload = result.to_dict()
    if opts["carrier_power"] is not None:
        ps = infer_backscatter_power(result, CarrierState(opts["carrier_power"]))
        payload["backscatter_power"] = ps.value
        payload["backscatter_power_uncertainty"] = ps.uncertainty
    payload["manifest"] = MANIFEST_NAME
    path = write_json(out / f"{opts['name']}.json", payload)
    return {"fit": path}, {}, None, payload


def cmd_scale_background(opts, out):
    rin = read_spectrum(opts["driven_rin"], kind="rin")
    driven = read_spectrum(opts["driven_motion"], kind="motion")
    background = read_spectrum(opts["background_motion"], kind="motion")
    freqs = list(opts["at"])
    values = scale_background(rin, driven, background, freqs)
    payload = {"frequencies": freqs, "background_rin": np.atleast_1d(values).tolist(),
               "units": "1/sqrt(Hz)", "manifest": MANIFEST_NAME}
    path = write_json(out / f"{opts['name']}.json", payload)
    return {"background": path}, {}, None, payload


def cmd_budget(opts, out):
    opo = OpoParams(opts["rin"], opts["waist"], opts["x"], opts["theta"], opts["wavelength"])
    budget = scatter_budget(opts["ps"], opts["eta"], opts["rho"], opts["psp"], opo,
                            backscatter_power_err=opts["ps_err"], eta_sqz_err=opts["eta_err"],
                            rho_err=opts["rho_err"], spurious_power_err=opts["psp_err"],
                            reflectivity_err=opts["rin_err"])
    payload = budget.to_dict()
    payload["units"] = {"r_opo": "power ratio", "r_opo_db": "dB", "bsdf": "1/sr", "solid_angle": "sr"}
    payload["manifest"] = MANIFEST_NAME
    path = write_json(out / f"{opts['name']}.json", payload)
    return {"budget": path}, {}, None, payload


def cmd_project(opts, out):
    if opts["input"] is None:
        measured = reference_background_points()
    else:
        f, v = _read_columns(opts["input"], ("frequency", "value"))
        measured = QnRelativeSpectrum(f, v, label="measured")
    config = RequirementConfig(opts["qn_margin"], opts["squeezing_factor"], opts["carrier_scale"])
    projected = project_backscatter(measured, config)
    requirement = requirement_curve(config, measured.frequencies)
    report = isolation_deficit(projected, requirement)
    payload = report.to_dict()
    payload["manifest"] = MANIFEST_NAME
    name = opts["name"]
    outputs = {"report": write_json(out / f"{name}.json", payload)}
    for trace, values in (("measured", measured.values), ("projected", projected.values),
                          ("requirement", requirement.values), ("deficit", np.asarray(report.deficit_factor))):
        outputs[trace] = _write_columns(out / f"{name}_{trace}.csv", ("frequency", "value"),
                                        (measured.frequencies, values))
    return outputs, {}, None, payload


HANDLERS = {
    "simulate": cmd_simulate,
    "spectrum": cmd_spectrum,
    "fit-shelf": cmd_fit_shelf,
    "scale-background": cmd_scale_background,
    "budget": cmd_budget,
    "project": cmd_project,
}


def run_command(argv=None):
    """Run one CLI command; returns the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve_options(args)
        out = _out_dir(args)
        out.mkdir(parents=True, exist_ok=True)
        outputs, extra, seed, payload = HANDLERS[args.command](opts, out)
        inputs = {k: opts[k] for k in ("input", "driven_rin", "driven_motion", "background_motion")
                  if opts.get(k) is not None}
        manifest = RunManifest(args.command, inputs=inputs, outputs=outputs,
                               config=dict(opts, **extra), seed=seed)
        manifest.write(out)
    except BackscatterError as exc:
        print(f"backscatter {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if payload is not None:
        print(json.dumps(_jsonable(payload), indent=2, sort_keys=True))
    return 0


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
