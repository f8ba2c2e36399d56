"""CSV/JSON file formats and run manifests.

Every CSV has two named columns and a JSON sidecar next to it
(``name.csv`` -> ``name.json``) carrying units and metadata.  Numbers are
written with 17 significant digits so values survive a round trip.
"""

import json
import logging
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import InputError
from .spectra import MotionSpectrum, RinSpectrum
from .synthesis import TimeSeries

log = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
MANIFEST_NAME = "manifest.json"
COMMANDS = ("simulate", "spectrum", "fit-shelf", "scale-background", "budget", "project")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from exc


def sidecar_path(csv_path):
    return Path(csv_path).with_suffix(".json")


def _write_columns(path, header, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.column_stack(columns)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, data, fmt=FLOAT_FORMAT, delimiter=",")
    return path


def _read_columns(path, expected):
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if header != list(expected):
        raise InputError(f"{path}: expected header {','.join(expected)!r}, got {','.join(header)!r}")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise InputError(f"{path}: malformed numeric data ({exc})") from exc
    if data.shape[1] != len(expected):
        raise InputError(f"{path}: expected {len(expected)} columns")
    return data.T


def write_series(series, path, manifest=None):
    """Write ``time,value`` CSV plus sidecar; returns both paths."""
    csv = _write_columns(path, ("time", "value"), (series.times, series.samples))
    meta = {
        "kind": "timeseries",
        "sample_rate": series.sample_rate,
        "start_time": series.start_time,
        "units": series.units,
        "seed": (series.metadata.get("drive") or {}).get("seed", series.metadata.get("seed")),
        "config": series.metadata,
        "manifest": manifest,
    }
    side = write_json(sidecar_path(csv), meta)
    return csv, side


def read_series(path):
    t, x = _read_columns(path, ("time", "value"))
    side = sidecar_path(path)
    if side.exists():
        meta = read_json(side)
        if meta.get("kind") not in (None, "timeseries"):
            raise InputError(f"{side}: not a time-series sidecar")
        fs = meta.get("sample_rate")
        units = meta.get("units", "W")
        start = meta.get("start_time", float(t[0]))
        config = meta.get("config") or {}
    else:
        if t.size < 2:
            raise InputError(f"{path}: need at least two samples")
        fs = 1.0 / float(np.median(np.diff(t)))
        units, start, config = "W", float(t[0]), {}
    if fs is None:
        raise InputError(f"{side}: missing field 'sample_rate'")
    return TimeSeries(x, float(fs), float(start), units, config)


def write_spectrum(spectrum, path, manifest=None):
    csv = _write_columns(path, ("frequency", "asd"), (spectrum.frequencies, spectrum.asd))
    kind = "rin_spectrum" if isinstance(spectrum, RinSpectrum) else "motion_spectrum"
    meta = {
        "kind": kind,
        "resolution": spectrum.resolution,
        "averages": spectrum.averages,
        "window": spectrum.window,
        "units": spectrum.units,
        "metadata": spectrum.metadata,
        "manifest": manifest,
    }
    side = write_json(sidecar_path(csv), meta)
    return csv, side


def read_spectrum(path, kind=None):
    """Read a spectrum CSV; ``kind`` ('rin' or 'motion') overrides the sidecar."""
    f, asd = _read_columns(path, ("frequency", "asd"))
    side = sidecar_path(path)
    meta = read_json(side) if side.exists() else {}
    if kind is None:
        kind = "motion" if meta.get("kind") == "motion_spectrum" else "rin"
    resolution = meta.get("resolution")
    if resolution is None:
        if f.size < 2:
            raise InputError(f"{path}: cannot infer resolution from one bin")
        resolution = float(np.mean(np.diff(f)))
    averages = int(meta.get("averages", 0))
    window = meta.get("window", "hann")
    extra = meta.get("metadata") or {}
    if kind == "rin":
        units = meta.get("units", "1/sqrt(Hz)")
        if units != "1/sqrt(Hz)":
            raise InputError(f"{path}: field 'units' is {units!r}, expected '1/sqrt(Hz)' for a RIN spectrum")
        return RinSpectrum(f, asd, float(resolution), averages, window, units, extra)
    if kind == "motion":
        units = meta.get("units", "m/sqrt(Hz)")
        return MotionSpectrum(f, asd, float(resolution), averages, window, units, extra)
    raise InputError(f"unknown spectrum kind {kind!r}")


@dataclass
class RunManifest:
    command: str
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    seed: int | None = None
    version: str = __version__

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")

    def write(self, directory):
        return write_json(Path(directory) / MANIFEST_NAME, asdict(self))


def emit_plot_data(spectra, labels, out_dir, qn_reference=None, manifest=MANIFEST_NAME):
    """Write one CSV per trace and a ``legend.json`` describing them.

    With ``qn_reference`` (a number or a spectrum on the same grid) every
    trace is divided by it bin-wise, giving ratios to quantum noise.  An
    empty trace list writes nothing and returns an empty list.
    """
    spectra = list(spectra)
    labels = list(labels)
    if not spectra:
        warnings.warn("emit_plot_data called with no traces; nothing written", stacklevel=2)
        return []
    if len(labels) != len(spectra):
        raise InputError("one label per trace is required")
    units = {s.units for s in spectra}
    if len(units) > 1:
        raise InputError(f"traces have mixed units: {sorted(units)}")
    out_dir = Path(out_dir)
    written = []
    legend = {"traces": [], "units": units.pop(), "normalized_to_quantum_noise": qn_reference is not None,
              "manifest": manifest}
    for spec, label in zip(spectra, labels):
        values = spec.asd
        if qn_reference is not None:
            ref = qn_reference if np.isscalar(qn_reference) else np.asarray(qn_reference.asd)
            values = values / ref
        safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in label)
        csv = _write_columns(out_dir / f"{safe}.csv", ("frequency", "asd"), (spec.frequencies, values))
        written.append(csv)
        legend["traces"].append({"label": label, "file": csv.name, "resolution": getattr(spec, "resolution", None)})
    if qn_reference is not None:
        legend["units"] = "ratio to quantum noise"
    written.append(write_json(out_dir / "legend.json", legend))
    log.info("wrote %d plot traces to %s", len(spectra), out_dir)
    return written
