"""Requirement margins for backscatter noise relative to quantum noise.

All spectra here are ratios to the quantum-noise RIN, so a value of 0.1
means the backscatter ASD is ten times below the shot-noise floor.
"""

import json
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from ._validation import check_frequency_grid
from .exceptions import InputError

DEFAULT_BANDS = (("below_40Hz", 0.0, 40.0), ("40_to_60Hz", 40.0, 60.0), ("above_60Hz", 60.0, np.inf))


@dataclass(frozen=True)
class RequirementConfig:
    qn_margin: float = 10.0
    squeezing_factor: float = 2.0
    carrier_scale: float = 7.0

    def __post_init__(self):
        for name in ("qn_margin", "squeezing_factor", "carrier_scale"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 1:
                raise InputError(f"{name} must be >= 1, got {value!r}")


@dataclass(frozen=True, eq=False)
class QnRelativeSpectrum:
    """A spectrum expressed as a ratio to the quantum-noise ASD."""

    frequencies: np.ndarray
    values: np.ndarray
    upper_limit: np.ndarray | None = None
    label: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        f = check_frequency_grid(self.frequencies)
        v = np.array(self.values, dtype=float)
        if np.ndim(self.values) == 0:
            v = np.full(f.shape, float(self.values))
        if v.shape != f.shape:
            raise InputError("frequencies and values must have the same length")
        if np.any(~np.isfinite(v)) or np.any(v < 0):
            raise InputError("relative spectrum values must be finite and non-negative")
        ul = np.zeros(f.shape, bool) if self.upper_limit is None else np.array(self.upper_limit, bool)
        if ul.shape != f.shape:
            raise InputError("upper_limit flags must match the frequency grid")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "upper_limit", ul)


@dataclass(frozen=True)
class MarginReport:
    frequencies: list
    estimated_rin_rel_qn: list
    requirement_rel_qn: list
    deficit_factor: list
    upper_limit: list
    band_max_deficit: dict
    metadata: dict

    def to_dict(self):
        return asdict(self)


def requirement_curve(config, frequencies):
    """Allowed backscatter level relative to quantum noise at each frequency.

    The quantum-noise margin and the extra quantum-noise reduction from
    squeezing both tighten the requirement.  The carrier-power increase is
    applied to the projected backscatter instead (see
    :func:`project_backscatter`).
    """
    f = check_frequency_grid(frequencies)
    level = 1.0 / (config.qn_margin * config.squeezing_factor)
    return QnRelativeSpectrum(f, np.full(f.shape, level), label="requirement",
                              metadata={"qn_margin": config.qn_margin,
                                        "squeezing_factor": config.squeezing_factor,
                                        "composition": "1 / (qn_margin * squeezing_factor)"})


def project_backscatter(measured, config):
    """Scale a measured backscatter/quantum-noise ratio to the future carrier power.

    Spurious light, and with it the backscatter power, grows in proportion
    to the carrier leaving the interferometer.  The backscatter RIN
    relative to quantum noise grows as the square root of the backscatter
    power, so the spectrum is multiplied by sqrt(carrier_scale).
    """
    factor = float(np.sqrt(config.carrier_scale))
    meta = dict(measured.metadata)
    meta.update({"carrier_scale": config.carrier_scale, "amplitude_factor": factor,
                 "composition": "measured * sqrt(carrier_scale)"})
    return QnRelativeSpectrum(measured.frequencies, measured.values * factor, measured.upper_limit,
                              label=measured.label or "projected", metadata=meta)


def isolation_deficit(projected, requirement, bands=DEFAULT_BANDS):
    """Per-frequency factor by which ``projected`` exceeds ``requirement``.

    ``bands`` is a sequence of ``(name, low, high)``; a band includes
    ``low <= f < high`` and reports the largest deficit in it, or ``None``
    when it holds no points.
    """
    if projected.frequencies.shape != requirement.frequencies.shape or not np.allclose(
        projected.frequencies, requirement.frequencies, rtol=1e-12, atol=0.0
    ):
        raise InputError("projected and requirement spectra must share a frequency grid")
    if np.any(requirement.values <= 0):
        raise InputError("requirement must be positive everywhere")
    deficit = projected.values / requirement.values
    f = projected.frequencies
    summary = {}
    for name, lo, hi in bands:
        sel = (f >= lo) & (f < hi)
        summary[name] = float(deficit[sel].max()) if np.any(sel) else None
    meta = {
        "projection": projected.metadata,
        "requirement": requirement.metadata,
        "bands": [[name, lo, None if np.isinf(hi) else hi] for name, lo, hi in bands],
    }
    return MarginReport(f.tolist(), projected.values.tolist(), requirement.values.tolist(),
                        deficit.tolist(), projected.upper_limit.tolist(), summary, meta)


def reference_background_points():
    """Bundled single-frequency background backscatter estimates, relative to quantum noise.

    These are points reconstructed from stated levels (7 to 10 times below
    quantum noise between roughly 75 and 300 Hz), not digitised data.  They
    are only meant for order-of-magnitude checks.
    """
    text = resources.files("backscatter.data").joinpath("background_points.json").read_text()
    payload = json.loads(text)
    pts = sorted(payload["points"], key=lambda p: p["frequency"])
    return QnRelativeSpectrum(
        [p["frequency"] for p in pts], [p["rel_qn"] for p in pts],
        [p.get("upper_limit", False) for p in pts], label="background_points",
        metadata={"source": payload["source"]},
    )
