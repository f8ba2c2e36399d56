"""Seeded photodetector time series with backscatter contamination."""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_nonnegative, check_positive
from .exceptions import AliasingError, InputError, RegimeError
from .model import MAX_POWER_RATIO, detected_power, phase_from_displacement, quantum_noise_rin

DRIVE_KINDS = ("sinusoidal_phase", "tonal_displacement", "stochastic_background")

#: Small-motion synthesis refuses displacement amplitudes above this
#: fraction of the wavelength.
SMALL_MOTION_LIMIT = 1.0 / 100.0


@dataclass(frozen=True)
class DriveConfig:
    """Applied or ambient motion of the scattering surface.

    For ``sinusoidal_phase`` the drive is a phase modulation of depth
    ``modulation_depth`` (rad) at ``frequency``.  For
    ``tonal_displacement`` ``amplitude`` is the peak displacement (m) of a
    tone at ``frequency``.  For ``stochastic_background`` ``amplitude`` is
    the one-sided displacement ASD (m/sqrt(Hz)) at ``frequency`` and the
    ASD follows ``(f / frequency) ** spectral_index``.

    ``offset_phase`` fixes the static fringe phase of a phase drive;
    ``None`` draws it uniformly from ``seed``.
    """

    kind: str
    frequency: float
    modulation_depth: float = 0.0
    amplitude: float = 0.0
    seed: int = 0
    spectral_index: float = 0.0
    offset_phase: float | None = None

    def __post_init__(self):
        if self.kind not in DRIVE_KINDS:
            raise InputError(f"kind must be one of {DRIVE_KINDS}, got {self.kind!r}")
        check_positive(self.frequency, "frequency", error=InputError)
        check_nonnegative(self.modulation_depth, "modulation_depth", error=InputError)
        check_nonnegative(self.amplitude, "amplitude", error=InputError)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    samples: np.ndarray
    sample_rate: float
    start_time: float = 0.0
    units: str = "W"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 2:
            raise InputError("a time series needs at least two samples")
        check_positive(self.sample_rate, "sample_rate", error=InputError)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self):
        return self.samples.size / self.sample_rate

    @property
    def times(self):
        return self.start_time + np.arange(self.samples.size) / self.sample_rate


def _time_axis(sample_rate, duration):
    check_positive(sample_rate, "sample_rate", error=InputError)
    check_positive(duration, "duration", error=InputError)
    n = int(round(sample_rate * duration))
    if n < 2:
        raise InputError("duration too short for the sample rate")
    return np.arange(n) / sample_rate


def _shot_noise(rng, n, carrier, sample_rate, noise_rin_asd):
    """White relative-intensity noise with the given one-sided ASD."""
    asd = quantum_noise_rin(carrier) if noise_rin_asd is None else noise_rin_asd
    return asd * np.sqrt(sample_rate / 2.0) * rng.standard_normal(n)


def _config_echo(carrier, scatter, drive, sample_rate, duration, **extra):
    echo = {
        "carrier": carrier.__dict__.copy(),
        "scatter": scatter.__dict__.copy(),
        "drive": drive.__dict__.copy() if drive is not None else None,
        "sample_rate": sample_rate,
        "duration": duration,
    }
    echo.update(extra)
    return echo


def synthesize_shelf_drive(carrier, scatter, drive, sample_rate, duration, *,
                           shot_noise=True, noise_rin_asd=None):
    """Photodiode power under a large sinusoidal path-length modulation.

    The fringe phase is ``phi_m sin(2 pi f_m t) + phi_0``.  The power
    follows the exact interference law, plus white relative-intensity
    noise at the shot-noise level when ``shot_noise`` is true.
    ``noise_rin_asd`` overrides that level.
    """
    if drive.kind != "sinusoidal_phase":
        raise RegimeError("synthesize_shelf_drive needs a sinusoidal_phase drive")
    if scatter.power_ratio(carrier) >= MAX_POWER_RATIO:
        raise RegimeError("backscatter power is not small compared with the carrier")
    max_fringe_rate = drive.modulation_depth * drive.frequency
    if sample_rate <= 4.0 * max_fringe_rate:
        raise AliasingError(
            f"sample_rate {sample_rate:g} Hz must exceed 4 * phi_m * f_m = {4 * max_fringe_rate:g} Hz"
        )
    t = _time_axis(sample_rate, duration)
    rng = np.random.default_rng(drive.seed)
    phi0 = rng.uniform(0.0, 2.0 * np.pi) if drive.offset_phase is None else float(drive.offset_phase)
    phase = drive.modulation_depth * np.sin(2.0 * np.pi * drive.frequency * t) + phi0
    power = detected_power(carrier, scatter, phase)
    if shot_noise:
        power = power + carrier.mean_power * _shot_noise(rng, t.size, carrier, sample_rate, noise_rin_asd)
    meta = _config_echo(carrier, scatter, drive, sample_rate, duration,
                        offset_phase=phi0, shot_noise=bool(shot_noise), noise_rin_asd=noise_rin_asd)
    return TimeSeries(power, sample_rate, units="W", metadata=meta)


def synthesize_displacement(drive, sample_rate, duration):
    """Displacement trace (m) for a tonal or stochastic drive.

    Stochastic traces are Gaussian with the one-sided ASD described by
    ``drive``, built by shaping seeded white noise in the frequency
    domain.  Tonal traces are ``amplitude * sin(2 pi f t)``.
    """
    t = _time_axis(sample_rate, duration)
    if drive.kind == "tonal_displacement":
        z = drive.amplitude * np.sin(2.0 * np.pi * drive.frequency * t)
    elif drive.kind == "stochastic_background":
        rng = np.random.default_rng(drive.seed)
        white = rng.standard_normal(t.size)
        f = np.fft.rfftfreq(t.size, 1.0 / sample_rate)
        f_floor = np.maximum(f, f[1])
        asd = drive.amplitude * (f_floor / drive.frequency) ** drive.spectral_index
        asd[0] = 0.0
        # white unit-variance noise has one-sided PSD 2/fs
        z = np.fft.irfft(np.fft.rfft(white) * asd * np.sqrt(sample_rate / 2.0), n=t.size)
    else:
        raise RegimeError("sinusoidal_phase drives are synthesised by synthesize_shelf_drive")
    meta = {"drive": drive.__dict__.copy(), "sample_rate": sample_rate, "duration": duration}
    return TimeSeries(z, sample_rate, units="m", metadata=meta)


def synthesize_from_displacement(carrier, scatter, displacement, *, shot_noise=True,
                                 noise_rin_asd=None, seed=0):
    """Photodiode power for an arbitrary path displacement trace.

    The fringe phase is 2k(Z_s + dz(t)) with ``Z_s`` taken from
    ``scatter.static_displacement``.  No regime check is applied, so this
    also produces fringe-wrapped signals.
    """
    if displacement.units != "m":
        raise InputError(f"displacement trace must be in metres, got {displacement.units!r}")
    phase = phase_from_displacement(scatter.static_displacement + displacement.samples, carrier.wavelength)
    power = detected_power(carrier, scatter, phase)
    if shot_noise:
        rng = np.random.default_rng(seed)
        power = power + carrier.mean_power * _shot_noise(
            rng, power.size, carrier, displacement.sample_rate, noise_rin_asd
        )
    meta = {
        "carrier": carrier.__dict__.copy(),
        "scatter": scatter.__dict__.copy(),
        "displacement": displacement.metadata,
        "shot_noise": bool(shot_noise),
        "noise_rin_asd": noise_rin_asd,
        "seed": seed,
    }
    return TimeSeries(power, displacement.sample_rate, displacement.start_time, units="W", metadata=meta)


def synthesize_small_motion(carrier, scatter, drive, sample_rate, duration, *,
                            shot_noise=True, noise_rin_asd=None, background=None,
                            return_displacement=False):
    """Photodiode power for sub-wavelength table motion.

    ``drive`` is a tonal or stochastic displacement.  An optional
    ``background`` displacement trace (same rate and length) is added to
    it, which is how a driven measurement on top of ambient motion is
    simulated.  With ``return_displacement`` the total displacement trace
    is returned as well, as ``(power, displacement)``.
    """
    if drive.kind == "sinusoidal_phase":
        raise RegimeError("use synthesize_shelf_drive for phase-modulation drives")
    limit = SMALL_MOTION_LIMIT * carrier.wavelength
    if drive.kind == "tonal_displacement" and drive.amplitude >= limit:
        raise RegimeError(
            f"tone amplitude {drive.amplitude:.3g} m is not small against the wavelength "
            f"(limit {limit:.3g} m); use synthesize_shelf_drive for large motion"
        )
    motion = synthesize_displacement(drive, sample_rate, duration)
    z = motion.samples
    if background is not None:
        if background.samples.size != z.size or background.sample_rate != sample_rate:
            raise InputError("background trace must match the drive's sample rate and length")
        z = z + background.samples
    if np.max(np.abs(z)) >= limit:
        raise RegimeError(
            f"peak displacement {np.max(np.abs(z)):.3g} m exceeds the small-motion limit {limit:.3g} m; "
            "use synthesize_shelf_drive for large motion"
        )
    motion = TimeSeries(z, sample_rate, units="m", metadata=motion.metadata)
    power = synthesize_from_displacement(carrier, scatter, motion, shot_noise=shot_noise,
                                         noise_rin_asd=noise_rin_asd, seed=drive.seed + 1)
    return (power, motion) if return_displacement else power
