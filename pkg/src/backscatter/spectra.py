"""Amplitude spectral densities: estimation, the shelf model, unit conversion."""

from dataclasses import dataclass, field

import numpy as np
from scipy import signal, special
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_frequency_grid, check_nonnegative, uniform_step
from .exceptions import DomainError, InputError, RegimeError
from .synthesis import TimeSeries

#: Equivalent noise bandwidth of the Hann window, in bins.
HANN_ENBW = 1.5

#: The Hann kernel is evaluated this many bins either side of a line;
#: beyond it the leaked power is below 1e-11 of the line.
_KERNEL_HALF_WIDTH = 64


@dataclass(frozen=True, eq=False)
class RinSpectrum:
    """One-sided amplitude spectral density on a uniform frequency grid.

    ``asd`` is in 1/sqrt(Hz) for relative intensity noise.  ``averages``
    is the number of averaged periodograms; 0 marks a model curve.
    """

    frequencies: np.ndarray
    asd: np.ndarray
    resolution: float
    averages: int = 0
    window: str = "hann"
    units: str = "1/sqrt(Hz)"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        f = check_frequency_grid(self.frequencies)
        asd = np.array(self.asd, dtype=float)
        if asd.shape != f.shape:
            raise InputError("frequencies and asd must have the same length")
        if np.any(~np.isfinite(asd)) or np.any(asd < 0):
            raise InputError("asd must be finite and non-negative")
        if self.resolution <= 0:
            raise InputError("resolution must be > 0")
        if f.size > 1 and not np.isclose(np.mean(np.diff(f)), self.resolution, rtol=1e-6):
            raise InputError("resolution must equal the frequency step")
        for a in (f, asd):
            a.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "asd", asd)

    @property
    def psd(self):
        return self.asd ** 2

    @property
    def enbw(self):
        """Equivalent noise bandwidth of one bin, in Hz."""
        return (HANN_ENBW if self.window == "hann" else 1.0) * self.resolution

    def value_at(self, frequency):
        return value_at(self, frequency)

    def band(self, low, high):
        """Copy restricted to ``low <= f <= high``."""
        keep = (self.frequencies >= low) & (self.frequencies <= high)
        return type(self)(self.frequencies[keep], self.asd[keep], self.resolution,
                          self.averages, self.window, self.units, dict(self.metadata))


@dataclass(frozen=True, eq=False)
class MotionSpectrum:
    frequencies: np.ndarray
    displacement_asd: np.ndarray
    resolution: float | None = None
    averages: int = 0
    window: str = "hann"
    units: str = "m/sqrt(Hz)"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        f = check_frequency_grid(self.frequencies)
        asd = np.array(self.displacement_asd, dtype=float)
        if asd.shape != f.shape:
            raise InputError("frequencies and displacement_asd must have the same length")
        if np.any(~np.isfinite(asd)) or np.any(asd < 0):
            raise InputError("displacement_asd must be finite and non-negative")
        for a in (f, asd):
            a.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "displacement_asd", asd)

    @property
    def asd(self):
        return self.displacement_asd

    def value_at(self, frequency):
        return value_at(self, frequency)


def value_at(spectrum, frequency):
    """ASD of ``spectrum`` at ``frequency`` by linear interpolation.

    Plain numbers pass through unchanged, so scalar ASD values can be
    used wherever a spectrum is accepted.
    """
    if np.isscalar(spectrum) or isinstance(spectrum, np.ndarray):
        return float(spectrum)
    f = spectrum.frequencies
    if not f[0] <= frequency <= f[-1]:
        raise InputError(f"{frequency:g} Hz is outside the spectrum ({f[0]:g}..{f[-1]:g} Hz)")
    return float(np.interp(frequency, f, spectrum.asd))


def band_power(spectrum, low, high):
    """Power (ASD squared times bandwidth) summed over ``low <= f <= high``."""
    keep = (spectrum.frequencies >= low) & (spectrum.frequencies <= high)
    return float(np.sum(spectrum.asd[keep] ** 2) * spectrum.resolution)


def line_rms(spectrum, frequency, half_width=3):
    """RMS amplitude of a spectral line, integrating ``half_width`` bins each side."""
    span = half_width * spectrum.resolution
    return float(np.sqrt(band_power(spectrum, frequency - span, frequency + span)))


class WelchEstimator(TransformerMixin, BaseEstimator):
    """Hann-windowed averaged-periodogram ASD estimator.

    ``transform`` takes a :class:`TimeSeries`.  With ``relative=True`` the
    series is first normalised as (x - mean) / mean and a
    :class:`RinSpectrum` is returned; otherwise the raw series is used and
    a :class:`MotionSpectrum` is returned.  The estimator has no fitted
    state, so ``fit`` only validates parameters.
    """

    def __init__(self, segment_length=2048, overlap=0.5, relative=True):
        self.segment_length = segment_length
        self.overlap = overlap
        self.relative = relative

    def _validate_params(self):
        if int(self.segment_length) != self.segment_length or self.segment_length < 2:
            raise InputError("segment_length must be an integer >= 2")
        if not 0.0 <= self.overlap <= 0.9:
            raise InputError("overlap must lie in [0, 0.9]")

    def fit(self, X=None, y=None):
        self._validate_params()
        return self

    def transform(self, X):
        self._validate_params()
        if not isinstance(X, TimeSeries):
            raise InputError("WelchEstimator.transform expects a TimeSeries")
        n = int(self.segment_length)
        if len(X) < n:
            raise InputError(f"series of {len(X)} samples is shorter than one segment ({n})")
        x = X.samples
        if self.relative:
            mean = float(np.mean(x))
            if mean <= 0:
                raise InputError("relative spectra need a positive mean power")
            x = np.zeros_like(x) if np.ptp(x) == 0 else (x - mean) / mean
        noverlap = int(round(self.overlap * n))
        f, psd = signal.welch(x, fs=X.sample_rate, window="hann", nperseg=n, noverlap=noverlap,
                              detrend="constant", scaling="density", return_onesided=True)
        averages = 1 + (len(X) - n) // (n - noverlap)
        meta = {"segment_length": n, "overlap": self.overlap, "sample_rate": X.sample_rate,
                "window": "hann"}
        if self.relative:
            return RinSpectrum(f, np.sqrt(psd), X.sample_rate / n, averages, "hann", metadata=meta)
        units = "m/sqrt(Hz)" if X.units == "m" else f"{X.units}/sqrt(Hz)"
        return MotionSpectrum(f, np.sqrt(psd), X.sample_rate / n, averages, "hann", units, meta)


def estimate_rin_spectrum(series, segment_length, overlap=0.5):
    return WelchEstimator(segment_length, overlap, relative=True).fit_transform(series)


def estimate_motion_spectrum(series, segment_length, overlap=0.5):
    return WelchEstimator(segment_length, overlap, relative=False).fit_transform(series)


def hann_kernel(offset_bins):
    """Expected Hann periodogram response to a unit-power line.

    ``offset_bins`` is the distance from the line in frequency bins.
    The kernel sums to one over any set of unit-spaced offsets, so power
    is conserved however the line sits between bins.
    """
    u = np.asarray(offset_bins, dtype=float)
    near_one = np.isclose(np.abs(u), 1.0)
    denom = np.where(near_one, 1.0, 1.0 - u ** 2)
    amp = np.where(near_one, 0.5, np.sinc(u) / denom)
    return amp ** 2 / HANN_ENBW


def bessel_truncation(phi_m):
    """Highest harmonic kept: past the turning point by the Airy width."""
    return int(np.ceil(phi_m + 10.0 * np.cbrt(phi_m)))


def shelf_line_powers(ratio, phi_m):
    """Phase-averaged power of each harmonic of the fringe modulation.

    For the relative intensity 2 sqrt(ratio) cos(phi_m sin(w t) + phi_0)
    averaged over phi_0, harmonic n >= 1 carries 4 ratio J_n(phi_m)^2 and
    the DC term 2 ratio J_0(phi_m)^2.  Returns ``(harmonics, powers)``.
    """
    n = np.arange(bessel_truncation(phi_m) + 1)
    j2 = special.jv(n, phi_m) ** 2
    powers = 4.0 * ratio * j2
    powers[0] = 2.0 * ratio * j2[0]
    return n, powers


def _render_lines(line_freqs, line_powers, frequencies, resolution):
    """Two-sided expected Hann periodogram PSD of a set of lines."""
    psd = np.zeros_like(frequencies)
    lo_f = frequencies[0]
    m = frequencies.size
    reach = _KERNEL_HALF_WIDTH * resolution
    for f0, p in zip(line_freqs, line_powers):
        if p == 0.0:
            continue
        i0 = max(0, int(np.floor((f0 - reach - lo_f) / resolution)))
        i1 = min(m, int(np.ceil((f0 + reach - lo_f) / resolution)) + 1)
        if i0 >= i1:
            continue
        seg = frequencies[i0:i1]
        psd[i0:i1] += p * hann_kernel((seg - f0) / resolution) / resolution
    return psd


def shelf_model_asd(ratio, phi_m, f_m, frequencies):
    """Expected RIN ASD of a fringe-wrapping shelf.

    The phase-averaged harmonic powers are rendered as a Hann averaged
    periodogram whose resolution equals the spacing of ``frequencies``
    would see them.  With bins coarser than ``f_m`` this is the smooth
    shelf envelope; with finer bins it resolves the comb.  Summed over a
    grid starting at 0 Hz the power is 2 * ratio.
    """
    check_nonnegative(ratio, "ratio")
    if phi_m <= 2.0 * np.pi:
        raise RegimeError(f"phi_m = {phi_m:g} rad is not in the shelf regime (needs > 2 pi)")
    if f_m <= 0:
        raise DomainError("f_m must be > 0")
    f = check_frequency_grid(frequencies)
    resolution = uniform_step(f)
    n, powers = shelf_line_powers(ratio, phi_m)
    line_f = n * f_m
    # positive-frequency lines carry half their power, their images the other half
    two_sided = _render_lines(line_f[1:], powers[1:] / 2.0, f, resolution)
    two_sided += _render_lines(-line_f[1:], powers[1:] / 2.0, f, resolution)
    two_sided += _render_lines(line_f[:1], powers[:1], f, resolution)
    one_sided = np.where(f == 0.0, two_sided, 2.0 * two_sided)
    meta = {"model": "shelf", "ratio": ratio, "phi_m": phi_m, "f_m": f_m,
            "harmonics": int(n[-1])}
    return RinSpectrum(f, np.sqrt(one_sided), resolution, 0, "hann", metadata=meta)


def shelf_knee(spectrum, phi_m, f_m, drop_db=20.0, plateau_band=(0.25, 0.75)):
    """Frequency beyond which the shelf stays more than ``drop_db`` below its plateau.

    The plateau level is the median PSD over ``plateau_band`` (fractions
    of the maximum fringe rate ``phi_m * f_m``).  Bins above twice the
    fringe rate are ignored.
    """
    edge = phi_m * f_m
    f = spectrum.frequencies
    psd = spectrum.psd
    plateau = (f >= plateau_band[0] * edge) & (f <= plateau_band[1] * edge)
    if not np.any(plateau):
        raise InputError("spectrum does not cover the plateau band")
    level = np.median(psd[plateau])
    threshold = level * 10.0 ** (-drop_db / 10.0)
    considered = (f >= plateau_band[0] * edge) & (f <= 2.0 * edge)
    loud = np.nonzero(considered & (psd > threshold))[0]
    return float(f[loud.max()])


def accel_to_displacement(frequencies, accel_asd):
    """Displacement ASD from an acceleration ASD: a(f) / (2 pi f)^2."""
    f = check_frequency_grid(frequencies)
    if np.any(f <= 0):
        raise DomainError("acceleration conversion needs strictly positive frequencies")
    a = np.asarray(accel_asd, dtype=float)
    if a.shape != f.shape:
        raise InputError("frequencies and accel_asd must have the same length")
    return MotionSpectrum(f, a / (2.0 * np.pi * f) ** 2)


def displacement_to_accel(motion):
    """Inverse of :func:`accel_to_displacement`; returns the acceleration ASD array."""
    f = motion.frequencies
    if np.any(f <= 0):
        raise DomainError("acceleration conversion needs strictly positive frequencies")
    return motion.displacement_asd * (2.0 * np.pi * f) ** 2
