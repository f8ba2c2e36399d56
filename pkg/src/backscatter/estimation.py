"""Backscatter parameters from measured spectra."""

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize, special
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_band, check_nonnegative
from .exceptions import InputError, InsufficientExcitationError, RegimeError
from .spectra import RinSpectrum, bessel_truncation, shelf_model_asd, value_at


class Measurement(NamedTuple):
    value: float
    uncertainty: float


@dataclass(frozen=True)
class ShelfFitResult:
    """Outcome of a shelf fit.

    When the fitted ratio is below ``upper_limit_sigma`` times its
    uncertainty, ``upper_limit`` is set and ``ratio`` holds the upper
    limit (best fit plus that many sigma); ``best_fit`` always holds the
    raw estimate.
    """

    ratio: float
    ratio_uncertainty: float
    residual_rms_db: float
    fit_band: tuple
    upper_limit: bool
    best_fit: float
    noise_floor: float
    n_bins: int
    phi_m: float
    f_m: float

    def to_dict(self):
        d = asdict(self)
        d["fit_band"] = list(self.fit_band)
        return d


def default_fit_band(phi_m, f_m):
    edge = phi_m * f_m
    return max(5.0 * f_m, 0.25 * edge), 0.85 * edge


class ShelfFitter(BaseEstimator):
    """Least-squares fit of the shelf model for the backscatter/carrier ratio.

    Only the power ratio is free; ``phi_m`` and ``f_m`` are the known
    drive settings.  The fit minimises log-ASD residuals with uniform
    weights over ``fit_band``.  Harmonics below ``5 * f_m`` are always
    excluded.  ``noise_floor`` is a PSD added to the model: ``"auto"``
    takes the median PSD well above the shelf edge, a number fixes it.

    Log-domain fitting of averaged periodograms is biased low by
    psi(K) - ln K for K averages; that bias is removed when the spectrum
    reports its averages.
    """

    def __init__(self, phi_m, f_m, fit_band=None, noise_floor="auto", upper_limit_sigma=2.0):
        self.phi_m = phi_m
        self.f_m = f_m
        self.fit_band = fit_band
        self.noise_floor = noise_floor
        self.upper_limit_sigma = upper_limit_sigma

    def _effective_band(self):
        edge = self.phi_m * self.f_m
        if self.fit_band is None:
            return default_fit_band(self.phi_m, self.f_m)
        lo, hi = check_band(self.fit_band, "fit_band")
        if lo <= self.f_m or hi > edge:
            raise RegimeError(
                f"fit band {lo:g}..{hi:g} Hz must lie inside the shelf ({self.f_m:g}..{edge:g} Hz)"
            )
        lo = max(lo, 5.0 * self.f_m)
        if lo >= hi:
            raise RegimeError("fit band lies entirely below 5 * f_m")
        return lo, hi

    def _floor(self, spectrum):
        if self.noise_floor != "auto":
            return float(check_nonnegative(self.noise_floor, "noise_floor", error=InputError))
        start = 1.5 * bessel_truncation(self.phi_m) * self.f_m
        above = spectrum.frequencies > start
        if np.count_nonzero(above) < 3:
            return 0.0
        return float(np.median(spectrum.psd[above]))

    def fit(self, X, y=None):
        if not isinstance(X, RinSpectrum):
            raise InputError("ShelfFitter.fit expects a RinSpectrum")
        if self.phi_m <= 2.0 * np.pi:
            raise RegimeError("phi_m must exceed 2 pi for a shelf fit")
        lo, hi = self._effective_band()
        f = X.frequencies
        if f[0] > lo or f[-1] < hi:
            raise InputError(f"spectrum ({f[0]:g}..{f[-1]:g} Hz) does not cover the fit band")
        sel = (f >= lo) & (f <= hi)
        if np.count_nonzero(sel) < 3:
            raise InputError("fewer than three spectral bins inside the fit band")
        measured = X.psd[sel]
        if np.any(measured <= 0):
            raise InputError("non-positive ASD bins inside the fit band")
        if X.averages > 0:
            measured = measured * np.exp(np.log(X.averages) - special.digamma(X.averages))
        unit = shelf_model_asd(1.0, self.phi_m, self.f_m, f).psd[sel]
        floor = self._floor(X)

        scale = max(np.mean(measured) - floor, 1e-3 * np.mean(measured)) / np.mean(unit)

        def residuals(theta):
            return 0.5 * (np.log(measured) - np.log(theta[0] * scale * unit + floor))

        lower = 0.0 if floor > 0 else 1e-12
        sol = optimize.least_squares(residuals, x0=[1.0], bounds=([lower], [np.inf]), method="trf")
        res = sol.fun
        dof = max(res.size - 1, 1)
        s2 = float(res @ res) / dof
        jtj = float(sol.jac[:, 0] @ sol.jac[:, 0])
        sigma_theta = np.sqrt(s2 / jtj) if jtj > 0 else np.inf
        best = float(sol.x[0] * scale)
        sigma = float(sigma_theta * scale)
        upper = bool(best < self.upper_limit_sigma * sigma)

        self.best_fit_ = best
        self.ratio_uncertainty_ = sigma
        self.upper_limit_ = upper
        self.ratio_ = best + self.upper_limit_sigma * sigma if upper else best
        self.noise_floor_ = floor
        self.fit_band_ = (lo, hi)
        self.residual_rms_db_ = float(np.sqrt(np.mean((20.0 / np.log(10.0) * res) ** 2)))
        self.result_ = ShelfFitResult(
            ratio=self.ratio_, ratio_uncertainty=sigma, residual_rms_db=self.residual_rms_db_,
            fit_band=(lo, hi), upper_limit=upper, best_fit=best, noise_floor=floor,
            n_bins=int(res.size), phi_m=float(self.phi_m), f_m=float(self.f_m),
        )
        return self

    def predict(self, frequencies):
        """Fitted model ASD (shelf plus noise floor) on ``frequencies``."""
        check_is_fitted(self, "result_")
        shelf = shelf_model_asd(self.best_fit_, self.phi_m, self.f_m, frequencies)
        return RinSpectrum(shelf.frequencies, np.sqrt(shelf.psd + self.noise_floor_),
                           shelf.resolution, 0, "hann", metadata=dict(shelf.metadata))


def fit_shelf(measured, phi_m, f_m, fit_band=None, noise_floor="auto"):
    return ShelfFitter(phi_m, f_m, fit_band, noise_floor).fit(measured).result_


def infer_backscatter_power(fit, carrier):
    """Absolute backscatter power ratio * P_c, with its uncertainty."""
    ratio = fit.ratio
    if ratio < 0:
        raise InputError("fit ratio must be non-negative")
    return Measurement(ratio * carrier.mean_power, fit.ratio_uncertainty * carrier.mean_power)


class BackgroundScaler(BaseEstimator):
    """Linear scaling of a driven small-motion measurement to background motion.

    ``fit`` learns the RIN per unit displacement at ``at`` from a driven
    run; ``predict`` multiplies a background displacement ASD by it.
    ``at`` may be a single frequency or a sequence of them.
    """

    def __init__(self, at):
        self.at = at

    def _frequencies(self):
        return np.atleast_1d(np.asarray(self.at, dtype=float))

    def fit(self, driven_rin, driven_motion):
        freqs = self._frequencies()
        self.driven_rin_ = np.array([value_at(driven_rin, f) for f in freqs])
        self.driven_motion_ = np.array([value_at(driven_motion, f) for f in freqs])
        if np.any(self.driven_motion_ <= 0):
            raise InsufficientExcitationError("driven motion is zero at the evaluation frequency")
        self.coupling_ = self.driven_rin_ / self.driven_motion_
        return self

    def predict(self, background_motion):
        check_is_fitted(self, "coupling_")
        freqs = self._frequencies()
        bg = np.array([value_at(background_motion, f) for f in freqs])
        weak = bg > self.driven_motion_
        if np.any(weak):
            bad = ", ".join(f"{f:g} Hz" for f in freqs[weak])
            raise InsufficientExcitationError(f"drive is not above background motion at {bad}")
        out = self.coupling_ * bg
        return float(out[0]) if np.ndim(self.at) == 0 else out


def scale_background(driven_rin, driven_motion, background_motion, at):
    """Background RIN = driven RIN * background motion / driven motion at ``at``."""
    return BackgroundScaler(at).fit(driven_rin, driven_motion).predict(background_motion)


@dataclass(frozen=True)
class LinearityReport:
    drive_levels: list
    inferred_backgrounds: list
    dispersion_factor: float
    nonlinear: bool
    threshold: float

    def to_dict(self):
        return asdict(self)


def linearity_check(runs, background_motion, at, *, min_span=3.0, max_dispersion=2.0):
    """Scale each driven run to the background and compare the results.

    ``runs`` is a sequence of ``(drive_level, driven_rin, driven_motion)``.
    The dispersion factor is max/min of the inferred backgrounds;
    ``nonlinear`` is raised when it exceeds ``max_dispersion``.
    """
    runs = list(runs)
    if len(runs) < 2:
        raise InputError("linearity check needs at least two runs")
    levels = np.array([float(r[0]) for r in runs])
    if np.any(levels <= 0):
        raise InputError("drive levels must be positive")
    if levels.max() / levels.min() < min_span:
        raise InputError(
            f"drive levels span a factor {levels.max() / levels.min():.3g}; at least {min_span:g} is required"
        )
    inferred = np.array([scale_background(rin, motion, background_motion, at) for _, rin, motion in runs])
    if np.any(inferred <= 0):
        raise InputError("inferred background is zero for at least one run")
    dispersion = float(inferred.max() / inferred.min())
    return LinearityReport(levels.tolist(), inferred.tolist(), dispersion,
                           bool(dispersion > max_dispersion), float(max_dispersion))
