import numpy as np
import pytest
from sklearn.base import clone

from backscatter.estimation import (
    BackgroundScaler,
    ShelfFitResult,
    ShelfFitter,
    default_fit_band,
    fit_shelf,
    infer_backscatter_power,
    linearity_check,
    scale_background,
)
from backscatter.exceptions import InputError, InsufficientExcitationError, RegimeError
from backscatter.model import CarrierState, ScatterPath, quantum_noise_rin
from backscatter.spectra import (
    MotionSpectrum,
    RinSpectrum,
    estimate_motion_spectrum,
    estimate_rin_spectrum,
)
from backscatter.synthesis import (
    DriveConfig,
    TimeSeries,
    synthesize_displacement,
    synthesize_from_displacement,
    synthesize_shelf_drive,
    synthesize_small_motion,
)

LAM = 1.064e-6
PC = 16.1e-3
FS = 2000.0
SEG = 499
CARRIER = CarrierState(PC, LAM, photodiode_efficiency=0.96)


def shelf_spectrum(ratio, seed=0, duration=300.0, shot_noise=True):
    drive = DriveConfig("sinusoidal_phase", 1.0, 173.0, seed=seed)
    s = synthesize_shelf_drive(CARRIER, ScatterPath(ratio * PC), drive, FS, duration, shot_noise=shot_noise)
    return estimate_rin_spectrum(s, SEG)


@pytest.fixture(scope="module")
def nominal():
    return shelf_spectrum(1.7e-11)


def test_fit_recovers_nominal(nominal):
    fit = fit_shelf(nominal, 173.0, 1.0)
    assert not fit.upper_limit
    assert fit.ratio == pytest.approx(1.7e-11, rel=0.10)
    assert fit.ratio_uncertainty > 0
    assert fit.fit_band == pytest.approx(default_fit_band(173.0, 1.0))
    assert fit.fit_band[1] <= 173.0


def test_fit_scaled_ratio():
    fit = fit_shelf(shelf_spectrum(1.7e-10, seed=1), 173.0, 1.0)
    assert fit.ratio == pytest.approx(1.7e-10, rel=0.10)


def test_fit_scale_equivariance(nominal):
    g = 3.0
    scaled = RinSpectrum(nominal.frequencies, g * nominal.asd, nominal.resolution, nominal.averages)
    a = fit_shelf(nominal, 173.0, 1.0)
    b = fit_shelf(scaled, 173.0, 1.0)
    assert b.ratio / a.ratio == pytest.approx(g ** 2, rel=0.02)


def test_null_spectrum_gives_upper_limit():
    rng = np.random.default_rng(4)
    qn = quantum_noise_rin(CARRIER)
    series = TimeSeries(PC * (1 + qn * np.sqrt(FS / 2) * rng.standard_normal(int(FS * 300))), FS)
    fit = fit_shelf(estimate_rin_spectrum(series, SEG), 173.0, 1.0)
    assert fit.upper_limit
    assert fit.ratio >= fit.best_fit
    assert fit.ratio < 1.7e-11


@pytest.mark.parametrize("ps", [10e-15, 10e-12])
def test_power_recovery_across_range(ps):
    spec = shelf_spectrum(ps / PC, seed=2, duration=120.0)
    fit = fit_shelf(spec, 173.0, 1.0)
    assert infer_backscatter_power(fit, CARRIER).value == pytest.approx(ps, rel=0.15)


def test_fit_band_validation(nominal):
    with pytest.raises(RegimeError):
        fit_shelf(nominal, 173.0, 1.0, fit_band=(0.5, 100.0))
    with pytest.raises(RegimeError):
        fit_shelf(nominal, 173.0, 1.0, fit_band=(40.0, 200.0))
    with pytest.raises(RegimeError):
        fit_shelf(nominal, 5.0, 1.0)
    zeroed = RinSpectrum(nominal.frequencies, np.where(nominal.frequencies > 60, 0.0, nominal.asd),
                         nominal.resolution, nominal.averages)
    with pytest.raises(InputError):
        fit_shelf(zeroed, 173.0, 1.0)
    narrow = nominal.band(0, 100)
    with pytest.raises(InputError):
        fit_shelf(narrow, 173.0, 1.0, fit_band=(40.0, 150.0))


def test_fit_band_below_5fm_is_clipped(nominal):
    fit = fit_shelf(nominal, 173.0, 1.0, fit_band=(2.0, 150.0))
    assert fit.fit_band[0] == 5.0


def test_shelf_fitter_estimator_api(nominal):
    est = ShelfFitter(173.0, 1.0, fit_band=(40.0, 150.0), noise_floor=0.0)
    assert clone(est).get_params()["fit_band"] == (40.0, 150.0)
    est.fit(nominal)
    assert isinstance(est.result_, ShelfFitResult)
    model = est.predict(nominal.frequencies)
    sel = (nominal.frequencies > 40) & (nominal.frequencies < 150)
    assert np.median(np.abs(20 * np.log10(model.asd[sel] / nominal.asd[sel]))) < 1.0
    assert set(est.result_.to_dict()) >= {"ratio", "ratio_uncertainty", "fit_band", "upper_limit",
                                          "residual_rms_db"}


def test_infer_backscatter_power():
    fit = ShelfFitResult(1.7e-11, 0.2e-11, 0.1, (43, 147), False, 1.7e-11, 0.0, 28, 173.0, 1.0)
    p = infer_backscatter_power(fit, CarrierState(16.1e-3))
    assert p.value == pytest.approx(273.7e-15, rel=1e-3)
    assert 220e-15 <= p.value <= 300e-15
    assert p.uncertainty == pytest.approx(32e-15, rel=0.01)
    zero = ShelfFitResult(0.0, 0.0, 0.0, (43, 147), True, 0.0, 0.0, 28, 173.0, 1.0)
    assert infer_backscatter_power(zero, CarrierState(16.1e-3)).value == 0.0


def _flat(value, unit="rin"):
    f = np.arange(0.0, 500.0, 1.0)
    if unit == "rin":
        return RinSpectrum(f, np.full(f.size, value), 1.0)
    return MotionSpectrum(f, np.full(f.size, value), 1.0)


def test_scale_background_examples():
    assert scale_background(_flat(1e-8), _flat(1e-9, "m"), _flat(1e-11, "m"), 270.0) == pytest.approx(1e-10)
    assert scale_background(_flat(1e-8), _flat(1e-9, "m"), _flat(1e-9, "m"), 270.0) == pytest.approx(1e-8)
    assert scale_background(1e-8, 1e-9, 1e-11, 270.0) == pytest.approx(1e-10)
    with pytest.raises(InsufficientExcitationError):
        scale_background(1e-8, 1e-9, 2e-9, 270.0)
    multi = scale_background(_flat(1e-8), _flat(1e-9, "m"), _flat(1e-11, "m"), [100.0, 270.0])
    assert multi.shape == (2,)


def test_scale_background_linearity():
    base = scale_background(1e-8, 1e-9, 1e-11, 270.0)
    assert scale_background(1e-8, 1e-9, 3e-11, 270.0) == pytest.approx(3 * base, rel=1e-15)
    assert scale_background(1e-8, 2e-9, 1e-11, 270.0) == pytest.approx(base / 2, rel=1e-15)


def test_background_scaler_api():
    est = BackgroundScaler(at=270.0).fit(_flat(1e-8), _flat(1e-9, "m"))
    assert est.coupling_[0] == pytest.approx(10.0)
    assert est.predict(_flat(1e-11, "m")) == pytest.approx(1e-10)
    assert clone(est).get_params() == {"at": 270.0}


RATIO = 1e-8
SCATTER = ScatterPath(RATIO * PC, static_displacement=LAM / 16)
BG_ASD = 1e-12
FS_SMALL = 2048.0
SEG_SMALL = 511


@pytest.fixture(scope="module")
def background():
    return synthesize_displacement(DriveConfig("stochastic_background", 270.0, amplitude=BG_ASD, seed=11),
                                   FS_SMALL, 32.0)


def driven_run(amplitude, background, seed=0):
    drive = DriveConfig("tonal_displacement", 270.0, amplitude=amplitude, seed=seed)
    power, motion = synthesize_small_motion(CARRIER, SCATTER, drive, FS_SMALL, 32.0,
                                            background=background, return_displacement=True)
    return amplitude, estimate_rin_spectrum(power, SEG_SMALL), estimate_motion_spectrum(motion, SEG_SMALL)


def test_end_to_end_background(background):
    _, rin, motion = driven_run(3e-9, background)
    bg_motion = estimate_motion_spectrum(background, SEG_SMALL)
    inferred = scale_background(rin, motion, bg_motion, 270.0)
    predicted = np.sqrt(2 * RATIO) * 4 * np.pi * bg_motion.value_at(270.0) / LAM
    assert inferred == pytest.approx(predicted, rel=0.10)


def test_linearity_linear_regime(background):
    bg_motion = estimate_motion_spectrum(background, SEG_SMALL)
    runs = [driven_run(a, background, seed=i) for i, a in enumerate((1e-9, 3e-9, 1e-8))]
    report = linearity_check(runs, bg_motion, 270.0)
    assert report.dispersion_factor < 1.2
    assert not report.nonlinear


def test_linearity_fringe_wrapped_run_flags(background):
    bg_motion = estimate_motion_spectrum(background, SEG_SMALL)
    runs = [driven_run(a, background, seed=i) for i, a in enumerate((1e-9, 1e-8))]
    tone = synthesize_displacement(DriveConfig("tonal_displacement", 270.0, amplitude=LAM / 4), FS_SMALL, 32.0)
    wrapped_z = TimeSeries(tone.samples + background.samples, FS_SMALL, units="m")
    wrapped = synthesize_from_displacement(CARRIER, SCATTER, wrapped_z, seed=5)
    runs.append((LAM / 4, estimate_rin_spectrum(wrapped, SEG_SMALL), estimate_motion_spectrum(wrapped_z, SEG_SMALL)))
    report = linearity_check(runs, bg_motion, 270.0)
    assert report.dispersion_factor > 2
    assert report.nonlinear


def test_linearity_degenerate_inputs():
    run = (1e-9, _flat(1e-8), _flat(1e-9, "m"))
    same = linearity_check([run, run], _flat(1e-11, "m"), 270.0, min_span=1.0)
    assert same.dispersion_factor == 1.0
    with pytest.raises(InputError):
        linearity_check([run, run], _flat(1e-11, "m"), 270.0)
    with pytest.raises(InputError):
        linearity_check([run], _flat(1e-11, "m"), 270.0)
    with pytest.raises(InputError):
        linearity_check([(0.0, run[1], run[2]), run], _flat(1e-11, "m"), 270.0)
