"""Closed-form backscatter noise model.

Two beams reach the readout photodiode: the carrier and a weak
backscattered beam whose phase follows the round-trip path length of the
scattering surface.  Everything here is a pure function of its inputs.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.constants

from ._validation import check_nonnegative, check_positive, check_unit_interval
from .exceptions import DomainError, ModelValidityError

#: Largest backscatter-to-carrier power ratio for which the linearised
#: relative-intensity expressions are trusted.
MAX_POWER_RATIO = 1e-3


@dataclass(frozen=True)
class PhysicalConstants:
    planck: float = scipy.constants.h
    light_speed: float = scipy.constants.c


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class CarrierState:
    """Readout beam that all relative quantities are normalised to.

    ``photodiode_efficiency`` sets the shot-noise floor.
    ``squeezing_path_efficiency`` is the transmission from the squeezer
    to the readout and is only used when referring measured backscatter
    back to the squeezer.
    """

    mean_power: float
    wavelength: float = 1.064e-6
    photodiode_efficiency: float = 1.0
    squeezing_path_efficiency: float = 1.0

    def __post_init__(self):
        check_positive(self.mean_power, "mean_power")
        check_positive(self.wavelength, "wavelength")
        check_unit_interval(self.photodiode_efficiency, "photodiode_efficiency")
        check_unit_interval(self.squeezing_path_efficiency, "squeezing_path_efficiency")


@dataclass(frozen=True)
class ScatterPath:
    backscatter_power: float
    spurious_incident_power: float = 0.0
    mode_match_fraction: float = 1.0
    static_displacement: float = 0.0
    fluctuating_displacement: float = 0.0

    def __post_init__(self):
        check_nonnegative(self.backscatter_power, "backscatter_power")
        check_nonnegative(self.spurious_incident_power, "spurious_incident_power")
        check_unit_interval(self.mode_match_fraction, "mode_match_fraction", closed_low=True)

    def power_ratio(self, carrier):
        return self.backscatter_power / carrier.mean_power


def detected_power(carrier, scatter, phase):
    """Total photodiode power for a given carrier/backscatter relative phase.

    This is the exact two-beam interference sum with no small-ratio
    approximation.  ``phase`` may be an array.
    """
    pc = carrier.mean_power
    ps = scatter.backscatter_power
    if pc < 0 or ps < 0:
        raise DomainError("powers must be non-negative")
    return pc + ps + 2.0 * np.sqrt(pc * ps) * np.cos(phase)


def phase_from_displacement(displacement, wavelength):
    """Round-trip optical phase 4*pi*Z/lambda accrued by a path change Z."""
    check_positive(wavelength, "wavelength")
    return (4.0 * np.pi * np.asarray(displacement, dtype=float) / wavelength)[()]


def _check_ratio(ratio):
    if ratio >= MAX_POWER_RATIO:
        raise ModelValidityError(
            f"backscatter/carrier power ratio {ratio:.3g} is not small "
            f"(must be < {MAX_POWER_RATIO:g})"
        )


def rin_backscatter(carrier, scatter):
    """Large- and small-displacement relative intensity terms.

    Returns ``(large_term, small_term)``.  The large term carries the
    fringe nonlinearity of the static path ``Z_s``; the small term is the
    linear response to ``dz_s`` with the fringe-position factor replaced
    by its typical value 1/sqrt(2).  That constant is also the RMS of
    sin(2kZ_s) over many fringes.
    """
    ratio = scatter.power_ratio(carrier)
    _check_ratio(ratio)
    z_s = scatter.static_displacement
    dz = scatter.fluctuating_displacement
    if z_s != 0 and dz != 0 and abs(dz) >= 0.1 * abs(z_s):
        warnings.warn(
            "fluctuating displacement is not small compared with the static displacement",
            stacklevel=2,
        )
    lam = carrier.wavelength
    large = 2.0 * np.sqrt(ratio) * np.cos(phase_from_displacement(z_s, lam))
    small = np.sqrt(2.0 * ratio) * phase_from_displacement(dz, lam)
    return float(large), float(small)


def quantum_noise_rin(carrier, constants=CONSTANTS):
    """Shot-noise RIN amplitude spectral density, in 1/sqrt(Hz).

    sqrt(2 h c / (lambda eta P)): twice the photon energy over the
    detected power.
    """
    check_positive(carrier.mean_power, "mean_power")
    h, c = constants.planck, constants.light_speed
    return float(np.sqrt(2.0 * h * c / (carrier.wavelength * carrier.photodiode_efficiency * carrier.mean_power)))


def backscatter_qn_ratio(dz, scatter, carrier, constants=CONSTANTS):
    """Small-motion backscatter RIN divided by the shot-noise RIN.

    ``dz`` is a displacement amplitude spectral density in m/sqrt(Hz)
    (scalar or array).  The carrier power cancels; only the photodiode
    efficiency and wavelength of ``carrier`` are used.
    """
    dz = check_nonnegative(dz, "dz")
    h, c = constants.planck, constants.light_speed
    eta = carrier.photodiode_efficiency
    lam = carrier.wavelength
    ratio = 4.0 * np.pi * np.asarray(dz, dtype=float) * np.sqrt(
        eta * scatter.backscatter_power / (lam * h * c)
    )
    return float(ratio) if ratio.ndim == 0 else ratio


def to_db(power_ratio):
    return 10.0 * np.log10(power_ratio)


def from_db(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)
