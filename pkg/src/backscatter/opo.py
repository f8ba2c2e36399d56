"""Backscatter reflectivity and crystal BSDF of a below-threshold OPO."""

from dataclasses import asdict, dataclass, replace

import numpy as np

from ._validation import check_positive, check_unit_interval
from .exceptions import DomainError
from .model import to_db


@dataclass(frozen=True)
class OpoParams:
    input_coupler_reflectivity: float
    waist: float
    interaction_strength: float = 0.0
    pump_relative_phase: float = 0.0
    wavelength: float = 1.064e-6

    def __post_init__(self):
        r = self.input_coupler_reflectivity
        if not 0.0 < r < 1.0:
            raise DomainError(f"input_coupler_reflectivity must lie in (0, 1), got {r!r}")
        check_positive(self.waist, "waist")
        check_positive(self.wavelength, "wavelength")
        x = self.interaction_strength
        if not 0.0 <= x < 1.0:
            raise DomainError(f"interaction_strength must satisfy 0 <= x < 1 (below threshold), got {x!r}")

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class ScatterBudget:
    r_opo: float
    r_opo_db: float
    bsdf: float
    solid_angle: float
    r_opo_rel_uncertainty: float = 0.0
    r_opo_db_uncertainty: float = 0.0
    bsdf_uncertainty: float = 0.0
    inputs: dict | None = None

    def to_dict(self):
        return asdict(self)


def r_opo_from_powers(backscatter_power, eta_sqz, rho, spurious_power):
    """Fraction of the spurious power reaching the OPO that it sends back.

    The measured backscatter power is referred back to the OPO through the
    squeezing-path efficiency ``eta_sqz``.  The incident power is reduced to
    the part mode-matched to the OPO by ``rho``.
    """
    check_positive(backscatter_power, "backscatter_power")
    check_positive(spurious_power, "spurious_power")
    check_unit_interval(eta_sqz, "eta_sqz")
    check_unit_interval(rho, "rho")
    return backscatter_power / (eta_sqz * rho * spurious_power)


def solid_angle(wavelength, waist):
    """Solid angle lambda^2 / (pi W0^2) of the cavity mode at its waist."""
    check_positive(wavelength, "wavelength")
    check_positive(waist, "waist")
    return wavelength ** 2 / (np.pi * waist ** 2)


def parametric_factor(x, theta):
    """Parametric amplification of circulating scatter at pump phase ``theta``."""
    return (1.0 - 2.0 * x * np.cos(theta) + x ** 2) / (1.0 - x ** 2) ** 2


def cavity_scatter_gain(opo):
    """Multiplier that turns the crystal BSDF into the OPO back-reflectivity."""
    if not 0.0 <= opo.interaction_strength < 1.0:
        raise DomainError("interaction_strength must be below threshold (x < 1)")
    omega = solid_angle(opo.wavelength, opo.waist)
    cavity = 16.0 * omega / (1.0 - opo.input_coupler_reflectivity) ** 2
    return cavity * parametric_factor(opo.interaction_strength, opo.pump_relative_phase)


def infer_bsdf(r_opo, opo):
    """Crystal BSDF (1/sr) implied by a measured back-reflectivity.

    At ``pump_relative_phase = 0`` the parametric factor is smallest, so
    the inferred BSDF is the largest over all pump phases.
    """
    if not 0.0 < r_opo < 1.0:
        raise DomainError(f"r_opo must lie in (0, 1), got {r_opo!r}")
    return r_opo / cavity_scatter_gain(opo)


def mitigation_whatif(base, changed, fixed_bsdf=None):
    """Factor by which R_OPO drops going from ``base`` to ``changed`` at fixed BSDF.

    The BSDF cancels in the ratio; ``fixed_bsdf`` is accepted so callers
    can state it, and is validated when given.
    """
    if fixed_bsdf is not None:
        check_positive(fixed_bsdf, "fixed_bsdf")
    return cavity_scatter_gain(base) / cavity_scatter_gain(changed)


def scatter_budget(backscatter_power, eta_sqz, rho, spurious_power, opo, *,
                   backscatter_power_err=0.0, eta_sqz_err=0.0, rho_err=0.0,
                   spurious_power_err=0.0, reflectivity_err=0.0):
    """R_OPO in linear and dB form plus the BSDF, with first-order errors.

    The ``*_err`` arguments are absolute one-sigma errors.  Relative
    errors add in quadrature.  The input-coupler term enters the BSDF
    through the (1 - R_in)^-2 dependence of the cavity gain.
    """
    r = r_opo_from_powers(backscatter_power, eta_sqz, rho, spurious_power)
    rel_r = float(np.sqrt(
        (backscatter_power_err / backscatter_power) ** 2
        + (eta_sqz_err / eta_sqz) ** 2
        + (rho_err / rho) ** 2
        + (spurious_power_err / spurious_power) ** 2
    ))
    rel_gain = 2.0 * reflectivity_err / (1.0 - opo.input_coupler_reflectivity)
    bsdf = infer_bsdf(r, opo)
    db_err = 10.0 / np.log(10.0) * rel_r
    inputs = {
        "backscatter_power": backscatter_power, "eta_sqz": eta_sqz, "rho": rho,
        "spurious_power": spurious_power, "opo": asdict(opo),
        "errors": {
            "backscatter_power": backscatter_power_err, "eta_sqz": eta_sqz_err, "rho": rho_err,
            "spurious_power": spurious_power_err, "input_coupler_reflectivity": reflectivity_err,
        },
    }
    return ScatterBudget(
        r_opo=float(r), r_opo_db=float(to_db(r)), bsdf=float(bsdf),
        solid_angle=float(solid_angle(opo.wavelength, opo.waist)),
        r_opo_rel_uncertainty=rel_r, r_opo_db_uncertainty=db_err,
        bsdf_uncertainty=float(bsdf * np.hypot(rel_r, rel_gain)), inputs=inputs,
    )
