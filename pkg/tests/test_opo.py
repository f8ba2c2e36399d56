import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from backscatter.exceptions import DomainError
from backscatter.model import from_db, to_db
from backscatter.opo import (
    OpoParams,
    cavity_scatter_gain,
    infer_bsdf,
    mitigation_whatif,
    parametric_factor,
    r_opo_from_powers,
    scatter_budget,
    solid_angle,
)

LAM = 1.064e-6
BASE = OpoParams(0.868, 34e-6, 0.6, 0.0, LAM)

valid_opo = st.builds(
    OpoParams,
    st.floats(0.01, 0.99),
    st.floats(5e-6, 1e-3),
    st.floats(0.0, 0.95),
    st.floats(-np.pi, np.pi),
    st.just(LAM),
)


def test_r_opo_examples():
    r = r_opo_from_powers(260e-15, 0.38, 0.11, 0.7e-6)
    assert r == pytest.approx(8.886e-6, rel=1e-3)
    assert to_db(r) == pytest.approx(-50.5, abs=0.05)
    assert r_opo_from_powers(2600e-15, 0.38, 0.11, 0.7e-6) == pytest.approx(10 * r)
    assert r_opo_from_powers(1e-6, 1.0, 1.0, 1e-6) == 1.0
    with pytest.raises(DomainError):
        r_opo_from_powers(260e-15, 0.0, 0.11, 0.7e-6)
    with pytest.raises(DomainError):
        r_opo_from_powers(260e-15, 0.38, 0.11, 0.0)


def test_solid_angle():
    assert solid_angle(LAM, 34e-6) == pytest.approx(3.12e-4, rel=1e-3)
    assert solid_angle(LAM, LAM / np.sqrt(np.pi)) == pytest.approx(1.0)
    assert solid_angle(LAM, 68e-6) == pytest.approx(solid_angle(LAM, 34e-6) / 4)


def test_cavity_gain_examples():
    assert cavity_scatter_gain(BASE) == pytest.approx(0.112, rel=5e-3)
    omega = solid_angle(LAM, 34e-6)
    pump_off = BASE.replace(interaction_strength=0.0, pump_relative_phase=1.7)
    assert cavity_scatter_gain(pump_off) == pytest.approx(16 * omega / (1 - 0.868) ** 2)
    ratio = cavity_scatter_gain(BASE.replace(pump_relative_phase=np.pi)) / cavity_scatter_gain(BASE)
    assert ratio == pytest.approx(16.0, rel=1e-12)


def test_opo_params_validation():
    with pytest.raises(DomainError):
        OpoParams(1.0, 34e-6)
    with pytest.raises(DomainError):
        OpoParams(0.868, 34e-6, interaction_strength=1.0)
    with pytest.raises(DomainError):
        OpoParams(0.868, 0.0)


def test_infer_bsdf_examples():
    bsdf = infer_bsdf(8.9e-6, BASE)
    assert bsdf == pytest.approx(8e-5, rel=0.01)
    assert 6e-5 <= bsdf <= 12e-5
    assert infer_bsdf(4.45e-6, BASE) == pytest.approx(bsdf / 2)
    with pytest.raises(DomainError):
        infer_bsdf(1.0, BASE)


@given(valid_opo, st.floats(1e-9, 1e-3))
def test_bsdf_round_trip(opo, bsdf):
    r = bsdf * cavity_scatter_gain(opo)
    if 0 < r < 1:
        assert infer_bsdf(r, opo) == pytest.approx(bsdf, rel=1e-12)


@given(valid_opo)
def test_theta_zero_is_conservative(opo):
    at_zero = opo.replace(pump_relative_phase=0.0)
    assert infer_bsdf(1e-6, at_zero) >= infer_bsdf(1e-6, opo) * (1 - 1e-12)


@given(st.floats(0.01, 0.98), st.floats(0.0, 0.9))
def test_gain_monotone(r_in, x):
    lo = OpoParams(r_in, 34e-6, x)
    assert cavity_scatter_gain(lo.replace(input_coupler_reflectivity=r_in + 0.01)) > cavity_scatter_gain(lo)
    # at theta=0 the parametric factor is 1/(1+x)^2, so the gain falls with x; at theta=pi it rises
    assert cavity_scatter_gain(lo.replace(interaction_strength=x + 0.05)) < cavity_scatter_gain(lo)
    anti = lo.replace(pump_relative_phase=np.pi)
    assert cavity_scatter_gain(anti.replace(interaction_strength=x + 0.05)) > cavity_scatter_gain(anti)


def test_parametric_factor():
    assert parametric_factor(0.6, 0.0) == pytest.approx(1 / 1.6 ** 2)
    assert parametric_factor(0.0, 2.0) == 1.0


def test_mitigation_examples():
    changed = BASE.replace(input_coupler_reflectivity=0.80)
    factor = mitigation_whatif(BASE, changed, fixed_bsdf=8e-5)
    assert factor == pytest.approx((0.2 / 0.132) ** 2, rel=1e-12)
    assert factor == pytest.approx(2.3, abs=0.01)
    assert mitigation_whatif(BASE, BASE) == 1.0
    assert mitigation_whatif(BASE, BASE.replace(waist=68e-6)) == pytest.approx(4.0)
    with pytest.raises(DomainError):
        mitigation_whatif(BASE, changed, fixed_bsdf=-1.0)


def test_scatter_budget_nominal_and_errors():
    b = scatter_budget(260e-15, 0.38, 0.11, 0.7e-6, BASE,
                       backscatter_power_err=40e-15, eta_sqz_err=0.02, rho_err=0.03 * 0.11,
                       spurious_power_err=0.1e-6, reflectivity_err=0.002)
    assert b.r_opo_db == pytest.approx(10 * np.log10(b.r_opo), abs=1e-12)
    assert -51.0 <= b.r_opo_db <= -49.0
    assert b.bsdf == pytest.approx(7.95e-5, rel=1e-3)
    rel = np.sqrt((40 / 260) ** 2 + (0.02 / 0.38) ** 2 + 0.03 ** 2 + (0.1 / 0.7) ** 2)
    assert b.r_opo_rel_uncertainty == pytest.approx(rel)
    assert b.r_opo_db_uncertainty == pytest.approx(10 / np.log(10) * rel)
    assert b.bsdf_uncertainty == pytest.approx(b.bsdf * np.hypot(rel, 2 * 0.002 / 0.132))
    d = b.to_dict()
    assert d["inputs"]["opo"]["waist"] == 34e-6


def test_db_round_trip():
    assert from_db(-50.0) == pytest.approx(1e-5, rel=1e-12)
