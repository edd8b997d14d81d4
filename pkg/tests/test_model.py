import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from photonholes.errors import DegenerateState, InvalidParameter, UnknownKey
from photonholes.model import (BasisIndex, Excited1, Excited2, SimConfig, TwoPhoton,
                               basis_size, build_mode_grid, initial_state,
                               two_photon_position_amplitude, validate_config)
from photonholes.observables import single_photon_intensity

from conftest import small_config


def test_defaults_reproduce_published_parameters():
    c = SimConfig()
    assert (c.F1, c.f1, c.g1, c.g2, c.detuning_ratio, c.n_modes, c.atom_spacing) == \
        (0.01, 0.001, 0.0035, 0.00071, 0.1, 50, 1000.0)
    assert c.k01 == pytest.approx(2 * math.pi)
    assert c.band_width1 == pytest.approx(0.01 * 2 * math.pi)
    assert c.M1 == pytest.approx(0.0035 * math.pi)
    assert c.detuning == pytest.approx(0.1 * 2 * math.pi)
    # second transition tuned to two-photon resonance
    assert c.E2 == pytest.approx(c.omega01 + c.omega02)


def test_second_photon_defaults_follow_first():
    c = SimConfig(F1=0.02, f1=0.002)
    assert (c.F2, c.f2) == (0.02, 0.002)
    assert c.replace(F1=0.03).F2 == 0.03
    assert SimConfig(F2=0.05).replace(F1=0.03).F2 == 0.05


@pytest.mark.parametrize("bad", [
    {"n_modes": 1}, {"f1": 0.02}, {"g1": -1.0}, {"geometry": "spiral"},
    {"detuning_sign": 0}, {"F1": float("nan")}, {"atom_spacing": 0.0},
])
def test_invalid_parameters_rejected(bad):
    with pytest.raises(InvalidParameter):
        validate_config(bad)


def test_unknown_key_is_reported():
    with pytest.raises(UnknownKey) as info:
        validate_config({"gl": 0.1})
    assert "gl" in str(info.value)
    with pytest.raises(UnknownKey):
        validate_config({"integrator": {"stepsize": 1}})


def test_encounter_alias_and_roundtrip():
    c = validate_config({"geometry": "ring", "n_encounters": 7, "n_modes": 12.0})
    assert c.n_atoms == 7 and c.n_modes == 12
    assert validate_config(c.to_dict()) == c


def test_chain_grid_spans_band():
    c = SimConfig(n_modes=11)
    g = build_mode_grid(c, 1)
    assert g.k_values[-1] - g.k_values[0] == pytest.approx(c.band_width1)
    assert g.period * g.spacing == pytest.approx(2 * math.pi)
    assert g.direction == 1


def test_ring_grid_uses_circumference_and_reverses_photon_two():
    c = SimConfig(geometry="ring", n_modes=10, ring_circumference=1000.0)
    g1, g2 = build_mode_grid(c, 1), build_mode_grid(c, 2)
    assert g1.period == g2.period == 1000.0
    assert g2.direction == -1 and g2.k_center == pytest.approx(-c.k02)
    assert np.all(g2.k_values < 0)


@given(st.integers(min_value=1, max_value=12))
def test_basis_size_formula(n):
    assert basis_size(n) == n * n + n + 1 == BasisIndex(n).size


@given(st.integers(min_value=1, max_value=9), st.data())
def test_basis_index_is_a_bijection(n, data):
    idx = BasisIndex(n)
    i = data.draw(st.integers(min_value=0, max_value=idx.size - 1))
    assert idx.flatten(idx.unflatten(i)) == i


def test_basis_labels_order():
    idx = BasisIndex(3)
    assert idx.unflatten(0) == TwoPhoton(0, 0)
    assert idx.unflatten(5) == TwoPhoton(1, 2)
    assert idx.unflatten(9) == Excited1(0)
    assert idx.unflatten(12) == Excited2()
    with pytest.raises(IndexError):
        idx.unflatten(13)


def test_initial_state_is_normalised_product():
    s = initial_state(SimConfig(n_modes=30))
    assert s.survival == pytest.approx(1.0, abs=1e-14)
    assert np.linalg.matrix_rank(s.c, tol=1e-12) == 1
    assert s.b.sum() == 0 and s.a == 0


def test_initial_intensity_width_matches_packet_width():
    # |c(k)|^2 ~ exp(-dk^2 / 2 dk0^2) has spatial std 1 / (2 dk0)
    c = SimConfig(n_modes=60, F1=0.02)
    s = initial_state(c)
    prof = single_photon_intensity(s)
    w = prof.values / prof.values.sum()
    mu = np.sum(w * prof.x)
    sd = math.sqrt(np.sum(w * (prof.x - mu) ** 2))
    assert mu == pytest.approx(0.0, abs=1e-6)
    assert sd == pytest.approx(1 / (2 * c.packet_width1), rel=1e-3)


def test_degenerate_initial_state():
    with pytest.raises(DegenerateState):
        initial_state(small_config(2, packet_center_1=0.0, F1=0.5, f1=1e-5))


def test_state_arrays_are_read_only():
    s = initial_state(small_config(3))
    with pytest.raises(ValueError):
        s.c[0, 0] = 1.0


@given(st.integers(min_value=2, max_value=6))
def test_position_amplitude_parseval(n):
    s = initial_state(small_config(n))
    g1, g2 = s.grids
    x1 = np.arange(8 * n) * g1.period / (8 * n)
    x2 = np.arange(8 * n) * g2.period / (8 * n)
    phi = two_photon_position_amplitude(s, x1, x2)
    total = np.sum(np.abs(phi) ** 2) * (x1[1] - x1[0]) * (x2[1] - x2[0])
    assert total == pytest.approx(s.survival, rel=1e-12)
