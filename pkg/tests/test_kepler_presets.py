import json
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from nbody_majorants.errors import InvalidParametersError
from nbody_majorants.kepler import (
    fictitious_period,
    inverse_s_along_orbit,
    orbit_from_state,
    propagate,
    solve_kepler,
    solve_kepler_array,
)
from nbody_majorants.nbody import PHYSICAL, RenormSpec, SystemState, angular_momentum, make_field, total_energy
from nbody_majorants.presets import (
    FIGURE_EIGHT_PERIOD,
    PRESETS,
    figure_eight,
    get_preset,
    load_system,
    save_system,
    state_from_dict,
    state_to_dict,
    synthetic_solar_system,
    two_body,
)


@pytest.mark.parametrize("e", [0.0, 0.3, 0.9, 0.99, 0.999])
def test_kepler_equation(e):
    M = np.linspace(-7, 7, 101)
    E = solve_kepler_array(M, e)
    assert np.allclose(E - e * np.sin(E), M, atol=1e-14)
    assert solve_kepler(M[17], e) == pytest.approx(E[17], abs=1e-14)


@pytest.mark.parametrize("e", [0.0, 0.5, 0.99])
def test_orbit_elements(e):
    st = two_body(e)
    orb = orbit_from_state(st)
    assert orb.a == pytest.approx(1.0, rel=1e-13)
    assert orb.e == pytest.approx(e, abs=1e-13)
    assert orb.period == pytest.approx(2 * math.pi / math.sqrt(1.1), rel=1e-13)


def test_period_returns_to_start():
    st = two_body(0.7)
    back = propagate(st, orbit_from_state(st).period)
    assert np.allclose(back.q, st.q, atol=1e-12)
    assert np.allclose(back.v, st.v, atol=1e-12)


def test_propagation_conserves_invariants():
    st = two_body(0.9)
    for t in (0.3, 1.7, 4.2):
        s = propagate(st, t)
        assert total_energy(s) == pytest.approx(total_energy(st), rel=1e-12)
        assert np.allclose(angular_momentum(s), angular_momentum(st), rtol=1e-12)


def test_propagation_matches_numerical_solution():
    st = two_body(0.5)
    f = make_field(st, PHYSICAL)
    sol = solve_ivp(lambda _, y: f(y), (0, 2.5), st.flat(), method="DOP853", rtol=1e-13, atol=1e-14)
    ref = st.with_flat(sol.y[:, -1])
    assert np.allclose(propagate(st, 2.5).q, ref.q, atol=1e-10)


def test_hyperbolic_orbit_rejected():
    st = SystemState(gm=[1.0, 1.0], q=[[0, 0, 0], [1, 0, 0]], v=[[0, 0, 0], [0, 3.0, 0]], G=1.0)
    with pytest.raises(InvalidParametersError):
        orbit_from_state(st)


def test_fictitious_period_of_circle():
    st = two_body(0.0)
    spec = RenormSpec("original")
    T = orbit_from_state(st).period
    s = 1.0 / inverse_s_along_orbit(st, spec)([0.0])[0]
    assert fictitious_period(st, spec) == pytest.approx(T / s, rel=1e-12)
    assert fictitious_period(st, PHYSICAL) == T


def test_two_body_preset_is_barycentric():
    st = two_body(0.99)
    assert np.allclose(st.gm @ st.q, 0, atol=1e-15)
    assert np.allclose(st.gm @ st.v, 0, atol=1e-15)
    sep = np.linalg.norm(st.q[1] - st.q[0])
    assert sep == pytest.approx(1.99)
    with pytest.raises(InvalidParametersError):
        two_body(1.0)


def test_figure_eight_is_periodic():
    st = figure_eight()
    f = make_field(st, PHYSICAL)
    sol = solve_ivp(lambda _, y: f(y), (0, FIGURE_EIGHT_PERIOD), st.flat(), method="DOP853", rtol=1e-12, atol=1e-12)
    assert np.allclose(st.with_flat(sol.y[:, -1]).q, st.q, atol=1e-5)


def test_synthetic_system():
    st = synthetic_solar_system()
    assert st.n == 15
    assert st.names[4] == "Moon"
    moon = np.linalg.norm(st.q[4] - st.q[3])
    assert moon == pytest.approx(0.00257)
    assert np.allclose(st.gm @ st.v, 0, atol=1e-18)
    again = synthetic_solar_system()
    assert np.array_equal(again.q, st.q)


def test_system_file_roundtrip(tmp_path):
    st = synthetic_solar_system(3)
    path = tmp_path / "sys.json"
    save_system(st, path, {"length": "AU", "time": "day", "mass": "solar"})
    back = load_system(path)
    assert np.array_equal(back.q, st.q) and np.array_equal(back.gm, st.gm)
    assert back.G == st.G and back.names == st.names
    assert json.loads(path.read_text())["unit_system"]["length"] == "AU"


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("unit_system"),
        lambda d: d["unit_system"].pop("G"),
        lambda d: d["bodies"][0].update(q=[0.0, 1.0]),
        lambda d: d["bodies"][1].update(gm=-1.0),
        lambda d: d.update(bodies=d["bodies"][:1]),
    ],
)
def test_schema_rejects_bad_files(mutate):
    d = state_to_dict(two_body(0.1), {"length": "canonical", "time": "canonical"})
    mutate(d)
    with pytest.raises(InvalidParametersError):
        state_from_dict(d)


def test_presets_registry():
    for name in PRESETS:
        assert get_preset(name).n >= 2
    with pytest.raises(InvalidParametersError):
        get_preset("jupiter")
