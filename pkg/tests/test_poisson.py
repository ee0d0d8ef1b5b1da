import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import closedstring as cs
from closedstring.ddf import DDFInvariantSpec
from closedstring.errors import GradientMismatch
from closedstring.numerics import TAU
from closedstring.pohlmeyer import InvariantSpec
from closedstring.poisson import (Observable, bracket,
                                  chart_for, coordinate_observable,
                                  ddf_invariant_observable,
                                  finite_difference_gradient, gradient,
                                  invariance_report, pohlmeyer_observable,
                                  product_observable,
                                  smeared_momentum_observable,
                                  smeared_position_observable, virasoro_mode)
from oracles import virasoro_mode_direct


@pytest.fixture(scope="module")
def state(frame4):
    return cs.random_state(4, 8, seed=6, frame=frame4)


@pytest.fixture(scope="module")
def chart(state):
    return chart_for(state)


# ----------------------------------------------------------------------
# chart
# ----------------------------------------------------------------------

@given(st.integers(0, 2 ** 16))
@settings(max_examples=10)
def test_pack_unpack_bit_exact(seed):
    st_ = cs.random_state(3, 2, seed=seed, frame=cs.default_frame(3))
    chart = chart_for(st_)
    back = chart.unpack(chart.pack(st_), st_)
    for f in ("x", "p", "left", "right"):
        assert np.array_equal(getattr(back, f), getattr(st_, f))


def test_omega_antisymmetric_and_norm(chart):
    omega = chart.omega()
    assert np.max(np.abs(omega + omega.T)) == 0.0
    assert chart.omega_norm() == pytest.approx(max(1.0, chart.truncation / 2.0))


def test_mode_brackets_from_chart(state, chart):
    # {Re alpha_m^mu, Im alpha_m^nu} = (m/2) eta^{mu nu}, everything else 0
    b = chart._blocks()
    d = chart.dim
    eta = cs.minkowski(d)
    for m in (1, 3):
        for mu in range(d):
            re_idx = b["re_left"].start + (m - 1) * d + mu
            im_idx = b["im_left"].start + (m - 1) * d + mu
            f = coordinate_observable(chart, re_idx)
            g = coordinate_observable(chart, im_idx)
            val = bracket(f, g, state, chart)
            assert val == pytest.approx(m / 2.0 * eta[mu])
    # cross-sector vanishes
    f = coordinate_observable(chart, b["re_left"].start)
    g = coordinate_observable(chart, b["im_right"].start)
    assert bracket(f, g, state, chart) == pytest.approx(0.0, abs=1e-14)


def test_zero_mode_bracket(state, chart):
    # {x^mu, p^nu} = eta^{mu nu}
    for mu in range(4):
        for nu in range(4):
            f = coordinate_observable(chart, mu)
            g = coordinate_observable(chart, 4 + nu)
            expected = -1.0 if mu == nu == 0 else (1.0 if mu == nu else 0.0)
            assert bracket(f, g, state, chart) == pytest.approx(expected, abs=1e-14)


# ----------------------------------------------------------------------
# gradients
# ----------------------------------------------------------------------

def test_gradient_of_coordinate_is_unit_vector(state, chart):
    for idx in (0, 5, 17, chart.size - 1):
        g = gradient(coordinate_observable(chart, idx), state, chart, check=False)
        e = np.zeros(chart.size)
        e[idx] = 1.0
        assert np.max(np.abs(g - e)) < 1e-14


def test_gradient_degree_one_closed_form(state, chart):
    # Z^mu = sqrt(2 pi) alpha_0^mu = sqrt(2 pi) p^mu / sqrt(4 pi T):
    # gradient lives in the p-block only
    obs = pohlmeyer_observable(InvariantSpec("-", (2,)), 256)
    g = gradient(obs, state, chart, check=False)
    expected = np.zeros(chart.size, complex)
    expected[4 + 2] = np.sqrt(TAU) / np.sqrt(2 * TAU * state.tension)
    assert np.max(np.abs(g - expected)) < 1e-11


def test_gradient_virasoro_vs_finite_differences(state, chart):
    obs = virasoro_mode(state, "-", 0, 256)
    g = gradient(obs, state, chart, check=False)
    fd = finite_difference_gradient(obs, state, chart)
    scale = np.max(np.abs(g))
    assert np.max(np.abs(g - fd)) < 1e-6 * scale


def test_gradient_check_contract(state, chart):
    # the built-in cross-check passes for honest observables ...
    gradient(virasoro_mode(state, "-", 1, 256), state, chart, check=True)
    # ... and trips on one whose propagated derivative is wrong
    import closedstring.jets as jz

    broken = Observable(name="broken", fn=lambda s: jz.Jet(
        np.asarray(complex(jz.value(s.p[0]))), np.zeros(chart.size, complex)))
    with pytest.raises(GradientMismatch):
        gradient(broken, state, chart, check=True)


def test_gradient_through_monotone_inversion(state, chart, frame4):
    # direct-substitution reconstruction goes through invert_monotone;
    # its gradient uses the implicit-function relation
    def fn(st_):
        grid = cs.reconstruct_field_direct(st_, frame4, "-", 128)
        return grid.values[5, 1]

    obs = Observable(name="P^R[5,1]", fn=fn)
    g = gradient(obs, state, chart, check=False)
    fd = finite_difference_gradient(obs, state, chart, step=1e-6)
    scale = max(np.max(np.abs(g)), 1e-12)
    assert np.max(np.abs(g - fd)) < 1e-5 * scale


# ----------------------------------------------------------------------
# brackets
# ----------------------------------------------------------------------

def test_bracket_antisymmetry(state, chart):
    obs = virasoro_mode(state, "-", 2, 256)
    assert abs(bracket(obs, obs, state, chart)) < 1e-12


def test_bracket_leibniz_random_triples(state, chart):
    rng = np.random.default_rng(2)
    for _ in range(5):
        i, j, k = rng.integers(0, chart.size, 3)
        f = coordinate_observable(chart, int(i))
        g = coordinate_observable(chart, int(j))
        h = coordinate_observable(chart, int(k))
        lhs = bracket(f, product_observable(g, h), state, chart)
        rhs = (complex(g.fn(state)) * bracket(f, h, state, chart)
               + bracket(f, g, state, chart) * complex(h.fn(state)))
        scale = abs(lhs) + abs(complex(g.fn(state))) + abs(complex(h.fn(state))) + 1.0
        assert abs(lhs - rhs) < 1e-6 * scale


def test_smeared_canonical_pairing(state, chart):
    # {int phi eta(e, X), int psi eta(e', P)} = eta(e, e') oint phi psi
    e1 = np.array([0.0, 1.0, 0.0, 0.0])
    e0 = np.array([1.0, 0.0, 0.0, 0.0])
    cases = [
        (("cos", 2), ("cos", 2), e1, e1, np.pi * 1.0),
        (("sin", 3), ("sin", 3), e0, e0, np.pi * -1.0),
        (("cos", 1), ("sin", 1), e1, e1, 0.0),
        (("cos", 2), ("cos", 3), e1, e1, 0.0),
        (("sin", 1), ("sin", 1), e1, np.array([0, 0, 1, 0.0]), 0.0),
    ]
    for (k1, h1), (k2, h2), ea, eb, expected in cases:
        f = smeared_position_observable(h1, k1, ea, 256)
        g = smeared_momentum_observable(h2, k2, eb, 256)
        val = bracket(f, g, state, chart)
        assert abs(val - expected) < 1e-8 * (1 + abs(expected))


def test_virasoro_observable_matches_mode_formula(state):
    for chir in ("-", "+"):
        for m in (0, 1, -2, 4):
            quad = complex(virasoro_mode(state, chir, m, 512).fn(state))
            direct = virasoro_mode_direct(state, chir, m)
            assert abs(quad - direct) < 1e-12 * (1 + abs(direct))


def test_virasoro_zero_oscillator_value():
    p = np.array([1.0, 0.4, 0.0, -0.2])
    st_ = cs.StringState(dim=4, tension=cs.DEFAULT_TENSION, truncation=2,
                         x=np.zeros(4), p=p,
                         left=np.zeros((2, 4), complex), right=np.zeros((2, 4), complex))
    l0 = complex(virasoro_mode(st_, "-", 0, 128).fn(st_))
    alpha0 = st_.alpha0
    assert l0 == pytest.approx(0.5 * cs.eta_dot(alpha0, alpha0))
    c = p / (TAU * np.sqrt(2 * st_.tension))
    assert l0 == pytest.approx(np.pi * cs.eta_dot(c, c))
    assert abs(complex(virasoro_mode(st_, "-", 2, 128).fn(st_))) < 1e-15


def test_witt_algebra_small_window(state, chart):
    omega = chart.omega()
    onorm = np.linalg.norm(omega, 2)
    grads = {m: gradient(virasoro_mode(state, "-", m, 512), state, chart, check=False)
             for m in range(-4, 5)}
    vals = {m: virasoro_mode_direct(state, "-", m) for m in range(-4, 5)}
    for m in (-2, 0, 1, 2):
        for k in (-2, -1, 1, 2):
            br = complex(grads[m] @ (omega @ grads[k]))
            target = -1j * (m - k) * vals[m + k]
            denom = np.linalg.norm(grads[m]) * np.linalg.norm(grads[k]) * onorm
            assert abs(br - target) <= 1e-5 * denom


# ----------------------------------------------------------------------
# invariance reports
# ----------------------------------------------------------------------

def test_invariance_report_pohlmeyer(state):
    obs = pohlmeyer_observable(InvariantSpec("-", (0, 1), symmetrized=True), 512)
    rows = invariance_report(obs, state, m_window=3)
    assert all(r["pass"] for r in rows)
    assert {(r["chirality"], r["m"]) for r in rows} == {(c, m) for c in "+-" for m in range(-3, 4)}
    assert rows == sorted(rows, key=lambda r: (r["chirality"], r["m"]))


def test_invariance_report_matched_vs_unmatched(state, frame4):
    matched = ddf_invariant_observable(
        DDFInvariantSpec(left=[(1, 1)], right=[(2, 1)], level=1), frame4, 512)
    rows = invariance_report(matched, state, m_window=3)
    assert max(r["residue"] for r in rows) <= 1e-5

    unmatched = ddf_invariant_observable(
        DDFInvariantSpec(left=[], right=[], level=1, allow_unmatched=True), frame4, 512)
    rows = invariance_report(unmatched, state, m_window=3)
    assert max(r["residue"] for r in rows) >= 1e-2


def test_invariance_report_window_guard(state):
    obs = pohlmeyer_observable(InvariantSpec("-", (0,)), 256)
    with pytest.raises(ValueError):
        invariance_report(obs, state, m_window=5)  # > M/2
