import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from corrected_ph import HeavyComponent, InversionSettings, euler, invert, talbot
from corrected_ph.inversion import dual_invert, euler_weights

PAIRS = [
    (lambda s: 1 / (s + 1), lambda t: np.exp(-t)),
    (lambda s: 1 / s ** 2, lambda t: t),
    (lambda s: 1 / ((s + 1) ** 2 + 4), lambda t: np.exp(-t) * np.sin(2 * t) / 2),
    (lambda s: 1 / s - 1 / (s + 0.5), lambda t: 1 - np.exp(-0.5 * t)),
]


@pytest.mark.parametrize("algorithm", ["euler", "talbot"])
@pytest.mark.parametrize("f, g", PAIRS)
def test_known_pairs(algorithm, f, g):
    t = np.array([0.1, 1.0, 2.0, 7.5])
    # 48 Talbot nodes magnify rounding by about exp(0.4 * 48)
    tol = 1e-8 if algorithm == "euler" else 1e-7
    assert_allclose(invert(f, t, InversionSettings(algorithm)), g(t), atol=tol)


def test_spec_values():
    assert_allclose(euler(lambda s: 1 / (s + 1), 1.0), 0.367879, atol=1e-6)
    assert_allclose(talbot(lambda s: 1 / s ** 2, 2.0), 2.0, atol=1e-8)
    assert isinstance(euler(lambda s: 1 / (s + 1), 1.0), float)


def test_heavy_tail_transform_dual_agreement():
    h = HeavyComponent.aw_sqrt(2.0)
    e = euler(lambda s: (1 - h.lst(s)) / s, 1.0)
    tb = talbot(lambda s: (1 - h.lst(s, continuation=True)) / s, 1.0)
    assert abs(e - tb) < 1e-6


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.05, 20.0))
def test_exponential_pairs_agree(rate, t):
    f = lambda s: 1 / (s + rate)
    e, tb, diff = dual_invert(f, t)
    assert diff < 1e-6
    assert_allclose(e, np.exp(-rate * t), atol=1e-8)


def test_euler_weights():
    eta = euler_weights(10)
    assert eta[0] == 0.5
    assert_allclose(eta[1:11], 1.0)
    assert np.all(np.diff(eta[11:]) < 0)
    assert_allclose(eta[-1], 2.0 ** -10)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_nonpositive_times_rejected(bad):
    with pytest.raises(ValueError):
        euler(lambda s: 1 / s, bad)


def test_settings_validation():
    with pytest.raises(ValueError):
        InversionSettings("stehfest")
    with pytest.raises(ValueError):
        InversionSettings("euler", 5)
    assert InversionSettings("talbot").n_terms == 48
    assert InversionSettings().n_terms == 25
