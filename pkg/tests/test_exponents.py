import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solalab import exponents as ex
from solalab.exponents import ExponentContext, ExponentDomainError, ExponentRangeError, Regime


@pytest.mark.parametrize("n,p,b", [(2, 2, 2), (3, 3, 3), (2, 3, 4)])
def test_exponent_b(n, p, b):
    assert ex.exponent_b(n, p) == pytest.approx(b, abs=1e-15)


def test_exponent_b_domain():
    with pytest.raises(ExponentDomainError):
        ex.exponent_b(1, 2)
    with pytest.raises(ExponentDomainError):
        ex.exponent_b(2, 1.5)


def test_exponent_m():
    assert ex.exponent_m(2, 2) == pytest.approx(2)
    assert ex.exponent_m(3, 3) == pytest.approx(3)
    for n in (2, 3, 5):
        assert ex.exponent_m(2, n) == pytest.approx(ex.exponent_b(n, 2))
    with pytest.raises(ExponentDomainError):
        ex.exponent_m(2, 1.0)


def test_sigma_examples():
    assert ex.sigma_q(2, 2, 1) == pytest.approx(1)
    assert ex.sigma_q_theta(2, 2, 1) == pytest.approx(1)
    assert ex.sigma_q(3, 2, 1.2) == pytest.approx(0.6)


def test_sigma_ranges_are_half_open():
    b = ex.exponent_b(3, 2.5)
    with pytest.raises(ExponentRangeError):
        ex.sigma_q(3, 2.5, b)
    with pytest.raises(ExponentRangeError):
        ex.sigma_q(3, 2.5, 1.49)
    m = ex.exponent_m(2.5, 2.8)
    with pytest.raises(ExponentRangeError):
        ex.sigma_q_theta(2.5, 2.8, m)


def test_delta_and_capacitary():
    assert ex.delta_q(2, 2, 2) == pytest.approx(2)
    assert ex.delta_q(2, 3, 1) == pytest.approx(2)
    assert ex.sigma_capacitary(2, 0) == pytest.approx(2)
    assert ex.sigma_capacitary(2, 1) == pytest.approx(1)
    assert ex.sigma_capacitary(3, 1) == pytest.approx(1)
    with pytest.raises(ExponentRangeError):
        ex.sigma_capacitary(2, 2)


def test_gamma_iteration():
    assert ex.gamma_iteration(1, 0) == pytest.approx(0.5)
    assert ex.gamma_iteration(0.3, 0.3) == pytest.approx(0.3, abs=1e-15)
    with pytest.raises(ExponentDomainError):
        ex.gamma_iteration(0.5, 0.6)


def test_iterate_to_delta():
    state = ex.iterate_to_delta(0.5, 50)
    seq = state.sequence
    assert abs(seq[-1] - 0.5) < 1e-6
    assert all(b > a for a, b in zip(seq, seq[1:]))
    assert all(t < 0.5 for t in seq)
    assert all(s <= t for s, t in zip(state.s_sequence, seq))
    assert state.s_sequence[0] < seq[0]


def test_sobolev_embedding():
    assert ex.sobolev_embedding_exponent(2, ex.sigma_q(2, 2, 1) / 1, 1) == pytest.approx(2)
    assert ex.sobolev_embedding_exponent(3, 1, 1) == pytest.approx(1.5)
    with pytest.raises(ExponentRangeError):
        ex.sobolev_embedding_exponent(2, 1, 2)


@pytest.mark.parametrize("n,p,theta,regime", [
    (2, 2, 2, Regime.SUPER_CAPACITARY),
    (2, 2, 0.5, Regime.CAPACITARY),
    (2, 3, 1.0, Regime.DUAL),
    (2, 3, 2.0, Regime.DUAL),
])
def test_classify_regime(n, p, theta, regime):
    assert ex.classify_regime(ExponentContext(n, p, theta)) is regime


def test_context_validation():
    with pytest.raises(ExponentDomainError):
        ExponentContext(2, 2, 3)
    with pytest.raises(ExponentDomainError):
        ExponentContext(2.5, 2, 1)
    with pytest.raises(ExponentDomainError):
        ExponentContext(2, 2, 1, s=-1)


def test_exponent_table_reports_undefined_entries():
    rows = dict(ex.exponent_table(ExponentContext(3, 2.5, 2.8, 1.2)))
    assert rows["b"] == pytest.approx(2.25)
    assert rows["sigma(q)"].startswith("undefined")
    assert rows["regime"] == "super-capacitary"


@st.composite
def tuples(draw):
    n = draw(st.integers(2, 6))
    p = draw(st.floats(2, n)) if n > 2 else 2.0
    theta = draw(st.floats(p, n)) if p < n else float(n)
    hi = min(ex.exponent_b(n, p), ex.exponent_m(p, theta))
    q = draw(st.floats(p - 1, hi, exclude_max=True))
    return n, p, theta, q


@settings(max_examples=300, deadline=None)
@given(tuples())
def test_identities_property(args):
    n, p, theta, q = args
    b = ex.exponent_b(n, p)
    m = ex.exponent_m(p, theta)
    sq = ex.sigma_q(n, p, q)
    sqt = ex.sigma_q_theta(p, theta, q)
    assert n * q / (n - sq) == pytest.approx(b, abs=1e-12)
    assert theta * q / (theta - sqt) == pytest.approx(m, abs=1e-12)
    assert ex.delta_q(p, theta, q) == pytest.approx(q * theta / m, abs=1e-12)
    assert (n - theta) * (q / (p - 1) - 1) + sq == pytest.approx(sqt, abs=1e-12)
    assert ex.sigma_q_theta(p, n, q) == pytest.approx(sq, abs=1e-12) if q < ex.exponent_m(p, n) else True
    assert sq > 0 and sqt > 0
    assert ex.sigma_q(n, p, p - 1) == pytest.approx(1, abs=1e-12)
    assert math.isfinite(ex.sigma_q_theta(p, theta, p - 1))
