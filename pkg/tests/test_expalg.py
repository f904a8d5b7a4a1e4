import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sinkasym.errors import DimensionError, DivergentIntegralError, TermOverflowError
from sinkasym.expalg import (ExpSeries, ParamPoly, RateBasis, forward_conv,
                             substitute_into_poly, tail_conv)
from sinkasym.validation import conv_oracle, derivative_oracle


def poly(terms, n=2):
    return ParamPoly(n, terms)


# ---------------------------------------------------------------------------
# ParamPoly


def test_parampoly_arithmetic():
    p = poly({(1, 0): 2.0, (0, 1): -1.0})
    q = poly({(1, 0): 1.0, (0, 0): 3.0})
    assert (p + q).terms == {(1, 0): 3.0, (0, 1): -1.0, (0, 0): 3.0}
    prod = p * q
    assert prod.coeff((2, 0)) == 2.0
    assert prod.coeff((1, 1)) == -1.0
    assert prod.coeff((1, 0)) == 6.0
    assert (p - p).is_zero()
    assert (p**3)([1.5, 0.5]) == pytest.approx((2 * 1.5 - 0.5) ** 3)


def test_parampoly_drops_zero_and_checks_shape():
    assert len(poly({(1, 0): 0.0})) == 0
    with pytest.raises(DimensionError):
        ParamPoly(2, {(1,): 1.0})
    with pytest.raises(DimensionError):
        ParamPoly(2, {(-1, 0): 1.0})
    with pytest.raises(DimensionError):
        poly({(1, 0): 1.0})([1.0])


def test_parampoly_compose_and_truncate():
    p = poly({(2, 0): 1.0, (0, 1): 1.0})
    u = poly({(1, 0): 1.0, (0, 1): 1.0})
    v = poly({(1, 0): 2.0})
    c = p.compose([u, v])
    # (x + y)^2 + 2x
    assert c.terms == {(2, 0): 1.0, (1, 1): 2.0, (0, 2): 1.0, (1, 0): 2.0}
    assert dict(c.truncate_degree(2).terms) == {(1, 0): 2.0}
    assert p.homogeneous_part(2).terms == {(2, 0): 1.0}
    assert p.degree() == 2 and p.min_degree() == 1


def test_parampoly_json_roundtrip_and_format():
    p = poly({(2, 1): -1.5, (0, 0): 2.0})
    assert ParamPoly.from_json(2, p.to_json()) == p
    assert p.format(["a", "b"]) == "2.0 - 1.5*a^2*b"


def test_parampoly_sympy():
    import sympy

    a, b = sympy.symbols("a b")
    expr = poly({(1, 1): 2.0, (2, 0): 1.0}).to_sympy((a, b))
    assert sympy.simplify(expr - (2 * a * b + a**2)) == 0


small_polys = st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(0, 3)),
    st.floats(-5, 5, allow_nan=False).filter(lambda v: abs(v) > 1e-3),
    max_size=5,
).map(lambda d: ParamPoly(2, d))


@settings(max_examples=60, deadline=None)
@given(small_polys, small_polys, small_polys,
       st.floats(-1, 1), st.floats(-1, 1))
def test_parampoly_ring_properties(p, q, r, a, b):
    x = [a, b]
    assert (p * (q + r))(x) == pytest.approx(p(x) * (q(x) + r(x)), abs=1e-9)
    assert (p * q).approx_equal(q * p, rtol=1e-12, atol=1e-12)
    assert ((p + q) - q).approx_equal(p, rtol=1e-12, atol=1e-12)


# ---------------------------------------------------------------------------
# RateBasis


def test_rate_basis_commensurate():
    b = RateBasis.from_eigenvalues((-1.0, -2.0, -0.5))
    assert b.dim == 1
    assert b.generators == (-0.5,)
    assert b.embedding == ((2,), (4,), (1,))
    assert b.combo((2, 0, 0)) == b.unit(1)
    assert b.exact_ratio(1, 0) == 2


def test_rate_basis_incommensurate():
    b = RateBasis.from_eigenvalues((-1.0, -math.sqrt(2.0)))
    assert b.dim == 2
    assert b.exact_ratio(1, 0) is None
    assert b.combo((1, 1)).value == pytest.approx(-1.0 - math.sqrt(2.0))


def test_rate_basis_near_miss_is_separate():
    b = RateBasis.from_eigenvalues((-1.0, -2.0000001))
    assert b.dim == 2
    assert b.combo((2, 0)) != b.unit(1)


# ---------------------------------------------------------------------------
# ExpSeries


@pytest.fixture
def basis():
    return RateBasis.from_eigenvalues((-1.0, -math.e))


def _exp(basis, coeffs, c, k=0, n=1):
    return ExpSeries.term(basis, n, coeffs, ParamPoly.const(n, c), k)


def test_series_mul_adds_rates(basis):
    f = _exp(basis, (1, 0), 2.0) + _exp(basis, (0, 1), 1.0, 1)
    g = f * f
    assert g.coefficient((2, 0)).coeff((0,)) == 4.0
    assert g.coefficient((1, 1), 1).coeff((0,)) == 4.0
    assert g.coefficient((0, 2), 2).coeff((0,)) == 1.0
    assert g(0.7, [1.0]) == pytest.approx(f(0.7, [1.0]) ** 2)
    assert (f**3)(0.3, [1.0]) == pytest.approx(f(0.3, [1.0]) ** 3)


def test_series_derivative_matches_finite_difference(basis):
    f = _exp(basis, (1, 0), 1.3, 2) - _exp(basis, (0, 1), 0.4, 1) + _exp(basis, (2, 1), 2.0)
    h = 1e-6
    for t in (0.2, 1.0, 3.0):
        fd = (f(t + h, [1.0]) - f(t - h, [1.0])) / (2 * h)
        assert f.derivative()(t, [1.0]) == pytest.approx(fd, rel=1e-7)


def test_series_truncate(basis):
    f = (_exp(basis, (1, 0), 1.0) + _exp(basis, (2, 0), 1.0)
         + _exp(basis, (0, 1), 1.0) + _exp(basis, (3, 0), 1.0))
    kept = f.truncate(-2.0)
    assert {key for key, _ in kept.items()} == {((1, 0), 0)}
    kept = f.truncate(-2.0, strict=False)
    assert {key for key, _ in kept.items()} == {((1, 0), 0), ((2, 0), 0)}


def test_series_truncate_keeps_low_degree():
    b = RateBasis.from_eigenvalues((-1.0, -2.0))
    c = ParamPoly(2, {(1, 0): 1.0, (2, 0): 5.0})
    f = ExpSeries.term(b, 2, (3,), c)
    out = f.truncate(-2.0, keep_degree_below=2)
    assert dict(out.coefficient((3,)).terms) == {(1, 0): 1.0}


def test_series_json_roundtrip(basis):
    f = _exp(basis, (1, 0), 1.5, 2) + _exp(basis, (0, 1), -0.5)
    assert ExpSeries.from_json(basis, f.to_json()) == f
    other = RateBasis.from_eigenvalues((-1.0, -3.7))
    with pytest.raises(DimensionError):
        ExpSeries.from_json(other, f.to_json())


def test_series_rejects_mixed_bases(basis):
    other = RateBasis.from_eigenvalues((-1.0, -3.7))
    with pytest.raises(DimensionError):
        _exp(basis, (1, 0), 1.0) + _exp(other, (1, 0), 1.0)


def test_subs_params_and_substitute_into_poly():
    b = RateBasis.from_eigenvalues((-1.0, -2.0))
    f = ExpSeries.term(b, 1, (1,), ParamPoly(1, {(1,): 2.0}))
    g = f.subs_params([ParamPoly(2, {(1, 0): 1.0, (0, 1): 1.0})])
    assert g(0.5, [1.0, 2.0]) == pytest.approx(6.0 * math.exp(-0.5))
    p = ParamPoly(2, {(2, 0): 1.0, (0, 1): 3.0})
    h = substitute_into_poly(p, [f, f])
    assert h(0.4, [1.0]) == pytest.approx(f(0.4, [1.0]) ** 2 + 3 * f(0.4, [1.0]))


def test_term_overflow_is_reported(monkeypatch):
    import sinkasym.expalg as ea

    monkeypatch.setattr(ea, "MAX_TERMS", 50)
    b = RateBasis.from_eigenvalues((-1.0, -math.sqrt(2.0), -math.sqrt(3.0)))
    f = ExpSeries.zero(b, 1)
    for j in range(3):
        for k in range(3):
            f = f + ExpSeries.exponential(b, 1, j, ParamPoly.const(1, 1.0), k)
    with pytest.raises(TermOverflowError):
        f**3


# ---------------------------------------------------------------------------
# convolutions


def test_tail_conv_closed_form(basis):
    f = _exp(basis, (2, 0), 3.0, 2)
    g = tail_conv(0, f)
    t = 1.3
    nu = 1.0
    want = 3.0 * math.exp(-2 * t) * (t**2 / nu + 2 * t / nu**2 + 2 / nu**3)
    assert g(t, [1.0]) == pytest.approx(want, rel=1e-14)


def test_tail_conv_divergent(basis):
    with pytest.raises(DivergentIntegralError):
        tail_conv(1, _exp(basis, (1, 0), 1.0))
    with pytest.raises(DivergentIntegralError):
        tail_conv(0, _exp(basis, (1, 0), 1.0))


def test_forward_conv_resonance_raises_t_power():
    b = RateBasis.from_eigenvalues((-1.0, -2.0))
    f = ExpSeries.term(b, 1, (2,), ParamPoly.const(1, 4.0), 1)
    g = forward_conv(1, f)
    assert {k for k, _ in g.items()} == {((2,), 2)}
    assert g.coefficient((2,), 2).coeff((0,)) == 2.0


def test_forward_conv_boundary_term(basis):
    f = _exp(basis, (1, 0), 1.0)
    g = forward_conv(1, f)
    # int_0^t e^{-e (t-s)} e^{-s} ds = (e^{-t} - e^{-e t}) / (e - 1)
    t = 0.8
    assert g(t, [1.0]) == pytest.approx((math.exp(-t) - math.exp(-math.e * t))
                                        / (math.e - 1))
    assert g(0.0, [1.0]) == pytest.approx(0.0, abs=1e-15)


def test_convolutions_against_quadrature():
    assert conv_oracle(np.random.default_rng(11), 80) < 1e-8


def test_derivative_identities():
    assert derivative_oracle(np.random.default_rng(12), 80) < 1e-10
