import math

import numpy as np
import pytest

from sinkasym.errors import InputError
from sinkasym.mm import (MMParams, eta_for_kappa, log_coefficient, mm_expansion,
                         mm_expansion_templates, mm_spectrum, mm_system,
                         nondimensionalize, predicted_error_class, rate_law_errors,
                         rate_laws, sigma_recursion)
from sinkasym.numeric import flow
from sinkasym.relate import relate_via_basis


def test_nondimensionalize():
    p = nondimensionalize(1, 1, 1, 2)
    assert (p.eps, p.eta, p.michaelis_constant) == (1.0, 0.5, 2.0)
    assert p.time_scale == 2.0
    rng = np.random.default_rng(3)
    for k1, km1, k2, e0 in rng.uniform(0.1, 10, size=(50, 4)):
        p = nondimensionalize(k1, km1, k2, e0)
        assert p.eps == pytest.approx(e0 / ((km1 + k2) / k1), rel=1e-14)
        assert p.eta == pytest.approx(k2 / (km1 + k2), rel=1e-14)


@pytest.mark.parametrize("args", [(0, 1, 1, 1), (1, -1, 1, 1), (1, 1, 1, math.inf),
                                  (1, 1, "x", 1)])
def test_nondimensionalize_rejects(args):
    with pytest.raises(InputError):
        nondimensionalize(*args)


@pytest.mark.parametrize("eps, eta", [(0.0, 0.5), (1.0, 0.0), (1.0, 1.0), (-1, 0.3),
                                      (math.nan, 0.5)])
def test_params_domain(eps, eta):
    with pytest.raises(InputError):
        MMParams(eps, eta)


def test_spectrum_kappa2():
    s = mm_spectrum(1.0, 8.0 / 9.0)
    assert s.lam_plus == pytest.approx(-2.0 / 3.0, rel=1e-14)
    assert s.lam_minus == pytest.approx(-4.0 / 3.0, rel=1e-14)
    assert s.kappa == pytest.approx(2.0, rel=1e-14)
    assert s.sigma_plus == pytest.approx(3.0, rel=1e-13)
    assert s.sigma_minus == pytest.approx(-3.0, rel=1e-13)
    assert s.det_P == pytest.approx(-6.0, rel=1e-13)
    assert s.r211 == pytest.approx(3.0 * 4.0 / 6.0, rel=1e-13)


def test_spectrum_half():
    assert mm_spectrum(1.0, 0.5).kappa == pytest.approx(3 + 2 * math.sqrt(2), rel=1e-13)


def test_spectrum_trace_and_determinant():
    rng = np.random.default_rng(5)
    for _ in range(200):
        eps = float(10 ** rng.uniform(-2, 2))
        eta = float(rng.uniform(0.01, 0.99))
        s = mm_spectrum(eps, eta)
        assert s.lam_plus * s.lam_minus == pytest.approx(eta / eps, rel=1e-12)
        assert s.lam_plus + s.lam_minus == pytest.approx(-(1 + eps) / eps, rel=1e-12)
        np.testing.assert_allclose(np.linalg.eigvals(s.A).real.min(), s.lam_minus,
                                   rtol=1e-9)


def test_diagonal_field_matches_system():
    eps, eta = 0.7, 0.4
    s = mm_spectrum(eps, eta)
    u = np.array([0.03, -0.02])
    x = s.P @ u
    bx = np.array([x[0] * x[1], -x[0] * x[1] / eps])
    np.testing.assert_allclose(np.linalg.solve(s.P, bx), s.diagonal_field(u), rtol=1e-12)


def test_eta_for_kappa_roundtrip():
    for kappa in (1.5, 2.0, 3.0, 7.25):
        for eps in (0.3, 1.0, 4.0):
            eta = eta_for_kappa(kappa, eps)
            if 0 < eta < 1:
                assert mm_spectrum(eps, eta).kappa == pytest.approx(kappa, rel=1e-10)
    with pytest.raises(InputError):
        eta_for_kappa(1.0)


def test_sigma_recursion_first_terms():
    s = sigma_recursion(1.0, 0.5, 4)
    assert s.sigmas[0] == pytest.approx(mm_spectrum(1.0, 0.5).sigma_plus)
    assert s.pole_index is None and len(s.sigmas) == 4
    # sigma_+ = sqrt(2) here; the denominator is lambda_+ (n - kappa)
    spec = mm_spectrum(1.0, 0.5)
    assert s.denominators[0] == pytest.approx(1 + 0.5 * 3 * math.sqrt(2) - 2)
    assert s.denominators[0] == pytest.approx(spec.lam_plus * (2 - spec.kappa))


def test_sigma_recursion_pole_at_kappa2():
    s = sigma_recursion(1.0, 8.0 / 9.0, 5)
    assert s.pole_index == 2 and s.sigmas == [pytest.approx(3.0)]


def test_pole_iff_integer_kappa():
    for kappa in (2.0, 3.0, 4.0, 2.5, 3.0 + 5e-6, 3.0 - 5e-7):
        eta = eta_for_kappa(kappa, 1.0)
        k = mm_spectrum(1.0, eta).kappa
        want = round(k) if abs(k - round(k)) < 1e-6 else None
        assert sigma_recursion(1.0, eta, 6).pole_index == want


def test_sigma_matches_slow_manifold_of_flow():
    # the trajectory's late slope and curvature follow the power series
    eps, eta = 1.0, 0.5
    sig = sigma_recursion(eps, eta, 3).sigmas
    tr = flow(mm_system(eps, eta), (0.2, 0.0), 25.0, rtol=1e-12, atol=1e-300, radius=None)
    x, y = tr(25.0)
    assert y == pytest.approx(sig[0] * x + sig[1] * x**2 + sig[2] * x**3,
                              rel=1e-6)


def test_log_coefficient_kappa2():
    assert log_coefficient(1.0, 8.0 / 9.0, 2) == pytest.approx(18.0, rel=1e-12)


def test_log_coefficient_kappa3_two_routes():
    # a logarithmic term is forced at kappa = 3 as well
    eta = 0.75
    assert mm_spectrum(1.0, eta).kappa == pytest.approx(3.0, rel=1e-14)
    K = log_coefficient(1.0, eta, 3)
    assert K == pytest.approx(-24.0, rel=1e-10)
    rel = relate_via_basis(mm_system(1.0, eta), (0.05, 0.01))
    assert rel.coefficient(3, 1) == pytest.approx(K, rel=1e-8)


def test_templates():
    t2 = mm_expansion(1.0, 8.0 / 9.0)
    assert [(tm.power, tm.logpow) for tm in t2.terms] == [(1, 0), (2, 1), (2, 0)]
    assert t2.coefficient(2, 1) == pytest.approx(18.0)
    assert t2.coefficient(2) is None
    half = mm_expansion(1.0, 0.5)
    powers = [tm.power for tm in half.terms]
    assert powers[:5] == [1, 2, 3, 4, 5]
    assert powers[5] == pytest.approx(3 + 2 * math.sqrt(2))
    assert not any(tm.logpow for tm in half.terms)


def test_template_coefficients_match_iterate_route():
    eps, eta = 1.0, 0.5
    tmpl = mm_expansion(eps, eta)
    via = relate_via_basis(mm_system(eps, eta), (0.05, 0.01))
    for k in range(1, 6):
        assert tmpl.coefficient(k) == pytest.approx(via.coefficient(k), rel=1e-8)


def test_near_integer_band_warns():
    eta = eta_for_kappa(2.0 + 1e-4, 1.0)
    with pytest.warns(RuntimeWarning, match="close to an integer"):
        mm_expansion(1.0, eta)
    assert len(mm_expansion_templates(1.0, eta)) == 2


def test_rate_laws():
    H, al = rate_laws([0.0, 1.0, 0.5], 3.0)
    assert H[0] == 0 == al[0] and H[1] == 0.5
    assert np.all(H[1:] < al[1:])


def test_slow_manifold_between_rate_laws():
    eps, eta = 1.0, 0.5
    s = mm_spectrum(eps, eta)
    tr = flow(mm_system(eps, eta), (1.0, 0.0), 30.0, rtol=1e-12, radius=None)
    X = tr(np.linspace(8.0, 30.0, 200))
    H, al = rate_laws(X[:, 0], s.sigma_plus)
    assert np.all(H < X[:, 1]) and np.all(X[:, 1] < al)


def test_predicted_error_class():
    assert predicted_error_class(1.5) == "lambda_minus"
    assert predicted_error_class(2.0) == "t_2lambda_plus"
    assert predicted_error_class(5.8) == "2lambda_plus"


def test_rate_law_errors_kappa_above_two():
    r = rate_law_errors(1.0, 0.5)
    lp = mm_spectrum(1.0, 0.5).lam_plus
    assert r.alpha_fit.params["rate"] == pytest.approx(2 * lp, rel=0.02)
    assert r.qssa_fit.params["rate"] == pytest.approx(lp, rel=0.02)
    assert r.alpha_fit.params["rate"] <= r.qssa_fit.params["rate"] - 0.5 * abs(lp)
    assert r.selected_class == r.predicted_class == "2lambda_plus"
    csv = r.to_csv().splitlines()
    assert csv[0] == "t,x,y,err_qssa,err_alpha" and len(csv) == 401
    assert r.to_json()["selected_class"] == "2lambda_plus"


def test_rate_law_errors_kappa_two_prefers_t_factor():
    r = rate_law_errors(1.0, 8.0 / 9.0)
    res = r.class_residuals
    assert res["t_2lambda_plus"] < res["2lambda_plus"]
    assert r.selected_class == "t_2lambda_plus"
