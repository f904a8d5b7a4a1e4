"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line; the lines are printed together at
the end of the pytest run.  Running this file directly prints them too.
"""

import math

import numpy as np
import sympy

from sinkasym.expalg import ExpSeries, ParamPoly, RateBasis, forward_conv
from sinkasym.iterates import iterate, psi_closely
from sinkasym.mm import (eta_for_kappa, log_coefficient, mm_expansion, mm_spectrum,
                         mm_system, rate_law_errors, sigma_recursion)
from sinkasym.numeric import fit_decay, fit_relation, flow, psi_numeric
from sinkasym.relate import (RelationSeries, RelationTerm, concavity_sign,
                             relate_resonant, relate_star, slow_manifold_coefficients,
                             star_xi)
from sinkasym.system import build_system
from sinkasym.validation import conv_oracle, cubic_system, derivative_oracle, star_system


def test_1_exact_psi(record):
    sys_ = cubic_system()
    ps = psi_closely(sys_, m_max=5)
    want = ({(1, 0): 1.0}, {(0, 1): 1.0, (3, 0): 1.0})
    exact = all(tuple(dict(c.terms) for c in ps.psi(m)) == want for m in range(2, 6))
    num = psi_numeric(sys_, [0.1, 0.05], tol=1e-12)
    err = float(np.max(np.abs(num - np.array([0.1, 0.05 + 0.1**3]))))
    ok = exact and err < 1e-8
    record(1, "exact transformation", ok,
           f"symbolic psi_2..psi_5 exact: {exact}; psi_numeric error {err:.2e} (tol 1e-8)")
    assert ok


def _ladder_rates():
    sys_ = star_system()
    x0 = (0.05, 0.05)
    y0 = psi_numeric(sys_, x0, tol=1e-14, rtol=1e-13)
    tr = flow(sys_, x0, 8.0, rtol=1e-13, atol=1e-22)
    its = iterate(sys_, m_max=4)
    ts = np.linspace(0.5, 8.0, 76)
    X = tr(ts).T
    rates = []
    for m in range(1, 5):
        D = its.evaluate_original(m, ts, y0)
        err = np.linalg.norm(X - D, axis=0)
        rates.append(fit_decay(ts, err, window=(3.0, 5.0)).params["rate"])
    return rates


def test_2_order_ladder(record):
    rates = _ladder_rates()
    within = all(abs(r + (m + 1)) <= 0.07 * (m + 1) for m, r in zip(range(1, 5), rates))
    decreasing = all(b < a for a, b in zip(rates, rates[1:]))
    ok = within and decreasing
    record(2, "order ladder", ok,
           "rates " + ", ".join(f"{r:.3f}" for r in rates)
           + f" vs -2..-5 within 7%: {within}; strictly decreasing: {decreasing}")
    assert ok


STAR_ICS = ((0.05, 0.05), (0.02, 0.06), (0.03, 0.01))


def _star_fit(x0):
    sys_ = star_system()
    y0 = psi_numeric(sys_, x0, tol=1e-14, rtol=1e-13)
    tr = flow(sys_, x0, 30.0, rtol=1e-13, atol=1e-25)
    template = RelationSeries((RelationTerm(1, 0, None), RelationTerm(2, 0, None)),
                              (3, False))
    fit = fit_relation(tr.y[:, 0], tr.y[:, 1], template, x_range=(1e-6, 1e-3),
                       extra=((3, 0), (4, 0)))
    return y0, fit.params["x^2"]


def test_3_quadratic_coefficient(record):
    details, ok, signs = [], True, set()
    for x0 in STAR_ICS:
        y0, c2 = _star_fit(x0)
        pred = (y0[1] / y0[0]) ** 3 - 8.0
        rel = abs(c2 - pred) / abs(pred)
        ok &= rel < 0.05
        signs.add(concavity_sign(pred))
        details.append(f"{c2:.4f} vs {pred:.4f}")
    spans = signs == {-1, 1}
    # sign map: coefficient from the symbolic relation against sign((y02/y01)^3 - 8)
    y01, y02 = sympy.symbols("y01 y02", real=True)
    c2_sym = relate_star(star_xi(star_system()), (y01, y02)).coefficient(2)
    f = sympy.lambdify((y01, y02), c2_sym, "math")
    mismatches = 0
    grid = np.linspace(-1.0, 1.0, 41)
    for a in grid:
        for b in grid:
            if a == 0 or b / a == 2.0:
                continue
            mismatches += concavity_sign(f(a, b)) != int(np.sign((b / a) ** 3 - 8.0))
    ok = ok and spans and mismatches == 0
    record(3, "quadratic coefficient", ok,
           "; ".join(details) + f" (tol 5%); both signs: {spans}; "
           f"sign-map mismatches {mismatches}")
    assert ok


def test_4_resonant_log_term(record):
    eps, eta = 1.0, 8.0 / 9.0
    spec = mm_spectrum(eps, eta)
    expected = spec.sigma_plus * (spec.sigma_plus + 1.0 / eps) / -spec.lam_plus
    tr = flow(mm_system(eps, eta), [0.2, 0.0], 80.0, rtol=1e-13, atol=1e-40,
              radius=None)
    fit = fit_relation(tr.y[:, 0], tr.y[:, 1], mm_expansion(eps, eta),
                       x_range=(1e-8, 1e-4), fit_known=True, extra=((3, 1), (3, 0)))
    slope, logc = fit.params["x"], fit.params["x^2 ln x"]
    ok = (abs(slope - 3.0) <= 0.01 * 3.0 and abs(logc - expected) <= 0.05 * expected
          and abs(expected - 18.0) < 1e-9
          and abs(log_coefficient(eps, eta, 2) - 18.0) < 1e-9)
    record(4, "resonant log term", ok,
           f"slope {slope:.6f} (3 within 1%); x^2 ln x {logc:.4f} "
           f"(closed form {expected:.6f}, recursion "
           f"{log_coefficient(eps, eta, 2):.6f}, within 5%)")
    assert ok


def _kappa_path():
    ks = list(np.linspace(1.6, 3.4, 14))
    ks += [2.0, 3.0, 2.0 + 5e-7, 2.0 + 5e-6, 3.0 - 5e-7, 3.0 - 5e-6]
    return sorted(ks)


def test_5_sigma_pole(record):
    wrong, worst, n_off = [], 0.0, 0
    path = _kappa_path()
    assert len(path) == 20
    for k_in in path:
        eta = eta_for_kappa(k_in, 1.0)
        kappa = mm_spectrum(1.0, eta).kappa
        want = next((n for n in range(2, 6) if abs(kappa - n) < 1e-6), None)
        rec = sigma_recursion(1.0, eta, 5)
        if rec.pole_index != want:
            wrong.append(f"kappa={kappa:.9f}: got {rec.pole_index}, want {want}")
            continue
        if want is None:
            n_off += 1
            ref = slow_manifold_coefficients(mm_system(1.0, eta), 5)
            for a, b in zip(rec.sigmas, ref):
                worst = max(worst, abs(a - b) / abs(b))
    ok = not wrong and worst < 1e-8
    record(5, "sigma recursion pole", ok,
           (f"pole flags correct on 20 points; {n_off} off-pole points, "
            f"worst relative gap {worst:.2e} (tol 1e-8)") if not wrong
           else "; ".join(wrong))
    assert ok


def _generic_quadratic(rng, A):
    coeffs = rng.uniform(0.5, 2.0, size=6) * rng.choice([-1, 1], size=6)
    b = [[(coeffs[0], (2, 0)), (coeffs[1], (1, 1)), (coeffs[2], (0, 2))],
         [(coeffs[3], (2, 0)), (coeffs[4], (1, 1)), (coeffs[5], (0, 2))]]
    return build_system(A, b), coeffs[3]


def test_6_widely_spaced_shapes(record):
    rng = np.random.default_rng(6)
    ok, notes = True, []
    for _ in range(3):
        sys_, b211 = _generic_quadratic(rng, [[-1, 0], [0, -2]])
        its = iterate(sys_, m_max=3)
        u2 = its.D(2)[1]
        t_coeff = u2.coefficient((2,), 1)
        want = ParamPoly.monomial((2, 0), b211)
        shape = t_coeff.approx_equal(want, rtol=1e-12)
        no_y02 = all(exps[1] == 0 for c in its.D(1) for _, p in c.items()
                     for exps in p.terms)
        no_y02 &= all(exps[1] == 0 for _, p in its.D(2)[0].items() for exps in p.terms)
        ok &= shape and no_y02
        notes.append(f"t e^(2at) coeff {t_coeff.format(['y01', 'y02'])} "
                     f"(b211={b211:.4f}), y02-free before p: {no_y02}")
    sys3, b211 = _generic_quadratic(rng, [[-1, 0], [0, -3]])
    rel = relate_resonant(sys3)
    c2 = rel.coefficient(2)
    sym_ok = (isinstance(c2, (int, float)) or not sympy.sympify(c2).free_symbols) \
        and abs(float(c2) - b211) < 1e-12  # -b211/a with a = -1
    ok &= sym_ok
    notes.append(f"kappa=3: c2 = {float(c2):.6f} vs -b211/a = {b211:.6f}, "
                 f"initial-condition free: {sym_ok}")
    record(6, "widely-spaced iterate shapes", ok, "; ".join(notes))
    assert ok


def _resonance_tpow_check(rng, n_cases=200):
    bad = 0
    bases = [RateBasis.from_eigenvalues((-1.0, -2.0)),
             RateBasis.from_eigenvalues((-1.0, -2.0000001)),
             RateBasis.from_eigenvalues((-1.0, -3.0)),
             RateBasis.from_eigenvalues((-1.0, -math.sqrt(5.0)))]
    for _ in range(n_cases):
        basis = bases[int(rng.integers(0, len(bases)))]
        j = int(rng.integers(0, 2))
        coeffs = tuple(int(c) for c in rng.integers(0, 4, size=basis.dim))
        if not any(coeffs):
            coeffs = basis.embedding[j]
        k = int(rng.integers(0, 3))
        f = ExpSeries.term(basis, 1, coeffs, ParamPoly.const(1, 1.0), k)
        g = forward_conv(j, f)
        raised = any(key == (coeffs, k + 1) for key, _ in g.items())
        bad += raised != (coeffs == basis.embedding[j])
    return bad


def test_7_algebra_oracles(record):
    rng = np.random.default_rng(7)
    worst = conv_oracle(rng, 500)
    dworst = derivative_oracle(rng, 200)
    bad = _resonance_tpow_check(rng)
    ok = worst < 1e-8 and dworst < 1e-6 and bad == 0
    record(7, "algebra oracles", ok,
           f"500 convolutions vs quadrature, worst relative error {worst:.2e} "
           f"(tol 1e-8); derivative identity {dworst:.2e} (tol 1e-6); "
           f"t-power increments off exact matches: {bad}")
    assert ok


def test_8_rate_law_comparison(record):
    ok, notes = True, []
    for eta in (0.3, 8.0 / 9.0, 0.95):
        cmp = rate_law_errors(1.0, eta)
        qr, ar = cmp.qssa_fit.params["rate"], cmp.alpha_fit.params["rate"]
        good = ar < qr and cmp.selected_class == cmp.predicted_class
        ok &= good
        notes.append(f"eta={eta:.4g} (kappa {cmp.kappa:.3f}): QSSA {qr:.4f}, "
                     f"alpha {ar:.4f}, class {cmp.selected_class} "
                     f"(predicted {cmp.predicted_class})")
    record(8, "rate-law comparison", ok, "; ".join(notes))
    assert ok


def test_9_mm_invariant_sweep(record):
    rng = np.random.default_rng(9)
    violations = 0
    for _ in range(1000):
        eps = float(10 ** rng.uniform(-3, 3))
        eta = float(rng.uniform(1e-4, 1 - 1e-4))
        s = mm_spectrum(eps, eta)
        violations += not (s.lam_minus < -1 < -eta < s.lam_plus < 0
                           and 1 < s.sigma_plus < 1 / (1 - eta)
                           and s.sigma_minus < 0
                           and s.kappa > max(eps, 1 / eps))
    ok = violations == 0
    record(9, "MM invariant sweep", ok, f"{violations} violations in 1000 samples")
    assert ok


def test_10_conjugacy(record):
    worst = 0.0
    for sys_, x0 in ((star_system(), (0.05, 0.05)), (cubic_system(), (0.1, 0.05))):
        y0 = psi_numeric(sys_, x0, tol=1e-12)
        lam = np.array(sys_.eigenvalues)
        for t in (0.5, 1.0, 2.0):
            xt = flow(sys_, x0, t, rtol=1e-13, atol=1e-18).final
            lhs = psi_numeric(sys_, xt, tol=1e-12)
            worst = max(worst, float(np.max(np.abs(lhs - np.exp(lam * t) * y0))))
    # second route for the polynomial transformation: psi(x) = (x1, x2 + x1^3)
    sys_ = cubic_system()
    for t in (0.5, 1.0, 2.0):
        xt = flow(sys_, (0.1, 0.05), t, rtol=1e-13, atol=1e-18).final
        lhs = np.array([xt[0], xt[1] + xt[0] ** 3])
        rhs = np.exp(np.array([-1.0, -2.0]) * t) * np.array([0.1, 0.051])
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    ok = worst < 1e-6
    record(10, "conjugacy", ok, f"worst |psi(phi_t) - e^(tA) psi| {worst:.2e} (tol 1e-6)")
    assert ok


if __name__ == "__main__":
    import pytest
    raise SystemExit(pytest.main([__file__, "-q"]))
