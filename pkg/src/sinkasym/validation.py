"""Oracle checks shared by the ``validate`` command and the test suite.

Every check recomputes a quantity by an independent route (quadrature,
direct integration, closed forms) and compares.  Checks are small enough to
run in a few seconds each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expalg import ExpSeries, ParamPoly, RateBasis, forward_conv, tail_conv
from .iterates import iterate, psi_closely
from .mm import mm_spectrum, mm_system, sigma_recursion, eta_for_kappa
from .numeric import flow, psi_numeric, quadrature
from .relate import slow_manifold_coefficients
from .system import build_system


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def star_system():
    """The quadratic star node with ``a = -1`` used throughout the examples."""
    return build_system([[-1, 0], [0, -1]],
                        [[(1, (2, 0)), (8, (1, 1)), (1, (0, 2))],
                         [(8, (2, 0)), (1, (1, 1)), (8, (0, 2))]])


def cubic_system():
    """``diag(-1, -2)`` with ``b = (0, x1^3)``; its transformation is a polynomial."""
    return build_system([[-1, 0], [0, -2]], [[], [(1, (3, 0))]])


# ---------------------------------------------------------------------------
# random exponential sums for the convolution oracles


def random_series(rng, basis, j, decaying, max_terms=4, max_tpow=3):
    """A random sum of ``c t^k exp(r t)`` terms over ``basis``.

    With ``decaying`` every rate lies at least 0.1 below ``lambda_j`` so that
    the tail integral converges.
    """
    lam = basis.unit(j).value
    out = ExpSeries.zero(basis, 1)
    n = int(rng.integers(1, max_terms + 1))
    tries = 0
    while len(out) < n and tries < 200:
        tries += 1
        coeffs = tuple(int(c) for c in rng.integers(0, 4, size=basis.dim))
        if not any(coeffs):
            continue
        rate = basis.rate(coeffs).value
        if decaying and rate > lam - 0.1:
            continue
        if rate < -12.0:
            continue
        c = float(rng.uniform(-2.0, 2.0))
        k = int(rng.integers(0, max_tpow + 1))
        out = out + ExpSeries.term(basis, 1, coeffs, ParamPoly.const(1, c), k)
    return out


def _value(series, t):
    return float(series(t, [1.0]))


def _decay_bound(f, lam, t):
    """``(K, rho)`` with ``|exp(lam (t - s)) f(s)| <= K exp(rho s)`` on ``s >= 0``.

    Uses ``s^k exp(-a s) <= (k / (a e))^k exp(-a s / 2)`` termwise with half
    the margin ``a = lam - r``.
    """
    K, rho = 0.0, -np.inf
    for (coeffs, k), c in f.items():
        a = lam - f.basis.rate(coeffs).value
        K += abs(c.coeff((0,))) * (k / (a / 2 * math.e)) ** k if k else abs(c.coeff((0,)))
        rho = max(rho, -a / 2)
    return K * math.exp(lam * t), rho


def conv_oracle(rng, n_cases, rtol=1e-8):
    """Compare closed-form convolutions with adaptive quadrature.

    Returns the worst relative error over ``n_cases`` tail and forward
    convolutions at random times.
    """
    spectra = [(-1.0, -2.5), (-1.0, -math.sqrt(2.0)), (-0.5, -1.5), (-1.0, -3.0)]
    worst = 0.0
    for case in range(n_cases):
        lams = spectra[case % len(spectra)]
        basis = RateBasis.from_eigenvalues(lams)
        j = int(rng.integers(0, 2))
        lam = lams[j]
        t = float(rng.uniform(0.1, 3.0))
        if case % 2 == 0:
            f = random_series(rng, basis, j, decaying=True)
            g = tail_conv(j, f)
            got = _value(g, t)
            ref, _ = quadrature(lambda s: math.exp(lam * (t - s)) * _value(f, s),
                                t, math.inf, tol=max(abs(got), 1e-6) * rtol * 1e-3,
                                decay=_decay_bound(f, lam, t))
        else:
            f = random_series(rng, basis, j, decaying=False)
            g = forward_conv(j, f)
            got = _value(g, t)
            ref, _ = quadrature(lambda s: math.exp(lam * (t - s)) * _value(f, s),
                                0.0, t, tol=max(abs(got), 1e-6) * rtol * 1e-3)
        worst = max(worst, abs(got - ref) / max(abs(ref), 1e-6))
    return worst


def derivative_oracle(rng, n_cases):
    """Worst ``|g' - lambda_j g + f|`` over random forward and tail convolutions.

    Tail convolutions satisfy ``g' = lambda_j g - f`` and forward ones
    ``g' = lambda_j g + f``; both are checked symbolically and at sample
    times.
    """
    worst = 0.0
    for case in range(n_cases):
        lams = (-1.0, -2.0 - float(rng.uniform(0.1, 0.9)))
        basis = RateBasis.from_eigenvalues(lams)
        j = int(rng.integers(0, 2))
        lam = lams[j]
        tail = case % 2 == 0
        f = random_series(rng, basis, j, decaying=tail)
        g = tail_conv(j, f) if tail else forward_conv(j, f)
        sign = -1.0 if tail else 1.0
        resid = g.derivative() - g.scale(lam) - f.scale(sign)
        for t in (0.3, 1.0, 2.5):
            worst = max(worst, abs(_value(resid, t)))
    return worst


# ---------------------------------------------------------------------------
# checks


def check_exact_psi():
    sys_ = cubic_system()
    ps = psi_closely(sys_, m_max=4)
    exact = all(dict(ps.psi(m)[0].terms) == {(1, 0): 1.0}
                and dict(ps.psi(m)[1].terms) == {(0, 1): 1.0, (3, 0): 1.0}
                for m in range(2, 5))
    num = psi_numeric(sys_, [0.1, 0.05])
    err = float(np.max(np.abs(num - np.array([0.1, 0.051]))))
    return CheckResult("exact transformation", exact and err < 1e-8,
                       f"psi_m = (x01, x02 + x01^3) for m = 2..4: {exact}; "
                       f"numeric error {err:.2e}")


def check_conjugacy():
    worst = 0.0
    for sys_, x0 in ((star_system(), (0.05, 0.05)), (cubic_system(), (0.1, 0.05))):
        y0 = psi_numeric(sys_, x0, tol=1e-12)
        for t in (0.5, 1.0, 2.0):
            xt = flow(sys_, x0, t, rtol=1e-12, atol=1e-16).final
            lhs = psi_numeric(sys_, xt, tol=1e-12)
            rhs = sys_.from_diagonal(np.exp(np.array(sys_.eigenvalues) * t)
                                     * sys_.to_diagonal(y0))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return CheckResult("conjugacy psi(phi_t) = e^{tA} psi", worst < 1e-6,
                       f"worst deviation {worst:.2e}")


def check_convolutions(rng, n_cases=60):
    worst = conv_oracle(rng, n_cases)
    dworst = derivative_oracle(rng, n_cases)
    return CheckResult("convolution closed forms", worst < 1e-8 and dworst < 1e-6,
                       f"{n_cases} cases, quadrature rel error {worst:.2e}, "
                       f"derivative identity {dworst:.2e}")


def check_iterate_residual():
    """The defect of ``D_m`` in the equation decays like ``exp(-(m+1) t)``."""
    its = iterate(star_system(), m_max=4)
    rates = []
    for m in range(1, 5):
        r = its.residual(m)
        v = [max(abs(float(c(t, [0.05, 0.05]))) for c in r) for t in (4.0, 8.0)]
        rates.append(math.log(v[1] / v[0]) / 4.0)
    ok = all(rate <= -(m + 1) + 0.05 for m, rate in zip(range(1, 5), rates))
    return CheckResult("iterate defects", ok,
                       "decay rates " + ", ".join(f"{r:.3f}" for r in rates)
                       + " (need <= -(m+1))")


def check_sigma(rng, n_cases=6):
    worst = 0.0
    for _ in range(n_cases):
        kappa = float(rng.uniform(1.2, 4.8))
        if abs(kappa - round(kappa)) < 0.05:
            kappa += 0.1
        eta = eta_for_kappa(kappa, 1.0)
        order = min(5, math.ceil(kappa) - 1) if kappa < 6 else 5
        rec = sigma_recursion(1.0, eta, order).sigmas
        ref = slow_manifold_coefficients(mm_system(1.0, eta), order)
        for a, b in zip(rec, ref):
            worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    return CheckResult("slow-manifold recursion", worst < 1e-8,
                       f"recursion vs iterates, worst relative gap {worst:.2e}")


def check_mm_invariants(rng, n_cases=1000):
    bad = 0
    for _ in range(n_cases):
        eps = float(10 ** rng.uniform(-2, 2))
        eta = float(rng.uniform(1e-3, 1 - 1e-3))
        s = mm_spectrum(eps, eta)
        ok = (s.lam_minus < -1 < -eta < s.lam_plus < 0
              and 1 < s.sigma_plus < 1 / (1 - eta)
              and s.sigma_minus < 0
              and s.kappa > max(eps, 1 / eps))
        bad += not ok
    return CheckResult("Michaelis-Menten invariants", bad == 0,
                       f"{bad} violations in {n_cases} samples")


def check_poles():
    wrong = []
    for kappa in (2.0, 3.0, 2.0 + 5e-7, 2.0 + 5e-6, 2.5, 3.0 - 2e-7):
        eta = eta_for_kappa(kappa, 1.0)
        k = mm_spectrum(1.0, eta).kappa
        want = round(k) if abs(k - round(k)) < 1e-6 else None
        got = sigma_recursion(1.0, eta, 5).pole_index
        if got != want:
            wrong.append(f"kappa={k:.9g}: pole {got}, expected {want}")
    return CheckResult("recursion poles", not wrong,
                       "; ".join(wrong) or "pole exactly at integer kappa")


def check_dense_output():
    sys_ = star_system()
    tr = flow(sys_, (0.05, 0.05), 3.0)
    err = float(np.max(np.abs(tr(tr.t) - tr.y)))
    return CheckResult("dense output at nodes", err == 0.0, f"max deviation {err:.1e}")


def run_all(seed=0, quick=False):
    """Run every check with a seeded generator; returns a list of results."""
    rng = np.random.default_rng(seed)
    return [
        check_exact_psi(),
        check_conjugacy(),
        check_convolutions(rng, 20 if quick else 60),
        check_iterate_residual(),
        check_sigma(rng),
        check_mm_invariants(rng, 200 if quick else 1000),
        check_poles(),
        check_dense_output(),
    ]

