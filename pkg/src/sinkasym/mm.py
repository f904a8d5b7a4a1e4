"""Michaelis-Menten kinetics as a planar sink.

In dimensionless form (substrate ``x``, complex ``y``, time ``k1 e0 tau``)::

    x' = -x + (1 - eta) y + x y
    eps y' = x - y - x y

with ``eps = e0 / K_m`` and ``eta = k2 / (km1 + k2)``.  The linear part has
eigenvalues ``lambda_- < lambda_+ < 0`` and the slow manifold leaves the
origin along ``y = sigma_+ x``.  Its higher coefficients follow a recursion
whose denominator vanishes exactly when the spacing ratio
``kappa = lambda_- / lambda_+`` is an integer; at such a pole the expansion
picks up a ``x**kappa ln x`` term.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .relate import RelationSeries, RelationTerm
from .system import build_system

POLE_RTOL = 1e-6
NEAR_INTEGER_BAND = 1e-3


@dataclass(frozen=True)
class MMParams:
    """Dimensionless parameters, optionally with the rate constants behind them."""

    eps: float
    eta: float
    k1: float | None = None
    km1: float | None = None
    k2: float | None = None
    e0: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.eps) and self.eps > 0):
            raise InputError(f"eps must be positive, got {self.eps}")
        if not (math.isfinite(self.eta) and 0 < self.eta < 1):
            raise InputError(f"eta must lie in (0, 1), got {self.eta}")

    @property
    def michaelis_constant(self):
        if self.k1 is None:
            return None
        return (self.km1 + self.k2) / self.k1

    @property
    def time_scale(self):
        """``k1 e0``: dimensionless time per unit of physical time."""
        if self.k1 is None:
            return 1.0
        return self.k1 * self.e0


def nondimensionalize(k1, km1, k2, e0):
    """Map rate constants and total enzyme to ``(eps, eta)``."""
    for name, v in (("k1", k1), ("km1", km1), ("k2", k2), ("e0", e0)):
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise InputError(f"{name} must be a positive number, got {v!r}")
    K_m = (km1 + k2) / k1
    return MMParams(e0 / K_m, k2 / (km1 + k2), float(k1), float(km1), float(k2),
                    float(e0))


@dataclass(frozen=True)
class MMSpectrum:
    """Closed-form linear data of the dimensionless system."""

    eps: float
    eta: float
    lam_plus: float
    lam_minus: float
    sigma_plus: float
    sigma_minus: float
    kappa: float

    @property
    def A(self):
        return np.array([[-1.0, 1.0 - self.eta], [1.0 / self.eps, -1.0 / self.eps]])

    @property
    def P(self):
        return np.array([[1.0, 1.0], [self.sigma_plus, self.sigma_minus]])

    @property
    def det_P(self):
        return self.sigma_minus - self.sigma_plus

    @property
    def r211(self):
        """Coefficient of ``u1**2`` in the second eigen-component of the field."""
        sp, sm = self.sigma_plus, self.sigma_minus
        return sp * (sp + 1.0 / self.eps) / (sp - sm)

    def diagonal_field(self, u):
        """``r(u) = P^{-1} b(P u)`` evaluated directly."""
        sp, sm, e = self.sigma_plus, self.sigma_minus, self.eps
        u1, u2 = u
        q = (sp * u1**2 + (sp + sm) * u1 * u2 + sm * u2**2) / (sp - sm)
        return np.array([q * (-sm - 1.0 / e), q * (sp + 1.0 / e)])


def mm_spectrum(eps, eta):
    """Eigenvalues, slopes and spacing ratio in closed form.

    ``lambda_+`` is recovered from the product ``lambda_+ lambda_- = eta/eps``
    so that it stays accurate when ``4 eps eta`` is small against
    ``(eps + 1)**2``.
    """
    MMParams(eps, eta)
    disc = (eps + 1.0) ** 2 - 4.0 * eps * eta
    lam_minus = (-(eps + 1.0) - math.sqrt(disc)) / (2.0 * eps)
    lam_plus = (eta / eps) / lam_minus
    sigma_plus = (lam_plus + 1.0) / (1.0 - eta)
    sigma_minus = (lam_minus + 1.0) / (1.0 - eta)
    return MMSpectrum(eps, eta, lam_plus, lam_minus, sigma_plus, sigma_minus,
                      lam_minus / lam_plus)


def mm_system(eps, eta, rtol=None):
    """The dimensionless system as a :class:`~sinkasym.system.SinkSystem`."""
    MMParams(eps, eta)
    A = [[-1.0, 1.0 - eta], [1.0 / eps, -1.0 / eps]]
    b = [[(1.0, (1, 1))], [(-1.0 / eps, (1, 1))]]
    kw = {} if rtol is None else {"rtol": rtol}
    return build_system(A, b, **kw)


def eta_for_kappa(kappa, eps=1.0):
    """The ``eta`` that gives spacing ratio ``kappa`` at fixed ``eps``.

    From ``kappa + 1/kappa + 2 = (eps + 1)**2 / (eps eta)``.
    """
    if kappa <= 1:
        raise InputError("kappa must exceed 1")
    return (eps + 1.0) ** 2 / (eps * (kappa + 1.0 / kappa + 2.0))


@dataclass(frozen=True)
class SigmaSeries:
    """Slow-manifold coefficients ``sigma_1 ..`` and where the recursion stopped.

    Attributes
    ----------
    sigmas : list of float
        ``sigmas[n-1]`` is ``sigma_n``; only orders below a pole are listed.
    pole_index : int or None
        The order ``n`` whose denominator vanished.
    numerators, denominators : list of float
        Per order ``n >= 2``; the numerator at a pole decides whether a
        logarithmic term is forced.
    """

    sigmas: list
    pole_index: int | None
    numerators: list
    denominators: list


def _numerator(sig, n, eps, eta):
    """Order-``n`` balance with ``sigma_n`` removed (``sig`` is 1-based)."""
    s = 0.0
    for k in range(2, n):
        s += ((n - k) * sig[n - k] + (1.0 - eta) * (n - k + 1) * sig[n - k + 1]) * sig[k]
    return s + ((n - 1) * sig[1] + 1.0 / eps) * sig[n - 1]


def _denominator(sig1, n, eps, eta):
    # equals lambda_+ (n - kappa)
    return 1.0 / eps + (1.0 - eta) * (n + 1) * sig1 - n


def sigma_recursion(eps, eta, n_max):
    """Coefficients of the slow manifold ``y = sum sigma_n x^n``.

    Collecting ``x**n`` in ``y' (-x + (1 - eta + x) y) = (x - (1 + x) y) / eps``
    gives ``sigma_n * lambda_+ * (n - kappa) = -N_n`` with ``N_n`` built from
    lower coefficients.  The recursion stops at the first ``n``
    with ``|n - kappa| < 1e-6``.
    """
    spec = mm_spectrum(eps, eta)
    lp = spec.lam_plus
    sig = {1: spec.sigma_plus}
    nums, dens = [], []
    pole = None
    for n in range(2, n_max + 1):
        num = _numerator(sig, n, eps, eta)
        den = _denominator(sig[1], n, eps, eta)
        nums.append(num)
        dens.append(den)
        if abs(den) < POLE_RTOL * abs(lp):
            pole = n
            break
        sig[n] = -num / den
    return SigmaSeries([sig[k] for k in sorted(sig)], pole, nums, dens)


def log_coefficient(eps, eta, n):
    """Coefficient of ``x**n ln x`` forced at an integer spacing ratio ``n``.

    At the pole the order-``n`` balance reads ``N_n + K lambda_+ = 0``, so
    ``K = -N_n / lambda_+``.
    """
    spec = mm_spectrum(eps, eta)
    sig = sigma_recursion(eps, eta, n - 1).sigmas
    table = {k + 1: v for k, v in enumerate(sig)}
    return -_numerator(table, n, eps, eta) / spec.lam_plus


def _kappa_class(kappa):
    n = round(kappa)
    if abs(kappa - n) < POLE_RTOL * max(1.0, kappa):
        return n, True
    return n, False


def mm_expansion_templates(eps, eta):
    """Relation templates ``y(x)``; two of them inside the near-integer band.

    Integer ``kappa``: ``sum_{n<kappa} sigma_n x^n + K x^kappa ln x + C x^kappa``
    with ``K`` from the recursion numerator.  Otherwise
    ``sum_{n<=floor(kappa)} sigma_n x^n + C x^kappa``.  ``C`` depends on the
    initial condition and is left unknown (``None``).
    """
    spec = mm_spectrum(eps, eta)
    kappa = spec.kappa
    n, is_int = _kappa_class(kappa)

    def series(upto):
        sig = sigma_recursion(eps, eta, upto).sigmas
        return [RelationTerm(k + 1, 0, v) for k, v in enumerate(sig[:upto])]

    def log_template(k):
        terms = series(k - 1)
        L = log_coefficient(eps, eta, k)
        terms.append(RelationTerm(k, 1, L))
        terms.append(RelationTerm(k, 0, None, True))
        return RelationSeries(tuple(terms), (k, True))

    if is_int:
        return [log_template(n)]
    power = RelationSeries(tuple(series(math.floor(kappa))
                                 + [RelationTerm(kappa, 0, None, True)]),
                           (kappa, True))
    if abs(kappa - n) < NEAR_INTEGER_BAND:
        return [power, log_template(n)]
    return [power]


def mm_expansion(eps, eta):
    """Primary relation template; warns inside the near-integer band."""
    templates = mm_expansion_templates(eps, eta)
    if len(templates) > 1:
        warnings.warn("kappa is close to an integer; the logarithmic template "
                      "may describe finite-range data better", RuntimeWarning,
                      stacklevel=2)
    return templates[0]


def rate_laws(x, sigma_plus):
    """Hyperbolic (QSSA) and slope-matched approximations of the complex.

    Returns ``(H, alpha)`` with ``H = x / (1 + x)`` and
    ``alpha = x / (1/sigma_plus + x)``.
    """
    x = np.asarray(x, dtype=float)
    return x / (1.0 + x), x / (1.0 / sigma_plus + x)


def predicted_error_class(kappa):
    """Decay class of the slope-matched rate-law error.

    Returns ``"lambda_minus"`` for ``1 < kappa < 2``, ``"t_2lambda_plus"`` at
    ``kappa = 2`` and ``"2lambda_plus"`` for ``kappa > 2``.
    """
    if abs(kappa - 2.0) < POLE_RTOL * 2:
        return "t_2lambda_plus"
    return "lambda_minus" if kappa < 2 else "2lambda_plus"


@dataclass(frozen=True)
class RateLawComparison:
    """Decay of the two rate-law errors along one trajectory.

    Attributes
    ----------
    qssa_fit, alpha_fit : FitReport
        Free exponential fits of ``|y - H(x)|`` and ``|y - alpha(x)|``.
    class_residuals : dict
        Residual of each fixed-exponent class for the ``alpha`` error.
    selected_class : str
        Class with the smallest residual.
    predicted_class : str
    times, x, y, qssa_error, alpha_error : ndarray
        The sampled data behind the fits.
    """

    eps: float
    eta: float
    kappa: float
    qssa_fit: object
    alpha_fit: object
    class_residuals: dict
    selected_class: str
    predicted_class: str
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    qssa_error: np.ndarray
    alpha_error: np.ndarray

    def to_csv(self):
        lines = ["t,x,y,err_qssa,err_alpha"]
        for row in zip(self.times, self.x, self.y, self.qssa_error, self.alpha_error):
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    def to_json(self):
        return {"eps": self.eps, "eta": self.eta, "kappa": self.kappa,
                "qssa_fit": self.qssa_fit.to_json(),
                "alpha_fit": self.alpha_fit.to_json(),
                "class_residuals": dict(self.class_residuals),
                "selected_class": self.selected_class,
                "predicted_class": self.predicted_class}


def _fixed_rate_residual(t, le, rate, t_prefactor):
    target = le - rate * t - (np.log(t) if t_prefactor else 0.0)
    return float(np.sqrt(np.mean((target - target.mean()) ** 2)))


def rate_law_errors(eps, eta, x0=(0.2, 0.0), window=(8.0, 20.0), n_samples=400):
    """Compare the QSSA and slope-matched rate laws along a trajectory.

    The trajectory is integrated far past the transient and both errors are
    fitted on ``t in window / |lambda_+|``.  The default window keeps
    ``|y - alpha(x)| / y`` well above the integrator's relative accuracy,
    below which the error is pure round-off.
    """
    from .numeric import fit_decay, flow

    spec = mm_spectrum(eps, eta)
    scale = 1.0 / abs(spec.lam_plus)
    t_lo, t_hi = window[0] * scale, window[1] * scale
    traj = flow(mm_system(eps, eta), x0, t_hi, rtol=1e-13, atol=1e-300, radius=None)
    ts = np.linspace(t_lo, t_hi, n_samples)
    X = traj(ts)
    x, y = X[:, 0], X[:, 1]
    H, al = rate_laws(x, spec.sigma_plus)
    eH, eA = np.abs(y - H), np.abs(y - al)
    qfit = fit_decay(ts, eH, window=(t_lo, t_hi))
    afit = fit_decay(ts, eA, window=(t_lo, t_hi))
    le = np.log(eA)
    classes = {"lambda_minus": (spec.lam_minus, False),
               "t_2lambda_plus": (2 * spec.lam_plus, True),
               "2lambda_plus": (2 * spec.lam_plus, False)}
    res = {k: _fixed_rate_residual(ts, le, r, tp) for k, (r, tp) in classes.items()}
    best = min(res, key=res.get)
    return RateLawComparison(eps, eta, spec.kappa, qfit, afit, res, best,
                             predicted_error_class(spec.kappa), ts, x, y, eH, eA)
