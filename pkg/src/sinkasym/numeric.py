"""Numerical oracles: trajectories, improper integrals, fitted rates.

Everything here is independent of the symbolic machinery except
:func:`psi_numeric` in the widely-spaced case, which needs the iterate that
the fast components are measured against.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sp_integrate

from .errors import (EscapeError, InconclusiveFitError, InputError,
                     QuadratureError, RegimeError, StiffnessError)

RTOL = 1e-10
ATOL = 1e-13
VALIDITY_RADIUS = 0.25
DECAY_SLACK = 0.01

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200,
               22 / 525, -1 / 40])


@dataclass
class Trajectory:
    """Accepted steps of an integration with cubic Hermite dense output.

    Attributes
    ----------
    t : ndarray, shape (N,)
    y : ndarray, shape (N, n)
    f : ndarray, shape (N, n)
        Right-hand side at the nodes.
    """

    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    rtol: float
    atol: float
    rejected: int = 0

    def __call__(self, t):
        """Dense output at time(s) ``t``; shape ``(n,)`` or ``(len(t), n)``."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        if tt.min() < self.t[0] - 1e-12 or tt.max() > self.t[-1] + 1e-12:
            raise ValueError("dense output requested outside the integrated range")
        i = np.clip(np.searchsorted(self.t, tt, side="right") - 1, 0, len(self.t) - 2)
        t0, t1 = self.t[i], self.t[i + 1]
        h = (t1 - t0)[:, None]
        s = ((tt - t0) / (t1 - t0))[:, None]
        y0, y1 = self.y[i], self.y[i + 1]
        f0, f1 = self.f[i], self.f[i + 1]
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s**2 * (3 - 2 * s)
        h11 = s**2 * (s - 1)
        out = h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
        return out[0] if scalar else out

    @property
    def final(self):
        return self.y[-1]

    def to_csv(self, names=None):
        n = self.y.shape[1]
        names = names or [f"x{i + 1}" for i in range(n)]
        lines = [",".join(["t"] + names)]
        for t, y in zip(self.t, self.y):
            lines.append(",".join([repr(float(t))] + [repr(float(v)) for v in y]))
        return "\n".join(lines) + "\n"


def _initial_step(rhs, t0, y0, f0, rtol, atol, span=np.inf):
    # a component starting at zero with a tiny atol would force h ~ atol
    sc = np.maximum(atol + rtol * np.abs(y0), 1e-3 * rtol * np.max(np.abs(y0)))
    d0 = np.sqrt(np.mean((y0 / sc) ** 2))
    d1 = np.sqrt(np.mean((f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    # never probe beyond the interval: the right-hand side may not exist there
    h0 = min(h0, span)
    y1 = y0 + h0 * f0
    d2 = np.sqrt(np.mean(((rhs(t0 + h0, y1) - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def _stages(rhs, t, y, f0, h):
    k = [f0]
    for i in range(1, 7):
        yi = y + h * sum(a * kk for a, kk in zip(_A[i], k) if a)
        k.append(rhs(t + _C[i] * h, yi))
    return k


def integrate(rhs, y0, t_end, t0=0.0, rtol=RTOL, atol=ATOL, radius=None,
              h_fixed=None, max_step=np.inf, max_steps=1_000_000, norm_slice=None):
    """Integrate ``y' = rhs(t, y)`` with the Dormand-Prince 5(4) pair.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y) -> ndarray``.
    y0 : array_like
    t_end, t0 : float
    rtol, atol : float
        Mixed error tolerance per component.
    radius : float, optional
        Raise :class:`EscapeError` once ``|y|`` exceeds this radius.
    h_fixed : float, optional
        Take fixed steps of this size without error control.
    norm_slice : slice, optional
        Components checked against ``radius``.

    Returns
    -------
    Trajectory
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    sl = norm_slice or slice(None)
    if radius is not None and np.linalg.norm(y[sl]) > radius:
        raise EscapeError(f"initial state lies outside the radius {radius}", t)
    f = np.asarray(rhs(t, y), dtype=float)
    ts, ys, fs = [t], [y.copy()], [f.copy()]
    if t_end <= t:
        return Trajectory(np.array(ts), np.array(ys), np.array(fs), rtol, atol)
    if h_fixed is not None:
        h = float(h_fixed)
    else:
        h = min(_initial_step(lambda tt, yy: np.asarray(rhs(tt, yy)), t, y, f, rtol, atol,
                              t_end - t),
                max_step)
    beta, safe, facmin, facmax = 0.04, 0.9, 0.2, 10.0
    expo = 0.2 - 0.75 * beta
    facold = 1e-4
    rejected = 0
    steps = 0
    while t < t_end:
        steps += 1
        if steps > max_steps:
            raise StiffnessError(f"exceeded {max_steps} steps at t={t:.6g}")
        # a fixed-step grid should land on t_end, not leave a round-off sliver
        last = t + h >= t_end - 64 * np.finfo(float).eps * max(1.0, abs(t_end))
        if last:
            h = t_end - t
        if h <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
            raise StiffnessError(f"step size collapsed to {h:.3g} at t={t:.6g}")
        k = _stages(rhs, t, y, f, h)
        y_new = y + h * sum(b * kk for b, kk in zip(_B, k) if b)
        if h_fixed is None:
            err_vec = h * sum(e * kk for e, kk in zip(_E, k) if e)
            sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = math.sqrt(float(np.mean((err_vec / sc) ** 2)))
            fac11 = err**expo if err > 0 else 0.0
            fac = fac11 / facold**beta
            fac = min(1 / facmin, max(1 / facmax, fac / safe))
            h_next = min(h / fac, max_step)
            if not np.all(np.isfinite(y_new)):
                err = np.inf
            if err > 1.0:
                rejected += 1
                h = h / min(1 / facmin, fac11 / safe) if np.isfinite(err) else h / 10
                continue
            facold = max(err, 1e-4)
        else:
            h_next = h
        t = t_end if last else t + h
        y = y_new
        f = k[6]
        if radius is not None and np.linalg.norm(y[sl]) > radius:
            raise EscapeError(
                f"trajectory left the validity ball of radius {radius} at t={t:.6g}", t)
        ts.append(t)
        ys.append(y.copy())
        fs.append(np.asarray(f, dtype=float).copy())
        h = h_next
    return Trajectory(np.array(ts), np.array(ys), np.array(fs), rtol, atol, rejected)


def flow(system, x0, t_end, rtol=RTOL, atol=ATOL, radius=VALIDITY_RADIUS, **kw):
    """Trajectory of ``x' = A x + b(x)`` in the original coordinates."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (system.n,):
        raise InputError(f"initial condition must have {system.n} components")
    return integrate(lambda t, x: system.rhs(x), x0, t_end, rtol=rtol, atol=atol,
                     radius=radius, **kw)


def quadrature(f, a, b, tol, decay=None, limit=500):
    """Adaptive quadrature of ``f`` on ``[a, b]``, ``b`` possibly infinite.

    Parameters
    ----------
    f : callable
    a, b : float
    tol : float
        Target absolute error.
    decay : tuple (K, rho), optional
        Required for infinite ``b``: a bound ``|f(s)| <= K exp(rho s)`` with
        ``rho < 0``.  The range is cut where the analytic tail drops below
        ``tol / 2``.

    Returns
    -------
    value : float
    error : float
        Estimated absolute error including the truncated tail.
    """
    tail = 0.0
    if math.isinf(b):
        if decay is None:
            raise QuadratureError("an infinite range needs a decay bound")
        K, rho = decay
        if not rho < 0:
            raise QuadratureError(f"decay rate {rho} is not negative")
        if K <= 0:
            return 0.0, 0.0
        # K e^{rho S} / |rho| <= tol / 2
        S = max(a, math.log(tol / 2 * -rho / K) / rho)
        tail = K * math.exp(rho * S) / -rho
        b = S
    pts = np.linspace(a, b, 9)[1:-1] if b - a > 0 else None
    value, err = sp_integrate.quad(f, a, b, epsabs=tol / 2, epsrel=0.0, limit=limit,
                                   points=pts)
    if err > tol:
        raise QuadratureError(f"quadrature error {err:.3g} exceeds tolerance {tol:.3g}")
    return value, err + tail


# ---------------------------------------------------------------------------
# numerical near-identity map


def _exp_sum(series, params, lam):
    """``exp(-lam s) * series(s)`` as arrays for fast evaluation."""
    cs, ks, rs = [], [], []
    for (coeffs, k), c in series.items():
        cs.append(c(params))
        ks.append(k)
        rs.append(series.basis.rate(coeffs).value - lam)
    return np.array(cs), np.array(ks), np.array(rs)


def _eval_exp_sum(arrs, s):
    cs, ks, rs = arrs
    if cs.size == 0:
        return 0.0
    return float(np.sum(cs * s**ks * np.exp(rs * s)))


def _slow_integrand(field, lams, comps):
    """``exp(-lambda_j s) r_j(u(s))`` riding along with ``u``."""
    n = len(lams)

    def rhs(s, z):
        u = z[:n]
        r = field(u)
        dq = [math.exp(-lams[j] * s) * r[j] for j in comps]
        return np.concatenate([lams * u + r, dq])

    return rhs


def _field_terms(field):
    return [[(c, e) for e, c in comp.terms.items()] for comp in field.components]


def _monomial_diff(y, w, exps):
    """``prod (y + w)^e - prod y^e`` without subtractive cancellation."""
    base, diff = 1.0, 0.0
    for yi, wi, e in zip(y, w, exps):
        for _ in range(e):
            diff = diff * (yi + wi) + base * wi
            base *= yi
    return diff


def _fast_integrand(field, lams, comps, iterset, m, v, u0):
    """Integrand of the fast components in terms of ``w = u - D_m(s, v)``.

    ``w' = Lambda w + [r(D + w) - r(D)] - R(s)`` where ``R`` is the symbolic
    defect of ``D_m``.  Both the state and the integrand
    ``exp(-lambda_j s) [r_j(D + w) - r_j(D)]`` then stay free of the
    cancellation that ``exp(-lambda_j s)`` would otherwise amplify.
    """
    n = len(lams)
    D = iterset.D(m)
    Ds = [_exp_sum(c, v, 0.0) for c in D]
    Rs = [_exp_sum(c, v, 0.0) for c in iterset.residual(m)]
    terms = _field_terms(field)

    def dvals(s):
        return np.array([_eval_exp_sum(a, s) for a in Ds])

    def rdiff(y, w):
        return np.array([sum(c * _monomial_diff(y, w, e) for c, e in comp)
                         for comp in terms])

    def rhs(s, z):
        w = z[:n]
        y = dvals(s)
        dr = rdiff(y, w)
        R = np.array([_eval_exp_sum(a, s) for a in Rs])
        dq = [math.exp(-lams[j] * s) * dr[j] for j in comps]
        return np.concatenate([lams * w + dr - R, dq])

    return rhs, u0 - dvals(0.0)


def _check_gap_amplification(lams, comps, mu1, alpha, E, u0, tol):
    """Refuse fast blocks whose tail cannot be resolved in double precision.

    An error ``delta`` in the settled parameters makes the fast integrand grow
    like ``exp((kappa_j - alpha) |mu1| s)`` while the exact integrand decays
    like ``exp((kappa_j - E) |mu1| s)``.  Reaching the horizon where the tail
    drops below ``tol`` amplifies ``delta`` by about
    ``(|u0|^alpha / tol)^((kappa_j - alpha) / (E - kappa_j))``.
    """
    size = max(float(np.linalg.norm(u0)), 1e-300)
    delta = 1e-15 * size
    for j in comps:
        kj = lams[j] / mu1
        gamma = (kj - alpha) / (E - kj)
        amp = (max(size**alpha / tol, 1.0)) ** gamma
        if delta * amp > tol:
            raise RegimeError(f"component {j + 1}: kappa_j={kj:.4g} against guaranteed "
                              f"order {E:g} amplifies round-off by ~{amp:.2g}; "
                              f"the tail integral cannot reach tol={tol:g}")


@dataclass
class PsiReport:
    value: np.ndarray
    horizon: float
    tail_bounds: np.ndarray
    noise: np.ndarray


def psi_numeric(system, x0, tol=1e-10, frame="diagonal", rtol=1e-12, atol=None,
                report=False, iterset=None, radius=None):
    """Numerical near-identity map at ``x0``.

    ``v_j = u0_j + int_0^inf exp(-lambda_j s) [r_j(u(s)) - r_j(D_{p_j-1}(s, v))] ds``
    with ``u = P^{-1} x`` the flow in eigen-coordinates and the subtracted
    iterate present only for fast components.  The integrals ride along with
    the trajectory as extra state, so the step control sees their error too.
    Fast blocks are processed in increasing order of ``p_j`` because each
    subtracted iterate involves only the parameters of faster-settled ones.

    Parameters
    ----------
    system : SinkSystem
    x0 : array_like
        Initial condition in original coordinates.
    tol : float
        Absolute error target for the truncated tail.
    rtol, atol : float
        Integrator tolerances for the trajectory; ``atol`` defaults to a tiny
        multiple of ``|x0|``.
    frame : {"diagonal", "original"}
        Return ``v`` (iterate parameters) or ``P v``.

    Raises
    ------
    RegimeError
        For a fast component whose gap to its guaranteed order is too small:
        the integrand is exact only for exact slow parameters and round-off
        in those grows like ``exp((kappa_j - alpha) |mu1| s)``.  In practice
        fast blocks with ``p_j = 2`` and ``kappa_j`` near ``alpha`` work.
    QuadratureError
        When the tail bound does not fall below ``tol``.

    Notes
    -----
    Fast blocks integrate ``w = u - D_{p_j-1}(s, v)`` rather than ``u``, with
    the symbolic defect of the iterate as forcing, so neither the state nor
    the integrand suffers from cancellation.
    """
    from .iterates import _component, _make_plan, iterate

    x0 = np.asarray(x0, dtype=float)
    n = system.n
    if x0.shape != (n,):
        raise InputError(f"initial condition must have {n} components")
    spec = system.spectrum
    lams = np.array(spec.eigenvalues)
    mu1 = spec.mu1
    u0 = spec.Pinv @ x0
    plan = _make_plan(system)
    pcomp = [plan.p_of_component(j) for j in range(n)]
    alpha = system.alpha
    field = system.diagonalized_field
    v = u0.copy()
    horizons = np.zeros(n)
    tails = np.zeros(n)
    noise = np.zeros(n)
    if max(pcomp) > 1 and (iterset is None or iterset.m_max < max(pcomp) - 1):
        iterset = iterate(system, max(pcomp) - 1)
    for p in sorted(set(pcomp)):
        comps = [j for j in range(n) if pcomp[j] == p]
        E = alpha if p == 1 else alpha + (p - 1) * system.beta
        rho = np.array([E * (mu1 + DECAY_SLACK * abs(mu1)) - lams[j] for j in comps])
        if np.any(rho >= 0):
            raise QuadratureError("decay bound is not integrable; slack too large")
        if p > 1:
            _check_gap_amplification(lams, comps, mu1, alpha, E, u0, tol)
        if p == 1:
            rhs, state0 = _slow_integrand(field, lams, comps), u0
        else:
            rhs, state0 = _fast_integrand(field, lams, comps, iterset, p - 1, v, u0)
        z0 = np.concatenate([state0, np.zeros(len(comps))])
        # the integrands amplify state errors by exp(-lambda_j s): keep the
        # state error relative, and judge the integrals against the target
        if atol is not None:
            u_atol = atol
        elif p == 1:
            u_atol = 1e-18 * max(np.linalg.norm(u0), 1e-300)
        else:
            # an absolute floor on w would be amplified without bound
            u_atol = 1e-300
        # later fast blocks amplify the error of earlier parameters, so the
        # earlier blocks are settled far below the target
        tol_p = tol if p == max(pcomp) else tol * 1e-6
        tols = np.concatenate([np.full(n, u_atol), np.full(len(comps), tol_p * 1e-2)])
        S = 10.0 / float(np.min(-rho))
        t0 = 0.0
        traj_t, traj_g = [], []
        K_prev = None
        while True:
            try:
                traj = integrate(rhs, z0, S, t0=t0, rtol=rtol, atol=tols, radius=radius,
                                 norm_slice=slice(0, n))
            except (StiffnessError, OverflowError) as exc:
                if p == 1:
                    raise
                raise RegimeError(f"fast integrand for components {comps} blew up "
                                  f"({exc}); the spectral gap amplifies errors in the "
                                  "settled parameters beyond double precision") from exc
            traj_t.append(traj.t)
            traj_g.append(traj.f[:, n:])
            ts = np.concatenate(traj_t)
            gs = np.concatenate(traj_g)
            late = ts >= ts[-1] / 2
            K = np.max(np.abs(gs[late]) * np.exp(-rho[None, :] * ts[late, None]), axis=0)
            bound = K * np.exp(rho * ts[-1]) / -rho
            if p > 1 and K_prev is not None and np.any(K > 2.0 * K_prev):
                # with inexact slow parameters the integrand grows like
                # exp((lambda_i - lambda_j + (alpha - 1) mu1) s)
                raise RegimeError(f"fast integrand for components {comps} stopped "
                                  f"decaying near t={ts[-1]:.3g}; the spectral gap "
                                  "amplifies errors in the settled parameters")
            K_prev = K
            if np.all(bound <= tol_p / 2):
                break
            need = np.max(np.log(np.maximum(tol_p / 2 * -rho / np.maximum(K, 1e-300),
                                            1e-300)) / rho)
            t0, z0 = ts[-1], traj.y[-1]
            S = max(need * 1.05, t0 * 1.1)
            if S > 1e4 / abs(mu1):
                raise QuadratureError("tail bound does not fall below the tolerance")
        q = traj.y[-1][n:]
        for i, j in enumerate(comps):
            v[j] = u0[j] + q[i]
            horizons[j] = ts[-1]
            tails[j] = bound[i]
            # relative round-off in the integrand, accumulated over the horizon
            noise[j] = rtol * float(np.trapezoid(np.abs(gs[:, i]), ts))
        if np.any(noise[comps] > tol):
            warnings.warn("estimated round-off in the integrals exceeds the "
                          "tolerance", RuntimeWarning, stacklevel=2)
    out = v if frame == "diagonal" else spec.P @ v
    if report:
        return PsiReport(out, float(horizons.max()), tails, noise)
    return out


# ---------------------------------------------------------------------------
# fitting


@dataclass
class FitReport:
    """Result of a least-squares fit.

    Attributes
    ----------
    model : str
    params : dict
    residual : float
        Root-mean-square residual in the fitted space.
    window : tuple
    n_points : int
    condition : float
    alternatives : dict
        Residuals of the competing models, when several were tried.
    """

    model: str
    params: dict
    residual: float
    window: tuple
    n_points: int
    condition: float = 1.0
    alternatives: dict = field(default_factory=dict)

    def to_json(self):
        return {"model": self.model, "params": dict(self.params),
                "residual": self.residual, "window": list(self.window),
                "n_points": self.n_points, "condition": self.condition,
                "alternatives": dict(self.alternatives)}

    def __str__(self):
        ps = ", ".join(f"{k}={v:.6g}" for k, v in self.params.items())
        return (f"{self.model}: {ps} (rms residual {self.residual:.3g}, "
                f"{self.n_points} points in [{self.window[0]:.4g}, {self.window[1]:.4g}])")


def _lstsq(X, y):
    norms = np.linalg.norm(X, axis=0)
    norms[norms == 0] = 1.0
    Xs = X / norms
    coef, *_ = np.linalg.lstsq(Xs, y, rcond=None)
    sv = np.linalg.svd(Xs, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    resid = y - Xs @ coef
    return coef / norms, float(np.sqrt(np.mean(resid**2))), cond


def fit_decay(times, errors, window=None, t_prefactor=False, floor=1e-300, min_points=5):
    """Fit ``log|e(t)| = c + rate * t`` (optionally ``+ log t``).

    Parameters
    ----------
    times, errors : array_like
    window : tuple, optional
        Defaults to the last 60% of the time span.
    t_prefactor : bool
        Also fit ``e ~ t exp(rate t)`` and keep the model with the smaller
        residual.
    floor : float
        Samples at or below this magnitude are ignored (underflow).

    Raises
    ------
    InconclusiveFitError
        When fewer than ``min_points`` usable samples remain even after
        shrinking the window.
    """
    t = np.asarray(times, dtype=float)
    e = np.abs(np.asarray(errors, dtype=float))
    if window is None:
        window = (t[0] + 0.4 * (t[-1] - t[0]), t[-1])
    lo, hi = window
    for _ in range(4):
        mask = (t >= lo) & (t <= hi) & (e > floor) & np.isfinite(e)
        if mask.sum() >= min_points:
            break
        hi = lo + 0.5 * (hi - lo)
    else:
        raise InconclusiveFitError("too few usable samples in the fit window")
    tt, le = t[mask], np.log(e[mask])
    models = {"exp": le}
    if t_prefactor:
        if tt.min() <= 0:
            raise InputError("the t-prefactor model needs positive times")
        models["texp"] = le - np.log(tt)
    fits = {}
    X = np.column_stack([np.ones_like(tt), tt])
    for name, target in models.items():
        coef, res, cond = _lstsq(X, target)
        fits[name] = (coef, res, cond)
    best = min(fits, key=lambda k: fits[k][1])
    coef, res, cond = fits[best]
    return FitReport(best, {"rate": float(coef[1]), "log_prefactor": float(coef[0])},
                     res, (float(tt[0]), float(tt[-1])), int(mask.sum()), cond,
                     {k: v[1] for k, v in fits.items()})


def _regressor(x, power, logpow):
    v = x**power
    if logpow:
        v = v * np.log(x) ** logpow
    return v


def fit_relation(x1, x2, template, x_range=None, fit_known=False, extra=(),
                 max_condition=1e12, n_samples=400):
    """Least-squares fit of a relation template to sampled trajectory data.

    Parameters
    ----------
    x1, x2 : array_like
        Samples along a trajectory (``x1 > 0``).
    template : RelationSeries
        Terms with ``coeff=None`` are fitted; known terms are subtracted
        unless ``fit_known`` is set.
    x_range : tuple, optional
        Sampling range for ``x1``.  Defaults to three decades below a tenth of
        the largest sample.
    extra : sequence of (power, logpow)
        Additional nuisance regressors beyond the template's order.

    Returns
    -------
    FitReport
        ``params`` maps term labels to fitted coefficients.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.any(x1 <= 0):
        keep = x1 > 0
        x1, x2 = x1[keep], x2[keep]
    if x1.size == 0:
        raise InconclusiveFitError("no samples with x1 > 0")
    if x_range is None:
        hi = 0.1 * np.max(x1)
        x_range = (hi * 1e-3, hi)
    lo, hi = x_range
    from .relate import RelationTerm

    fitted = [tm for tm in template.terms if fit_known or tm.coeff is None]
    known = [tm for tm in template.terms if not (fit_known or tm.coeff is None)]
    nuisance = [RelationTerm(p, l, None) for p, l in extra]
    regs = fitted + nuisance
    if not regs:
        raise InputError("the template has nothing to fit")
    for _ in range(4):
        mask = (x1 >= lo) & (x1 <= hi)
        if mask.sum() < len(regs) + 3:
            raise InconclusiveFitError("too few samples in the relation range")
        xs, ys = x1[mask], x2[mask]
        if xs.size > n_samples:
            idx = np.unique(np.linspace(0, xs.size - 1, n_samples).round().astype(int))
            xs, ys = xs[idx], ys[idx]
        target = ys - sum((float(tm.coeff) * _regressor(xs, tm.power, tm.logpow)
                           for tm in known), np.zeros_like(xs))
        X = np.column_stack([_regressor(xs, tm.power, tm.logpow) for tm in regs])
        coef, res, cond = _lstsq(X, target)
        if cond <= max_condition:
            break
        hi = lo + 0.5 * (hi - lo)
    else:
        raise InconclusiveFitError(f"regressors stay ill-conditioned (cond {cond:.3g})")
    params = {tm.label: float(c) for tm, c in zip(regs, coef)}
    return FitReport("relation", params, res, (float(xs.min()), float(xs.max())),
                     int(xs.size), cond)


def sample_trajectory(traj, t_lo, t_hi, n=2000):
    """Dense-output samples on ``[t_lo, t_hi]``."""
    ts = np.linspace(t_lo, t_hi, n)
    return ts, traj(ts)
