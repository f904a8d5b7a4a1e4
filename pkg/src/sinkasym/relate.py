"""Trajectory relations ``x2 = f(x1)`` obtained by eliminating time.

Iterates are sums of exponentials in ``t``.  Writing the slowest one as
``z = y01 * exp(mu_1 t)`` turns the first component into a power series in
``z``; inverting it and substituting into the second component expresses
``x2`` through ``x1``.  At a resonance ``lambda_2 = kappa * lambda_1`` a term
``t * exp(kappa mu_1 t)`` appears, and ``t = (ln z - ln y01) / mu_1`` turns it
into ``x1**kappa * ln x1``.

Coefficients may be floats or sympy expressions; the series arithmetic below
works for either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, RegimeError
from .iterates import iterate


def _log(v):
    try:
        import sympy

        if isinstance(v, sympy.Basic):
            return sympy.log(v)
    except ImportError:  # pragma: no cover
        pass
    return math.log(v)


def _is_zero(v):
    try:
        import sympy

        if isinstance(v, sympy.Basic):
            return sympy.simplify(v) == 0
    except ImportError:  # pragma: no cover
        pass
    return v == 0


# ---------------------------------------------------------------------------
# truncated power series with one logarithmic term at the top order


class LogSeries:
    """``sum_{k=1}^{K} a_k x^k + L x^K ln x`` truncated at order ``K``.

    Parameters
    ----------
    coeffs : sequence
        ``a_1 .. a_K``.
    log : scalar
        Coefficient ``L`` of ``x^K ln x``.
    """

    __slots__ = ("coeffs", "log")

    def __init__(self, coeffs, log=0):
        self.coeffs = list(coeffs)
        self.log = log

    @property
    def order(self):
        return len(self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k - 1]

    def mul(self, other):
        K = self.order
        out = [0] * K
        for i in range(1, K + 1):
            for j in range(1, K + 1 - i):
                out[i + j - 1] = out[i + j - 1] + self[i] * other[j]
        return LogSeries(out, 0)

    def power(self, k):
        if k == 1:
            return self
        result = self
        for _ in range(k - 1):
            result = result.mul(self)
        return result

    def compose(self, inner):
        """``self(inner(x))``; ``inner`` must start with a nonzero linear term."""
        K = self.order
        g1 = inner[1]
        out = [0] * K
        log = self[1] * inner.log
        pw = inner
        for i in range(1, K + 1):
            if i > 1:
                pw = pw.mul(inner)
            fi = self[i]
            if not _is_zero(fi):
                for k in range(i, K + 1):
                    out[k - 1] = out[k - 1] + fi * pw[k]
        if not _is_zero(self.log):
            scale = g1**K
            log = log + self.log * scale
            out[K - 1] = out[K - 1] + self.log * scale * _log(g1)
        return LogSeries(out, log)

    def inverse(self):
        """Compositional inverse ``u`` with ``self(u(x)) = x``."""
        K = self.order
        g1 = self[1]
        u1 = 1 / g1
        u = LogSeries([u1] + [0] * (K - 1), -self.log * u1**K / g1)
        for k in range(2, K + 1):
            c = self.compose(u)[k]
            u.coeffs[k - 1] = -c / g1
        return u

    def __repr__(self):
        return f"LogSeries({self.coeffs}, log={self.log})"


def invert_series(xi):
    """Reverse ``x = sum_{i>=1} xi_i z^i`` into ``z = sum_{i>=1} nu_i x^i``.

    Parameters
    ----------
    xi : sequence
        ``xi_1 .. xi_K`` with ``xi_1`` nonzero.

    Returns
    -------
    list
        ``nu_1 .. nu_K``.
    """
    if _is_zero(xi[0]):
        raise InputError("series reversion needs a nonzero linear coefficient")
    return LogSeries(xi).inverse().coeffs


def compose_series(outer, inner):
    """Coefficients of ``outer(inner(x))`` up to the common order."""
    K = min(len(outer), len(inner))
    return LogSeries(list(outer)[:K]).compose(LogSeries(list(inner)[:K])).coeffs


# ---------------------------------------------------------------------------
# relation containers


@dataclass(frozen=True)
class RelationTerm:
    """``coeff * x**power * (ln x)**logpow``; ``coeff=None`` marks an unknown."""

    power: float
    logpow: int
    coeff: object
    ic_dependent: bool = False

    @property
    def label(self):
        p = f"{self.power:g}"
        base = "x" if p == "1" else f"x^{p}"
        if self.logpow == 0:
            return base
        return base + (" ln x" if self.logpow == 1 else f" (ln x)^{self.logpow}")


@dataclass(frozen=True)
class RelationSeries:
    """Asymptotic relation between two state components near the sink.

    Attributes
    ----------
    terms : tuple of RelationTerm
    remainder : tuple (power, strict)
        ``strict`` means ``o(x**power)``, otherwise ``O(x**power)``.
    independent, dependent : int
        Component indices (0-based) of ``x`` and of the expressed variable.
    notes : tuple of str
    """

    terms: tuple
    remainder: tuple
    independent: int = 0
    dependent: int = 1
    notes: tuple = field(default=())

    def coefficient(self, power, logpow=0):
        for tm in self.terms:
            if abs(tm.power - power) < 1e-12 and tm.logpow == logpow:
                return tm.coeff
        return 0

    def unknowns(self):
        return [tm for tm in self.terms if tm.coeff is None]

    def substitute(self, subs):
        """Replace sympy coefficients by floats using ``subs``."""
        terms = []
        for tm in self.terms:
            c = tm.coeff
            if c is not None and not isinstance(c, (int, float)):
                c = float(c.subs(subs))
            terms.append(RelationTerm(tm.power, tm.logpow, c, tm.ic_dependent))
        return RelationSeries(tuple(terms), self.remainder, self.independent,
                              self.dependent, self.notes)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for tm in self.terms:
            if tm.coeff is None:
                raise ValueError(f"coefficient of {tm.label} is unknown")
            v = float(tm.coeff) * np.abs(x) ** tm.power * np.sign(x) ** round(tm.power)
            if tm.logpow:
                v = v * np.log(np.abs(x)) ** tm.logpow
            out = out + v
        return out

    def format(self, names=None):
        """Readable form; ``names`` maps coordinate index to a variable name."""
        names = names or {}
        xs = names.get(self.independent, f"x{self.independent + 1}")
        ys = names.get(self.dependent, f"x{self.dependent + 1}")
        parts = []
        for tm in self.terms:
            c = "C" if tm.coeff is None else (f"{tm.coeff:.12g}"
                                              if isinstance(tm.coeff, (int, float))
                                              else f"({tm.coeff})")
            mono = tm.label.replace("x", xs)
            parts.append(f"{c}*{mono}")
        p, strict = self.remainder
        rem = f"{'o' if strict else 'O'}({xs}^{p:g})"
        body = " + ".join(parts) if parts else "0"
        return f"{ys} = {body} + {rem}".replace("+ -", "- ")

    def to_json(self):
        def enc(c):
            if c is None:
                return None
            if isinstance(c, (int, float)):
                return float(c)
            return str(c)

        return {
            "independent": self.independent,
            "dependent": self.dependent,
            "terms": [{"power": tm.power, "logpow": tm.logpow, "coeff": enc(tm.coeff),
                       "ic_dependent": tm.ic_dependent} for tm in self.terms],
            "remainder": {"power": self.remainder[0], "strict": self.remainder[1]},
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# star node


def _to_sympy_number(c):
    import sympy
    from fractions import Fraction

    frac = Fraction(c).limit_denominator(1000)
    if abs(float(frac) - c) <= 1e-12 * max(1.0, abs(c)):
        return sympy.Rational(frac.numerator, frac.denominator)
    return sympy.Float(c)


def _value(p, y0):
    """Evaluate a ParamPoly (or pass through a scalar) at numeric or symbolic y0."""
    from .expalg import ParamPoly

    if not isinstance(p, ParamPoly):
        return p
    try:
        import sympy

        if any(isinstance(v, sympy.Basic) for v in y0):
            out = sympy.Integer(0)
            for e, c in p.items():
                mono = _to_sympy_number(c)
                for s, k in zip(y0, e):
                    mono = mono * s**k
                out += mono
            return out
    except ImportError:  # pragma: no cover
        pass
    return p([float(v) for v in y0])


def star_xi(system):
    """Second-order iterate coefficients ``xi = b(y0) / a`` of a star node."""
    lams = system.spectrum.eigenvalues
    if system.n != 2 or lams[0] != lams[1]:
        raise RegimeError("star_xi needs a planar star node")
    a = lams[0]
    quad = [c.homogeneous_part(2) for c in system.diagonalized_field.components]
    return tuple(q.scale(1.0 / a) for q in quad)


def relate_star(xi, y0):
    """Relation ``x2(x1)`` to second order for a star node.

    ``x2 = (y02/y01) x1 + (xi2/y01^2 - y02 xi1/y01^3) x1^2 + O(x1^3)``.  When
    ``y01 = 0`` the roles of the components are swapped; when ``y0 = 0`` the
    trajectory is the equilibrium itself.

    Parameters
    ----------
    xi : pair
        Second-order coefficients (ParamPoly, float or sympy expression).
    y0 : pair
        Iterate parameters, numeric or sympy symbols.
    """
    y01, y02 = y0
    x1c, x2c = _value(xi[0], y0), _value(xi[1], y0)
    if _is_zero(y01) and _is_zero(y02):
        return RelationSeries((), (1, False), notes=("y0 = 0: the trajectory is the equilibrium",))
    if _is_zero(y01):
        y01, y02, x1c, x2c = y02, y01, x2c, x1c
        indep, dep = 1, 0
    else:
        indep, dep = 0, 1
    c1 = y02 / y01
    c2 = x2c / y01**2 - y02 * x1c / y01**3
    try:
        import sympy

        if isinstance(c2, sympy.Basic):
            c1, c2 = sympy.simplify(c1), sympy.factor(sympy.simplify(c2))
    except ImportError:  # pragma: no cover
        pass
    terms = (RelationTerm(1, 0, c1, True), RelationTerm(2, 0, c2, True))
    return RelationSeries(terms, (3, False), indep, dep)


def concavity_sign(coefficient):
    """Sign of the quadratic coefficient: +1 convex, -1 concave, 0 flat."""
    return int(np.sign(float(coefficient)))


# ---------------------------------------------------------------------------
# planar stable node in eigen-coordinates


@dataclass(frozen=True)
class SlowSeries:
    """Slow-family coefficients of a planar iterate in eigen-coordinates.

    With ``z = y01 exp(lambda_1 t)``::

        u1 = sum_k xi_k z^k
        u2 = sum_k rho_k z^k + tau * t * exp(kappa lambda_1 t) y01^kappa
             + varrho * exp(lambda_2 t)

    Attributes
    ----------
    xi, rho : list of float
        ``xi[k-1]`` and ``rho[k-1]`` for ``k = 1 .. order``.
    tau : float
        Coefficient of the resonant ``t`` term divided by ``y01^kappa``
        (zero without resonance).
    varrho : ParamPoly or None
        Full coefficient of ``exp(lambda_2 t)`` in ``u2`` (depends on ``y0``).
    kappa : float
    order : int
        Highest power of ``z`` covered by the guaranteed order.
    """

    xi: list
    rho: list
    tau: float
    varrho: object
    kappa: float
    kappa_int: int | None
    order: int


def _pure_power(poly, k):
    if len(poly) == 0:
        return 0.0
    if set(poly.terms) != {(k, 0)}:
        raise RegimeError(f"coefficient {poly.format()} is not a multiple of y01^{k}")
    return poly.coeff((k, 0))


def _require_planar_node(system):
    if system.n != 2:
        raise RegimeError("planar relations need a two-dimensional system")
    lams = system.spectrum.eigenvalues
    if lams[0] == lams[1]:
        raise RegimeError("use relate_star for a star node")


def _iterset_for(system, order, iterset=None):
    """Iterates whose guaranteed rate multiplier exceeds ``order``."""
    alpha, beta = system.alpha, system.beta
    m = 1
    while alpha + (m - 1) * beta <= order:
        m += 1
    if iterset is not None and iterset.m_max >= m:
        return iterset
    return iterate(system, m)


def slow_series(system, order, iterset=None):
    """Extract the slow-family coefficients up to ``z**order``.

    The slow family is what remains on the slow manifold, where the total
    coefficient of ``exp(lambda_2 t)`` vanishes.  Setting
    ``y02 = -B(y01)`` for the boundary part ``B`` of that coefficient removes
    every fast-family term, including products of fast terms whose rates
    coincide with slow ones when the eigenvalues are commensurate.
    """
    from .expalg import ParamPoly

    _require_planar_node(system)
    iterset = _iterset_for(system, order, iterset)
    D = iterset.D(iterset.m_max)
    basis = system.spectrum.basis
    e0 = basis.embedding[0]
    kf, kx = system.spectrum.kappa_of(1)
    kappa_int = int(kx) if kx is not None and kx.denominator == 1 else None
    fast_key = basis.embedding[1]
    varrho = D[1].coefficient(fast_key, 0)
    boundary = varrho - ParamPoly.var(2, 1)
    if any(e[1] for e in boundary.terms):
        raise RegimeError("fast coefficient is not affine in y02")
    onto = [ParamPoly.var(1, 0),
            -ParamPoly(1, {(e[0],): c for e, c in boundary.terms.items()})]
    xi, rho = [], []
    for k in range(1, order + 1):
        key = tuple(k * c for c in e0)
        xi.append(D[0].coefficient(key, 0).compose(onto).coeff((k,)))
        if kappa_int is not None and k >= kappa_int:
            rho.append(0.0)
        else:
            rho.append(D[1].coefficient(key, 0).compose(onto).coeff((k,)))
    if kappa_int is not None and kappa_int <= order:
        key = tuple(kappa_int * c for c in e0)
        tau = _pure_power(D[1].coefficient(key, 1), kappa_int)
    else:
        tau = 0.0
    return SlowSeries(xi, rho, tau, varrho, kf, kappa_int, order)


def _eigen_relation(system, y0, iterset=None):
    """``u2(u1)`` as a LogSeries (integer kappa) plus the non-integer top term."""
    kf, kx = system.spectrum.kappa_of(1)
    integer = kx is not None and kx.denominator == 1
    K = int(kx) if integer else math.floor(kf)
    ss = slow_series(system, K, iterset)
    lam1 = system.spectrum.mu1
    y01 = y0[0]
    nu = LogSeries(ss.xi).inverse()
    rho = list(ss.rho)
    top = None
    if integer:
        L = ss.tau / lam1
        varrho = _value(ss.varrho, y0)
        rho[K - 1] = varrho / y01**K - L * _log(y01)
        outer = LogSeries(rho, L)
    else:
        outer = LogSeries(rho)
        top = _value(ss.varrho, y0) / y01**kf
    return outer.compose(nu), top, ss


def _check_y01(y01):
    try:
        import sympy

        if isinstance(y01, sympy.Basic):
            return
    except ImportError:  # pragma: no cover
        pass
    if not y01 > 0:
        raise InputError(
            "the slow parameter y01 must be positive (approach from the x1 > 0 side)")


def _series_terms(series, ic_power=None, extra=()):
    terms = [RelationTerm(k, 0, c, k == ic_power)
             for k, c in enumerate(series.coeffs, start=1) if not _is_zero(c)]
    if not _is_zero(series.log):
        terms.append(RelationTerm(series.order, 1, series.log, False))
    terms.extend(extra)
    terms.sort(key=lambda tm: (tm.power, -tm.logpow))
    return tuple(terms)


def relate_resonant(system, y0=None, iterset=None):
    """Relation ``u2(u1)`` in eigen-coordinates for a resonant planar node.

    The coefficients below ``u1**kappa`` do not depend on the initial
    condition; the ``u1**kappa`` coefficient does.  A ``u1**kappa ln u1``
    term appears whenever the resonant ``t`` term of the iterate is nonzero.

    Parameters
    ----------
    system : SinkSystem
        Planar system with ``lambda_2 = kappa lambda_1`` for an integer
        ``kappa >= 2``.
    y0 : pair, optional
        Iterate parameters (numeric or sympy).  Defaults to positive sympy
        symbols ``y01, y02``.
    """
    _require_planar_node(system)
    kf, kx = system.spectrum.kappa_of(1)
    if kx is None or kx.denominator != 1 or kx < 2:
        raise RegimeError("relate_resonant needs an integer kappa >= 2")
    if y0 is None:
        import sympy

        y0 = sympy.symbols("y01 y02", positive=True)
    _check_y01(y0[0])
    K = int(kx)
    series, _, _ = _eigen_relation(system, y0, iterset)
    terms = _series_terms(series, ic_power=K)
    has_log = any(tm.logpow for tm in terms)
    remainder = (K, True) if has_log or K == 2 else (K + 1, False)
    return RelationSeries(tuple(terms), remainder)


def relate_via_basis(system, v0=None, iterset=None):
    """Relation ``x2(x1)`` in the original coordinates of a planar node.

    Uses ``x2 - (p21/p11) x1 = (det P / p11) u2`` together with the series
    reversion of ``x1 = p11 u1 + p12 u2(u1)``.

    Parameters
    ----------
    system : SinkSystem
    v0 : pair, optional
        Iterate parameters in eigen-coordinates; sympy symbols by default.
    """
    _require_planar_node(system)
    if v0 is None:
        import sympy

        v0 = sympy.symbols("v01 v02", positive=True)
    _check_y01(v0[0])
    P = system.spectrum.P
    if not P[0, 0] > 0:
        raise RegimeError("the slow eigenvector needs a positive x1 component")
    (p11, p12), (p21, p22) = P
    det = p11 * p22 - p12 * p21
    kf, kx = system.spectrum.kappa_of(1)
    integer = kx is not None and kx.denominator == 1
    K = int(kx) if integer else math.floor(kf)
    u2, top, _ = _eigen_relation(system, v0, iterset)
    # x1 = p11 u1 + p12 u2(u1)
    ident = [1] + [0] * (K - 1)
    x1_of_u1 = LogSeries([p11 * a + p12 * b for a, b in zip(ident, u2.coeffs)],
                         p12 * u2.log)
    u1_of_x1 = x1_of_u1.inverse()
    tail = u2.compose(u1_of_x1)
    coeffs = [det / p11 * c for c in tail.coeffs]
    coeffs[0] = coeffs[0] + p21 / p11
    x2 = LogSeries(coeffs, det / p11 * tail.log)
    top_coeff = None if top is None else det * top / p11 ** (kf + 1)
    if top is not None:
        terms = _series_terms(x2, extra=(RelationTerm(kf, 0, top_coeff, True),))
    else:
        terms = _series_terms(x2, ic_power=K)
    if top is not None:
        remainder = (kf, True)
    else:
        has_log = not _is_zero(x2.log)
        remainder = (K, True) if has_log or K == 2 else (K + 1, False)
    return RelationSeries(terms, remainder)


def slow_manifold_coefficients(system, order, iterset=None):
    """Power-series coefficients ``s_1 .. s_order`` of the slow manifold.

    Only the slow family of the iterates enters, so the result is independent
    of the initial condition.  Valid for orders below a resonance.
    """
    _require_planar_node(system)
    ss = slow_series(system, order, iterset)
    if ss.kappa_int is not None and ss.kappa_int <= order:
        raise RegimeError(
            f"resonance at order {ss.kappa_int}: the expansion stops below it")
    P = system.spectrum.P
    if P[0, 0] == 0:
        raise RegimeError("the slow eigenvector has no x1 component")
    # slow manifold: u = (sum xi z^k, sum rho z^k); x = P u
    x1 = LogSeries([P[0, 0] * a + P[0, 1] * b for a, b in zip(ss.xi, ss.rho)])
    x2 = LogSeries([P[1, 0] * a + P[1, 1] * b for a, b in zip(ss.xi, ss.rho)])
    return x2.compose(x1.inverse()).coeffs
