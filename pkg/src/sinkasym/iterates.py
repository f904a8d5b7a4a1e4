"""Symbolic iterates approximating trajectories near a sink.

The iterates ``D_m(t, y0)`` are exponential-polynomial series whose error
against the true flow decays at a rate that improves with ``m``.  Both
spacing regimes run through a single engine working in the eigen-coordinates
of the linear part.  Components are grouped into blocks of equal eigenvalue.
A block is *slow* when its spacing ratio ``kappa_j`` is below the minimal
degree ``alpha``; slow components follow the backward (tail) recursion for all
``m``.  A *fast* block starts at zero, builds up with forward convolutions
until step ``p_j`` where its own free parameter enters, then switches to the
tail recursion on differences.  In the closely-spaced regime every block is
slow and the engine reduces to the plain tail recursion.

Near-identity maps ``psi`` taking initial conditions to iterate parameters are
built on top of the iterates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConsistencyError, RegimeError
from .expalg import (ExpSeries, ParamPoly, forward_conv,
                     substitute_into_poly, tail_conv)
from .system import Spacing

DEFAULT_M_MAX = 6
CANCEL_RTOL = 1e-9


class Regime(str, Enum):
    CLOSELY = "closely"
    WIDELY_2D = "widely-2d"
    WIDELY_ND = "widely-nd"


def regime_of(system):
    if system.spacing is Spacing.CLOSELY:
        return Regime.CLOSELY
    return Regime.WIDELY_2D if system.n == 2 else Regime.WIDELY_ND


@dataclass(frozen=True)
class WidePlan:
    """Block structure of the spectrum.

    Attributes
    ----------
    blocks : tuple of tuple of int
        Component indices (eigen-coordinates) of each block, slowest first.
    kappas : tuple of float
        ``kappa_j = lambda_j / lambda_1`` per block.
    ps : tuple of int
        ``p_j = floor((kappa_j - alpha) / beta) + 2`` for fast blocks and 1 for
        slow blocks.
    j0 : int or None
        Index of the first fast block, ``None`` when every block is slow.
    """

    blocks: tuple
    kappas: tuple
    ps: tuple
    j0: int | None
    alpha: int
    beta: int

    @property
    def ell(self):
        return len(self.blocks)

    @property
    def p(self):
        """``p_ell`` of the fastest block."""
        return self.ps[-1]

    def p_of_component(self, i):
        for blk, p in zip(self.blocks, self.ps):
            if i in blk:
                return p
        raise IndexError(i)

    def is_wide(self):
        return self.j0 is not None


def _blocks(spectrum):
    basis = spectrum.basis
    blocks = []
    for i in range(spectrum.n):
        for blk in blocks:
            if basis.unit(blk[0]) == basis.unit(i):
                blk.append(i)
                break
        else:
            blocks.append([i])
    return [tuple(b) for b in blocks]


def _make_plan(system):
    spectrum = system.spectrum
    alpha, beta = system.alpha, system.beta
    blocks = _blocks(spectrum)
    kappas, ps = [], []
    j0 = None
    for b, blk in enumerate(blocks):
        kf, kx = spectrum.kappa_of(blk[0])
        kappas.append(kf)
        wide = (kx >= alpha) if kx is not None else (kf >= alpha)
        if wide:
            if j0 is None:
                j0 = b
            ratio = (kx - alpha) / beta if kx is not None else (kf - alpha) / beta
            ps.append(math.floor(ratio) + 2)
        else:
            ps.append(1)
    return WidePlan(tuple(blocks), tuple(kappas), tuple(ps), j0, alpha, beta)


def plan_wide(system):
    """Block plan for a widely-spaced system.

    Raises
    ------
    RegimeError
        For closely-spaced systems.
    """
    if system.spacing is not Spacing.WIDELY:
        raise RegimeError("the system is closely-spaced; no fast blocks exist")
    return _make_plan(system)


def guaranteed_order(regime, m, alpha, beta, p=None):
    """Guaranteed rate multiplier and initial-condition power of ``D_m``.

    Returns ``(E, X)`` such that ``||phi_t - D_m(t)|| <= k e^{E mu_1 t} |x0|^X``.
    ``p`` is ``p_ell`` for the widely-spaced regimes.
    """
    E = alpha + (m - 1) * beta
    if regime is Regime.CLOSELY:
        return E, E
    if p is None:
        raise ValueError("the widely-spaced orders need p")
    return E, max(0, m + 1 - p) * beta + 1


def _component(field, j, D):
    return substitute_into_poly(field.components[j], list(D))


def _cancel_nondecaying(diff, j, scale, what):
    """Remove round-off residues at rates that would make a tail integral diverge."""
    lam = diff.basis.unit(j)
    atol = CANCEL_RTOL * max(scale, 1e-300)

    def bad(rate):
        return rate == lam or rate.value >= lam.value

    worst = 0.0
    for (coeffs, _), c in diff.items():
        if bad(diff.basis.rate(coeffs)):
            worst = max(worst, c.max_abs_coeff())
    if worst > atol:
        raise ConsistencyError(
            f"{what}: non-decaying terms did not cancel (residue {worst:.3g}, "
            f"scale {scale:.3g})")
    return diff.filter(lambda rate, k, c: not bad(rate))


@dataclass(frozen=True)
class IterateSet:
    """Iterates ``D_1 .. D_{m_max}`` in eigen-coordinates.

    Attributes
    ----------
    iterates : tuple
        ``iterates[m - 1][j]`` is component ``j`` of ``D_m``.
    orders : tuple of (E, X)
        Guaranteed rate multiplier and initial-condition power per ``m``.
    raw_base : dict
        Untruncated ``D_{p_j}`` components of the fast blocks.
    """

    system: object
    regime: Regime
    plan: WidePlan
    iterates: tuple
    orders: tuple
    truncated: bool
    raw_base: dict

    @property
    def m_max(self):
        return len(self.iterates)

    def D(self, m):
        if not 1 <= m <= self.m_max:
            raise IndexError(f"iterate {m} not computed (have 1..{self.m_max})")
        return self.iterates[m - 1]

    def evaluate(self, m, t, params):
        """``D_m(t, params)`` in eigen-coordinates, shape ``(n,) + shape(t)``."""
        return np.array([c(t, params) for c in self.D(m)])

    def evaluate_original(self, m, t, params):
        """Associated iterate ``P D_m(t, params)`` in the original coordinates."""
        u = self.evaluate(m, t, params)
        P = self.system.spectrum.P
        return np.tensordot(P, u, axes=1)

    def residual(self, m):
        """Symbolic defect ``D_m' - Lambda D_m - r(D_m)`` per component."""
        D = self.D(m)
        lams = self.system.spectrum.eigenvalues
        field = self.system.diagonalized_field
        out = []
        for j, c in enumerate(D):
            out.append(c.derivative() - c.scale(lams[j]) - _component(field, j, D))
        return tuple(out)

    def format(self, m, names=None):
        n = self.system.n
        names = names or [f"y0{i + 1}" for i in range(n)]
        return "\n".join(f"u{j + 1}(t) ~ {c.format(names)}"
                         for j, c in enumerate(self.D(m)))

    def to_json(self):
        return {
            "regime": self.regime.value,
            "p": list(self.plan.ps),
            "orders": [list(o) for o in self.orders],
            "iterates": [[c.to_json() for c in D] for D in self.iterates],
        }


def _build(system, plan, m_max, truncate):
    field = system.diagonalized_field
    basis = system.spectrum.basis
    mu1 = system.spectrum.mu1
    n = system.n
    alpha, beta = plan.alpha, plan.beta
    regime = regime_of(system)
    pcomp = [plan.p_of_component(j) for j in range(n)]
    lin = [ExpSeries.exponential(basis, n, j, ParamPoly.var(n, j)) for j in range(n)]
    zero = ExpSeries.zero(basis, n)
    iterates, orders, raw_base = [], [], {}
    p_ell = plan.p if plan.is_wide() else None
    for m in range(1, m_max + 1):
        E, X = guaranteed_order(regime, m, alpha, beta, p_ell)
        if m == 1:
            D = [lin[j] if pcomp[j] <= 1 else zero for j in range(n)]
        else:
            prev = iterates[-1]
            low = field.truncated(E)
            D = []
            for j in range(n):
                pj = pcomp[j]
                if pj <= 1:
                    D.append(lin[j] - tail_conv(j, _component(low, j, prev)))
                elif m < pj:
                    D.append(forward_conv(j, _component(field, j, prev)))
                elif m == pj:
                    raw = lin[j] + forward_conv(j, _component(field, j, prev))
                    raw_base[j] = raw
                    D.append(raw)
                else:
                    before = iterates[pj - 2]
                    a = _component(low, j, prev)
                    b = _component(low, j, before)
                    diff = _cancel_nondecaying(
                        a - b, j, max(a.max_abs_coeff(), b.max_abs_coeff()),
                        f"D_{m} component {j + 1}")
                    D.append(raw_base[j] - tail_conv(j, diff))
        if truncate:
            D = [c.truncate(E * mu1, strict=True,
                            keep_degree_below=X if X > 1 else None) for c in D]
        iterates.append(tuple(D))
        orders.append((E, X))
    return IterateSet(system, regime, plan, tuple(iterates), tuple(orders),
                      truncate, raw_base)


def iterate_closely(system, m_max=DEFAULT_M_MAX, truncate=True):
    """Iterates for a closely-spaced system.

    Parameters
    ----------
    system : SinkSystem
    m_max : int
    truncate : bool
        Drop terms beyond the guaranteed order.  Untruncated iterates are
        useful to compare against hand-written expansions.
    """
    if system.spacing is not Spacing.CLOSELY:
        raise RegimeError("iterate_closely needs a closely-spaced system")
    return _build(system, _make_plan(system), m_max, truncate)


def iterate_widely_2d(system, m_max=DEFAULT_M_MAX, truncate=True):
    """Iterates for a widely-spaced planar system."""
    if system.n != 2:
        raise RegimeError("iterate_widely_2d needs a planar system")
    return _build(system, plan_wide(system), m_max, truncate)


def iterate_nd(system, plan=None, m_max=DEFAULT_M_MAX, truncate=True):
    """Iterates for a widely-spaced system of any dimension."""
    plan = plan or plan_wide(system)
    return _build(system, plan, m_max, truncate)


def iterate(system, m_max=DEFAULT_M_MAX, truncate=True):
    """Iterates in whichever regime the system belongs to."""
    return _build(system, _make_plan(system), m_max, truncate)


# ---------------------------------------------------------------------------
# near-identity maps


@dataclass(frozen=True)
class PsiApprox:
    """Polynomial approximations ``psi_1 .. psi_{m_max}`` in eigen-coordinates.

    ``approximations[m - 1][j]`` is a polynomial in ``u0`` whose error against
    the exact map is of total degree at least ``alpha + (m - 1) * beta``.
    """

    system: object
    regime: Regime
    approximations: tuple
    iterset: IterateSet

    @property
    def m_max(self):
        return len(self.approximations)

    def psi(self, m):
        return self.approximations[m - 1]

    def __call__(self, u0, m=None):
        m = m or self.m_max
        return np.array([p(u0) for p in self.psi(m)])

    def evaluate_original(self, x0, m=None):
        """``psi`` applied to an initial condition in original coordinates.

        The result is in eigen-coordinates, ready to be used as iterate
        parameters.
        """
        return self(self.system.spectrum.Pinv @ np.asarray(x0, dtype=float), m)

    def format(self, m=None, names=None):
        n = self.system.n
        names = names or [f"u0{i + 1}" for i in range(n)]
        return "\n".join(f"psi{j + 1} = {p.format(names)}"
                         for j, p in enumerate(self.psi(m or self.m_max)))

    def to_json(self):
        return {"regime": self.regime.value,
                "psi": [[p.to_json() for p in approx] for approx in self.approximations]}


def _psi(system, plan, m_max, iterset=None):
    n = system.n
    alpha, beta = plan.alpha, plan.beta
    p_ell = plan.p if plan.is_wide() else 1
    need = m_max + p_ell - 2
    if iterset is None or iterset.m_max < need:
        iterset = _build(system, plan, max(need, 1), True)
    field = system.diagonalized_field
    pcomp = [plan.p_of_component(j) for j in range(n)]
    ident = tuple(ParamPoly.var(n, j) for j in range(n))
    approx = [ident]
    for m in range(2, m_max + 1):
        Pm = alpha + (m - 1) * beta
        low = field.truncated(Pm)
        Dk = iterset.D(m + p_ell - 2)
        prev = approx[-1]
        comps = []
        for j in range(n):
            integrand = _component(low, j, Dk)
            if pcomp[j] > 1:
                other = _component(low, j, iterset.D(pcomp[j] - 1))
                integrand = _cancel_nondecaying(
                    integrand - other, j,
                    max(integrand.max_abs_coeff(), other.max_abs_coeff()),
                    f"psi_{m} component {j + 1}")
            value = tail_conv(j, integrand).at_zero()
            comps.append((ident[j] + value.compose(list(prev))).truncate_degree(Pm))
        approx.append(tuple(comps))
    return PsiApprox(system, regime_of(system), tuple(approx), iterset)


def psi_closely(system, m_max=DEFAULT_M_MAX, iterset=None):
    """Near-identity map for a closely-spaced system.

    ``psi_{m+1}(x0) = x0 + int_0^inf e^{-s Lambda} r(D_m(s, psi_m(x0))) ds``.
    """
    if system.spacing is not Spacing.CLOSELY:
        raise RegimeError("psi_closely needs a closely-spaced system")
    return _psi(system, _make_plan(system), m_max, iterset)


def psi_nd(system, plan=None, m_max=DEFAULT_M_MAX, iterset=None):
    """Near-identity map for a widely-spaced system (any dimension).

    Fast components integrate the difference against ``D_{p_j - 1}``, whose
    non-decaying terms must cancel exactly before the tail integral is taken.
    """
    plan = plan or plan_wide(system)
    return _psi(system, plan, m_max, iterset)


def psi(system, m_max=DEFAULT_M_MAX, iterset=None):
    """Near-identity map in whichever regime the system belongs to."""
    return _psi(system, _make_plan(system), m_max, iterset)

