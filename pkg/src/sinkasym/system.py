"""Polynomial systems near a sink: spectrum, spacing and resonances.

A system is ``x' = A x + b(x)`` with ``A`` a real diagonalizable matrix whose
eigenvalues are all negative and ``b`` a polynomial vector field whose
monomials all have total degree at least two.  The eigenvalues are ordered
``mu_n <= ... <= mu_1 < 0``; the spacing ratio ``kappa = mu_n / mu_1`` is
compared against the minimal degree ``alpha`` of ``b`` to decide between the
closely-spaced (``kappa < alpha``) and widely-spaced regimes.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np

from .errors import (DimensionError, InputError, NonDiagonalizableError,
                     NotASinkError, UnsupportedSpectrumError)
from .expalg import TOL_RATE, ParamPoly, RateBasis

NEAR_RESONANCE_RTOL = 1e-6


class Spacing(str, Enum):
    CLOSELY = "closely-spaced"
    WIDELY = "widely-spaced"


@dataclass(frozen=True)
class Resonance:
    """``lambda_j = sum_i m_i lambda_i`` with ``sum m_i >= 2`` (0-based ``j``)."""

    m: tuple
    j: int

    @property
    def order(self):
        return sum(self.m)

    def __str__(self):
        rhs = " + ".join(f"{k}*lambda{i + 1}" if k > 1 else f"lambda{i + 1}"
                         for i, k in enumerate(self.m) if k)
        return f"lambda{self.j + 1} = {rhs}"


@dataclass(frozen=True)
class NearResonance:
    m: tuple
    j: int
    gap: float

    def __str__(self):
        rhs = " + ".join(f"{k}*lambda{i + 1}" if k > 1 else f"lambda{i + 1}"
                         for i, k in enumerate(self.m) if k)
        return f"lambda{self.j + 1} ~ {rhs} (relative gap {self.gap:.3g})"


@dataclass(frozen=True)
class PolyVectorField:
    """Polynomial vector field with every monomial of degree at least two.

    Attributes
    ----------
    components : tuple of ParamPoly
        One polynomial in the ``n`` state variables per component.
    alpha : int
        Minimal total degree.  For the zero field this defaults to 2.
    """

    components: tuple
    alpha: int

    def __post_init__(self):
        n = len(self.components)
        for i, c in enumerate(self.components):
            if c.nvars != n:
                raise DimensionError(
                    f"b[{i}] is a polynomial in {c.nvars} variables, expected {n}")
            for exps in c.terms:
                if sum(exps) < 2:
                    raise InputError(
                        f"b[{i}]: monomial with exponents {list(exps)} has total "
                        "degree below 2")
        low = min((c.min_degree() for c in self.components if c), default=None)
        if low is not None and low != self.alpha:
            raise InputError(f"declared alpha={self.alpha} but minimal degree is {low}")
        if self.alpha < 2:
            raise InputError("alpha must be at least 2")

    @classmethod
    def from_components(cls, components, alpha=None):
        components = tuple(components)
        low = min((c.min_degree() for c in components if c), default=None)
        if low is None:
            low = 2 if alpha is None else alpha
        # a declared alpha is checked against the data in __post_init__
        return cls(components, low if alpha is None else alpha)

    @classmethod
    def from_monomials(cls, rows, n=None):
        """Build from ``rows[i] = [(coeff, exps), ...]``."""
        n = len(rows) if n is None else n
        comps = []
        for row in rows:
            comps.append(ParamPoly(n, {tuple(e): c for c, e in row}))
        return cls.from_components(comps)

    @classmethod
    def zero(cls, n, alpha=2):
        return cls(tuple(ParamPoly.zero(n) for _ in range(n)), alpha)

    @property
    def n(self):
        return len(self.components)

    @property
    def beta(self):
        return self.alpha - 1

    def is_zero(self):
        return not any(self.components)

    def degree(self):
        return max((c.degree() for c in self.components), default=-1)

    def truncated(self, limit):
        """Field restricted to monomials of degree strictly below ``limit``."""
        return PolyVectorField(tuple(c.truncate_degree(limit) for c in self.components),
                               self.alpha)

    @cached_property
    def _compiled(self):
        out = []
        for c in self.components:
            if c:
                exps = np.array([e for e in c.terms], dtype=float)
                coeffs = np.array([c.terms[e] for e in c.terms], dtype=float)
            else:
                exps = np.zeros((0, self.n))
                coeffs = np.zeros(0)
            out.append((exps, coeffs))
        return out

    def __call__(self, x):
        """Evaluate at a state ``x`` of shape ``(n,)`` or ``(n, k)``."""
        x = np.asarray(x, dtype=float)
        pts = x.reshape(self.n, -1)
        out = np.empty_like(pts)
        for i, (exps, coeffs) in enumerate(self._compiled):
            if coeffs.size:
                mono = np.prod(pts[None, :, :] ** exps[:, :, None], axis=1)
                out[i] = coeffs @ mono
            else:
                out[i] = 0.0
        return out.reshape(x.shape)

    def conjugate(self, P, Pinv):
        """Field in the coordinates ``u = Pinv x``: ``r(u) = Pinv b(P u)``."""
        n = self.n
        lin = [ParamPoly(n, {tuple(int(k == j) for k in range(n)): P[i, j]
                             for j in range(n) if P[i, j] != 0.0})
               for i in range(n)]
        pulled = [c.compose(lin) for c in self.components]
        comps = []
        for i in range(n):
            acc = ParamPoly.zero(n)
            for k in range(n):
                if Pinv[i, k] != 0.0:
                    acc = acc + pulled[k].scale(Pinv[i, k])
            comps.append(acc)
        return PolyVectorField(tuple(comps), self.alpha)

    def to_json(self):
        return [[{"coeff": c, "exps": list(e)} for e, c in comp.items()]
                for comp in self.components]

    def format(self, names=None):
        names = names or [f"x{i + 1}" for i in range(self.n)]
        return "(" + ", ".join(c.format(names) for c in self.components) + ")"


def _freeze(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ordered eigen-data of the linear part.

    Attributes
    ----------
    eigenvalues : tuple of float
        ``lambda_1 >= ... >= lambda_n`` (all negative; ``lambda_1 = mu_1``).
    P, Pinv : ndarray
        Eigenvector matrix and its inverse, ``A = P diag(lambda) Pinv``.
    kappa : float
        ``lambda_n / lambda_1``, exact when the two are commensurate.
    kappa_exact : Fraction or None
    basis : RateBasis
    resonances, near_resonances : tuple
    """

    eigenvalues: tuple
    P: np.ndarray
    Pinv: np.ndarray
    kappa: float
    kappa_exact: Fraction | None
    basis: RateBasis
    resonances: tuple = ()
    near_resonances: tuple = ()

    @property
    def n(self):
        return len(self.eigenvalues)

    @property
    def mu1(self):
        return self.eigenvalues[0]

    def kappa_of(self, j):
        """Exact-when-possible ratio ``lambda_j / lambda_1``."""
        frac = self.basis.exact_ratio(j, 0)
        return (float(frac), frac) if frac is not None else (
            self.eigenvalues[j] / self.eigenvalues[0], None)

    def is_identity_basis(self):
        return np.array_equal(self.P, np.eye(self.n))


def _eig_2x2(A):
    a, b, c, d = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    tr, det = a + d, a * d - b * c
    disc = (a - d) ** 2 + 4 * b * c
    if disc < 0:
        raise UnsupportedSpectrumError("complex eigenvalues are not supported")
    root = math.sqrt(disc)
    # the larger-magnitude root first, the other from the product to avoid cancellation
    big = (tr - root) / 2 if tr < 0 else (tr + root) / 2
    small = det / big if big != 0 else (tr + root) / 2
    lams = sorted([big, small], reverse=True)
    if disc == 0 or abs(lams[0] - lams[1]) <= 1e-14 * max(abs(lams[0]), 1.0):
        if b == 0 and c == 0:
            return np.array([a, d]), np.eye(2)
        raise NonDiagonalizableError("repeated eigenvalue with a Jordan block")
    vecs = []
    for lam in lams:
        # (A - lam I) v = 0 using the better-conditioned row
        r1 = np.array([a - lam, b])
        r2 = np.array([c, d - lam])
        row = r1 if np.abs(r1).sum() >= np.abs(r2).sum() else r2
        v = np.array([-row[1], row[0]])
        if v[0] != 0:
            v = v / v[0]
        else:
            v = v / np.linalg.norm(v) * np.sign(v[1])
        vecs.append(v)
    return np.array(lams), np.column_stack(vecs)


def analyze(A, rtol=TOL_RATE):
    """Eigen-decomposition, spacing ratio and resonances of ``A``.

    Diagonal matrices of any size are accepted; their eigenvalues are sorted
    and ``P`` becomes the matching permutation.  Non-diagonal matrices are
    supported for ``n = 2``, with eigenvectors scaled to first component 1.

    Raises
    ------
    NotASinkError, UnsupportedSpectrumError, NonDiagonalizableError, InputError
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InputError(f"A must be a nonempty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("A contains non-finite entries")
    n = A.shape[0]
    if np.count_nonzero(A - np.diag(np.diag(A))) == 0:
        d = np.diag(A)
        order = np.argsort(-d, kind="stable")
        lams = d[order]
        P = np.eye(n)[:, order]
    elif n == 2:
        lams, P = _eig_2x2(A)
    else:
        raise UnsupportedSpectrumError(
            "non-diagonal linear parts are supported only in dimension 2")
    if np.any(lams >= 0):
        raise NotASinkError(f"eigenvalues {lams.tolist()} are not all negative")
    Pinv = np.linalg.inv(P)
    basis = RateBasis.from_eigenvalues(lams, rtol=rtol)
    frac = basis.exact_ratio(n - 1, 0)
    kappa = float(frac) if frac is not None else lams[-1] / lams[0]
    spec = Spectrum(tuple(float(v) for v in lams), _freeze(P), _freeze(Pinv),
                    kappa, frac, basis)
    res, near = detect_resonance(spec, max_order=max(2, math.ceil(kappa) + 1))
    return Spectrum(spec.eigenvalues, spec.P, spec.Pinv, kappa, frac, basis,
                    res, near)


def detect_resonance(spectrum, max_order):
    """All resonances ``lambda_j = sum m_i lambda_i`` with ``2 <= |m| <= max_order``.

    Exact resonances are decided on the integer rate representation.  Integer
    combinations that miss an eigenvalue by a relative gap below ``1e-6`` are
    returned separately as near-resonances.
    """
    basis = spectrum.basis
    n = spectrum.n
    lams = spectrum.eigenvalues
    exact, near = [], []
    for order in range(2, max_order + 1):
        for combo in combinations_with_replacement(range(n), order):
            m = [0] * n
            for i in combo:
                m[i] += 1
            rate = basis.combo(m)
            for j in range(n):
                if rate == basis.unit(j):
                    exact.append(Resonance(tuple(m), j))
                else:
                    gap = abs(rate.value - lams[j]) / abs(lams[j])
                    if gap < NEAR_RESONANCE_RTOL:
                        near.append(NearResonance(tuple(m), j, gap))
    return tuple(exact), tuple(near)


def classify(spectrum, field):
    """Closely-spaced when ``kappa < alpha``, widely-spaced otherwise."""
    if spectrum.kappa_exact is not None:
        return Spacing.CLOSELY if spectrum.kappa_exact < field.alpha else Spacing.WIDELY
    return Spacing.CLOSELY if spectrum.kappa < field.alpha else Spacing.WIDELY


@dataclass(frozen=True, eq=False)
class SinkSystem:
    """A polynomial system ``x' = A x + b(x)`` together with its analysis."""

    A: np.ndarray
    field: PolyVectorField
    spectrum: Spectrum
    spacing: Spacing
    diagonalized_field: PolyVectorField

    @property
    def n(self):
        return self.field.n

    @property
    def alpha(self):
        return self.field.alpha

    @property
    def beta(self):
        return self.field.beta

    @property
    def kappa(self):
        return self.spectrum.kappa

    @property
    def eigenvalues(self):
        return np.array(self.spectrum.eigenvalues)

    def rhs(self, x):
        x = np.asarray(x, dtype=float)
        return self.A @ x + self.field(x)

    def diagonal_rhs(self, u):
        u = np.asarray(u, dtype=float)
        lam = self.eigenvalues.reshape((-1,) + (1,) * (u.ndim - 1))
        return lam * u + self.diagonalized_field(u)

    def to_diagonal(self, x):
        return self.spectrum.Pinv @ np.asarray(x, dtype=float)

    def from_diagonal(self, u):
        return self.spectrum.P @ np.asarray(u, dtype=float)

    def node_type(self):
        lams = self.spectrum.eigenvalues
        if all(v == lams[0] for v in lams):
            return "star node"
        return "stable node"

    def describe(self):
        s = self.spectrum
        lines = [
            f"dimension: {self.n}",
            f"eigenvalues: {', '.join(f'{v:.12g}' for v in s.eigenvalues)}",
            f"node type: {self.node_type()}",
            f"kappa: {s.kappa:.12g}" + (f" (exact {s.kappa_exact})"
                                        if s.kappa_exact is not None else ""),
            f"alpha: {self.alpha}  beta: {self.beta}",
            f"regime: {self.spacing.value}",
        ]
        if s.resonances:
            lines.append("resonances: " + "; ".join(str(r) for r in s.resonances))
        else:
            lines.append("resonances: none")
        for r in s.near_resonances:
            lines.append(f"warning: near-resonance {r}")
        return "\n".join(lines)

    def to_json(self):
        s = self.spectrum
        return {
            "A": self.A.tolist(),
            "b": self.field.to_json(),
            "eigenvalues": list(s.eigenvalues),
            "P": s.P.tolist(),
            "kappa": s.kappa,
            "kappa_exact": None if s.kappa_exact is None else str(s.kappa_exact),
            "alpha": self.alpha,
            "regime": self.spacing.value,
            "node_type": self.node_type(),
            "resonances": [{"m": list(r.m), "j": r.j} for r in s.resonances],
            "near_resonances": [{"m": list(r.m), "j": r.j, "gap": r.gap}
                                for r in s.near_resonances],
        }


def build_system(A, b=None, rtol=TOL_RATE, alpha=None):
    """Analyze ``x' = A x + b(x)``.

    Parameters
    ----------
    A : array_like, shape (n, n)
    b : PolyVectorField or sequence of monomial lists, optional
        Monomial lists have the form ``[[(coeff, exps), ...], ...]``.
        ``None`` means the zero field.
    alpha : int, optional
        Minimal degree to assume when ``b`` is zero.  Without it a zero
        field gets ``alpha = floor(kappa) + 1``, which makes every spectrum
        closely spaced and every iterate the linear flow.
    """
    A = np.array(A, dtype=float)
    spectrum = analyze(A, rtol=rtol)
    n = spectrum.n
    if b is None:
        fld = PolyVectorField.zero(n, alpha or 2)
    elif isinstance(b, PolyVectorField):
        fld = b
    else:
        fld = PolyVectorField.from_monomials(b, n)
    if fld.n != n:
        raise DimensionError(f"field has {fld.n} components but A is {n}x{n}")
    if fld.is_zero() and alpha is None:
        # the zero field vanishes to every order; any alpha above kappa is valid
        fld = PolyVectorField.zero(n, max(2, math.floor(spectrum.kappa) + 1))
    spacing = classify(spectrum, fld)
    if spectrum.is_identity_basis():
        diag = fld
    else:
        diag = fld.conjugate(spectrum.P, spectrum.Pinv)
    for r in spectrum.near_resonances:
        warnings.warn(f"near-resonance {r}", RuntimeWarning, stacklevel=2)
    A.setflags(write=False)
    return SinkSystem(A, fld, spectrum, spacing, diag)


_SYSTEM_KEYS = {"A", "b", "alpha"}
_MONOMIAL_KEYS = {"coeff", "exps"}


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise InputError(f"{where}: non-finite value")
    return float(value)


def parse_system(data):
    """Validate a decoded system document and build the system."""
    if not isinstance(data, dict):
        raise InputError("system document must be a JSON object")
    unknown = set(data) - _SYSTEM_KEYS
    if unknown:
        raise InputError(f"unknown keys: {sorted(unknown)}")
    if "A" not in data:
        raise InputError("missing key 'A'")
    A = data["A"]
    if not isinstance(A, list) or not A or not all(isinstance(r, list) for r in A):
        raise InputError("A: expected a nonempty list of rows")
    n = len(A)
    rows = []
    for i, row in enumerate(A):
        if len(row) != n:
            raise InputError(f"A[{i}]: expected {n} entries, got {len(row)}")
        rows.append([_number(v, f"A[{i}][{k}]") for k, v in enumerate(row)])
    b = data.get("b", [[] for _ in range(n)])
    if not isinstance(b, list) or len(b) != n:
        raise InputError(f"b: expected a list of {n} components")
    comps = []
    for i, comp in enumerate(b):
        if not isinstance(comp, list):
            raise InputError(f"b[{i}]: expected a list of monomials")
        terms = {}
        for k, mono in enumerate(comp):
            where = f"b[{i}][{k}]"
            if not isinstance(mono, dict):
                raise InputError(f"{where}: expected an object with coeff and exps")
            extra = set(mono) - _MONOMIAL_KEYS
            if extra:
                raise InputError(f"{where}: unknown keys {sorted(extra)}")
            if set(mono) != _MONOMIAL_KEYS:
                raise InputError(f"{where}: needs both 'coeff' and 'exps'")
            c = _number(mono["coeff"], f"{where}.coeff")
            exps = mono["exps"]
            if (not isinstance(exps, list) or len(exps) != n
                    or not all(isinstance(e, int) and not isinstance(e, bool) and e >= 0
                               for e in exps)):
                raise InputError(
                    f"{where}.exps: expected {n} nonnegative integers, got {exps!r}")
            if sum(exps) < 2:
                raise InputError(
                    f"{where}.exps: total degree {sum(exps)} is below 2")
            if tuple(exps) in terms:
                raise InputError(f"{where}.exps: duplicate monomial {exps}")
            terms[tuple(exps)] = c
        comps.append(ParamPoly(n, terms))
    alpha = data.get("alpha")
    if alpha is not None and (not isinstance(alpha, int) or alpha < 2):
        raise InputError("alpha: expected an integer >= 2")
    fld = PolyVectorField.from_components(comps, alpha=alpha)
    return build_system(rows, fld, alpha=alpha)


def load_system(path):
    """Read a system from a JSON file; errors name the offending field or line."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return parse_system(data)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc
