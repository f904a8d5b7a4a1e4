"""Exponential-polynomial algebra with polynomial parameter coefficients.

An :class:`ExpSeries` is a finite sum of terms ``c(y) * t**k * exp(r * t)``
where ``c`` is a multivariate polynomial in the parameters ``y`` (the initial
data of an iterate), ``k`` is a nonnegative integer and ``r`` is an integer
combination of rate generators.  Rates are stored structurally, so deciding
whether two exponentials coincide is an integer comparison rather than a
floating point one.  This matters because a convolution whose integrand rate
equals the kernel rate produces a polynomial-in-``t`` factor instead of a new
exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType

import numpy as np

from .errors import DimensionError, DivergentIntegralError, TermOverflowError

TOL_RATE = 1e-9
MAX_DENOMINATOR = 64
MAX_TERMS = 10_000


def _add_into(acc, exps, c):
    v = acc.get(exps, 0.0) + c
    if v == 0.0:
        acc.pop(exps, None)
    else:
        acc[exps] = v


class ParamPoly:
    """Sparse multivariate polynomial with float coefficients.

    Parameters
    ----------
    nvars : int
        Number of variables.
    terms : dict, optional
        Mapping from exponent tuples to coefficients.  Zero coefficients are
        dropped.
    """

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars, terms=None):
        self.nvars = int(nvars)
        clean = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars:
                raise DimensionError(
                    f"exponent tuple {exps} does not have {self.nvars} entries")
            if min(exps, default=0) < 0:
                raise DimensionError(f"negative exponent in {exps}")
            _add_into(clean, exps, float(c))
        self._terms = clean

    @classmethod
    def _wrap(cls, nvars, terms):
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj._terms = terms
        return obj

    @classmethod
    def zero(cls, nvars):
        return cls._wrap(nvars, {})

    @classmethod
    def const(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars, i, c=1.0):
        exps = [0] * nvars
        exps[i] = 1
        return cls(nvars, {tuple(exps): c})

    @classmethod
    def monomial(cls, exps, c=1.0):
        return cls(len(exps), {tuple(exps): c})

    @property
    def terms(self):
        return MappingProxyType(self._terms)

    def items(self):
        """Terms in canonical order: by degree, then exponents descending."""
        return sorted(self._terms.items(),
                      key=lambda kv: (sum(kv[0]), tuple(-e for e in kv[0])))

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self):
        return not self._terms

    def degree(self):
        """Largest total degree, or -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def min_degree(self):
        """Smallest total degree, or -1 for the zero polynomial."""
        return min((sum(e) for e in self._terms), default=-1)

    def max_abs_coeff(self):
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def _coerce(self, other):
        if isinstance(other, ParamPoly):
            if other.nvars != self.nvars:
                raise DimensionError(
                    f"polynomials in {self.nvars} and {other.nvars} variables")
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return ParamPoly.const(self.nvars, float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = dict(self._terms)
        for e, c in other._terms.items():
            _add_into(acc, e, c)
        return ParamPoly._wrap(self.nvars, acc)

    __radd__ = __add__

    def __neg__(self):
        return ParamPoly._wrap(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s):
        s = float(s)
        if s == 0.0:
            return ParamPoly.zero(self.nvars)
        return ParamPoly._wrap(self.nvars,
                               {e: c * s for e, c in self._terms.items()
                                if c * s != 0.0})

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                _add_into(acc, tuple(a + b for a, b in zip(e1, e2)), c1 * c2)
        return ParamPoly._wrap(self.nvars, acc)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self.scale(1.0 / float(s))

    def __pow__(self, k):
        k = int(k)
        if k < 0:
            raise ValueError("negative power of a polynomial")
        result = ParamPoly.const(self.nvars, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if not isinstance(other, ParamPoly):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    __hash__ = None

    def approx_equal(self, other, rtol=1e-12, atol=0.0):
        """Coefficientwise comparison ``|a - b| <= atol + rtol * max|a|, |b|``."""
        keys = set(self._terms) | set(other._terms)
        for k in keys:
            a = self._terms.get(k, 0.0)
            b = other._terms.get(k, 0.0)
            if abs(a - b) > atol + rtol * max(abs(a), abs(b)):
                return False
        return True

    def coeff(self, exps):
        return self._terms.get(tuple(exps), 0.0)

    def __call__(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.nvars:
            raise DimensionError(
                f"expected {self.nvars} parameter values, got {values.shape[0]}")
        total = 0.0
        for e, c in self._terms.items():
            term = c
            for v, k in zip(values, e):
                if k:
                    term = term * v**k
            total = total + term
        return total

    evaluate = __call__

    def compose(self, polys):
        """Substitute variable ``i`` by ``polys[i]``."""
        if len(polys) != self.nvars:
            raise DimensionError(
                f"need {self.nvars} substitutions, got {len(polys)}")
        out_vars = polys[0].nvars if polys else 0
        cache = [{0: ParamPoly.const(out_vars, 1.0), 1: p} for p in polys]

        def power(i, k):
            if k not in cache[i]:
                cache[i][k] = power(i, k - 1) * polys[i]
            return cache[i][k]

        result = ParamPoly.zero(out_vars)
        for e, c in self._terms.items():
            term = ParamPoly.const(out_vars, c)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            result = result + term
        return result

    def truncate_degree(self, limit):
        """Keep only monomials of total degree strictly below ``limit``."""
        return ParamPoly._wrap(self.nvars, {e: c for e, c in self._terms.items()
                                            if sum(e) < limit})

    def homogeneous_part(self, d):
        return ParamPoly._wrap(self.nvars, {e: c for e, c in self._terms.items()
                                            if sum(e) == d})

    def drop_small(self, atol):
        return ParamPoly._wrap(self.nvars, {e: c for e, c in self._terms.items()
                                            if abs(c) > atol})

    def to_sympy(self, symbols):
        import sympy

        out = sympy.Integer(0)
        for e, c in self.items():
            mono = sympy.Integer(1)
            for s, k in zip(symbols, e):
                mono = mono * s**k
            out += sympy.nsimplify(c, rational=False) * mono
        return out

    def to_json(self):
        return [[list(e), c] for e, c in self.items()]

    @classmethod
    def from_json(cls, nvars, data):
        return cls(nvars, {tuple(e): c for e, c in data})

    def format(self, names=None):
        names = names or [f"y{i + 1}" for i in range(self.nvars)]
        if not self._terms:
            return "0"
        parts = []
        for e, c in self.items():
            mono = "*".join(n if k == 1 else f"{n}^{k}"
                            for n, k in zip(names, e) if k)
            if not mono:
                parts.append(f"{c!r}")
            elif c == 1.0:
                parts.append(mono)
            elif c == -1.0:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{c!r}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"ParamPoly({self.format()})"


# ---------------------------------------------------------------------------
# rates


@dataclass(frozen=True, eq=False)
class RateCombo:
    """An integer combination of rate generators and its numerical value.

    Equality and hashing use the integer coefficients only.
    """

    coeffs: tuple
    value: float

    def __eq__(self, other):
        return isinstance(other, RateCombo) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def is_zero(self):
        return not any(self.coeffs)


@dataclass(frozen=True)
class RateBasis:
    """Rationally independent generators spanning a set of eigenvalues.

    Eigenvalues whose ratios reconstruct as fractions with small denominators
    share a generator, so that for instance ``-2 = 2 * (-1)`` holds exactly in
    integer arithmetic.

    Attributes
    ----------
    eigenvalues : tuple of float
    generators : tuple of float
    embedding : tuple of tuple of int
        ``embedding[j]`` are the generator coefficients of eigenvalue ``j``.
    """

    eigenvalues: tuple
    generators: tuple
    embedding: tuple

    @classmethod
    def from_eigenvalues(cls, eigenvalues, rtol=TOL_RATE,
                         max_denominator=MAX_DENOMINATOR):
        eigenvalues = tuple(float(v) for v in eigenvalues)
        classes = []  # list of (representative, [(index, Fraction)])
        for j, lam in enumerate(eigenvalues):
            if lam == 0.0:
                raise ValueError("zero eigenvalue cannot define a rate")
            for rep, members in classes:
                ratio = lam / rep
                if ratio <= 0:
                    continue
                frac = Fraction(ratio).limit_denominator(max_denominator)
                if abs(ratio - float(frac)) <= rtol * max(1.0, abs(ratio)):
                    members.append((j, frac))
                    break
            else:
                classes.append((lam, [(j, Fraction(1))]))
        generators = []
        embedding = [None] * len(eigenvalues)
        for g, (rep, members) in enumerate(classes):
            lcm = 1
            for _, frac in members:
                lcm = lcm * frac.denominator // math.gcd(lcm, frac.denominator)
            generators.append(rep / lcm)
            for j, frac in members:
                row = [0] * len(classes)
                row[g] = int(frac * lcm)
                embedding[j] = tuple(row)
        return cls(eigenvalues, tuple(generators), tuple(embedding))

    @property
    def dim(self):
        return len(self.generators)

    def rate(self, coeffs):
        coeffs = tuple(int(c) for c in coeffs)
        if len(coeffs) != self.dim:
            raise DimensionError(
                f"rate has {len(coeffs)} coefficients, basis has {self.dim}")
        return RateCombo(coeffs, math.fsum(c * g for c, g in
                                           zip(coeffs, self.generators)))

    def unit(self, j):
        """Rate of eigenvalue ``j``."""
        return self.rate(self.embedding[j])

    def combo(self, multiplicities):
        """Rate of ``sum_i m_i * lambda_i``."""
        coeffs = [0] * self.dim
        for m, row in zip(multiplicities, self.embedding):
            for g, c in enumerate(row):
                coeffs[g] += m * c
        return self.rate(coeffs)

    def zero_rate(self):
        return self.rate((0,) * self.dim)

    def add(self, r1, r2):
        return self.rate(tuple(a + b for a, b in zip(r1.coeffs, r2.coeffs)))

    def exact_ratio(self, i, j):
        """``lambda_i / lambda_j`` as a Fraction when commensurate, else None."""
        a, b = self.embedding[i], self.embedding[j]
        gi = [g for g, c in enumerate(a) if c]
        gj = [g for g, c in enumerate(b) if c]
        if gi != gj:
            return None
        return Fraction(a[gi[0]], b[gj[0]])


@dataclass(frozen=True)
class ExpTerm:
    """One term ``coeff(y) * t**tpow * exp(rate * t)``."""

    rate: RateCombo
    tpow: int
    coeff: ParamPoly


class ExpSeries:
    """Finite sum of exponential-polynomial terms over a fixed rate basis.

    Parameters
    ----------
    basis : RateBasis
    nparams : int
        Number of polynomial parameters in the coefficients.
    terms : dict, optional
        Mapping ``(rate_coeffs, tpow) -> ParamPoly``.
    """

    __slots__ = ("basis", "nparams", "_terms")

    def __init__(self, basis, nparams, terms=None):
        self.basis = basis
        self.nparams = int(nparams)
        clean = {}
        for (coeffs, k), c in (terms or {}).items():
            if c.nvars != self.nparams:
                raise DimensionError("coefficient has wrong number of parameters")
            if len(coeffs) != basis.dim or k < 0:
                raise DimensionError(f"bad term key {(coeffs, k)}")
            if c:
                key = (tuple(int(x) for x in coeffs), int(k))
                clean[key] = clean[key] + c if key in clean else c
        self._terms = {k: v for k, v in clean.items() if v}

    @classmethod
    def _wrap(cls, basis, nparams, terms):
        obj = cls.__new__(cls)
        obj.basis = basis
        obj.nparams = nparams
        obj._terms = terms
        return obj

    @classmethod
    def zero(cls, basis, nparams):
        return cls._wrap(basis, nparams, {})

    @classmethod
    def constant(cls, basis, nparams, c=1.0):
        if not isinstance(c, ParamPoly):
            c = ParamPoly.const(nparams, c)
        return cls(basis, nparams, {((0,) * basis.dim, 0): c})

    @classmethod
    def exponential(cls, basis, nparams, j, coeff, tpow=0):
        """``coeff * t**tpow * exp(lambda_j t)``."""
        return cls(basis, nparams, {(basis.embedding[j], tpow): coeff})

    @classmethod
    def term(cls, basis, nparams, rate_coeffs, coeff, tpow=0):
        return cls(basis, nparams, {(tuple(rate_coeffs), tpow): coeff})

    # -- inspection -----------------------------------------------------

    def rate_of(self, key):
        return self.basis.rate(key[0])

    @property
    def terms(self):
        """Terms ordered by decreasing rate value, then increasing t-power."""
        out = [ExpTerm(self.basis.rate(c), k, p) for (c, k), p in self._terms.items()]
        out.sort(key=lambda tm: (-tm.rate.value, tm.tpow, tm.rate.coeffs))
        return out

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self):
        return not self._terms

    def max_rate(self):
        """Largest rate value present, or ``-inf`` for the zero series."""
        return max((self.basis.rate(c).value for c, _ in self._terms), default=-math.inf)

    def max_tpow(self):
        return max((k for _, k in self._terms), default=0)

    def coefficient(self, rate_coeffs, tpow=0):
        return self._terms.get((tuple(rate_coeffs), tpow),
                               ParamPoly.zero(self.nparams))

    def max_abs_coeff(self):
        return max((p.max_abs_coeff() for p in self._terms.values()), default=0.0)

    # -- arithmetic ------------------------------------------------------

    def _check(self, other):
        if not isinstance(other, ExpSeries):
            raise TypeError(f"cannot combine ExpSeries with {type(other).__name__}")
        if other.basis != self.basis:
            raise DimensionError("series use different rate bases")
        if other.nparams != self.nparams:
            raise DimensionError("series have different parameter counts")

    def __add__(self, other):
        self._check(other)
        acc = dict(self._terms)
        for k, c in other._terms.items():
            if k in acc:
                s = acc[k] + c
                if s:
                    acc[k] = s
                else:
                    del acc[k]
            else:
                acc[k] = c
        return ExpSeries._wrap(self.basis, self.nparams, acc)

    def __neg__(self):
        return ExpSeries._wrap(self.basis, self.nparams,
                               {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        if isinstance(s, ParamPoly):
            out = {k: c * s for k, c in self._terms.items()}
        else:
            out = {k: c.scale(s) for k, c in self._terms.items()}
        return ExpSeries._wrap(self.basis, self.nparams, {k: c for k, c in out.items() if c})

    def __mul__(self, other):
        if isinstance(other, ExpSeries):
            return mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def __pow__(self, k):
        k = int(k)
        result = ExpSeries.constant(self.basis, self.nparams, 1.0)
        base = self
        while k:
            if k & 1:
                result = mul(result, base)
            k >>= 1
            if k:
                base = mul(base, base)
        return result

    def approx_equal(self, other, rtol=1e-12, atol=0.0):
        self._check(other)
        keys = set(self._terms) | set(other._terms)
        zero = ParamPoly.zero(self.nparams)
        return all(self._terms.get(k, zero).approx_equal(other._terms.get(k, zero),
                                                         rtol, atol) for k in keys)

    def __eq__(self, other):
        if not isinstance(other, ExpSeries):
            return NotImplemented
        return (self.basis == other.basis and self.nparams == other.nparams
                and self._terms == other._terms)

    __hash__ = None

    # -- calculus and evaluation ----------------------------------------

    def derivative(self):
        acc = {}
        for (coeffs, k), c in self._terms.items():
            r = self.basis.rate(coeffs).value
            if r != 0.0:
                key = (coeffs, k)
                acc[key] = acc[key] + c.scale(r) if key in acc else c.scale(r)
            if k:
                key = (coeffs, k - 1)
                acc[key] = acc[key] + c.scale(k) if key in acc else c.scale(k)
        return ExpSeries._wrap(self.basis, self.nparams,
                               {k: v for k, v in acc.items() if v})

    def __call__(self, t, params):
        return evaluate(self, t, params)

    def at_zero(self):
        """Value at ``t = 0`` as a polynomial in the parameters."""
        out = ParamPoly.zero(self.nparams)
        for (_, k), c in self._terms.items():
            if k == 0:
                out = out + c
        return out

    def subs_params(self, polys):
        """Replace the parameters by polynomials in new parameters."""
        nparams = polys[0].nvars
        acc = {}
        for key, c in self._terms.items():
            acc[key] = c.compose(polys)
        return ExpSeries(self.basis, nparams, acc)

    def map_coeffs(self, fn):
        out = {k: fn(c) for k, c in self._terms.items()}
        return ExpSeries._wrap(self.basis, self.nparams, {k: c for k, c in out.items() if c})

    def filter(self, keep):
        """Keep terms for which ``keep(rate, tpow, coeff)`` is true."""
        return ExpSeries._wrap(
            self.basis, self.nparams,
            {(c, k): p for (c, k), p in self._terms.items()
             if keep(self.basis.rate(c), k, p)})

    def truncate(self, order, strict=True, keep_degree_below=None, tol=TOL_RATE):
        """Drop terms at rates at or below ``order``.

        Parameters
        ----------
        order : float
            Rate threshold (a negative number).
        strict : bool
            With ``strict`` a term at rate exactly ``order`` is dropped as well.
        keep_degree_below : int, optional
            Monomials of total parameter degree below this value survive even
            at dropped rates.
        """
        slack = tol * max(1.0, abs(order))
        acc = {}
        for (coeffs, k), c in self._terms.items():
            r = self.basis.rate(coeffs).value
            if r > order + slack or (not strict and r >= order - slack):
                acc[(coeffs, k)] = c
            elif keep_degree_below is not None:
                low = c.truncate_degree(keep_degree_below)
                if low:
                    acc[(coeffs, k)] = low
        return ExpSeries._wrap(self.basis, self.nparams, acc)

    # -- serialization ---------------------------------------------------

    def to_json(self):
        return {
            "generators": list(self.basis.generators),
            "nparams": self.nparams,
            "terms": [
                {"rate_coeffs": list(tm.rate.coeffs), "rate_value": tm.rate.value,
                 "tpow": tm.tpow, "coeff_poly": tm.coeff.to_json()}
                for tm in self.terms
            ],
        }

    @classmethod
    def from_json(cls, basis, data):
        if list(data.get("generators", basis.generators)) != list(basis.generators):
            raise DimensionError("serialized series uses a different rate basis")
        n = int(data["nparams"])
        terms = {}
        for tm in data["terms"]:
            key = (tuple(tm["rate_coeffs"]), int(tm["tpow"]))
            terms[key] = ParamPoly.from_json(n, tm["coeff_poly"])
        return cls(basis, n, terms)

    def format(self, names=None, tname="t"):
        if not self._terms:
            return "0"
        parts = []
        for tm in self.terms:
            coeff = tm.coeff.format(names)
            if len(tm.coeff) > 1:
                coeff = f"({coeff})"
            factors = [coeff]
            if tm.tpow == 1:
                factors.append(tname)
            elif tm.tpow > 1:
                factors.append(f"{tname}^{tm.tpow}")
            if not tm.rate.is_zero():
                factors.append(f"e^{{{tm.rate.value:.12g}{tname}}}")
            parts.append("*".join(factors))
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"ExpSeries({self.format()})"


# ---------------------------------------------------------------------------
# free functions


def _check_size(terms):
    if len(terms) > MAX_TERMS:
        raise TermOverflowError(
            f"series grew to {len(terms)} terms (cap {MAX_TERMS}); "
            "lower the iteration depth")


def mul(f, g):
    """Product of two series."""
    f._check(g)
    acc = {}
    for (c1, k1), p1 in f._terms.items():
        for (c2, k2), p2 in g._terms.items():
            key = (tuple(a + b for a, b in zip(c1, c2)), k1 + k2)
            prod = p1 * p2
            if key in acc:
                s = acc[key] + prod
                if s:
                    acc[key] = s
                else:
                    del acc[key]
            elif prod:
                acc[key] = prod
    _check_size(acc)
    return ExpSeries._wrap(f.basis, f.nparams, acc)


def substitute_into_poly(poly, args):
    """Evaluate the polynomial ``poly`` at the series ``args``.

    Parameters
    ----------
    poly : ParamPoly
        Polynomial in ``len(args)`` variables (the state components).
    args : sequence of ExpSeries
    """
    if poly.nvars != len(args):
        raise DimensionError(
            f"polynomial in {poly.nvars} variables applied to {len(args)} series")
    if not args:
        raise DimensionError("no series to substitute")
    basis, nparams = args[0].basis, args[0].nparams
    one = ExpSeries.constant(basis, nparams, 1.0)
    cache = [{0: one, 1: a} for a in args]

    def power(i, k):
        if k not in cache[i]:
            cache[i][k] = mul(power(i, k - 1), args[i])
        return cache[i][k]

    result = ExpSeries.zero(basis, nparams)
    for e, c in poly.items():
        term = None
        for i, k in enumerate(e):
            if k:
                term = power(i, k) if term is None else mul(term, power(i, k))
        term = one if term is None else term
        result = result + term.scale(c)
    _check_size(result._terms)
    return result


def _kernel_rate(f, j):
    return f.basis.unit(j)


def tail_conv(j, f):
    """``int_t^inf exp(lambda_j (t - s)) f(s) ds`` in closed form.

    Every term of ``f`` must decay strictly faster than ``exp(lambda_j s)``.

    Raises
    ------
    DivergentIntegralError
        If some term of ``f`` has a rate equal to or above ``lambda_j``.
    """
    lam = _kernel_rate(f, j)
    acc = {}
    for (coeffs, k), c in f._terms.items():
        rate = f.basis.rate(coeffs)
        mu = rate.value - lam.value
        if rate == lam or mu >= 0.0:
            raise DivergentIntegralError(
                f"term at rate {rate.value:.12g} does not decay faster than "
                f"the kernel rate {lam.value:.12g}")
        nu = -mu
        # int_t^inf s^k e^{mu s} ds = e^{mu t} sum_i k!/i! t^i / nu^(k-i+1)
        for i in range(k + 1):
            a = math.factorial(k) / math.factorial(i) / nu ** (k - i + 1)
            key = (coeffs, i)
            v = c.scale(a)
            acc[key] = acc[key] + v if key in acc else v
    return ExpSeries._wrap(f.basis, f.nparams, {k: v for k, v in acc.items() if v})


def forward_conv(j, f):
    """``int_0^t exp(lambda_j (t - s)) f(s) ds`` in closed form.

    A term whose rate is structurally equal to ``lambda_j`` raises its power of
    ``t`` by one; every other term keeps its rate and contributes a boundary
    term at rate ``lambda_j``.
    """
    lam = _kernel_rate(f, j)
    acc = {}

    def add(key, v):
        if key in acc:
            s = acc[key] + v
            if s:
                acc[key] = s
            else:
                del acc[key]
        elif v:
            acc[key] = v

    lam_key = lam.coeffs
    for (coeffs, k), c in f._terms.items():
        rate = f.basis.rate(coeffs)
        if rate == lam:
            add((coeffs, k + 1), c.scale(1.0 / (k + 1)))
            continue
        mu = rate.value - lam.value
        # antiderivative of s^k e^{mu s}: e^{mu s} sum_i k!/i! (-1)^(k-i) s^i / mu^(k-i+1)
        for i in range(k + 1):
            a = (math.factorial(k) / math.factorial(i) * (-1) ** (k - i)
                 / mu ** (k - i + 1))
            add((coeffs, i), c.scale(a))
        a0 = math.factorial(k) * (-1) ** k / mu ** (k + 1)
        add((lam_key, 0), c.scale(-a0))
    return ExpSeries._wrap(f.basis, f.nparams, acc)


def truncate(f, order, strict=True, keep_degree_below=None):
    """Functional form of :meth:`ExpSeries.truncate`."""
    return f.truncate(order, strict=strict, keep_degree_below=keep_degree_below)


def evaluate(f, t, params):
    """Evaluate ``f`` at time(s) ``t`` and parameter vector ``params``."""
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    for (coeffs, k), c in f._terms.items():
        r = f.basis.rate(coeffs).value
        amp = c(params)
        if k:
            total = total + amp * t**k * np.exp(r * t)
        else:
            total = total + amp * np.exp(r * t)
    return total if total.ndim else float(total)
