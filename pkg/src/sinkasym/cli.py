"""Command-line front end.

Each subcommand reads a system (or Michaelis-Menten parameters), runs one
analysis and writes ``report.txt`` plus JSON, CSV and optional SVG files to
the output directory.  Exit codes: 0 success, 1 input error, 2 unsupported
system or failed computation, 3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import InputError, SinkError
from .iterates import Regime, iterate, psi
from .mm import (MMParams, log_coefficient, mm_expansion_templates, mm_spectrum,
                 mm_system, nondimensionalize, rate_law_errors, rate_laws,
                 sigma_recursion)
from .numeric import flow, psi_numeric
from .relate import (concavity_sign, relate_resonant, relate_star, relate_via_basis,
                     star_xi)
from .svg import Figure
from .system import load_system
from .validation import run_all

EXIT_OK, EXIT_INPUT, EXIT_UNSUPPORTED, EXIT_VALIDATION = 0, 1, 2, 3
COMMANDS = ("classify", "iterates", "psi", "relate", "mm", "validate")


@dataclass
class RunConfig:
    """Everything one invocation needs.

    Defaults: ``m_max`` 4 (8 for ``mm``, where it is the length of the
    coefficient table), ``rtol`` 1e-12, ``atol`` 1e-16, output directory
    ``.``, no plots, seed 0.
    """

    command: str
    input: str | None = None
    m_max: int | None = None
    rtol: float = 1e-12
    atol: float = 1e-16
    out: str = "."
    svg: bool = False
    seed: int = 0
    x0: list | None = None
    eps: float | None = None
    eta: float | None = None
    k1: float | None = None
    km1: float | None = None
    k2: float | None = None
    e0: float | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.m_max is None:
            self.m_max = 8 if self.command == "mm" else 4
        if not isinstance(self.m_max, int) or isinstance(self.m_max, bool) \
                or not 1 <= self.m_max <= 12:
            raise InputError("m_max must be an integer in 1..12")
        for name in ("rtol", "atol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0 < v < 1):
                raise InputError(f"{name} must lie in (0, 1)")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise InputError("seed must be an integer")
        if self.x0 is not None:
            if not isinstance(self.x0, list) or not all(
                    isinstance(v, (int, float)) and math.isfinite(v) for v in self.x0):
                raise InputError("x0 must be a list of numbers")
            self.x0 = [float(v) for v in self.x0]

    @classmethod
    def from_mapping(cls, data):
        """Strict construction: unknown keys are rejected."""
        if not isinstance(data, dict):
            raise InputError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown configuration keys: {sorted(unknown)}")
        if "command" not in data:
            raise InputError("configuration needs a command")
        return cls(**data)


# ---------------------------------------------------------------------------
# output helpers


class Output:
    """Collects artifacts and writes them once the command has finished."""

    def __init__(self, root):
        self.root = Path(root)
        self.files = {}
        self.lines = []

    def say(self, *lines):
        self.lines.extend(lines)

    def add(self, name, text):
        self.files[name] = text

    def json(self, name, obj):
        self.files[name] = json.dumps(obj, indent=2, sort_keys=True) + "\n"

    def write(self):
        self.root.mkdir(parents=True, exist_ok=True)
        self.files["report.txt"] = "\n".join(self.lines) + "\n"
        for name in sorted(self.files):
            (self.root / name).write_text(self.files[name], encoding="utf-8")


def _g(v):
    return f"{v:.12g}"


def _load(cfg):
    if cfg.input is None:
        raise InputError(f"{cfg.command} needs --input")
    return load_system(cfg.input)


def _default_x0(system, seed):
    rng = np.random.default_rng(seed)
    v = rng.uniform(-1.0, 1.0, size=system.n)
    return 0.05 * v / np.linalg.norm(v)


def _x0(cfg, system):
    if cfg.x0 is None:
        return _default_x0(system, cfg.seed)
    if len(cfg.x0) != system.n:
        raise InputError(f"x0 must have {system.n} components")
    return np.array(cfg.x0)


# ---------------------------------------------------------------------------
# commands


def _summary(system):
    return (f"{system.node_type()}, kappa={_g(system.kappa)}, "
            f"{system.spacing.value} (alpha={system.alpha})")


def cmd_classify(cfg, out):
    system = _load(cfg)
    out.say(_summary(system), "", system.describe())
    out.json("classify.json", system.to_json())


def cmd_iterates(cfg, out):
    system = _load(cfg)
    its = iterate(system, m_max=cfg.m_max)
    out.say(_summary(system), f"regime: {its.regime.value}", "")
    if its.regime is not Regime.CLOSELY:
        out.say(f"p per component: {list(its.plan.ps)}", "")
    for m in range(1, its.m_max + 1):
        E, X = its.orders[m - 1]
        out.say(f"D_{m}  (error O(exp({_g(E)} mu1 t) |x0|^{_g(X)}))",
                its.format(m), "")
    out.json("iterates.json", its.to_json())


def cmd_psi(cfg, out):
    system = _load(cfg)
    ps = psi(system, m_max=cfg.m_max)
    x0 = _x0(cfg, system)
    out.say(_summary(system), "")
    for m in range(1, ps.m_max + 1):
        out.say(f"psi_{m}", ps.format(m), "")
    ref = psi_numeric(system, x0, tol=1e-12, rtol=cfg.rtol)
    rows = ["m," + ",".join(f"v{j + 1}" for j in range(system.n)) + ",max_abs_error"]
    out.say(f"spot check at x0 = [{', '.join(_g(v) for v in x0)}]",
            f"numeric psi (eigen-coordinates): [{', '.join(_g(v) for v in ref)}]")
    errs = []
    for m in range(1, ps.m_max + 1):
        v = ps.evaluate_original(x0, m)
        err = float(np.max(np.abs(v - ref)))
        errs.append(err)
        out.say(f"  m={m}: max error {err:.3e}")
        rows.append(f"{m}," + ",".join(repr(float(a)) for a in v) + f",{err!r}")
    rows.append("numeric," + ",".join(repr(float(a)) for a in ref) + ",0.0")
    out.add("psi_check.csv", "\n".join(rows) + "\n")
    data = ps.to_json()
    data["spot_check"] = {"x0": [float(v) for v in x0],
                          "numeric": [float(v) for v in ref], "errors": errs}
    out.json("psi.json", data)


def _sign_map_svg(rel_sym, symbols):
    """Concavity sign of the quadratic coefficient over the ``y0`` plane."""
    import sympy

    c2 = rel_sym.coefficient(2)
    f = sympy.lambdify(symbols, c2, "math")
    fig = Figure("sign of the x1^2 coefficient", "y01", "y02", 520, 520)
    grid = np.linspace(-1.0, 1.0, 41)
    pos, neg = [], []
    for a in grid:
        for b in grid:
            if a == 0:
                continue
            (pos if f(a, b) > 0 else neg).append((a, b))
    pos, neg = np.array(pos), np.array(neg)
    fig.points(pos[:, 0], pos[:, 1], color="#b22222", label="convex (+)", r=2.5)
    fig.points(neg[:, 0], neg[:, 1], color="#1f4e79", label="concave (-)", r=2.5)
    return fig.render()


def _phase_svg(system, x0, rel, y_ic, cfg):
    fig = Figure("phase portrait", "x1", "x2", 560, 560)
    r = float(np.linalg.norm(x0))
    for k in range(12):
        th = 2 * math.pi * (k + 0.5) / 12
        start = r * np.array([math.cos(th), math.sin(th)])
        tr = flow(system, start, 12.0, rtol=1e-9, atol=1e-14)
        fig.line(tr.y[:, 0], tr.y[:, 1], color="#9e9e9e", width=1.0)
    tr = flow(system, x0, 12.0, rtol=cfg.rtol, atol=cfg.atol)
    fig.line(tr.y[:, 0], tr.y[:, 1], color="#1f4e79", label="trajectory", width=2.0)
    if rel is not None:
        lo = float(np.min(np.abs(tr.y[:, rel.independent])))
        hi = 0.5 * abs(x0[rel.independent])
        s = np.sign(y_ic[rel.independent]) or 1.0
        xs = s * np.geomspace(max(lo, 1e-6), max(hi, 2e-6), 200)
        ys = rel.evaluate(xs)
        pts = (xs, ys) if rel.independent == 0 else (ys, xs)
        fig.line(pts[0], pts[1], color="#b22222", label="relation", dash="6,3")
    return fig.render(), tr


def cmd_relate(cfg, out):
    import sympy

    system = _load(cfg)
    if system.n != 2:
        from .errors import UnsupportedError

        raise UnsupportedError("relations are implemented for planar systems")
    x0 = _x0(cfg, system)
    out.say(_summary(system), "")
    data = {}
    y0 = psi_numeric(system, x0, tol=1e-12, rtol=cfg.rtol)
    out.say(f"x0 = [{', '.join(_g(v) for v in x0)}]",
            f"y0 = psi(x0) = [{', '.join(_g(v) for v in y0)}]", "")
    if system.node_type() == "star node":
        symbols = sympy.symbols("y01 y02", real=True)
        xi = star_xi(system)
        rel_sym = relate_star(xi, symbols)
        rel = relate_star(xi, tuple(float(v) for v in y0))
        out.say("relation for general y0:", rel_sym.format(), "",
                "relation along this trajectory:", rel.format())
        c2 = rel.coefficient(2) if rel.terms else 0.0
        sign = concavity_sign(c2)
        out.say(f"concavity sign: {sign:+d}")
        data["symbolic"] = rel_sym.to_json()
        if cfg.svg:
            out.add("sign_map.svg", _sign_map_svg(rel_sym, symbols))
        data["concavity_sign"] = sign
    else:
        kf, kx = system.spectrum.kappa_of(1)
        y_sym = sympy.symbols("y01 y02", positive=True)
        if kx is not None and kx.denominator == 1 and kx >= 2:
            sym_eig = relate_resonant(system, y_sym)
            out.say("eigen-coordinate relation u2(u1):",
                    sym_eig.format({0: "u1", 1: "u2"}), "")
            data["eigen"] = sym_eig.to_json()
        v = tuple(float(a) for a in y0)
        if v[0] < 0:
            out.say("note: y01 < 0; the relation is reported for the mirrored "
                    "trajectory (u1 -> -u1)")
        try:
            rel = relate_via_basis(system, (abs(v[0]), v[1]) if v[0] else v)
        except SinkError as exc:
            out.say(f"original-coordinate relation unavailable: {exc}")
            rel = None
        else:
            out.say("relation in original coordinates:", rel.format())
    if rel is not None:
        data["relation"] = rel.to_json()
    data["x0"] = [float(v) for v in x0]
    data["y0"] = [float(v) for v in y0]
    if rel is not None and system.node_type() == "star node" and rel.terms:
        svg, tr = _phase_svg(system, x0, rel, y0, cfg)
    else:
        svg, tr = _phase_svg(system, x0, None, y0, cfg)
    out.add("trajectory.csv", tr.to_csv())
    if cfg.svg:
        out.add("phase.svg", svg)
    out.json("relate.json", data)


def _mm_params(cfg):
    data = {}
    if cfg.input is not None:
        try:
            data = json.loads(Path(cfg.input).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{cfg.input}: line {exc.lineno} column {exc.colno}: "
                             f"{exc.msg}") from exc
        if not isinstance(data, dict):
            raise InputError("mm input must be a JSON object")
        allowed = {"eps", "eta", "k1", "km1", "k2", "e0"}
        bad = set(data) - allowed
        if bad:
            raise InputError(f"unknown keys: {sorted(bad)}")
    for name in ("eps", "eta", "k1", "km1", "k2", "e0"):
        if getattr(cfg, name) is not None:
            data[name] = getattr(cfg, name)
    dims = {"k1", "km1", "k2", "e0"}
    if set(data) >= dims:
        if "eps" in data or "eta" in data:
            raise InputError("give either eps/eta or the rate constants, not both")
        return nondimensionalize(data["k1"], data["km1"], data["k2"], data["e0"])
    if set(data) & dims:
        raise InputError(f"rate constants incomplete: need {sorted(dims)}")
    if "eps" not in data or "eta" not in data:
        raise InputError("mm needs eps and eta (or k1, km1, k2, e0)")
    for k in ("eps", "eta"):
        if isinstance(data[k], bool) or not isinstance(data[k], (int, float)):
            raise InputError(f"{k} must be a number")
    return MMParams(float(data["eps"]), float(data["eta"]))


def cmd_mm(cfg, out):
    import warnings

    p = _mm_params(cfg)
    spec = mm_spectrum(p.eps, p.eta)
    out.say(f"Michaelis-Menten, eps={_g(p.eps)}, eta={_g(p.eta)}")
    if p.k1 is not None:
        out.say(f"K_m = {_g(p.michaelis_constant)}, time scale k1 e0 = {_g(p.time_scale)}")
    out.say(f"lambda_+ = {_g(spec.lam_plus)}", f"lambda_- = {_g(spec.lam_minus)}",
            f"sigma_+ = {_g(spec.sigma_plus)}", f"sigma_- = {_g(spec.sigma_minus)}",
            f"kappa = {_g(spec.kappa)}")
    n = round(spec.kappa)
    if abs(spec.kappa - n) < 1e-6 * max(1.0, spec.kappa):
        cls = f"resonant: kappa = {n}, x^{n} ln x term forced"
    elif abs(spec.kappa - n) < 1e-3:
        cls = f"near-resonant: kappa within 1e-3 of {n}"
    else:
        cls = "non-resonant"
    out.say(f"resonance class: {cls}", "")
    sig = sigma_recursion(p.eps, p.eta, cfg.m_max)
    out.say("slow-manifold coefficients y = sum sigma_n x^n:")
    for k, v in enumerate(sig.sigmas, start=1):
        out.say(f"  sigma_{k} = {_g(v)}")
    log_c = None
    if sig.pole_index is not None:
        log_c = log_coefficient(p.eps, p.eta, sig.pole_index)
        out.say(f"  pole at n = {sig.pole_index}; x^{sig.pole_index} ln x "
                f"coefficient {_g(log_c)}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        templates = mm_expansion_templates(p.eps, p.eta)
    out.say("", "relation templates:")
    for t in templates:
        out.say("  " + t.format({0: "x", 1: "y"}))
    cmp = rate_law_errors(p.eps, p.eta)
    out.say("", "rate-law errors along x0 = (0.2, 0):",
            f"  QSSA  |y - H(x)|:     rate {_g(cmp.qssa_fit.params['rate'])}",
            f"  alpha |y - alpha(x)|: rate {_g(cmp.alpha_fit.params['rate'])}",
            f"  alpha error class: {cmp.selected_class} "
            f"(predicted {cmp.predicted_class})")
    out.add("rate_laws.csv", cmp.to_csv())
    out.json("mm.json", {
        "params": {k: v for k, v in asdict(p).items() if v is not None},
        "spectrum": {"lambda_plus": spec.lam_plus, "lambda_minus": spec.lam_minus,
                     "sigma_plus": spec.sigma_plus, "sigma_minus": spec.sigma_minus,
                     "kappa": spec.kappa},
        "resonance_class": cls,
        "sigmas": list(sig.sigmas),
        "pole_index": sig.pole_index,
        "log_coefficient": log_c,
        "templates": [t.to_json() for t in templates],
        "rate_laws": cmp.to_json(),
    })
    if cfg.svg:
        tr = flow(mm_system(p.eps, p.eta), [0.2, 0.0], 40.0 / abs(spec.lam_plus),
                  rtol=1e-10, atol=1e-14, radius=None)
        xs = np.linspace(0.0, float(tr.y[:, 0].max()), 200)
        H, al = rate_laws(xs, spec.sigma_plus)
        fig = Figure("Michaelis-Menten phase plane", "x (substrate)", "y (complex)")
        fig.line(tr.y[:, 0], tr.y[:, 1], label="trajectory from (0.2, 0)", width=2.0)
        fig.line(xs, H, label="H(x) = x/(1+x)", dash="6,3")
        fig.line(xs, al, label="alpha(x) = x/(1/sigma_+ + x)", dash="2,2")
        out.add("mm_phase.svg", fig.render())


def cmd_validate(cfg, out):
    results = run_all(cfg.seed)
    width = max(len(r.name) for r in results)
    out.say(f"validation suite, seed {cfg.seed}", "")
    for r in results:
        out.say(f"{'PASS' if r.passed else 'FAIL'}  {r.name.ljust(width)}  {r.detail}")
    rows = ["check,passed,detail"]
    rows += [f"{json.dumps(r.name)},{int(r.passed)},{json.dumps(r.detail)}"
             for r in results]
    out.add("validation.csv", "\n".join(rows) + "\n")
    out.json("validation.json", [asdict(r) for r in results])
    failed = [r for r in results if not r.passed]
    if failed:
        out.add("validation_failures.txt",
                "\n".join(r.line() for r in failed) + "\n")
        return EXIT_VALIDATION
    return EXIT_OK


HANDLERS = {"classify": cmd_classify, "iterates": cmd_iterates, "psi": cmd_psi,
            "relate": cmd_relate, "mm": cmd_mm, "validate": cmd_validate}


def run(cfg):
    """Execute one configuration; returns the exit status."""
    out = Output(cfg.out)
    status = HANDLERS[cfg.command](cfg, out) or EXIT_OK
    out.write()
    return status


# ---------------------------------------------------------------------------
# argument parsing


def _x0_arg(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from exc


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sinkasym",
        description="Asymptotic iterates, near-identity maps and trajectory "
                    "relations near a sink.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"classify": "spectrum, spacing ratio and resonances",
             "iterates": "symbolic iterates D_1..D_m with guaranteed orders",
             "psi": "near-identity map approximations and numeric spot checks",
             "relate": "relation between the coordinates along a trajectory",
             "mm": "Michaelis-Menten report",
             "validate": "run the oracle suite"}
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name],
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.add_argument("--config", help="JSON file with RunConfig keys (strict)")
        p.add_argument("--input", help="system JSON file ({A, b, alpha}); for mm "
                                       "{eps, eta} or {k1, km1, k2, e0}")
        p.add_argument("--m-max", type=int, dest="m_max",
                       help="highest iterate order (mm: sigma table length); "
                            "default 4, 8 for mm")
        p.add_argument("--rtol", type=float, help="integrator relative tolerance "
                                                  "(default 1e-12)")
        p.add_argument("--atol", type=float, help="integrator absolute tolerance "
                                                  "(default 1e-16)")
        p.add_argument("--out", help="output directory (default .)")
        p.add_argument("--svg", action="store_true", default=None,
                       help="also write SVG plots")
        p.add_argument("--seed", type=int, help="seed for sampled checks (default 0)")
        p.add_argument("--x0", type=_x0_arg, help="initial condition, e.g. 0.05,0.05")
        if name == "mm":
            for k in ("eps", "eta", "k1", "km1", "k2", "e0"):
                p.add_argument(f"--{k}", type=float)
    return parser


def config_from_args(args):
    data = {}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: line {exc.lineno} column {exc.colno}: "
                             f"{exc.msg}") from exc
        if not isinstance(loaded, dict):
            raise InputError("configuration must be a JSON object")
        if loaded.get("command", args.command) != args.command:
            raise InputError("configuration command differs from the subcommand")
        data.update(loaded)
    data["command"] = args.command
    for k, v in vars(args).items():
        if k in ("command", "config") or v is None:
            continue
        data[k] = v
    return RunConfig.from_mapping(data)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return run(cfg)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SinkError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED


if __name__ == "__main__":
    sys.exit(main())
