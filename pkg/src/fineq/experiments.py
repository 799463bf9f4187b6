"""k-sweeps for each asymptotic estimate, log-log rate fits and verdicts.

Every experiment produces one or more RateReport objects.  A report holds
(k, defect) samples for a single norm, an optional OLS fit of log defect
against log k, and a verdict: "pass", "fail" or "invalid".

Samples at or below the exactness threshold are labelled exact and excluded
from fits.  The threshold is the larger of a fixed floor and a roundoff
budget 64 eps k^2 s, where s bounds the size of the operators involved: a
dense k x k computation whose phases grow like k cannot resolve zero below
that level.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    IntegratorSettings,
    concat_path,
    loop_invariants,
    named_path,
    product_path,
    propagate,
    time_independent_path,
)
from .errors import ConfigError, FineqError, InsufficientDataError
from .flows import pullback
from .linalg import op_norm, projective_distance, schatten_norm, trace
from .parsing import split_args
from .quantization import bracket_defect, gram_matrix, hilbert_dim, quantize, toeplitz
from .sphere import integrate, named_function, poisson_bracket, product

FLOOR = 1e-13
ROUNDOFF_FACTOR = 64.0
INTEGRATOR_SHARE = 0.01
EPS = float(np.finfo(float).eps)


def roundoff_budget(k: int, scale: float = 1.0) -> float:
    return ROUNDOFF_FACTOR * EPS * k * k * scale


@dataclass
class Sample:
    k: int
    defect: float
    integrator_error: float = 0.0
    budget: float = 0.0

    @property
    def exact(self) -> bool:
        return bool(self.defect <= max(FLOOR, self.budget))


@dataclass
class Thresholds:
    slope_max: float | None = None
    slope_min: float | None = None
    r2_min: float | None = None
    abs_max: float | None = None
    abs_min: float | None = None

    @property
    def has_slope(self) -> bool:
        return self.slope_max is not None or self.slope_min is not None


@dataclass
class RateReport:
    name: str
    experiment: str
    samples: list
    p: float = math.inf
    params: dict = field(default_factory=dict)
    thresholds: Thresholds = field(default_factory=Thresholds)
    slope: float | None = None
    intercept: float | None = None
    r_squared: float | None = None
    verdict: str = "pending"
    note: str = ""

    def __post_init__(self):
        self.samples = sorted(self.samples, key=lambda s: s.k)
        ks = [s.k for s in self.samples]
        if len(set(ks)) != len(ks):
            raise ValueError(f"{self.name}: repeated k in samples")

    @property
    def all_exact(self) -> bool:
        return all(s.exact for s in self.samples)

    def evaluate(self) -> "RateReport":
        th = self.thresholds
        reasons = []
        defects = np.array([s.defect for s in self.samples])
        if th.abs_max is not None and np.any(defects > th.abs_max):
            reasons.append(f"max defect {defects.max():.3g} > {th.abs_max:g}")
        if th.abs_min is not None and np.any(defects < th.abs_min):
            reasons.append(f"min defect {defects.min():.3g} < {th.abs_min:g}")
        invalid = None
        if th.has_slope:
            usable = [s for s in self.samples if not s.exact]
            if not usable:
                self.note = "exact"
            else:
                try:
                    self.slope, self.intercept, self.r_squared = fit_rate([(s.k, s.defect) for s in usable])
                except InsufficientDataError as exc:
                    invalid = str(exc)
                else:
                    if len(usable) < len(self.samples):
                        self.note = f"{len(self.samples) - len(usable)} exact sample(s) excluded"
                    if th.slope_max is not None and self.slope > th.slope_max:
                        reasons.append(f"slope {self.slope:.4f} > {th.slope_max:g}")
                    if th.slope_min is not None and self.slope < th.slope_min:
                        reasons.append(f"slope {self.slope:.4f} < {th.slope_min:g}")
                    if th.r2_min is not None and self.r_squared < th.r2_min:
                        reasons.append(f"r2 {self.r_squared:.4f} < {th.r2_min:g}")
                    worst = max(s.integrator_error for s in self.samples)
                    smallest = min(s.defect for s in usable)
                    if worst > INTEGRATOR_SHARE * smallest:
                        invalid = f"integrator error {worst:.3g} exceeds 1% of defect {smallest:.3g}"
        if invalid:
            self.verdict = "invalid"
            self.note = invalid
        elif reasons:
            self.verdict = "fail"
            self.note = "; ".join(reasons)
        else:
            self.verdict = "pass"
        return self


def fit_rate(samples):
    """OLS fit of log(defect) against log(k); returns (slope, intercept, r_squared)."""
    pts = [(k, d) for k, d in samples if d > FLOOR]
    if len(pts) < 3:
        raise InsufficientDataError(f"need at least 3 samples above {FLOOR:g}, got {len(pts)}")
    x = np.log([float(k) for k, _ in pts])
    y = np.log([float(d) for _, d in pts])
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise InsufficientDataError("all samples share one k")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return slope, intercept, r2


# ---------------------------------------------------------------- parameters


class Params:
    """Typed accessors over one experiment's string parameters."""

    def __init__(self, name: str, raw: dict, run_ks):
        self.name = name
        self.raw = dict(raw)
        self.run_ks = tuple(run_ks)
        self.used = set()

    def _get(self, key, default):
        self.used.add(key)
        return self.raw.get(key, default)

    def string(self, key, default: str) -> str:
        return str(self._get(key, default)).strip()

    def number(self, key, default):
        val = self._get(key, default)
        if val is None or isinstance(val, (int, float)):
            return val
        text = str(val).strip().lower()
        if text in ("", "none"):
            return None
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} = {val!r} is not a number") from None

    def integer(self, key, default: int) -> int:
        val = self.number(key, default)
        if val is None or val != int(val):
            raise ConfigError(f"[{self.name}] {key} must be an integer")
        return int(val)

    def items(self, key, default: str) -> list:
        """Items separated by ';' (or top-level ',' when no ';' is present)."""
        text = self.string(key, default)
        if not text:
            return []
        parts = text.split(";") if ";" in text else split_args(text)
        return [p.strip() for p in parts if p.strip()]

    def floats(self, key, default: str) -> list:
        out = []
        for item in self.items(key, default):
            try:
                out.append(float(item))
            except ValueError:
                raise ConfigError(f"[{self.name}] {key}: {item!r} is not a number") from None
        return out

    def tuples(self, key, default: str, size: int) -> list:
        out = []
        for item in self.items(key, default):
            inner = item[1:-1] if item.startswith("(") and item.endswith(")") else item
            parts = [p.strip() for p in split_args(inner)]
            if len(parts) != size:
                raise ConfigError(f"[{self.name}] {key}: {item!r} should have {size} entries")
            out.append(tuple(parts))
        return out

    def ks(self, key="ks", default=None) -> tuple:
        if key not in self.raw and default is None:
            self.used.add(key)
            return self.run_ks
        return parse_ks(self.string(key, default or ""), where=f"[{self.name}] {key}")

    def thresholds(self, prefix="", **defaults) -> Thresholds:
        vals = {}
        for f in ("slope_max", "slope_min", "r2_min", "abs_max", "abs_min"):
            vals[f] = self.number(prefix + f, defaults.get(f))
        return Thresholds(**vals)


def parse_ks(text: str, where: str = "ks") -> tuple:
    """'8, 16, 32' or '2..128' or a mix; result is strictly increasing."""
    out = []
    for part in split_args(text):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                a, b = part.split("..")
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ConfigError(f"{where}: cannot parse {part!r}") from None
    if not out:
        raise ConfigError(f"{where}: empty k list")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError(f"{where}: k values must be strictly increasing")
    if out[0] < 1 or out[-1] > 512:
        raise ConfigError(f"{where}: k must lie in [1, 512]")
    return tuple(out)


def _function(p: Params, name: str):
    try:
        return named_function(name)
    except FineqError as exc:
        raise ConfigError(f"[{p.name}] {exc}") from None


def _path(p: Params, name: str, l_cap: int):
    try:
        return named_path(name, l_cap)
    except FineqError as exc:
        raise ConfigError(f"[{p.name}] {exc}") from None


@dataclass
class SuiteContext:
    l_cap: int = 64
    seed: int = 0
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)


def _label(exp, *parts):
    return f"{exp}[{','.join(str(p) for p in parts)}]"


# ---------------------------------------------------------------- catalog
#
# Each planner validates its parameters and returns a zero-argument callable
# producing the reports, so configuration errors surface before any work.


def plan_dim_check(p: Params, ctx: SuiteContext):
    dim_ks = p.ks("dim_ks", "1..256")
    gram_ks = p.ks()
    gram_tol = p.number("gram_abs_max", 1e-10)

    def run():
        dims = [Sample(k, float(abs(hilbert_dim(k) - k))) for k in dim_ks]
        grams = [Sample(k, op_norm(gram_matrix(k) - np.eye(k))) for k in gram_ks]
        return [
            RateReport("dim_check", "dim_check", dims, thresholds=Thresholds(abs_max=0.0)),
            RateReport(_label("dim_check", "gram"), "dim_check", grams, thresholds=Thresholds(abs_max=gram_tol)),
        ]
    return run


def plan_p1_norm(p: Params, ctx: SuiteContext):
    ks = p.ks()
    names = p.items("functions", "u, x, u2")
    funcs = [(n, _function(p, n)) for n in names]
    schemes = p.items("schemes", "toeplitz, fine")
    th = p.thresholds(slope_max=-0.8)
    spec_tol = p.number("spectrum_abs_max", 1e-10)

    def run():
        reports = []
        for name, f in funcs:
            sup = f.sup_norm()
            for scheme in schemes:
                samples = [Sample(k, abs(sup - op_norm(quantize(k, f, scheme))), budget=roundoff_budget(k, sup))
                           for k in ks]
                reports.append(RateReport(_label("p1_norm", name, scheme), "p1_norm", samples,
                                          params={"f": name, "scheme": scheme, "sup": sup}, thresholds=th))
        u = named_function("u")
        spectrum = [Sample(k, abs(op_norm(toeplitz(k, u)) - (k - 1) / (k + 1))) for k in ks]
        reports.append(RateReport(_label("p1_norm", "u", "toeplitz", "spectrum"), "p1_norm", spectrum,
                                  thresholds=Thresholds(abs_max=spec_tol)))
        return reports
    return run


def plan_p2_bracket(p: Params, ctx: SuiteContext):
    ks = p.ks()
    pairs = [(a, b, _function(p, a), _function(p, b)) for a, b in p.tuples("pairs", "(u2, xy); (u2, x)", 2)]
    schemes = p.items("schemes", "toeplitz, fine")
    th = {
        "fine": p.thresholds("fine_", slope_max=-2.6, r2_min=0.98),
        "toeplitz": p.thresholds("toeplitz_", slope_min=-2.4, slope_max=-1.6, r2_min=0.98),
    }
    linear = [(a, b, _function(p, a), _function(p, b)) for a, b in p.tuples("exact_pairs", "(x, y)", 2)]
    exact_tol = p.number("exact_abs_max", 1e-10)

    def run():
        reports = []
        for a, b, f, g in pairs:
            br = poisson_bracket(f, g)
            scale = f.sup_bound() * g.sup_bound()
            for scheme in schemes:
                samples = [Sample(k, bracket_defect(k, f, g, fine=(scheme == "fine"), bracket=br),
                                  budget=roundoff_budget(k, scale)) for k in ks]
                reports.append(RateReport(_label("p2_bracket", a, b, scheme), "p2_bracket", samples,
                                          params={"f": a, "g": b, "scheme": scheme}, thresholds=th[scheme]))
        for a, b, f, g in linear:
            br = poisson_bracket(f, g)
            samples = [Sample(k, bracket_defect(k, f, g, fine=True, bracket=br)) for k in ks]
            reports.append(RateReport(_label("p2_bracket", a, b, "fine", "exact"), "p2_bracket", samples,
                                      params={"f": a, "g": b, "scheme": "fine"},
                                      thresholds=Thresholds(abs_max=exact_tol)))
        return reports
    return run


def plan_product_expansion(p: Params, ctx: SuiteContext):
    ks = p.ks()
    pairs = [(a, b, _function(p, a), _function(p, b)) for a, b in p.tuples("pairs", "(u2, xy); (u2, x)", 2)]
    sign = p.number("sign", -1.0)
    if sign not in (1.0, -1.0):
        raise ConfigError("[product_expansion] sign must be +1 or -1")
    th = p.thresholds(slope_max=-1.6)

    def run():
        reports = []
        for a, b, f, g in pairs:
            fg, br = product(f, g), poisson_bracket(f, g)
            samples = []
            for k in ks:
                resid = (quantize(k, f) @ quantize(k, g) - quantize(k, fg)
                         - sign * (1j / (2.0 * k)) * quantize(k, br))
                samples.append(Sample(k, op_norm(resid), budget=roundoff_budget(k, f.sup_bound() * g.sup_bound())))
            reports.append(RateReport(_label("product_expansion", a, b), "product_expansion", samples,
                                      params={"f": a, "g": b, "sign": sign}, thresholds=th))
        return reports
    return run


def plan_trace_check(p: Params, ctx: SuiteContext):
    ks = p.ks()
    names = p.items("functions", "u, x, y, u2, xy, xz, yz, x2y2")
    funcs = [(n, _function(p, n)) for n in names]
    schemes = p.items("schemes", "toeplitz, fine")
    th = p.thresholds(slope_max=0.1)

    def run():
        reports = []
        for name, f in funcs:
            mass = integrate(f)
            for scheme in schemes:
                samples = [Sample(k, abs(trace(quantize(k, f, scheme)) - k * mass / (2.0 * math.pi)),
                                  budget=roundoff_budget(k, f.sup_bound())) for k in ks]
                reports.append(RateReport(_label("trace_check", name, scheme), "trace_check", samples,
                                          params={"f": name, "scheme": scheme}, thresholds=th))
        u = named_function("u")
        zero = [Sample(k, abs(trace(toeplitz(k, u)))) for k in ks]
        reports.append(RateReport(_label("trace_check", "u", "toeplitz", "exact"), "trace_check", zero,
                                  thresholds=Thresholds(abs_max=FLOOR)))
        return reports
    return run


def plan_egorov(p: Params, ctx: SuiteContext):
    ks = p.ks()
    flows = [(n, _path(p, n, ctx.l_cap)) for n in p.items("paths", "axisym(u, pi/4); axisym(u2, pi/8)")]
    for n, path in flows:
        if not path.time_independent or path.flow is None or not path.flow.exact:
            raise ConfigError(f"[egorov] {n!r} needs a time-independent Hamiltonian with an exact flow")
    obs = [(n, _function(p, n)) for n in p.items("observables", "x, xy")]
    th = p.thresholds(slope_max=-1.6)

    def run():
        reports = []
        for pname, path in flows:
            h = path.hamiltonian(0.0)
            for gname, g in obs:
                moved = pullback(g, path.flow, 1.0, l_cap=ctx.l_cap)
                samples = []
                for k in ks:
                    U = propagate(k, path).matrix
                    d = op_norm(quantize(k, moved) - U @ quantize(k, g) @ U.conj().T)
                    samples.append(Sample(k, d, integrator_error=moved.truncation_error,
                                          budget=roundoff_budget(k, g.sup_bound() * (1.0 + h.sup_bound()))))
                reports.append(RateReport(_label("egorov", pname, gname), "egorov", samples,
                                          params={"path": pname, "g": gname, "l_max": moved.l_max,
                                                  "truncation_error": moved.truncation_error},
                                          thresholds=th))
        return reports
    return run


def _norm_rows(exp, label, p_values, th, params, cells):
    """cells: list of (k, difference matrix, integrator error, budget)."""
    reports = []
    for pv in p_values:
        samples = []
        for k, D, ierr, budget in cells:
            # normalised so that every p gives a quantity bounded by the operator norm
            d = schatten_norm(D, pv) / (k ** (1.0 / pv) if math.isfinite(pv) else 1.0)
            samples.append(Sample(k, d, integrator_error=ierr, budget=budget))
        name = _label(exp, *label) if math.isinf(pv) else _label(exp, *label, f"p={pv:g}")
        reports.append(RateReport(name, exp, samples, p=pv, params=params, thresholds=th))
    return reports


def _p_values(p: Params):
    out = p.floats("p_values", "inf, 2, 5")
    if any(v < 1 for v in out):
        raise ConfigError(f"[{p.name}] Schatten exponents must be >= 1")
    return out


def _size(path) -> float:
    return sum(seg.at(seg.start).sup_bound() * (seg.end - seg.start) for seg in path.segments)


def plan_composition_defect(p: Params, ctx: SuiteContext):
    ks = p.ks()
    pairs = []
    for a, b in p.tuples("pairs", "(rot_x(pi/3), rot_u(pi/3)); (axisym(u2, pi/8), rot_x(pi/3))", 2):
        pa, pb = _path(p, a, ctx.l_cap), _path(p, b, ctx.l_cap)
        if pa.flow is None:
            raise ConfigError(f"[composition_defect] {a!r} has no classical flow")
        pairs.append((a, b, pa, pb))
    pv = _p_values(p)
    th = p.thresholds(slope_max=-0.6)

    def run():
        reports = []
        for a, b, pa, pb in pairs:
            prod = product_path(pa, pb, ctx.l_cap)
            scale = 1.0 + _size(pa) + _size(pb)
            cells = []
            for k in ks:
                P = propagate(k, prod, settings=ctx.integrator)
                D = propagate(k, pa).matrix @ propagate(k, pb).matrix - P.matrix
                cells.append((k, D, P.meta["defect_estimate"], roundoff_budget(k, scale)))
            reports += _norm_rows("composition_defect", (a, b), pv, th, {"p": a, "q": b}, cells)
        return reports
    return run


def plan_homotopy_defect(p: Params, ctx: SuiteContext):
    ks = p.ks()
    loop_ks = p.ks("loop_ks", "1..128")
    loop = _path(p, p.string("contractible_loop", "fourpiloop"), ctx.l_cap)
    loop_tol = p.number("loop_abs_max", 1e-8)
    conj = []
    for r, inner in p.tuples("conjugations", "(rot_x(pi/2), rot_u(pi/3)); (axisym(u2, pi/8), rot_x(pi/3))", 2):
        pr, pi_ = _path(p, r, ctx.l_cap), _path(p, inner, ctx.l_cap)
        if pr.flow is None or not pi_.time_independent:
            raise ConfigError(f"[homotopy_defect] conjugation needs a flow for {r!r} and a time-independent {inner!r}")
        conj.append((r, inner, pr, pi_))
    pv = _p_values(p)
    th = p.thresholds(slope_max=-0.6)

    def run():
        reports = []
        samples = [Sample(k, op_norm(propagate(k, loop).matrix - np.eye(k))) for k in loop_ks]
        reports.append(RateReport(_label("homotopy_defect", loop.label), "homotopy_defect", samples,
                                  thresholds=Thresholds(abs_max=loop_tol)))
        for r, inner, pr, pi_ in conj:
            # R phi_t R^{-1} run as one path through R^{-1}, phi, R versus its transported generator
            one = concat_path(concat_path(named_path(f"inv({r})", ctx.l_cap), pi_), pr)
            moved = pullback(pi_.hamiltonian(0.0), pr.flow, 1.0, l_cap=ctx.l_cap)
            other = time_independent_path(moved, f"transported({inner})")
            scale = 1.0 + 2.0 * _size(pr) + _size(pi_)
            cells = []
            for k in ks:
                D = propagate(k, one).matrix - propagate(k, other).matrix
                cells.append((k, D, moved.truncation_error * k, roundoff_budget(k, scale)))
            reports += _norm_rows("homotopy_defect", (r, inner), pv, th, {"R": r, "inner": inner}, cells)
        return reports
    return run


def plan_loop_phase(p: Params, ctx: SuiteContext):
    ks = p.ks("ks", "2..128")
    loops = [(n, _path(p, n, ctx.l_cap)) for n in p.items("loops", "twopiloop, fourpiloop")]
    base = [float(v) for v in p.items("base_point", "0, 0, 1")]
    if len(base) != 3:
        raise ConfigError("[loop_phase] base_point needs three coordinates")
    tol = p.number("abs_max", 1e-8)
    generator = _path(p, p.string("generator", "twopiloop"), ctx.l_cap)

    def run():
        reports = []
        for name, loop in loops:
            samples, scalar = [], []
            for k in ks:
                U = propagate(k, loop).matrix
                inv = loop_invariants(loop, base, k)
                samples.append(Sample(k, op_norm(U - np.exp(1j * inv.predicted_phase) * np.eye(k))))
                if name == "twopiloop":
                    scalar.append(Sample(k, op_norm(U - (-1) ** (k - 1) * np.eye(k))))
            reports.append(RateReport(_label("loop_phase", name), "loop_phase", samples,
                                      params={"base_point": base}, thresholds=Thresholds(abs_max=tol)))
            if scalar:
                reports.append(RateReport(_label("loop_phase", name, "scalar"), "loop_phase", scalar,
                                          thresholds=Thresholds(abs_max=tol)))
        # r_k is a homomorphism on Z/2: the doubled generator gets twice the phase, which is 0
        doubled = concat_path(generator, generator)
        hom = []
        for k in ks:
            r1 = loop_invariants(generator, base, k).predicted_phase
            r2 = loop_invariants(doubled, base, k).predicted_phase
            hom.append(Sample(k, max(abs(np.exp(2j * r1) - np.exp(1j * r2)), abs(np.exp(1j * r2) - 1.0))))
        reports.append(RateReport(_label("loop_phase", "homomorphism"), "loop_phase", hom,
                                  thresholds=Thresholds(abs_max=tol)))
        return reports
    return run


def _separation(kind):
    def plan(p: Params, ctx: SuiteContext):
        ks = p.ks()
        name = p.string("path", "rot_x(pi)")
        path = _path(p, name, ctx.l_cap)
        th = p.thresholds(abs_min=0.5)

        def run():
            samples = []
            for k in ks:
                U = propagate(k, path, settings=ctx.integrator).matrix
                I = np.eye(k)
                d = op_norm(U - I) if kind == "separation" else projective_distance(U, I, math.inf)
                samples.append(Sample(k, d))
            return [RateReport(_label(kind, name), kind, samples, params={"path": name}, thresholds=th)]
        return run
    return plan


def plan_schatten_sandwich(p: Params, ctx: SuiteContext):
    dims = p.ks("dims", "4, 16, 64")
    count = p.integer("count", 1000)
    pv = p.floats("p_values", "1, 2, 5, inf")
    tol = p.number("abs_max", 1e-10)
    seed = p.integer("seed", ctx.seed)

    def run():
        rng = np.random.default_rng(seed)
        samples = []
        for d in dims:
            worst = 0.0
            for _ in range(count):
                G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                A = 0.5 * (G + G.conj().T)
                top = op_norm(A)
                for q in pv:
                    s = schatten_norm(A, q)
                    upper = d ** (1.0 / q) * top if math.isfinite(q) else top
                    worst = max(worst, top - s, s - upper)
            samples.append(Sample(d, max(worst, 0.0)))
        return [RateReport("schatten_sandwich", "schatten_sandwich", samples,
                           params={"count": count, "seed": seed, "p": pv},
                           thresholds=Thresholds(abs_max=tol))]
    return run


CATALOG = {
    "dim_check": plan_dim_check,
    "p1_norm": plan_p1_norm,
    "p2_bracket": plan_p2_bracket,
    "product_expansion": plan_product_expansion,
    "trace_check": plan_trace_check,
    "egorov": plan_egorov,
    "composition_defect": plan_composition_defect,
    "homotopy_defect": plan_homotopy_defect,
    "loop_phase": plan_loop_phase,
    "separation": _separation("separation"),
    "schatten_sandwich": plan_schatten_sandwich,
    "projective_separation": _separation("projective_separation"),
}

EXPERIMENTS = tuple(CATALOG)


def plan_suite(config):
    """Validate every experiment of a RunConfig; returns [(name, runner)]."""
    ctx = SuiteContext(l_cap=config.l_cap, seed=config.seed, integrator=config.integrator)
    plans = []
    for name in config.experiments:
        if name not in CATALOG:
            raise ConfigError(f"unknown experiment {name!r}; known: {', '.join(EXPERIMENTS)}")
        params = Params(name, config.params.get(name, {}), config.ks)
        runner = CATALOG[name](params, ctx)
        extra = set(params.raw) - params.used
        if extra:
            raise ConfigError(f"[{name}] unknown key(s): {', '.join(sorted(extra))}")
        plans.append((name, runner))
    return plans


def thread_count(default: int | None = None) -> int:
    cap = os.environ.get("FINEQ_THREADS")
    n = default or os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"FINEQ_THREADS={cap!r} is not an integer") from None
    return n


def run_suite(config, threads: int | None = None, progress=None) -> list:
    """Run all configured experiments; reports sorted by experiment then name."""
    plans = plan_suite(config)
    n = thread_count(threads)

    def one(item):
        name, runner = item
        reports = [r.evaluate() for r in runner()]
        if progress:
            progress(name, reports)
        return reports

    if n > 1 and len(plans) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            chunks = list(pool.map(one, plans))
    else:
        chunks = [one(item) for item in plans]
    reports = [r for chunk in chunks for r in chunk]
    return sorted(reports, key=lambda r: (r.experiment, r.name))


def suite_passed(reports) -> bool:
    return all(r.verdict == "pass" for r in reports)
