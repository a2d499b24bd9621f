"""Catalog of identity checks grouped into named suites.

Every check has a kind.  ``exact`` checks compare two evaluations that agree
in exact arithmetic.  ``quadrature`` checks compare two sides that share one
quadrature grid, or a grid against a closed form.  ``statistical`` checks are
Monte Carlo z-tests.  A check is described by a :class:`CheckDefinition` and only
evaluated when run, so callers can select by suite and by kind.

Deterministic residuals are relative: ``|a - b| / max(1, |a|, |b|)``, and
the maximum is taken over every configuration or probe in the family.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Sequence

import numpy as np

from .configspace import Configuration, PoissonSampler, Window, WeightedConfiguration
from .diffgeo import (
    FunctionOnConfigs,
    VectorField,
    d_minus,
    d_minus_directional,
    d_plus,
    d_plus_directional,
    divergence,
    gradient,
    laplacian,
    linear_function,
    symmetric_divergence_stack,
)
from .factorial import (
    chu_vandermonde_check,
    falling_pair,
    falling_pair_ordered,
    falling_pair_stack,
    falling_pair_weighted,
    generating_function,
    generating_series,
    one_point_reduction_check,
    scalar_backward_check,
    scalar_falling,
    scalar_newton_check,
)
from .fock import (
    FockVector,
    a_minus,
    a_plus,
    ccr_check,
    fock_distance,
    fock_inner,
    i_inverse,
    intertwining_check,
    k_transform,
    product_formula_check,
    star_product,
)
from .generators import (
    HKernel,
    JumpRate,
    PKernel,
    PolynomialRate,
    h0_first_order,
    h1_first_order,
    jump_closed,
    jump_direct,
    l_minus_closed,
    l_minus_direct,
    l_plus_closed,
    l_plus_direct,
    p0_first_order,
    p1_first_order,
    translation_invariant_kernel,
)
from .kernels import (
    Constant,
    MultiBump,
    PartialEval,
    QuadratureGrid,
    ScalarField,
    SumOverVariables,
    SymmetrizedFunction,
    SymTensorProduct,
    TensorPower,
    cosine_bump,
    integrate,
    polynomial_bump,
    probe_tuples,
    triangular_bump,
)
from .newton import NewtonSeries, l1_bound_check, newton_coefficients, nq_norm
from .verify import (
    FLAKY_THRESHOLD,
    Z_THRESHOLD,
    EstimatorReport,
    duality_check,
    laplace_check,
    make_report,
    mecke_check,
    moment_check,
    worker_count,
)

KINDS = ("exact", "quadrature", "statistical")
EXACT_TOL = 1e-9
QUAD_TOL = 1e-6
# birth and jump closed forms integrate a nested grid sum; allowed 10x slack
QUAD_TOL_NESTED = 1e-5


def residual(a: float, b: float) -> float:
    """Relative discrepancy ``|a - b| / max(1, |a|, |b|)``."""
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        return math.inf
    return abs(a - b) / max(1.0, abs(a), abs(b))


def max_residual(pairs: Iterable[tuple[float, float]]) -> float:
    return max((residual(a, b) for a, b in pairs), default=0.0)


# ----------------------------------------------------------------------------
# run context


@dataclass
class Context:
    """Window, intensity, quadrature and sampling parameters shared by all checks."""

    window: Window
    intensity: float | ScalarField = 4.0
    grid: QuadratureGrid | None = None
    seed: int = 0
    samples: int = 100_000
    fields: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.grid is None:
            self.grid = QuadratureGrid(self.window, 64, "gauss")
        if self.grid.window != self.window:
            raise ValueError("quadrature grid and context window differ")
        c = self.window.center
        h = float(np.min(self.window.widths)) / 2.0
        d = self.window.dim
        self.fields = {
            "psi": cosine_bump(c, 0.9 * h, 1.0, d),
            "xi": polynomial_bump(c + 0.1 * h, 0.7 * h, 1.3, d),
            "eta": triangular_bump(c - 0.2 * h, 0.6 * h, 0.8, d),
        }

    @property
    def dim(self) -> int:
        return self.window.dim

    @property
    def psi(self) -> ScalarField:
        return self.fields["psi"]

    @property
    def xi(self) -> ScalarField:
        return self.fields["xi"]

    @property
    def eta(self) -> ScalarField:
        return self.fields["eta"]

    @property
    def is_constant(self) -> bool:
        return not callable(self.intensity)

    @property
    def z(self) -> float:
        """Constant intensity, or the mean intensity of a density field over the window."""
        if self.is_constant:
            return float(self.intensity)
        return integrate(self.intensity, self.grid) / self.window.volume

    def rng(self, tag: str) -> np.random.Generator:
        return np.random.default_rng([self.seed, zlib.crc32(tag.encode())])

    def sampler(self, tag: str, intensity=None) -> PoissonSampler:
        seed = int(np.random.SeedSequence([self.seed, zlib.crc32(tag.encode())]).generate_state(1, np.uint64)[0])
        return PoissonSampler(self.window, self.intensity if intensity is None else intensity, seed)

    def points(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.window.lo_array + self.window.widths * rng.random((n, self.dim))

    def configs(self, tag: str, count: int, max_size: int = 8, min_size: int = 0) -> list[Configuration]:
        rng = self.rng(tag)
        return [Configuration(self.points(rng, int(rng.integers(min_size, max_size + 1))), dim=self.dim) for _ in range(count)]

    # test kernels

    def pair_kernel(self) -> SymmetrizedFunction:
        """A non-product symmetric pair kernel ``psi(x) xi(y) (1 + <x, y>)``, symmetrized."""
        psi, xi = self.psi, self.xi
        fn = lambda X: psi(X[:, 0]) * xi(X[:, 1]) * (1.0 + np.sum(X[:, 0] * X[:, 1], axis=-1))  # noqa: E731
        return SymmetrizedFunction(fn, 2, self.window, "pair")

    def kernel(self, n: int):
        """A symmetric kernel of degree ``n`` that is not a tensor power for ``n >= 2``."""
        fs = [self.psi, self.xi, self.eta]
        if n == 0:
            return Constant(0.7, self.dim)
        if n == 1:
            return TensorPower(self.xi, 1)
        if n == 2:
            return self.pair_kernel()
        return MultiBump([fs[i % 3] for i in range(n)])

    def rate_kernel(self) -> SymmetrizedFunction:
        """Pair kernel ``a(x, y)`` for polynomial rates: ``0.6 exp(-|x - y|)`` cut to the window."""
        return SymmetrizedFunction(lambda X: 0.6 * np.exp(-np.linalg.norm(X[:, 0] - X[:, 1], axis=-1)), 2, self.window, "a")


# ----------------------------------------------------------------------------
# check records


@dataclass(frozen=True)
class CheckResult:
    id: str
    kind: str
    tolerance: float
    passed: bool
    residual: float | None = None
    report: EstimatorReport | None = None

    @property
    def z_score(self) -> float | None:
        return None if self.report is None else self.report.z_score

    @property
    def flaky(self) -> bool:
        """Statistical check outside the flakiness threshold."""
        return self.report is not None and (
            self.report.z_score > FLAKY_THRESHOLD
            if self.report.alternative == "less"
            else abs(self.report.z_score) > FLAKY_THRESHOLD
        )

    def to_dict(self) -> dict:
        d = {"id": self.id, "kind": self.kind, "tolerance": self.tolerance, "pass": self.passed}
        if self.report is None:
            d["residual"] = _finite(self.residual)
        else:
            r = self.report
            d.update(
                z_score=_finite(r.z_score),
                estimate=r.estimate,
                stderr=r.stderr,
                reference=r.reference,
                samples=r.samples,
                seed=r.seed,
                alternative=r.alternative,
                flaky=self.flaky,
            )
        return d


def _finite(v):
    if v is None or math.isfinite(v):
        return v
    return "inf" if v > 0 else "-inf"


@dataclass(frozen=True)
class CheckDefinition:
    id: str
    kind: str
    run: Callable[[Context], float | EstimatorReport]
    tolerance: float | None = None

    def evaluate(self, ctx: Context) -> CheckResult:
        out = self.run(ctx)
        if isinstance(out, EstimatorReport):
            return CheckResult(self.id, self.kind, Z_THRESHOLD, out.passed, report=out)
        tol = EXACT_TOL if self.tolerance is None else self.tolerance
        return CheckResult(self.id, self.kind, tol, bool(out <= tol), residual=float(out))


def ex(id, fn, tol=None) -> CheckDefinition:
    return CheckDefinition(id, "exact", fn, tol)


def qd(id, fn, tol=QUAD_TOL) -> CheckDefinition:
    return CheckDefinition(id, "quadrature", fn, tol)


def st(id, fn) -> CheckDefinition:
    return CheckDefinition(id, "statistical", fn)


# ----------------------------------------------------------------------------
# chu-vandermonde: falling factorials of configurations and weighted measures


def _ordered_vs_subset(n):
    def run(ctx):
        k = ctx.kernel(n)
        return max_residual((falling_pair(g, k), falling_pair_ordered(g, k)) for g in ctx.configs(f"ord{n}", 6, 7))

    return run


def _weighted_scalar(ctx):
    pts = ctx.points(ctx.rng("wsc"), 1)
    pairs = []
    for t in range(6):
        omega = WeightedConfiguration(pts, [float(t)])
        for n in range(6):
            pairs.append((falling_pair_weighted(omega, Constant(1.0, ctx.dim) if n == 0 else TensorPower(_one(ctx), n)), scalar_falling(t, n)))
    return max_residual(pairs)


def _one(ctx) -> ScalarField:
    return ScalarField(lambda X: np.ones(X.shape[:-1]), ctx.window, "1", 1.0)


def _weighted_vs_configuration(ctx):
    # unit charges reproduce the configuration pairing
    pairs = []
    for n in range(1, 5):
        k = ctx.kernel(n)
        for g in ctx.configs(f"wcf{n}", 4, 7):
            pairs.append((falling_pair_weighted(WeightedConfiguration.from_configuration(g), k), falling_pair(g, k)))
    return max_residual(pairs)


def _vandermonde(n):
    def run(ctx):
        rng = ctx.rng(f"cv{n}")
        k = ctx.kernel(n)
        pairs = []
        for _ in range(4):
            P = ctx.points(rng, 6)
            w1 = WeightedConfiguration(P[:3], rng.integers(-2, 4, 3).astype(float))
            w2 = WeightedConfiguration(P[3:], rng.uniform(-1.5, 2.5, 3))
            pairs.append(chu_vandermonde_check(w1, w2, k))
        return max_residual(pairs)

    return run


def _one_point(n):
    def run(ctx):
        k = ctx.kernel(n + 1)
        return max_residual(one_point_reduction_check(g, k) for g in ctx.configs(f"opr{n}", 5, 7))

    return run


def _scalar_differences(ctx):
    rng = ctx.rng("sd")
    pairs = []
    for t in list(range(6)) + list(rng.uniform(-3, 6, 6)):
        for n in range(6):
            pairs += [scalar_newton_check(t, n), scalar_backward_check(t, n)]
    return max_residual(pairs)


def _generating(ctx):
    xi = 0.8 * ctx.xi
    return max_residual((generating_series(g, xi, len(g))[-1], generating_function(g, xi)) for g in ctx.configs("gen", 6, 8))


CHU_VANDERMONDE = (
    [ex(f"ordered-vs-subset/n={n}", _ordered_vs_subset(n)) for n in range(5)]
    + [
        ex("weighted-vs-scalar-falling/t<=5,n<=5", _weighted_scalar),
        ex("weighted-unit-charges", _weighted_vs_configuration),
    ]
    + [ex(f"binomial-identity/n={n}", _vandermonde(n)) for n in range(1, 4)]
    + [ex(f"one-point-reduction/n={n}", _one_point(n)) for n in range(4)]
    + [ex("scalar-forward-backward-differences", _scalar_differences), ex("generating-expansion", _generating)]
)


# ----------------------------------------------------------------------------
# lowering: difference operators on falling-factorial pairings


def _fresh_point(ctx, rng, gamma):
    while True:
        x = ctx.points(rng, 1)[0]
        if x not in gamma:
            return x


def _birth_lowering(n):
    def run(ctx):
        k = ctx.kernel(n)
        F = FunctionOnConfigs(lambda G: falling_pair_stack(G, k), ctx.dim, k.support)
        rng = ctx.rng(f"bl{n}")
        pairs = []
        for g in ctx.configs(f"blc{n}", 5, 6):
            x = _fresh_point(ctx, rng, g)
            pairs.append((d_plus(F, g, x), n * falling_pair(g, PartialEval(k, x))))
        return max_residual(pairs)

    return run


def _death_lowering(n):
    def run(ctx):
        k = ctx.kernel(n)
        F = FunctionOnConfigs(lambda G: falling_pair_stack(G, k), ctx.dim, k.support)
        pairs = []
        for g in ctx.configs(f"dl{n}", 5, 6, 1):
            for x in g:
                pairs.append((d_minus(F, g, x), -n * falling_pair(g.remove(x), PartialEval(k, x))))
        return max_residual(pairs)

    return run


def _directional_lowering(n):
    def run(ctx):
        k = ctx.kernel(n)
        F = FunctionOnConfigs(lambda G: falling_pair_stack(G, k), ctx.dim, k.support)
        psi = ctx.psi
        return max_residual(
            (d_minus_directional(F, g, psi), -falling_pair(g, SumOverVariables(psi, k))) for g in ctx.configs(f"dd{n}", 6, 7)
        )

    return run


def _number_operator(n):
    def run(ctx):
        k = ctx.kernel(n)
        F = FunctionOnConfigs(lambda G: falling_pair_stack(G, k), ctx.dim, k.support)
        return max_residual((sum(d_minus(F, g, x) for x in g), -n * F(g)) for g in ctx.configs(f"no{n}", 6, 7))

    return run


def _test_function(ctx) -> FunctionOnConfigs:
    """A non-polynomial local function: ``exp(-<gamma, xi>) + <(gamma)_2, pair>``."""
    xi, k = ctx.xi, ctx.pair_kernel()
    return FunctionOnConfigs(lambda G: np.exp(-xi(G).sum(axis=1)) + falling_pair_stack(G, k), ctx.dim, ctx.window, "test")


def _gradient_symmetry(ctx):
    F = _test_function(ctx)
    rng = ctx.rng("gs")
    pairs = []
    for g in ctx.configs("gsc", 8, 7):
        x = _fresh_point(ctx, rng, g)
        pairs.append((d_plus(F, g, x), -d_minus(F, g.union(x), x)))
    return max_residual(pairs)


def _directional_pairing(ctx):
    F, psi = _test_function(ctx), ctx.psi
    return max_residual(
        (d_minus_directional(F, g, psi), sum(psi.value(x) * d_minus(F, g, x) for x in g)) for g in ctx.configs("dp", 6, 7)
    )


LOWERING = (
    [ex(f"birth-lowering/n={n}", _birth_lowering(n)) for n in range(1, 5)]
    + [ex(f"death-lowering/n={n}", _death_lowering(n)) for n in range(1, 5)]
    + [ex(f"death-directional/n={n}", _directional_lowering(n)) for n in range(1, 4)]
    + [ex(f"number-operator/n={n}", _number_operator(n)) for n in range(0, 4)]
    + [ex("gradient-symmetry", _gradient_symmetry), ex("directional-pairing", _directional_pairing)]
)


# ----------------------------------------------------------------------------
# star-ktransform


def _fock_vectors(ctx) -> tuple[FockVector, FockVector, FockVector]:
    f = FockVector([0.5, ctx.eta, ctx.pair_kernel()])
    g = FockVector([-1.2, ctx.psi])
    h = FockVector([0.3, ctx.xi, TensorPower(ctx.psi, 2)])
    return f, g, h


def _k_morphism(ctx):
    f, g, h = _fock_vectors(ctx)
    pairs = []
    for a, b in ((f, g), (f, h), (g, h)):
        Ka, Kb, Kab = k_transform(a), k_transform(b), k_transform(star_product(a, b))
        pairs += [(Kab(x), Ka(x) * Kb(x)) for x in ctx.configs(f"km{a.degree}{b.degree}", 50 // 3 + 1, 8)]
    return max_residual(pairs)


def _star_commutative(ctx):
    f, g, h = _fock_vectors(ctx)
    return max(fock_distance(star_product(a, b), star_product(b, a), ctx.window) for a, b in ((f, g), (f, h)))


def _star_associative(ctx):
    f, g, _ = _fock_vectors(ctx)
    g2 = FockVector([0.9, ctx.xi])
    return fock_distance(star_product(star_product(f, g), g2), star_product(f, star_product(g, g2)), ctx.window)


def _star_unit(ctx):
    f, _, _ = _fock_vectors(ctx)
    return fock_distance(star_product(FockVector.vacuum(1.0, ctx.dim), f), f, ctx.window)


STAR_KTRANSFORM = [
    ex("k-transform-multiplicative", _k_morphism),
    ex("star-commutative", _star_commutative),
    ex("star-associative", _star_associative),
    ex("star-unit", _star_unit),
]


# ----------------------------------------------------------------------------
# product-formula


def _product(n, m):
    def run(ctx):
        k = ctx.kernel(n)
        return max_residual(product_formula_check(k, ctx.psi, m, g) for g in ctx.configs(f"pf{n}{m}", 4, 7))

    return run


PRODUCT_FORMULA = [ex(f"product-formula/n={n},m={m}", _product(n, m)) for n in range(1, 4) for m in range(0, 4)]


# ----------------------------------------------------------------------------
# generators-closed


def _rate(ctx, m) -> PolynomialRate:
    return PolynomialRate(m, ctx.rate_kernel())


def _death_closed(m, n):
    def run(ctx):
        rate, k = _rate(ctx, m), ctx.kernel(n)
        F = FunctionOnConfigs(lambda G: falling_pair_stack(G, k), ctx.dim, k.support)
        return max_residual((l_minus_closed(rate, k, g), l_minus_direct(rate, F, g)) for g in ctx.configs(f"lm{m}{n}", 5, 7))

    return run


def _birth_closed(m, n):
    def run(ctx):
        rate, k = _rate(ctx, m), ctx.kernel(n)
        F = FunctionOnConfigs(lambda G: falling_pair_stack(G, k), ctx.dim, k.support)
        return max_residual(
            (l_plus_closed(rate, k, g, ctx.grid), l_plus_direct(rate, F, g, ctx.grid)) for g in ctx.configs(f"lp{m}{n}", 3, 5)
        )

    return run


def _first_order_kernels(ctx):
    a = ctx.rate_kernel()
    rate = PolynomialRate(1, a)
    out = 0.0
    for n in range(1, 4):
        f = ctx.kernel(n)
        for h_gen, k in ((h1_first_order(a, f), 0), (h0_first_order(a, f), 1)):
            if k == 0 and n < 2:
                continue  # the k=0 term is absent for n=1
            P = probe_tuples(ctx.window, h_gen.degree, 16)
            out = max(out, max_residual(zip(h_gen.batch(P), HKernel(rate, f, k).batch(P))))
        for p_gen, k in ((p1_first_order(a, f), 0), (p0_first_order(a, f), 1)):
            if k == 0 and n < 2:
                continue
            pk = PKernel(rate, f, k)
            P = probe_tuples(ctx.window, pk.degree + 1, 16, seed=99)
            x, X = P[:, 0], P[:, 1:]
            out = max(out, max_residual(zip(p_gen.values(x, X), pk.values(x, X))))
    return out


def _constants_annihilated(ctx):
    C = FunctionOnConfigs.constant(2.5, ctx.dim)
    jump = JumpRate(ctx.rate_kernel())
    vals = []
    for g in ctx.configs("ac", 4, 6):
        for m in range(3):
            vals += [l_minus_direct(_rate(ctx, m), C, g), l_plus_direct(_rate(ctx, m), C, g, ctx.grid)]
        vals.append(jump_direct(jump, C, g, ctx.grid))
    return max((abs(v) for v in vals), default=0.0)


GENERATORS_CLOSED = (
    [ex(f"death-closed/m={m},n={n}", _death_closed(m, n)) for m in range(3) for n in range(1, 4)]
    + [qd(f"birth-closed/m={m},n={n}", _birth_closed(m, n), QUAD_TOL_NESTED) for m in range(3) for n in range(1, 4)]
    + [ex("first-order-kernels", _first_order_kernels), ex("constants-annihilated", _constants_annihilated)]
)


# ----------------------------------------------------------------------------
# jump


def _jump(n, translation):
    def run(ctx):
        if translation:
            profile = cosine_bump(np.zeros(ctx.dim), float(np.max(ctx.window.widths)), 0.7, ctx.dim)
            a = translation_invariant_kernel(profile, ctx.window)
        else:
            a = ctx.rate_kernel()
        rate, k = JumpRate(a), ctx.kernel(n)
        F = FunctionOnConfigs(lambda G: falling_pair_stack(G, k), ctx.dim, k.support)
        return max_residual(
            (jump_closed(rate, k, g, ctx.grid), jump_direct(rate, F, g, ctx.grid)) for g in ctx.configs(f"j{n}{translation}", 3, 5)
        )

    return run


JUMP = [qd(f"jump-closed/n={n}", _jump(n, False), QUAD_TOL_NESTED) for n in range(1, 4)] + [
    qd(f"jump-closed-translation/n={n}", _jump(n, True), QUAD_TOL_NESTED) for n in range(1, 3)
]


# ----------------------------------------------------------------------------
# ccr and adjointness


def _ccr_vectors(ctx) -> list[tuple[str, FockVector]]:
    return [
        ("vacuum", FockVector.vacuum(1.0, ctx.dim)),
        ("mixed", FockVector([0.4, ctx.eta, ctx.pair_kernel()])),
    ]


def _ccr(name, rel):
    def run(ctx):
        f = dict(_ccr_vectors(ctx))[name]
        return ccr_check(ctx.psi, ctx.xi, f, ctx.grid)[rel]

    return run


def _vacuum_commutator(ctx):
    # [A-, A+] on the vacuum: A-_psi A+_xi 1 = ∫ psi xi (A- annihilates the vacuum)
    v = a_minus(ctx.psi, a_plus(ctx.xi, FockVector.vacuum(1.0, ctx.dim)), ctx.grid)
    return residual(v.scalar, integrate(ctx.psi * ctx.xi, ctx.grid))


def _adjoint(ctx):
    f = FockVector([0.4, ctx.eta, ctx.pair_kernel()])
    g = FockVector([-0.7, ctx.xi, TensorPower(ctx.eta, 2), TensorPower(ctx.psi, 3)])
    lhs = fock_inner(a_plus(ctx.psi, f), g, ctx.grid)
    rhs = fock_inner(f, a_minus(ctx.psi, g, ctx.grid), ctx.grid)
    return residual(lhs, rhs)


CCR = (
    [
        qd(f"{rel}/{name}", _ccr(name, rel))
        for name in ("vacuum", "mixed")
        for rel in ("[A+,A+]", "[A-,A-]", "[A0,A0]", "[A-,A+]", "[A+,A0]", "[A-,A0]")
    ]
    + [qd("[A-,A+]-vacuum-value", _vacuum_commutator), qd("creation-annihilation-adjoint", _adjoint)]
)


# ----------------------------------------------------------------------------
# intertwine


def _intertwine(op):
    def run(ctx):
        f = FockVector([0.4, ctx.eta, ctx.pair_kernel()])
        return intertwining_check(ctx.psi, f, ctx.configs("iw", 5, 6), ctx.grid)[op]

    return run


def _eigen(ctx):
    xi, psi = 0.8 * ctx.xi, ctx.psi
    E = FunctionOnConfigs(lambda G: np.prod(1.0 + xi(G), axis=1), ctx.dim, xi.support, "E")
    c = integrate(psi * xi, ctx.grid)
    return max_residual((d_plus_directional(E, g, psi, ctx.grid), c * generating_function(g, xi)) for g in ctx.configs("eig", 6, 7))


def _closed_integral(ctx):
    # Gauss-64 against the closed form ∫ cos-bump = r * height on a 1-d window
    if ctx.dim != 1:
        return 0.0
    psi = ctx.psi
    r = (psi.support.hi[0] - psi.support.lo[0]) / 2.0
    return residual(integrate(psi, ctx.grid), r)


INTERTWINE = [qd(f"intertwine-{op}", _intertwine(op)) for op in ("A+", "A-", "A0")] + [
    qd("generating-eigen-relation", _eigen),
    qd("bump-integral-closed-form", _closed_integral),
]


# ----------------------------------------------------------------------------
# divergence-laplacian


def _laplacian_vs_div_grad(ctx):
    F = _test_function(ctx)
    V = gradient(F)
    return max_residual((laplacian(F, g, ctx.grid), divergence(V, g, ctx.grid)) for g in ctx.configs("ldg", 5, 6))


def _symmetric_divergence(ctx):
    # a field satisfying V+(gamma, x) = -V-(gamma ∪ x, x), not a gradient
    psi, xi = ctx.psi, ctx.xi
    vp = lambda G, X: psi(X) * (1.0 + xi(G).sum(axis=1))  # noqa: E731
    vm = lambda G, X: -psi(X) * (1.0 + xi(G).sum(axis=1) - xi(X))  # noqa: E731
    V = VectorField(vp, vm, ctx.window, ctx.dim)
    return max_residual(
        (symmetric_divergence_stack(V, g.points[None], ctx.grid)[0], divergence(V, g, ctx.grid)) for g in ctx.configs("sdv", 5, 6)
    )


def _linear_laplacian(ctx):
    psi = ctx.psi
    F = linear_function(psi)
    c = integrate(psi, ctx.grid)
    return max_residual((laplacian(F, g, ctx.grid), 2 * F(g) - 2 * c) for g in ctx.configs("llp", 5, 6))


DIVERGENCE_LAPLACIAN = [
    qd("laplacian-equals-div-gradient", _laplacian_vs_div_grad, EXACT_TOL),
    qd("symmetric-field-reduced-divergence", _symmetric_divergence, EXACT_TOL),
    qd("laplacian-linear-function", _linear_laplacian),
]


# ----------------------------------------------------------------------------
# statistical suites


def _laplace(ctx):
    f = 0.5 * ctx.psi + (-0.3) * ctx.xi
    return laplace_check(f, ctx.sampler("laplace"), ctx.grid, ctx.samples, "laplace")


def _mecke(family):
    def run(ctx):
        psi, xi = ctx.psi, ctx.xi
        if family == "campbell":
            Fxg = lambda X, G: psi(X)  # noqa: E731
        elif family == "count":
            Fxg = lambda X, G: psi(X) * (G.shape[1] - 1)  # noqa: E731
        else:
            Fxg = lambda X, G: psi(X) * np.exp(-xi(G).sum(axis=1))  # noqa: E731
        return mecke_check(Fxg, ctx.sampler(f"mecke-{family}"), ctx.grid, ctx.samples, psi.support, f"mecke-{family}")

    return run


def _moment(n, kernel):
    def run(ctx):
        k = {"psi": TensorPower(ctx.psi, n), "mixed": ctx.kernel(n)}[kernel]
        return moment_check(k, ctx.sampler(f"moment-{n}-{kernel}"), ctx.grid, ctx.samples, f"moment-{n}-{kernel}")

    return run


def _ramp_density(ctx) -> ScalarField:
    z, w = ctx.z, ctx.window
    lo, wd = w.lo_array[0], w.widths[0]
    return ScalarField(lambda X: z * (0.5 + (X[..., 0] - lo) / wd), w, "ramp", 1.5 * z)


def _duality(pair):
    def run(ctx):
        psi, xi, eta = ctx.psi, ctx.xi, ctx.eta
        intensity = None
        if pair == "bump-field":
            V = VectorField.from_fields(psi, xi, ctx.dim)
            F = k_transform(FockVector([0.2, eta, TensorPower(xi, 2)]))
        elif pair == "gradient":
            F = linear_function(psi)
            V = gradient(F)
        else:
            F = k_transform(FockVector([0.0, xi, ctx.pair_kernel()]))
            V = gradient(k_transform(FockVector([0.5, eta])))
            if ctx.is_constant:
                intensity = _ramp_density(ctx)
        name = f"duality-{pair}"
        return duality_check(V, F, ctx.sampler(name, intensity), ctx.grid, ctx.samples, name)

    return run


def _nq_series(ctx, signed: bool, q: float) -> NewtonSeries:
    if signed:
        comps = [-0.5, TensorPower(ctx.eta, 1) - TensorPower(ctx.xi, 1), -1.0 * ctx.pair_kernel()]
    else:
        comps = [0.3, ctx.psi, TensorPower(ctx.xi, 2), TensorPower(ctx.eta, 3)]
    return NewtonSeries(FockVector(comps, ctx.dim), q)


def _nq_homogeneity(ctx):
    s = _nq_series(ctx, True, 2.0)
    a = nq_norm(s, ctx.grid)
    return max(residual(nq_norm(s.scaled(c), ctx.grid), abs(c) * a) for c in (-3.0, 0.5, 2.0))


def _nq_monotone(ctx):
    s = _nq_series(ctx, True, 1.0)
    vals = [nq_norm(s.with_q(q), ctx.grid) for q in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)]
    # largest relative decrease between consecutive q values; zero when nondecreasing
    return max(0.0, max(residual(a, b) if b < a else 0.0 for a, b in zip(vals, vals[1:])))


def _l1_report(ctx, signed: bool, name: str) -> EstimatorReport:
    z = ctx.z
    q = z
    b = l1_bound_check(_nq_series(ctx, signed, q), z, ctx.samples, ctx.sampler(name, z).seed, ctx.grid, worker_count())
    alt = "less" if signed else "two-sided"
    return make_report(name, b.mc_l1, b.stderr, b.nq, b.samples, b.seed, alt)


NQ_BOUND = [
    qd("nq-homogeneity", _nq_homogeneity, EXACT_TOL),
    qd("nq-monotone-in-q", _nq_monotone, EXACT_TOL),
    st("l1-bound-signed", lambda ctx: _l1_report(ctx, True, "l1-bound-signed")),
    st("l1-equality-nonnegative", lambda ctx: _l1_report(ctx, False, "l1-equality-nonnegative")),
]

MECKE = [st(f"mecke-{f}", _mecke(f)) for f in ("campbell", "count", "exponential")]
MOMENTS = [st(f"moment-{n}-psi", _moment(n, "psi")) for n in (1, 2, 3)] + [st("moment-2-mixed", _moment(2, "mixed"))]
DUALITY = [st(f"duality-{p}", _duality(p)) for p in ("bump-field", "gradient", "varying-intensity")]
LAPLACE = [st("laplace-transform", _laplace)]


# ----------------------------------------------------------------------------
# newton-roundtrip


def _roundtrip_polynomial(ctx):
    v = FockVector([0.3, ctx.eta, ctx.pair_kernel(), ctx.kernel(3), TensorPower(ctx.psi, 4)])
    F = k_transform(v)
    P = ctx.points(ctx.rng("nrt"), 6)
    coefs = newton_coefficients(F, 4, P)
    out = residual(coefs.scalar, v.scalar)
    for n in range(1, 5):
        T = P[np.array(list(combinations(range(6), n)))]
        out = max(out, max_residual(zip(coefs.component(n).batch(T), v.component(n).batch(T))))
    return out


def _roundtrip_function(ctx):
    # any function is recovered on configurations of at most max_degree probe points
    F = _test_function(ctx)
    P = ctx.points(ctx.rng("nrf"), 6)
    K = k_transform(newton_coefficients(F, 4, P))
    pairs = []
    for s in range(5):
        for T in combinations(range(6), s):
            g = Configuration(P[list(T)], dim=ctx.dim)
            pairs.append((K(g), F(g)))
    return max_residual(pairs)


NEWTON_ROUNDTRIP = [
    ex("coefficients-of-k-transform/degree<=4", _roundtrip_polynomial),
    ex("k-transform-of-coefficients/degree<=4", _roundtrip_function),
]


# ----------------------------------------------------------------------------
# registry

SUITES: dict[str, Sequence[CheckDefinition]] = {
    "lowering": LOWERING,
    "chu-vandermonde": CHU_VANDERMONDE,
    "star-ktransform": STAR_KTRANSFORM,
    "ccr": CCR,
    "intertwine": INTERTWINE,
    "product-formula": PRODUCT_FORMULA,
    "generators-closed": GENERATORS_CLOSED,
    "jump": JUMP,
    "divergence-laplacian": DIVERGENCE_LAPLACIAN,
    "mecke": MECKE,
    "moments": MOMENTS,
    "duality": DUALITY,
    "laplace": LAPLACE,
    "newton-roundtrip": NEWTON_ROUNDTRIP,
    "nq-bound": NQ_BOUND,
}
SUITE_NAMES = tuple(SUITES) + ("all",)


def resolve(names: Iterable[str]) -> list[str]:
    """Expand ``all`` and drop duplicates, keeping catalog order; raises ``KeyError`` on unknown names."""
    wanted = set()
    for n in names:
        if n == "all":
            wanted.update(SUITES)
        elif n in SUITES:
            wanted.add(n)
        else:
            raise KeyError(n)
    return [n for n in SUITES if n in wanted]


@dataclass(frozen=True)
class SuiteResult:
    name: str
    checks: tuple[CheckResult, ...]

    def to_dict(self) -> dict:
        return {"name": self.name, "checks": [c.to_dict() for c in self.checks]}


def run_suites(names: Iterable[str], ctx: Context, kinds: Iterable[str] | None = None) -> list[SuiteResult]:
    kinds = set(KINDS if kinds is None else kinds)
    out = []
    for name in resolve(names):
        checks = tuple(check.evaluate(ctx) for check in SUITES[name] if check.kind in kinds)
        if checks:
            out.append(SuiteResult(name, checks))
    return out


def flaky_budget(n_statistical: int) -> int:
    """Allowed number of statistical checks beyond the flakiness threshold: one in twenty, at least one."""
    return max(1, math.ceil(n_statistical / 20)) if n_statistical else 0


def summarize(results: Sequence[SuiteResult]) -> dict:
    checks = [c for r in results for c in r.checks]
    stat = [c for c in checks if c.kind == "statistical"]
    flaky = sum(c.flaky for c in stat)
    det_failed = sum(not c.passed for c in checks if c.kind != "statistical")
    return {
        "passed": sum(c.passed for c in checks),
        "failed": sum(not c.passed for c in checks),
        "flaky": flaky,
        "flaky_budget": flaky_budget(len(stat)),
        "deterministic_failed": det_failed,
        "ok": det_failed == 0 and flaky <= flaky_budget(len(stat)),
    }
