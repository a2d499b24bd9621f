"""Command-line driver: ``gamma-fdcalc {verify,sample,eval,norms}``.

Exit codes: 0 success, 1 failed checks, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from .configspace import MAX_DIM, Configuration, PoissonSampler, Window
from .diffgeo import FunctionOnConfigs, laplacian, linear_function
from .errors import ConfigError
from .factorial import falling_pair_stack
from .fock import FockVector, fock_norm, k_transform
from .kernels import RULES, QuadratureGrid, ScalarField, TensorPower
from .newton import NewtonSeries, nq_norm
from .suites import KINDS, SUITE_NAMES, Context, resolve, run_suites, summarize

MIN_NODES = 8


def package_version() -> str:
    try:
        return version("gamma-fdcalc")
    except PackageNotFoundError:  # running from a source tree
        from . import __version__

        return __version__


# ----------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    dim: int = 1
    window: list[float] = field(default_factory=lambda: [0.0, 1.0])
    intensity: str = "4"
    quad_rule: str = "gauss"
    quad_nodes: int = 64
    seed: int = 0
    samples: int = 100_000
    suites: list[str] = field(default_factory=lambda: ["all"])
    kinds: list[str] = field(default_factory=lambda: list(KINDS))
    out: str | None = None
    format: str = "json"

    def validate(self) -> None:
        if not 1 <= self.dim <= MAX_DIM:
            raise ConfigError(f"dim must be between 1 and {MAX_DIM}")
        self.window_obj()
        self.intensity_obj()
        if self.quad_rule not in RULES:
            raise ConfigError(f"quad-rule must be one of {', '.join(RULES)}")
        if self.quad_nodes < MIN_NODES:
            raise ConfigError(f"quad-nodes must be at least {MIN_NODES}")
        if self.samples < 2:
            raise ConfigError("samples must be at least 2")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        try:
            resolve(self.suites)
        except KeyError as e:
            raise ConfigError(f"unknown suite {e.args[0]!r}; choose from {', '.join(SUITE_NAMES)}") from None
        bad = [k for k in self.kinds if k not in KINDS]
        if bad:
            raise ConfigError(f"unknown check kind {bad[0]!r}")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")

    def window_obj(self) -> Window:
        try:
            values = [float(v) for v in self.window]
        except (TypeError, ValueError):
            raise ConfigError(f"malformed window {self.window!r}") from None
        if len(values) == 2 and self.dim > 1:
            values = values * self.dim
        if len(values) < 2 or len(values) % 2:
            raise ConfigError(f"malformed window {self.window!r}: need lo,hi pairs")
        if len(values) != 2 * self.dim:
            raise ConfigError(f"window has {len(values) // 2} axes but dim is {self.dim}")
        try:
            return Window(tuple(values[0::2]), tuple(values[1::2]))
        except ValueError as e:
            raise ConfigError(f"malformed window: {e}") from None

    def intensity_obj(self) -> float | ScalarField:
        return parse_intensity(self.intensity, self.window_obj())

    def grid(self) -> QuadratureGrid:
        return QuadratureGrid(self.window_obj(), self.quad_nodes, self.quad_rule)

    def context(self) -> Context:
        return Context(self.window_obj(), self.intensity_obj(), self.grid(), self.seed, self.samples)


def parse_intensity(text, window: Window) -> float | ScalarField:
    """A number, or a named density ``ramp:Z`` / ``bump:Z`` with mean ``Z`` along the first axis."""
    s = str(text).strip()
    name, _, arg = s.partition(":")
    try:
        if not arg:
            z = float(s)
            if not (math.isfinite(z) and z >= 0):
                raise ValueError
            return z
        z = float(arg)
        if not (math.isfinite(z) and z >= 0):
            raise ValueError
    except ValueError:
        raise ConfigError(f"malformed intensity {text!r}") from None
    lo, wd = window.lo_array[0], window.widths[0]
    if name == "ramp":
        return ScalarField(lambda X: z * (0.5 + (X[..., 0] - lo) / wd), window, f"ramp:{z:g}", 1.5 * z)
    if name == "bump":
        # 1 + cos on the first axis; mean z over the window
        return ScalarField(lambda X: z * (1.0 + np.cos(2 * np.pi * ((X[..., 0] - lo) / wd - 0.5))), window, f"bump:{z:g}", 2 * z)
    raise ConfigError(f"unknown density {name!r}; use a number, ramp:Z or bump:Z")


_FLAG_FIELDS = ("dim", "window", "intensity", "quad_rule", "quad_nodes", "seed", "samples", "suites", "kinds", "out", "format")


def load_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the ``--config`` file, then explicit flags."""
    values = asdict(RunConfig())
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file is not valid JSON: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        if "suite" in data:
            data["suites"] = data.pop("suite")
        unknown = set(data) - set(values)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for key in ("suites", "kinds"):
            if isinstance(data.get(key), str):
                data[key] = [data[key]]
        values.update(data)
    for key in _FLAG_FIELDS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if isinstance(values["window"], str):
        values["window"] = [p for p in values["window"].replace(" ", "").split(",") if p]
    values["suites"] = [s for item in values["suites"] for s in str(item).split(",") if s]
    values["kinds"] = [s for item in values["kinds"] for s in str(item).split(",") if s]
    try:
        cfg = RunConfig(**values)
        cfg.dim, cfg.quad_nodes, cfg.seed, cfg.samples = int(cfg.dim), int(cfg.quad_nodes), int(cfg.seed), int(cfg.samples)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None
    cfg.validate()
    return cfg


# ----------------------------------------------------------------------------
# output


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _public_config(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d.pop("out")
    d.pop("format")
    d["window"] = cfg.window_obj().to_list()
    d["intensity"] = str(cfg.intensity)
    return d


CSV_COLUMNS = ("suite", "id", "kind", "pass", "residual", "z_score", "tolerance", "estimate", "stderr", "reference", "samples", "seed")


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for suite in report["suites"]:
        for c in suite["checks"]:
            w.writerow({"suite": suite["name"], **c})
    return buf.getvalue()


def build_report(cfg: RunConfig) -> dict:
    results = run_suites(cfg.suites, cfg.context(), cfg.kinds)
    return {
        "meta": {
            "version": package_version(),
            "seed": cfg.seed,
            "config": _public_config(cfg),
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        },
        "suites": [r.to_dict() for r in results],
        "summary": summarize(results),
    }


# ----------------------------------------------------------------------------
# subcommands


def cmd_verify(cfg: RunConfig, args) -> int:
    report = build_report(cfg)
    if cfg.format == "csv":
        _emit(report_csv(report), cfg.out)
    else:
        _emit(json.dumps(report, sort_keys=True, indent=2) + "\n", cfg.out)
    s = report["summary"]
    print(
        f"checks passed {s['passed']}, failed {s['failed']}, flaky {s['flaky']}/{s['flaky_budget']}",
        file=sys.stderr,
    )
    return 0 if s["ok"] else 1


def cmd_sample(cfg: RunConfig, args) -> int:
    if args.count < 0:
        raise ConfigError("count must be nonnegative")
    sampler = PoissonSampler(cfg.window_obj(), cfg.intensity_obj(), cfg.seed)
    stream = sampler.stream()
    lines = [json.dumps(next(stream).to_list()) for _ in range(args.count)]
    _emit("".join(line + "\n" for line in lines), cfg.out)
    return 0


def named_functions(ctx: Context) -> dict[str, FunctionOnConfigs]:
    psi, xi = ctx.psi, ctx.xi
    pair = ctx.pair_kernel()
    return {
        "count": FunctionOnConfigs(lambda G: np.full(G.shape[0], float(G.shape[1])), ctx.dim, None, "|γ|"),
        "linear": linear_function(psi),
        "pair": FunctionOnConfigs(lambda G: falling_pair_stack(G, pair), ctx.dim, pair.support, "pair"),
        "generating": FunctionOnConfigs(lambda G: np.prod(1.0 + 0.8 * xi(G), axis=1), ctx.dim, xi.support, "E"),
        "k-mixed": k_transform(named_vectors(ctx)["mixed"]),
    }


def named_vectors(ctx: Context) -> dict[str, FockVector]:
    return {
        "vacuum": FockVector.vacuum(1.0, ctx.dim),
        "mixed": FockVector([0.4, ctx.eta, ctx.pair_kernel()]),
        "nonnegative": FockVector([0.3, ctx.psi, TensorPower(ctx.xi, 2), TensorPower(ctx.eta, 3)]),
        "signed": FockVector([-0.5, TensorPower(ctx.eta, 1) - TensorPower(ctx.xi, 1), -1.0 * ctx.pair_kernel()]),
    }


def _parse_points(text: str, dim: int) -> Configuration:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"points are not valid JSON: {e}") from None
    try:
        return Configuration(data, dim=dim)
    except ValueError as e:
        raise ConfigError(f"bad configuration: {e}") from None


def cmd_eval(cfg: RunConfig, args) -> int:
    ctx = cfg.context()
    fns = named_functions(ctx)
    if args.function not in fns:
        raise ConfigError(f"unknown function {args.function!r}; choose from {', '.join(fns)}")
    F = fns[args.function]
    gamma = _parse_points(args.points, cfg.dim)
    out = {"function": args.function, "points": gamma.to_list(), "value": F(gamma)}
    if args.laplacian:
        out["laplacian"] = laplacian(F, gamma, ctx.grid, ctx.intensity)
    _emit(json.dumps(out, sort_keys=True) + "\n", cfg.out)
    return 0


def cmd_norms(cfg: RunConfig, args) -> int:
    ctx = cfg.context()
    vecs = named_vectors(ctx)
    if args.vector not in vecs:
        raise ConfigError(f"unknown vector {args.vector!r}; choose from {', '.join(vecs)}")
    v = vecs[args.vector]
    q = ctx.z if args.q is None else args.q
    if not q > 0:
        raise ConfigError("q must be positive")
    out = {"vector": args.vector, "q": q, "fock_norm": fock_norm(v, ctx.grid), "nq_norm": nq_norm(NewtonSeries(v, q), ctx.grid)}
    _emit(json.dumps(out, sort_keys=True) + "\n", cfg.out)
    return 0


# ----------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--dim", type=int, help="spatial dimension (1-3)")
    g.add_argument("--window", help="lo,hi[,lo,hi...]; one pair is repeated over all axes")
    g.add_argument("--intensity", help="constant z, or ramp:Z / bump:Z")
    g.add_argument("--quad-rule", dest="quad_rule", choices=RULES)
    g.add_argument("--quad-nodes", dest="quad_nodes", type=int, help=f"nodes per axis (>= {MIN_NODES})")
    g.add_argument("--seed", type=int)
    g.add_argument("--samples", type=int, help="Monte Carlo sample size")
    g.add_argument("--config", help="JSON file with any of the above; flags take precedence")
    g.add_argument("--out", help="output path (default: stdout)")
    g.add_argument("--format", choices=("json", "csv"))

    p = argparse.ArgumentParser(prog="gamma-fdcalc", description="Finite-difference calculus on configuration spaces.")
    p.add_argument("--version", action="version", version=f"%(prog)s {package_version()}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run identity suites")
    v.add_argument("--suite", dest="suites", action="append", help=f"suite name, repeatable or comma separated: {', '.join(SUITE_NAMES)}")
    v.add_argument("--kind", dest="kinds", action="append", help="restrict to check kinds: exact, quadrature, statistical")
    v.set_defaults(handler=cmd_verify)

    s = sub.add_parser("sample", parents=[common], help="print Poisson configurations as JSON lines")
    s.add_argument("--count", type=int, default=1)
    s.set_defaults(handler=cmd_sample)

    e = sub.add_parser("eval", parents=[common], help="evaluate a named function at a configuration")
    e.add_argument("--function", required=True, help="count, linear, pair, generating or k-mixed")
    e.add_argument("--points", required=True, help="JSON list of points, e.g. '[0.1, 0.5]' or '[[0.1, 0.2]]'")
    e.add_argument("--laplacian", action="store_true", help="also report the difference Laplacian under the run intensity")
    e.set_defaults(handler=cmd_eval)

    n = sub.add_parser("norms", parents=[common], help="Fock and N_q norms of a named Fock vector")
    n.add_argument("--vector", required=True, help="vacuum, mixed, nonnegative or signed")
    n.add_argument("--q", type=float, help="norm parameter (default: mean intensity)")
    n.set_defaults(handler=cmd_norms)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return args.handler(cfg, args)
    except ConfigError as e:
        print(f"gamma-fdcalc: configuration error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"gamma-fdcalc: I/O error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
