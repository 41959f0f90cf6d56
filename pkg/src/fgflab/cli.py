"""``fgflab`` command line.

Subcommands: sample, kernel, noise-dist, dudley, geometry, gap, diffusion,
verify.  Every option may also come from a ``--config`` file of flat
``key = value`` lines (``#`` starts a comment); options given on the command
line win.  Keys are the long option names with ``-`` replaced by ``_``.

Every artifact embeds the resolved config: JSON reports carry a ``config``
object and CSV tables start with ``# key=value`` comment lines.

Exit codes: 0 ok, 1 a criterion or built-in check failed, 2 usage or
validation error (a JSON error document is written to stderr).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from ._runtime import THREADS_ENV, default_threads, version_string

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# subcommand -> keys it reads (documented config schema)
SCHEMA: dict[str, tuple[str, ...]] = {
    "sample": ("model", "s", "m", "grounded", "ell", "seed", "replicate", "out"),
    "kernel": ("model", "s", "m", "grounded", "grid", "method", "out"),
    "noise-dist": ("model", "s", "m", "grounded", "grid", "alpha", "out"),
    "dudley": ("model", "s", "m", "grounded", "grid", "n_eps", "out", "report"),
    "geometry": ("s", "m", "grounded", "ell", "grid", "n", "seed", "x", "y", "threads", "out"),
    "gap": ("s", "m", "grounded", "ell", "mesh", "n", "seed", "threads", "relaxation", "out", "report"),
    "diffusion": ("s", "m", "grounded", "ell", "seed", "n", "t", "dt", "bins", "threads", "out", "report"),
    "verify": ("suite", "seed", "threads", "scale", "out"),
}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    """Resolved settings of one invocation."""

    subcommand: str
    values: dict = field(default_factory=dict)

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def provenance(self) -> dict:
        d = {"subcommand": self.subcommand, "version": version_string()}
        d.update({k: self.values[k] for k in sorted(self.values) if k not in ("out", "report")})
        return d

    def to_text(self) -> str:
        lines = [f"subcommand = {self.subcommand}"]
        lines += [f"{k} = {_fmt(self.values[k])}" for k in sorted(self.values) if self.values[k] is not None]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        vals = parse_config_text(text)
        sub = vals.pop("subcommand", None)
        if sub not in SCHEMA:
            raise UsageError(f"config needs a valid subcommand, got {sub!r}")
        return cls(sub, {k: _coerce(k, v) for k, v in vals.items()})


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


_INT_KEYS = {"ell", "seed", "replicate", "grid", "n_eps", "n", "mesh", "bins", "threads"}
_FLOAT_KEYS = {"s", "m", "alpha", "x", "y", "t", "dt", "scale"}
_BOOL_KEYS = {"grounded", "relaxation"}


def _coerce(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError as exc:
        raise UsageError(f"{key}: {exc}") from exc
    if key in _BOOL_KEYS:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"{key}: expected a boolean, got {raw!r}")
    return raw


def parse_config_text(text: str) -> dict:
    out = {}
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {no}: expected key = value")
        k, v = (p.strip() for p in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


# ---------------------------------------------------------------------------
# argument parsing

def _bool(text):
    return _coerce("grounded", text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fgflab", description="Fractional Gaussian fields on model manifolds.")
    p.add_argument("--version", action="version", version=version_string())
    sub = p.add_subparsers(dest="subcommand", parser_class=_Parser)

    def common(sp, keys):
        sp.add_argument("--config", help="flat key = value file; command-line flags override it")
        add = {
            "model": lambda: sp.add_argument("--model", help="circle, sphere2, sphere3, hyperbolic3 or euclideanN"),
            "s": lambda: sp.add_argument("--s", type=float, help="order s"),
            "m": lambda: sp.add_argument("--m", type=float, help="mass m >= 0"),
            "grounded": lambda: sp.add_argument("--grounded", type=_bool, nargs="?", const=True,
                                                help="project out constants (required for m = 0)"),
            "ell": lambda: sp.add_argument("--ell", type=int, help="number of retained eigenpairs"),
            "seed": lambda: sp.add_argument("--seed", type=int, help="master seed"),
            "replicate": lambda: sp.add_argument("--replicate", type=int, help="replicate index"),
            "grid": lambda: sp.add_argument("--grid", type=int, help="grid size / table rows"),
            "method": lambda: sp.add_argument("--method", help="closed_form, eigen_series, heat_integral or auto"),
            "alpha": lambda: sp.add_argument("--alpha", type=float, help="Hoelder exponent for the ratio scan"),
            "n_eps": lambda: sp.add_argument("--n-eps", type=int, help="number of covering scales"),
            "n": lambda: sp.add_argument("--n", type=int, help="replicates or paths"),
            "x": lambda: sp.add_argument("--x", type=float, help="first distance endpoint"),
            "y": lambda: sp.add_argument("--y", type=float, help="second distance endpoint"),
            "mesh": lambda: sp.add_argument("--mesh", type=int, help="FEM cells M (power of 2, >= 64)"),
            "relaxation": lambda: sp.add_argument("--relaxation", type=_bool, nargs="?", const=True,
                                                  help="also report semigroup relaxation"),
            "t": lambda: sp.add_argument("--t", type=float, help="time horizon"),
            "dt": lambda: sp.add_argument("--dt", type=float, help="time step"),
            "bins": lambda: sp.add_argument("--bins", type=int, help="histogram bins"),
            "threads": lambda: sp.add_argument("--threads", type=int,
                                               help=f"worker cap (default ${THREADS_ENV} or 1)"),
            "suite": lambda: sp.add_argument("--suite", help="all, a suite name, or comma-separated ids"),
            "scale": lambda: sp.add_argument("--scale", type=float,
                                             help="replicate-count factor (1 = acceptance scale)"),
            "out": lambda: sp.add_argument("--out", help="main artifact path (default stdout)"),
            "report": lambda: sp.add_argument("--report", help="JSON report path"),
        }
        for k in keys:
            add[k]()

    helps = {
        "sample": "draw one field realization (JSON)",
        "kernel": "radial Green kernel table (CSV r,value,method,error_estimate)",
        "noise-dist": "noise distance table (CSV r,rho) or Hoelder ratio (CSV alpha,max_ratio)",
        "dudley": "greedy covering profile (CSV epsilon,N,sqrt_log_N) and Dudley bound",
        "geometry": "Monte Carlo of conformal volume, length and distance on the circle (JSON)",
        "gap": "Monte Carlo of the perturbed spectral gap on the circle (CSV + JSON)",
        "diffusion": "direct vs time-changed diffusion on the circle (histogram CSV + JSON)",
        "verify": "run acceptance criteria (JSON)",
    }
    for name, keys in SCHEMA.items():
        common(sub.add_parser(name, help=helps[name]), keys)
    return p


DEFAULTS = {
    "sample": {"model": "circle", "s": 1.0, "m": 1.0, "grounded": False, "seed": 42, "replicate": 0},
    "kernel": {"model": "circle", "s": 1.0, "m": 1.0, "grounded": False, "grid": 256, "method": "auto"},
    "noise-dist": {"model": "circle", "s": 1.0, "m": 0.0, "grounded": True, "grid": 256},
    "dudley": {"model": "circle", "s": 1.0, "m": 0.0, "grounded": True, "grid": 1024, "n_eps": 40},
    "geometry": {"s": 1.0, "m": 1.0, "grounded": False, "grid": 1024, "n": 10_000, "seed": 42,
                 "x": 0.0, "y": 0.25},
    "gap": {"s": 2.0, "m": 1.0, "grounded": False, "mesh": 512, "n": 1000, "seed": 42, "relaxation": False},
    "diffusion": {"s": 3.0, "m": 1.0, "grounded": False, "seed": 42, "n": 10_000, "t": 1.0, "dt": 1e-4,
                  "bins": 32},
    "verify": {"suite": "all", "seed": 42, "scale": 1.0},
}


def resolve(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    if ns.subcommand is None:
        raise UsageError("missing subcommand; see fgflab --help")
    values = dict(DEFAULTS[ns.subcommand])
    if ns.config:
        try:
            with open(ns.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        raw = parse_config_text(text)
        declared = raw.pop("subcommand", ns.subcommand)
        if declared != ns.subcommand:
            raise UsageError(f"config is for {declared!r}, not {ns.subcommand!r}")
        unknown = set(raw) - set(SCHEMA[ns.subcommand])
        if unknown:
            raise UsageError(f"unknown config keys for {ns.subcommand}: {', '.join(sorted(unknown))}")
        values.update({k: _coerce(k, v) for k, v in raw.items()})
    for k in SCHEMA[ns.subcommand]:
        v = getattr(ns, k, None)
        if v is not None:
            values[k] = v
    if "threads" in SCHEMA[ns.subcommand] and values.get("threads") is None:
        values["threads"] = default_threads()
    cfg = RunConfig(ns.subcommand, values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    v = cfg.values
    if "m" in v and v["m"] < 0:
        raise UsageError("m must be >= 0")
    if v.get("m") == 0 and not v.get("grounded", False) and cfg.subcommand != "verify":
        raise UsageError("m = 0 requires --grounded")
    if "s" in v and not v["s"] > 0:
        raise UsageError("s must be positive")
    for k in ("grid", "n", "bins", "threads", "ell", "n_eps"):
        if v.get(k) is not None and v[k] < 1:
            raise UsageError(f"{k} must be positive")
    if cfg.subcommand in ("geometry", "gap") and v["n"] < 100:
        raise UsageError("Monte Carlo needs n >= 100")
    if cfg.subcommand == "gap" and (v["mesh"] < 64 or v["mesh"] & (v["mesh"] - 1)):
        raise UsageError("mesh must be a power of 2 and >= 64")
    if cfg.subcommand == "diffusion" and not (v["t"] > 0 and v["dt"] > 0):
        raise UsageError("t and dt must be positive")
    if cfg.subcommand in ("geometry", "gap", "diffusion") and v["s"] <= 0.5:
        raise UsageError("pointwise circle fields need s > 1/2")


# ---------------------------------------------------------------------------
# output helpers

def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv(cfg: RunConfig, header, rows) -> str:
    buf = io.StringIO()
    for k, val in cfg.provenance().items():
        buf.write(f"# {k}={_fmt(val)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _json(cfg: RunConfig, payload: dict) -> str:
    from .acceptance import _jsonable
    return json.dumps(_jsonable({"config": cfg.provenance(), **payload}), indent=2, sort_keys=True) + "\n"


def _query(cfg: RunConfig):
    from .green_kernels import KernelQuery
    from .spectral_basis import ManifoldModel
    try:
        model = ManifoldModel.from_name(cfg.get("model", "circle"))
    except (KeyError, ValueError) as exc:
        raise UsageError(f"unknown model {cfg.get('model')!r}") from exc
    return KernelQuery(model, cfg.get("s"), cfg.get("m"), cfg.get("grounded", False))


def _circle_field(cfg: RunConfig):
    from .fgf import sample_field
    from .green_kernels import KernelQuery, default_ell
    from .spectral_basis import ManifoldModel, eigen_data
    q = KernelQuery(ManifoldModel.circle(), cfg.get("s"), cfg.get("m"), cfg.get("grounded"))
    ell = cfg.get("ell") or default_ell(q)
    return sample_field(eigen_data(q.model, ell), q.s, q.m, q.grounded, seed=cfg.get("seed"), replicate=0)


# ---------------------------------------------------------------------------
# subcommands

def cmd_sample(cfg: RunConfig) -> int:
    from .fgf import sample_field
    from .green_kernels import default_ell
    from .spectral_basis import eigen_data
    q = _query(cfg)
    q.model.require_closed()
    ell = cfg.get("ell") or default_ell(q)
    fld = sample_field(eigen_data(q.model, ell), q.s, q.m, q.grounded,
                       seed=cfg.get("seed"), replicate=cfg.get("replicate"))
    _write(cfg.get("out"), _json(cfg, {"field": fld.to_dict()}))
    return EXIT_OK


def kernel_table(cfg: RunConfig) -> list[tuple]:
    from .green_kernels import (CLOSED_FORM, METHODS, euclidean_green, has_closed_form,
                                hyperbolic3_green, kernel_radial)
    q = _query(cfg)
    M = cfg.get("grid")
    model = q.model
    if model.is_closed:
        r = model.diameter * (np.arange(M) / (M - 1) if (q.pointwise and M > 1) else np.arange(1, M + 1) / M)
        method = cfg.get("method")
        if method == "auto":
            method = CLOSED_FORM if has_closed_form(q) else "eigen_series"
        if method not in METHODS:
            raise UsageError(f"unknown method {method!r}")
        vals = kernel_radial(q, r, method)
        return [(float(ri), v.value, v.method, v.error_estimate) for ri, v in zip(r, vals)]
    r = 4.0 * np.arange(1, M + 1) / M
    if model.kind == "hyperbolic3":
        return [(float(ri), hyperbolic3_green(q.s, q.m, float(ri)), CLOSED_FORM, 0.0) for ri in r]
    if q.m <= 0:
        raise UsageError("Euclidean kernels need m > 0")
    out = []
    for ri in r:
        val, err = euclidean_green(model.dim, q.s, q.m, float(ri), with_error=True)
        out.append((float(ri), val, "heat_integral", err))
    return out


def cmd_kernel(cfg: RunConfig) -> int:
    rows = kernel_table(cfg)
    _write(cfg.get("out"), _csv(cfg, ("r", "value", "method", "error_estimate"), rows))
    return EXIT_OK


def cmd_noise_dist(cfg: RunConfig) -> int:
    from .noise_geometry import NoiseMetric, holder_scan
    nm = NoiseMetric(_query(cfg))
    M = cfg.get("grid")
    model = nm.query.model
    alpha = cfg.get("alpha")
    if alpha is not None:
        grid = _grid_points(model, M)
        try:
            ratio = holder_scan(nm, grid, alpha)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        _write(cfg.get("out"), _csv(cfg, ("alpha", "max_ratio"), [(alpha, ratio)]))
        return EXIT_OK
    r = model.diameter * np.arange(M) / max(M - 1, 1)
    rho = nm.radial(r)
    _write(cfg.get("out"), _csv(cfg, ("r", "rho"), zip(r, rho)))
    return EXIT_OK


def _grid_points(model, M):
    if model.kind == "circle":
        return np.arange(M) / M
    from .spectral_basis import quadrature
    res = max(4, int(math.sqrt(M / 2)))
    return quadrature(model, res).points


def cmd_dudley(cfg: RunConfig) -> int:
    from .noise_geometry import NoiseMetric, covering_profile, dudley_bound, dudley_mesh_term
    nm = NoiseMetric(_query(cfg))
    grid = _grid_points(nm.query.model, cfg.get("grid"))
    try:
        prof = covering_profile(nm, grid, cfg.get("n_eps"))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = prof.to_rows()
    report = {"dudley_bound": dudley_bound(prof), "sub_mesh_term": dudley_mesh_term(prof),
              "mesh": prof.mesh, "diameter": prof.diameter, "grid_points": int(len(grid))}
    _write(cfg.get("out"), _csv(cfg, ("epsilon", "N", "sqrt_log_N"), rows))
    if cfg.get("report"):
        _write(cfg.get("report"), _json(cfg, report))
    else:
        sys.stderr.write(json.dumps(report, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_geometry(cfg: RunConfig) -> int:
    from .random_geometry import CircleGeometryConfig, circle_geometry_mc
    gc = CircleGeometryConfig(cfg.get("s"), cfg.get("m"), cfg.get("grounded"), cfg.get("ell"),
                              cfg.get("grid"), cfg.get("x"), cfg.get("y"))
    rep = circle_geometry_mc(gc, cfg.get("n"), cfg.get("seed"), threads=cfg.get("threads"))
    ref = math.exp(rep.theta / 2.0)
    estimators = []
    for r, refval in ((rep.volume, ref), (rep.length, ref), (rep.distance, None), (rep.sup, None)):
        estimators.append({"estimator": r.estimator, "N": r.n, "mean": r.estimate, "se": r.se,
                           "ci99": list(r.ci99), "reference_value": refval})
    checks = rep.checks
    payload = {"estimators": estimators, "inequality_checks": checks, "theta": rep.theta,
               "ell": rep.ell, "sandwich_rate": rep.sandwich_rate, "base_distance": rep.base_distance}
    _write(cfg.get("out"), _json(cfg, payload))
    passed = all(v for k, v in checks.items() if isinstance(v, bool))
    return EXIT_OK if passed else EXIT_FAIL


def cmd_gap(cfg: RunConfig) -> int:
    from .spectral_gap import GapConfig, log_gap_deviation_mc
    gc = GapConfig(cfg.get("s"), cfg.get("m"), cfg.get("grounded"), cfg.get("ell"), cfg.get("mesh"))
    mc = log_gap_deviation_mc(gc, cfg.get("n"), cfg.get("seed"), threads=cfg.get("threads"),
                              relaxation=cfg.get("relaxation"))
    rows = [(lam, sup, lam / mc.lambda1_base, int(ok)) for lam, sup, _, ok in mc.rows[:, :4]]
    _write(cfg.get("out"), _csv(cfg, ("lambda1", "sup_abs_h", "ratio", "pass"), rows))
    report = _json(cfg, mc.to_dict(False))
    if cfg.get("report"):
        _write(cfg.get("report"), report)
    else:
        sys.stderr.write(report)
    return EXIT_OK if (mc.pass_rate == 1.0 and mc.inequality_holds) else EXIT_FAIL


def cmd_diffusion(cfg: RunConfig) -> int:
    from .diffusion import (StepTooLarge, TrigField, chi_square, mixing_time, occupation, simulate_direct,
                            simulate_timechange, weighted_ks)
    fld = _circle_field(cfg)
    if fld.s <= 1.5:
        raise UsageError("the diffusion drift needs s > 3/2")
    tf = TrigField.from_field(fld)
    n, T, dt, bins, seed, thr = (cfg.get(k) for k in ("n", "t", "dt", "bins", "seed", "threads"))
    try:
        direct = simulate_direct(tf, 0.0, T, dt, n, seed, bins=bins, threads=thr)
        tc = simulate_timechange(tf, 0.0, T, dt, n, seed, threads=thr)
        Tm = math.ceil(mixing_time(tf) / 0.01) * 0.01
        stat = simulate_direct(tf, "uniform", Tm, dt, n, seed + 1, bins=bins, threads=thr)
    except StepTooLarge as exc:
        raise UsageError(str(exc)) from exc
    ks = weighted_ks(direct.final, tc.final, None, tc.final_weights)
    occ = occupation(stat, bins)
    expected = tf.bin_masses(bins)
    chi = chi_square(occ.mass, expected)
    rows = [(occ.edges[i], occ.edges[i + 1], occ.probabilities[i], expected[i] / expected.sum())
            for i in range(bins)]
    _write(cfg.get("out"), _csv(cfg, ("bin_lo", "bin_hi", "empirical", "stationary"), rows))
    report = _json(cfg, {"ks": ks, "ks_threshold": 0.03, "ess": tc.ess, "occupation_T": Tm,
                         "chi2": {"statistic": chi.statistic, "dof": chi.dof, "p_value": chi.p_value,
                                  "passed": chi.passed},
                         "ell": fld.ell})
    if cfg.get("report"):
        _write(cfg.get("report"), report)
    else:
        sys.stderr.write(report)
    return EXIT_OK if (ks < 0.03 and chi.passed) else EXIT_FAIL


def cmd_verify(cfg: RunConfig) -> int:
    from .acceptance import run_suite, select
    try:
        select(cfg.get("suite"))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rep = run_suite(cfg.get("suite"), cfg.get("seed"), cfg.get("threads"), cfg.get("scale"),
                    progress=lambda r: sys.stderr.write(r.line() + "\n"))
    _write(cfg.get("out"), _json(cfg, rep.to_dict(False)))
    return EXIT_OK if rep.passed else EXIT_FAIL


COMMANDS = {
    "sample": cmd_sample, "kernel": cmd_kernel, "noise-dist": cmd_noise_dist, "dudley": cmd_dudley,
    "geometry": cmd_geometry, "gap": cmd_gap, "diffusion": cmd_diffusion, "verify": cmd_verify,
}


def _error(kind: str, message: str, cfg: RunConfig | None) -> None:
    doc = {"error": kind, "message": message}
    if cfg is not None:
        doc["config"] = cfg.provenance()
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")


def main(argv=None) -> int:
    cfg = None
    try:
        cfg = resolve(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.subcommand](cfg)
    except UsageError as exc:
        _error("usage", str(exc), cfg)
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        # precondition violations raised by the library
        _error("validation", str(exc), cfg)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
