"""Command-line driver: ``hopflink run <config>``, ``selftest``, ``list-experiments``.

A config is one YAML file::

    experiment: s3xs3-linking
    seed: 0
    params: {a: 1, b: 0, t_end: 1000, n_samples: 10000}
    tolerances: {rel: 0.02}
    output: {dir: out, plot: true}

Every run writes ``summary.json`` (schema below) and a CSV into the output
directory; the exit status is 0 iff every comparison passes.

Summary schema (version 1)::

    {"schema_version": 1, "experiment": str, "seed": int, "params": {...},
     "estimate": float, "target": float, "tolerance": float, "pass": bool,
     "checks": [{"name", "estimate", "target", "tolerance", "pass"}, ...],
     "details": {...}}
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_QUADRATURE = 4
EXIT_NUMERIC = 5

log = logging.getLogger("hopflink")

_DEFAULT_K = [[1.0, [0.3, 0.2], 0.1], [[0.3, -0.2], -0.5, [0.0, 0.4]], [0.1, [0.0, -0.4], 0.2]]

EXPERIMENTS = {
    "s3xs3-linking": {
        "doc": "average linking of a H_1 + b H_2 with N = {<z,w> = 0} on S^3 x S^3 vs 2 (a - b) pi^3",
        "params": {"a": 1.0, "b": 0.0, "t_end": 1000.0, "n_samples": 10000, "system": "geodesic",
                   "ball_radius": 1.5, "tol": 1e-10, "chunk": 256},
        "tolerances": {"rel": 0.02, "abs": 1e-12, "quadrature": 1e-6},
    },
    "cp2-flux": {
        "doc": "average linking with the leaves {z = +-1} on CP2 vs the flux through the strip",
        "params": {"K": _DEFAULT_K, "t_end": 200.0, "n_samples": 10000, "system": "geodesic",
                   "ball_radius": 1.0, "tol": 1e-10, "chunk": 256},
        "tolerances": {"rel": 0.05, "quadrature": 1e-8},
    },
    "hodge-selftest": {
        "doc": "Green's operator identities and the linking-kernel identity on T^2, T^3",
        "params": {"dims": [2, 3], "band": 8, "n_forms": 100},
        "tolerances": {"fundl": 1e-10, "identities": 1e-13},
    },
    "gv-family": {
        "doc": "GV/TGV closedness, division relations and invariances for a foliation family",
        "params": {"family": "random", "family_seed": 0, "t": 0.3, "n_probes": 1000, "grid": 16,
                   "n_mc": 100000, "coords": None, "alpha": None, "transversal": None,
                   "region": None, "period": None},
        "tolerances": {"closed": 1e-7, "eq_alt": 1e-5, "dbeta2": 1e-9, "divergence": 1e-7,
                       "rescale": 1e-6, "sigmas": 3.0},
    },
    "identity-suite": {
        "doc": "pointwise symplectic/contact identities and closed-form Hopf integrals",
        "params": {"n_points": 1000, "a": 1.0, "b": 0.0},
        "tolerances": {"pointwise": 1e-8, "quadrature": 1e-6},
    },
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a mapping")
        unknown = set(d) - {"experiment", "seed", "params", "tolerances", "output"}
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        name = d.get("experiment")
        if name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
        spec = EXPERIMENTS[name]
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        params = _merge(spec["params"], d.get("params") or {}, "params")
        tols = _merge(spec["tolerances"], d.get("tolerances") or {}, "tolerances")
        for k, v in tols.items():
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                raise ConfigError(f"tolerance {k!r} must be a positive number")
        out = d.get("output") or {}
        if not isinstance(out, dict) or set(out) - {"dir", "plot", "csv", "summary"}:
            raise ConfigError("output takes keys dir, plot, csv, summary")
        cfg = cls(name, seed, params, tols, out)
        _check_params(cfg)
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        import yaml
        try:
            with open(path) as fh:
                d = yaml.safe_load(fh)
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot read config: {e}") from e
        return cls.from_dict(d)


def _merge(defaults: dict, given: dict, what: str) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"{what} must be a mapping")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown {what}: {sorted(unknown)}")
    out = dict(defaults)
    out.update(given)
    return out


def _check_params(cfg: ExperimentConfig) -> None:
    p = cfg.params
    for k in ("t_end", "n_samples", "n_forms", "n_points", "n_probes", "band", "grid", "n_mc"):
        if k in p and (not isinstance(p[k], (int, float)) or isinstance(p[k], bool) or p[k] <= 0):
            raise ConfigError(f"param {k!r} must be positive")
    for k in ("n_samples", "n_forms", "n_points", "n_probes", "band", "grid", "n_mc"):
        if k in p and int(p[k]) != p[k]:
            raise ConfigError(f"param {k!r} must be an integer")
    if "system" in p and p["system"] not in ("geodesic", "covering"):
        raise ConfigError("system must be 'geodesic' or 'covering'")
    if cfg.experiment == "gv-family" and p["family"] not in ("random", "exp", "config"):
        raise ConfigError("family must be 'random', 'exp' or 'config'")
    if cfg.experiment == "gv-family" and p["family"] == "config":
        for k in ("coords", "alpha", "transversal"):
            if not p.get(k):
                raise ConfigError(f"family 'config' needs params.{k}")
    if cfg.experiment == "hodge-selftest" and any(n not in (2, 3) for n in p["dims"]):
        raise ConfigError("dims must be a subset of [2, 3]")


# results ---------------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    estimate: float
    target: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "estimate": self.estimate, "target": self.target,
                "tolerance": self.tolerance, "pass": self.passed}


def _abs_check(name, est, target, tol) -> Check:
    return Check(name, float(est), float(target), float(tol), bool(abs(est - target) <= tol))


@dataclass
class Result:
    checks: list
    details: dict = field(default_factory=dict)
    csv_rows: list | None = None
    csv_header: tuple | None = None
    estimate_obj: object = None
    plot: object = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _system(name, manifold, seed, radius, avoid=None):
    from .shortpaths import covering_system, geodesic_system
    if name == "geodesic":
        return geodesic_system(manifold)
    return covering_system(manifold, seed=seed, ball_radius=radius, avoid=avoid)


def _linking_result(est, target, rel, abs_tol, name, quad_checks=()):
    tol = rel * abs(target) if target != 0 else abs_tol
    main = _abs_check(name, est.value, target, tol)
    res = Result([main, *quad_checks], {"linking": est.summary()},
                 estimate_obj=est)
    return res


def run_s3xs3(cfg: ExperimentConfig) -> Result:
    from . import linking, ruelle
    from .fields import hopf_pair_field
    p, tl = cfg.params, cfg.tolerances
    a, b = float(p["a"]), float(p["b"])
    X = hopf_pair_field(a, b)
    chain = linking.s3xs3_chain()
    sys_ = _system(p["system"], chain.manifold, cfg.seed, p["ball_radius"], avoid=chain.abs_f)
    log.info("s3xs3-linking: a=%g b=%g t=%g n=%d (%s)", a, b, p["t_end"], p["n_samples"], p["system"])
    est = linking.average_lk(X, chain, sys_, float(p["t_end"]), int(p["n_samples"]), seed=cfg.seed,
                             tol=float(p["tol"]), chunk=int(p["chunk"]))
    target = linking.hopf_pair_target(a, b)
    q = ruelle.s3xs3_hopf_integral(a, b)
    qc = _abs_check("hopf_integral_submanifold", q.value, target, tl["quadrature"] * max(1.0, abs(target)))
    res = _linking_result(est, target, tl["rel"], tl["abs"], "average_lk", [qc])
    res.details["quadrature"] = q.to_dict()
    res.plot = lambda out: _running_plot(cfg, X, chain, sys_, target, out)
    return res


def _cp2_lift(K):
    K = np.array([[complex(*v) if isinstance(v, (list, tuple)) else complex(v) for v in row] for row in K])
    if K.shape != (3, 3) or np.max(np.abs(K - K.conj().T)) > 1e-12:
        raise ConfigError("K must be a Hermitian 3x3 matrix (entries x or [re, im])")
    return 1j * K


def run_cp2(cfg: ExperimentConfig) -> Result:
    from . import linking, ruelle
    from .fields import cp2_lift_field
    p, tl = cfg.params, cfg.tolerances
    A = _cp2_lift(p["K"])
    X = cp2_lift_field(A)
    chain = linking.cp2_strip_chain()
    sys_ = _system(p["system"], chain.manifold, cfg.seed, p["ball_radius"], avoid=chain.abs_f)
    flux = ruelle.cp2_flux(X)
    leaves = ruelle.cp2_hopf_integral(A)
    log.info("cp2-flux: flux=%.10g t=%g n=%d", flux.value, p["t_end"], p["n_samples"])
    est = linking.average_lk(X, chain, sys_, float(p["t_end"]), int(p["n_samples"]), seed=cfg.seed,
                             tol=float(p["tol"]), chunk=int(p["chunk"]))
    lc = _abs_check("leaf_sum_vs_flux", leaves.value, flux.value, tl["quadrature"] * max(1.0, abs(flux.value)))
    res = _linking_result(est, flux.value, tl["rel"], 0.0, "average_lk_vs_flux", [lc])
    res.details.update(flux=flux.to_dict(), leaves=leaves.to_dict())
    res.plot = lambda out: _running_plot(cfg, X, chain, sys_, flux.value, out)
    return res


def run_hodge(cfg: ExperimentConfig) -> Result:
    from . import hodge
    p, tl = cfg.params, cfg.tolerances
    rng = np.random.default_rng(cfg.seed)
    checks, rows = [], []
    for n in p["dims"]:
        worst_f, worst_i = 0.0, 0.0
        kernels = {}
        for j in range(int(p["n_forms"])):
            deg = int(rng.integers(0, n))
            a = hodge.FourierForm.random(n, deg, int(p["band"]), rng)
            if deg not in kernels:
                kernels[deg] = hodge.linking_kernel(int(p["band"]), n, deg)
            rf = hodge.fundl_residual(a, kernels[deg])
            ri = max(hodge.identity_residuals(a).values())
            worst_f, worst_i = max(worst_f, rf), max(worst_i, ri)
            rows.append([n, j, deg, rf, ri])
        checks.append(_abs_check(f"fundl_T{n}", worst_f, 0.0, tl["fundl"]))
        checks.append(_abs_check(f"identities_T{n}", worst_i, 0.0, tl["identities"]))
    return Result(checks, csv_rows=rows, csv_header=("n", "index", "degree", "fundl_residual", "identity_residual"))


def _gv_family(cfg: ExperimentConfig):
    from . import godbillon as gb
    p = cfg.params
    if p["family"] == "random":
        return gb.random_torus_family(int(p["family_seed"]))
    if p["family"] == "exp":
        return gb.exp_family()
    return gb.sympy_family(p["coords"], p["alpha"], p["transversal"], period=p["period"],
                           region=p["region"], name="config")


def run_gv(cfg: ExperimentConfig) -> Result:
    from . import forms
    from . import godbillon as gb
    p, tl = cfg.params, cfg.tolerances
    fam = _gv_family(cfg)
    t = float(p["t"])
    x = fam.probes(int(p["n_probes"]), cfg.seed)
    fam.check(t, x)
    gb.beta_from_alpha(fam, t, probes=x)
    checks = []
    if fam.dim > 3:
        checks.append(_abs_check("closed_gv", gb.closedness_residual(gb.gv_integrand(fam, t), x), 0, tl["closed"]))
    checks.append(_abs_check("closed_tgv", gb.closedness_residual(gb.tgv_integrand(fam, t), x), 0, tl["closed"]))
    checks.append(_abs_check("dbeta_wedge_dbeta", forms.max_abs(gb.dbeta_squared(fam, t), x), 0, tl["dbeta2"]))
    sub = x[: min(len(x), 200)]
    checks.append(_abs_check("eq_alt", gb.eq_alt_residual(fam, t, sub), 0, tl["eq_alt"]))
    if fam.dim == 4:
        X, _, _ = gb.derived_field_and_foliation(fam, t)
        checks.append(_abs_check("divergence", gb.divergence_residual(X, forms.volume_coframe(4), sub),
                                 0, tl["divergence"]))
    details = {"family": fam.name, "meta": fam.meta}
    if fam.period is not None and fam.dim == 4:
        n = int(p["grid"])
        i0 = gb.tgv_integral(fam, t, n)
        fr = fam.rescaled(lambda y, s: np.exp(0.3 * np.sin(y[..., 1] + s)),
                          lambda y, s: np.exp(0.3 * np.sin(y[..., 1] + s))[..., None]
                          * np.stack([0 * y[..., 0], 0.3 * np.cos(y[..., 1] + s), 0 * y[..., 0], 0 * y[..., 0]], -1))
        i1 = gb.tgv_integral(fr, t, n)
        checks.append(_abs_check("tgv_rescale_invariance", i1, i0, tl["rescale"]))
        h0 = gb.tgv_hopf_integral(fam, t, n_mc=int(p["n_mc"]), seed=cfg.seed)
        shift = forms.constant_form(4, 2, {(0, 1): 0.7, (2, 3): -0.4})
        h1 = gb.tgv_hopf_integral(fam, t, shift=shift, n_mc=int(p["n_mc"]), seed=cfg.seed)
        sig = tl["sigmas"]
        checks.append(_abs_check("hopf_vs_tgv_integral", h0.value, i0, sig * h0.stderr))
        checks.append(_abs_check("primitive_shift", h1.value, h0.value, sig * float(np.hypot(h0.stderr, h1.stderr))))
        details.update(tgv_integral=i0, tgv_integral_rescaled=i1, hopf=h0.to_dict(), hopf_shifted=h1.to_dict())
    return Result(checks, details)


def run_identities(cfg: ExperimentConfig) -> Result:
    from . import ruelle
    from .fields import standard_contact_form
    from .linking import hopf_pair_target
    p, tl = cfg.params, cfg.tolerances
    rng = np.random.default_rng(cfg.seed)
    n = int(p["n_points"])
    H, om, _ = ruelle.s2xs2_symplectic_data(1.0, 2.0)
    u = rng.uniform(-1.5, 1.5, (n, 4))
    r_s = float(np.max(ruelle.symplectic_identity_residual(H, om, u)))
    r_c = float(np.max(ruelle.contact_identity_residual(standard_contact_form(3), rng.standard_normal((n, 6)))))
    a, b = float(p["a"]), float(p["b"])
    q = ruelle.s3xs3_hopf_integral(a, b)
    target = hopf_pair_target(a, b)
    fib = ruelle.contact_fiber_integral()
    checks = [
        _abs_check("symplectic_identity", r_s, 0, tl["pointwise"]),
        _abs_check("contact_identity", r_c, 0, tl["pointwise"]),
        _abs_check("s3xs3_hopf_integral", q.value, target, tl["quadrature"] * max(1.0, abs(target))),
        _abs_check("contact_fiber_integral", fib.value, 2 * np.pi, tl["quadrature"]),
    ]
    return Result(checks, {"s3xs3": q.to_dict(), "fiber": fib.to_dict()})


RUNNERS = {"s3xs3-linking": run_s3xs3, "cp2-flux": run_cp2, "hodge-selftest": run_hodge,
           "gv-family": run_gv, "identity-suite": run_identities}


# plotting ---------------------------------------------------------------------------------

def _running_plot(cfg, X, chain, sys_, target, out: Path) -> str | None:
    """Estimate (with stderr band) at geometric horizons up to t_end."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not available; skipping plot")
        return None
    from .linking import average_lk
    p = cfg.params
    n = min(int(p["n_samples"]), 1000)
    ts = np.geomspace(max(1.0, p["t_end"] / 100), p["t_end"], 7)
    vals, errs = [], []
    for t in ts:
        e = average_lk(X, chain, sys_, float(t), n, seed=cfg.seed, tol=float(p["tol"]), keep_records=False)
        vals.append(e.value)
        errs.append(e.stderr)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(ts, vals, yerr=errs, marker="o", lw=1)
    ax.axhline(target, color="k", ls="--", lw=0.8)
    ax.set_xscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("average linking")
    ax.set_title(f"{cfg.experiment} (n = {n})")
    fig.tight_layout()
    path = out / "running.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


# driver -----------------------------------------------------------------------------------

def _to_jsonable(o):
    if isinstance(o, dict):
        return {str(k): _to_jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_to_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    return o


def summary_dict(cfg: ExperimentConfig, res: Result) -> dict:
    main = res.checks[0]
    return _to_jsonable({
        "schema_version": SCHEMA_VERSION, "experiment": cfg.experiment, "seed": cfg.seed,
        "params": cfg.params, "estimate": main.estimate, "target": main.target,
        "tolerance": main.tolerance, "pass": res.passed,
        "checks": [c.to_dict() for c in res.checks], "details": res.details,
    })


def write_outputs(cfg: ExperimentConfig, res: Result) -> dict:
    out = Path(cfg.output.get("dir", f"out/{cfg.experiment}"))
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / cfg.output.get("csv", "samples.csv")
    if res.estimate_obj is not None:
        res.estimate_obj.to_csv(csv_path)
    else:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            if res.csv_rows is not None:
                w.writerow(res.csv_header)
                w.writerows(res.csv_rows)
            else:
                w.writerow(("name", "estimate", "target", "tolerance", "pass"))
                for c in res.checks:
                    w.writerow((c.name, repr(c.estimate), repr(c.target), repr(c.tolerance), c.passed))
    s = summary_dict(cfg, res)
    if cfg.output.get("plot") and res.plot is not None:
        s["plot"] = res.plot(out)
    with open(out / cfg.output.get("summary", "summary.json"), "w") as fh:
        json.dump(s, fh, indent=2, sort_keys=True)
    return s


def run(cfg: ExperimentConfig) -> tuple[int, dict | None]:
    """Execute one experiment; returns (exit status, summary)."""
    from .linking import TooManyDegenerateError
    from .ruelle import QuadratureError
    try:
        res = RUNNERS[cfg.experiment](cfg)
    except ConfigError as e:
        log.error("config error: %s", e)
        return EXIT_CONFIG, None
    except TooManyDegenerateError as e:
        log.error("degenerate samples: %s", e)
        return EXIT_DEGENERATE, None
    except QuadratureError as e:
        log.error("quadrature did not converge: %s (last values %s)", e, e.values)
        return EXIT_QUADRATURE, None
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as e:
        log.error("numerical failure: %s", e)
        return EXIT_NUMERIC, None
    s = write_outputs(cfg, res)
    for c in res.checks:
        log.info("%-26s %s  estimate=%.10g target=%.10g tol=%.3g", c.name, "pass" if c.passed else "FAIL",
                 c.estimate, c.target, c.tolerance)
    return (EXIT_OK if res.passed else EXIT_FAIL), s


SELFTEST = [
    {"experiment": "identity-suite", "params": {"n_points": 100}},
    {"experiment": "hodge-selftest", "params": {"band": 4, "n_forms": 10}},
    {"experiment": "s3xs3-linking", "params": {"t_end": 100.0, "n_samples": 400}, "tolerances": {"rel": 0.15}},
]


def _schema_text() -> str:
    lines = []
    for name, spec in EXPERIMENTS.items():
        lines.append(f"{name}: {spec['doc']}")
        for k, v in spec["params"].items():
            lines.append(f"    params.{k} = {v!r}")
        for k, v in spec["tolerances"].items():
            lines.append(f"    tolerances.{k} = {v!r}")
    lines.append("exit codes: 0 pass, 1 comparison failed, 2 config error, 3 too many degenerate "
                 "samples, 4 quadrature non-convergence, 5 other numerical failure")
    lines.append("environment: HOPFLINK_WORKERS sets the worker-thread count (default 1)")
    return "\n".join(lines)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="hopflink", description=__doc__.split("\n\n")[0],
                                 formatter_class=argparse.RawDescriptionHelpFormatter,
                                 epilog="defaults:\n" + _schema_text())
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run the experiment described by a YAML config")
    r.add_argument("config")
    r.add_argument("--out", help="override output.dir")
    r.add_argument("--workers", type=int, help="worker threads (overrides HOPFLINK_WORKERS)")
    s = sub.add_parser("selftest", help="quick end-to-end checks")
    s.add_argument("--out", default=None)
    sub.add_parser("list-experiments", help="experiments, parameters and defaults")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose or args.cmd != "list-experiments" else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)

    if args.cmd == "list-experiments":
        print(_schema_text())
        return EXIT_OK
    if args.cmd == "selftest":
        import tempfile
        base = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="hopflink-selftest-"))
        worst = EXIT_OK
        for d in SELFTEST:
            d = dict(d, output={"dir": str(base / d["experiment"])})
            code, _ = run(ExperimentConfig.from_dict(d))
            print(f"{d['experiment']:<20} {'pass' if code == 0 else f'FAIL (exit {code})'}")
            worst = worst or code
        return worst
    try:
        cfg = ExperimentConfig.load(args.config)
    except ConfigError as e:
        log.error("config error: %s", e)
        return EXIT_CONFIG
    if args.out:
        cfg.output["dir"] = args.out
    if args.workers:
        os.environ["HOPFLINK_WORKERS"] = str(args.workers)
    code, s = run(cfg)
    if s is not None:
        print(json.dumps({k: s[k] for k in ("experiment", "estimate", "target", "tolerance", "pass")}))
    return code


if __name__ == "__main__":
    sys.exit(main())
