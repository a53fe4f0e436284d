"""Command-line front end: data ingestion, fits, curves, and validation.

Every subcommand resolves its configuration from built-in defaults, an
optional ``--config`` JSON document, and explicit flags (highest priority),
then echoes the fully resolved configuration next to its outputs. All
outputs are byte-identical across runs with the same configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import svgplot
from .density import KdeSpec, cmde_ttest, iwmde_fit, kde_fit, trunc_normal_fit
from .errors import ConvergenceError, InvalidDataError, MixingError
from .mcmc import (
    ChainConfig,
    PosteriorDraws,
    ProductSpaceSpec,
    sample_extended,
    sample_product_space,
)
from .models import (
    ConditionalPrior,
    HeterogeneityPrior,
    HyperPrior,
    MetaData,
    TTestData,
    default_ttest_model,
    informed_ttest_model,
    meta_model,
)
from .oracle import (
    AnchorResult,
    QuadratureSpec,
    anchor_bf,
    exact_bf_curve,
    inclusion_log_bf,
    meta_component_log_z,
)
from .sensitivity import (
    EnsembleSpec,
    bf_curve,
    bf_surface,
    curve_error_report,
    inclusion_bf_curve_bridge,
    inclusion_bf_curve_product_space,
    read_curve_csv,
    write_curve_csv,
)

__all__ = [
    "main",
    "ingest_ttest",
    "ingest_meta",
    "generate_synthetic_meta",
    "read_curve_csv",
]


# ---------------------------------------------------------------------------
# Ingestion


def ingest_ttest(source) -> TTestData:
    """Build TTestData from a JSON path, a dict, or the bundled dataset name."""
    if isinstance(source, TTestData):
        return source
    if isinstance(source, str) and source == "oosterwijk":
        raw = json.loads(
            resources.files("bfsens.data").joinpath("oosterwijk.json").read_text())
    elif isinstance(source, dict):
        raw = source
    else:
        raw = json.loads(Path(source).read_text())
    fields = ("n1", "mean1", "sd1", "n2", "mean2", "sd2")
    missing = [f for f in fields if f not in raw]
    if missing:
        raise InvalidDataError(f"t-test data missing fields: {', '.join(missing)}")
    return TTestData(n1=int(raw["n1"]), mean1=float(raw["mean1"]), sd1=float(raw["sd1"]),
                     n2=int(raw["n2"]), mean2=float(raw["mean2"]), sd2=float(raw["sd2"]))


def ingest_meta(source) -> MetaData:
    """Read a meta-analysis CSV with header ``effect,se`` (row order kept)."""
    if isinstance(source, MetaData):
        return source
    if isinstance(source, str) and source == "reference":
        text = resources.files("bfsens.data").joinpath("meta_k9_reference.csv").read_text()
    else:
        text = Path(source).read_text()
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidDataError("meta CSV is empty")
    header = [h.strip() for h in lines[0].split(",")]
    if header[:2] != ["effect", "se"]:
        raise InvalidDataError(f"meta CSV must start with header 'effect,se' (got {lines[0]!r})")
    if len(lines) < 2:
        raise InvalidDataError("meta CSV has no data rows")
    effects, ses = [], []
    for i, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        try:
            eff, se = float(cells[0]), float(cells[1])
        except (ValueError, IndexError):
            raise InvalidDataError(f"meta CSV row {i}: non-numeric cell in {ln!r}") from None
        if se <= 0:
            raise InvalidDataError(f"meta CSV row {i}: se must be positive (got {se})")
        effects.append(eff)
        ses.append(se)
    return MetaData(effects=np.array(effects), ses=np.array(ses))


def generate_synthetic_meta(k: int, mu: float, tau: float, se_lo: float,
                            se_hi: float, seed: int) -> MetaData:
    """Synthetic meta-analytic dataset: y_i ~ N(mu, se_i^2 + tau^2).

    Standard errors are equispaced over [se_lo, se_hi]; the draw stream is
    the named counter-based generator keyed by the seed, so the same spec
    always reproduces the same file.
    """
    if k < 1 or se_lo <= 0 or se_hi < se_lo or tau < 0:
        raise InvalidDataError("invalid synthetic meta spec")
    ses = np.linspace(se_lo, se_hi, k)
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 2], dtype=np.uint64)))
    effects = mu + np.sqrt(ses**2 + tau**2) * rng.standard_normal(k)
    return MetaData(effects=effects, ses=ses)


def write_meta_csv(data: MetaData, path) -> None:
    with open(path, "w") as fh:
        fh.write("effect,se\n")
        for e, s in zip(data.effects, data.ses):
            fh.write(f"{e:.17g},{s:.17g}\n")


# ---------------------------------------------------------------------------
# Config plumbing


CURVE_DEFAULTS = {
    "model": "ttest-cauchy",
    "data": "oosterwijk",
    "bounds": [0.0, 2.0],
    "anchor": math.sqrt(2.0) / 2.0,
    "estimators": ["kde", "iwmde"],
    "grid_points": 100,
    "chains": {"n_chains": 3, "n_warmup": 2500, "n_keep": 10000},
    "seed": 20240101,
    "force": False,
    "oracle": {"abs_tol": 1e-8, "rel_tol": 1e-8, "max_depth": 30,
               "cross_validate": True},
}

SURFACE_DEFAULTS = {
    "model": "ttest-informed",
    "data": "oosterwijk",
    "bounds": [[0.0, 1.0], [0.0, 1.0]],
    "anchor": [0.5, 0.5],
    "estimators": ["kde", "iwmde"],
    "lattice": {"g1": [0.0, 1.0, 41], "g2": [0.05, 1.0, 41]},
    "chains": {"n_chains": 3, "n_warmup": 2500, "n_keep": 10000},
    "seed": 20240101,
    "force": False,
    "oracle": {"abs_tol": 1e-8, "rel_tol": 1e-8, "max_depth": 30,
               "cross_validate": False},
}

STUDY_DEFAULTS = {
    "data": "oosterwijk",
    "bounds": [0.0, 2.0],
    "anchor": math.sqrt(2.0) / 2.0,
    "draw_counts": [3000, 10000, 30000, 100000, 300000],
    "estimators": ["kde", "iwmde"],
    "grid_points": 100,
    "chains": {"n_chains": 3, "n_warmup": 2500},
    "seed": 20240101,
    "oracle": {"abs_tol": 1e-8, "rel_tol": 1e-8, "max_depth": 30,
               "cross_validate": True},
}

BMA_DEFAULTS = {
    "data": "reference",
    "bounds": [0.0, 2.0],
    "anchor": 1.0,
    "strategy": "both",
    "tau_prior": {"shape": 1.0, "scale": 0.15},
    "prior_probs": {"fe0": 0.25, "re0": 0.25, "fe1": 0.25, "re1": 0.25},
    "grid_points": 100,
    "validation_points": 10,
    "chains": {"n_chains": 3, "n_warmup": 2500, "n_keep": 10000},
    "seed": 20240101,
    "force": False,
    "oracle": {"abs_tol": 1e-8, "rel_tol": 1e-8, "max_depth": 30,
               "cross_validate": True},
}


def _merge(defaults: dict, override: dict) -> dict:
    out = dict(defaults)
    for key, val in override.items():
        if key not in out:
            raise InvalidDataError(f"unknown config key {key!r}")
        if isinstance(out[key], dict) and isinstance(val, dict):
            out[key] = {**out[key], **val}
        else:
            out[key] = val
    return out


def _resolve(defaults: dict, args) -> dict:
    cfg = dict(defaults)
    if getattr(args, "config", None):
        cfg = _merge(cfg, json.loads(Path(args.config).read_text()))
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "estimators", None):
        cfg["estimators"] = [e.strip() for e in args.estimators.split(",") if e.strip()]
    if getattr(args, "strategy", None):
        cfg["strategy"] = args.strategy
    if getattr(args, "force", False):
        cfg["force"] = True
    if getattr(args, "data", None):
        cfg["data"] = args.data
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(cfg: dict, out: Path) -> None:
    with open(out / "resolved_config.json", "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _chain_config(cfg: dict, n_keep: int | None = None) -> ChainConfig:
    ch = dict(cfg["chains"])
    if n_keep is not None:
        ch["n_keep"] = n_keep
    return ChainConfig(seed=cfg["seed"], **ch)


def _quad(cfg: dict) -> tuple[QuadratureSpec, bool]:
    q = dict(cfg["oracle"])
    cross = q.pop("cross_validate", True)
    return QuadratureSpec(**q), cross


def _anchor_json(anchor: AnchorResult, path) -> None:
    with open(path, "w") as fh:
        json.dump({"gamma0": [float(g) for g in anchor.gamma0],
                   "log_bf10": anchor.log_bf10,
                   "bf10": math.exp(anchor.log_bf10),
                   "method": anchor.method,
                   "est_error": anchor.est_error}, fh, indent=2)
        fh.write("\n")


def _diag_table(draws: PosteriorDraws) -> str:
    lines = ["parameter   rhat     ess"]
    for name, s in draws.diagnostics.items():
        lines.append(f"{name:<10} {s['rhat']:7.4f} {s['ess']:7.0f}"
                     + ("  DEGENERATE" if s["degenerate"] else ""))
    return "\n".join(lines)


def _fit_or_die(model, cfg, chain_cfg) -> PosteriorDraws:
    draws = sample_extended(model, chain_cfg)
    if not draws.converged and not cfg["force"]:
        print(_diag_table(draws), file=sys.stderr)
        raise ConvergenceError(
            "extended-model fit failed convergence checks; re-run with --force to proceed")
    return draws


def _estimator_density(name: str, draws: PosteriorDraws, model, cfg):
    force = True  # convergence already gated at fit time
    if name == "iwmde":
        return iwmde_fit(draws, model, force=force)
    if name == "kde":
        gam = draws.gamma[:, 0] if model.hyper.dim == 1 else draws.gamma
        return kde_fit(gam, KdeSpec(), support=model.hyper.bounds)
    if name == "cmde":
        return cmde_ttest(draws, model.hyper.bounds, force=force)
    if name == "trunc-normal":
        gam = draws.gamma[:, 0] if model.hyper.dim == 1 else draws.gamma
        return trunc_normal_fit(gam, model.hyper.bounds)
    raise InvalidDataError(f"unknown estimator {name!r}")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_curve(args) -> int:
    cfg = _resolve(CURVE_DEFAULTS, args)
    out = _out_dir(args)
    _echo_config(cfg, out)
    if not cfg["estimators"]:
        raise InvalidDataError("estimator list must be non-empty")
    data = ingest_ttest(cfg["data"])
    model = default_ttest_model(data, bounds=tuple(cfg["bounds"]))
    quad, cross = _quad(cfg)
    lo, hi = model.hyper.bounds[0]
    eps = 1e-3 * (hi - lo)
    grid = np.linspace(lo + eps, hi, cfg["grid_points"])

    anchor = anchor_bf(model, [cfg["anchor"]], quad, cross_validate=cross)
    _anchor_json(anchor, out / "anchor.json")
    oracle_curve = exact_bf_curve(model, grid, quad, cross_validate=cross)
    write_curve_csv(oracle_curve, out / "curve_oracle.csv")

    draws = _fit_or_die(model, cfg, _chain_config(cfg))
    draws.to_csv(out / "draws.csv")

    series = {"oracle": (grid, oracle_curve.log_bf)}
    ratio_series = {}
    for name in cfg["estimators"]:
        dens = _estimator_density(name, draws, model, cfg)
        curve = bf_curve(anchor, dens, model.hyper, grid, method=name)
        write_curve_csv(curve, out / f"curve_{name}.csv")
        series[name] = (grid, curve.log_bf)
        ratio_series[name] = (grid, curve.log_bf - oracle_curve.log_bf)
    svgplot.line_plot(out / "curve.svg", series, xlabel="prior scale",
                      ylabel="log BF10", title="Bayes factor sensitivity",
                      anchor=(float(anchor.gamma0[0]), anchor.log_bf10))
    svgplot.line_plot(out / "curve_ratio.svg", ratio_series, xlabel="prior scale",
                      ylabel="log approximation ratio",
                      title="Approximation ratio vs the exact curve",
                      anchor=(float(anchor.gamma0[0]), 0.0))
    return 0


def cmd_surface(args) -> int:
    cfg = _resolve(SURFACE_DEFAULTS, args)
    out = _out_dir(args)
    _echo_config(cfg, out)
    data = ingest_ttest(cfg["data"])
    model = informed_ttest_model(data, bounds=tuple(tuple(b) for b in cfg["bounds"]))
    quad, cross = _quad(cfg)
    s1 = cfg["lattice"]["g1"]
    s2 = cfg["lattice"]["g2"]
    g1 = np.linspace(s1[0], s1[1], int(s1[2]))
    g2 = np.linspace(s2[0], s2[1], int(s2[2]))
    pts = np.column_stack([np.repeat(g1, g2.size), np.tile(g2, g1.size)])

    anchor = anchor_bf(model, cfg["anchor"], quad, cross_validate=True)
    _anchor_json(anchor, out / "anchor.json")
    oracle_surf = exact_bf_curve(model, pts, quad, cross_validate=cross)
    oracle_surf.lattice_shape = (g1.size, g2.size)
    write_curve_csv(oracle_surf, out / "surface_oracle.csv")

    draws = _fit_or_die(model, cfg, _chain_config(cfg))
    draws.to_csv(out / "draws.csv")

    shape = (g1.size, g2.size)
    panels = [("exact", g1, g2, oracle_surf.log_bf.reshape(shape))]
    ratio_panels = []
    for name in cfg["estimators"]:
        dens = _estimator_density(name, draws, model, cfg)
        surf = bf_surface(anchor, dens, model.hyper, (g1, g2), method=name)
        write_curve_csv(surf, out / f"surface_{name}.csv")
        panels.append((name, g1, g2, surf.log_bf.reshape(shape)))
        ratio_panels.append((f"{name} / exact", g1, g2,
                             (surf.log_bf - oracle_surf.log_bf).reshape(shape)))
    svgplot.heatmap_panels(out / "surface.svg", panels + ratio_panels,
                           xlabel="prior mean", ylabel="prior sd")
    return 0


def cmd_mcmc_study(args) -> int:
    cfg = _resolve(STUDY_DEFAULTS, args)
    out = _out_dir(args)
    _echo_config(cfg, out)
    data = ingest_ttest(cfg["data"])
    model = default_ttest_model(data, bounds=tuple(cfg["bounds"]))
    quad, cross = _quad(cfg)
    lo, hi = model.hyper.bounds[0]
    grid = np.linspace(lo + 1e-3 * (hi - lo), hi, cfg["grid_points"])
    anchor = anchor_bf(model, [cfg["anchor"]], quad, cross_validate=cross)
    oracle_curve = exact_bf_curve(model, grid, quad, cross_validate=cross)

    rows = []
    n_chains = cfg["chains"]["n_chains"]
    for n_total in cfg["draw_counts"]:
        chain_cfg = _chain_config(cfg, n_keep=max(n_total // n_chains, 1000))
        # small draw counts legitimately fail the ESS gate; the study forces
        draws = sample_extended(model, chain_cfg)
        for name in cfg["estimators"]:
            dens = _estimator_density(name, draws, model, cfg)
            curve = bf_curve(anchor, dens, model.hyper, grid, method=name)
            rep = curve_error_report(curve, oracle_curve, support=model.hyper.bounds)
            rows.append((n_total, name, rep["mae"], rep["rmse"],
                         rep["mae_t"], rep["rmse_t"]))
    with open(out / "mcmc_study.csv", "w") as fh:
        fh.write("n,method,mae,rmse,mae_t,rmse_t\n")
        for row in rows:
            fh.write(f"{row[0]},{row[1]}," + ",".join(f"{v:.17g}" for v in row[2:]) + "\n")
    return 0


def cmd_bma(args) -> int:
    cfg = _resolve(BMA_DEFAULTS, args)
    out = _out_dir(args)
    _echo_config(cfg, out)
    if cfg["strategy"] not in ("bridge", "product-space", "both"):
        raise InvalidDataError(f"unknown strategy {cfg['strategy']!r}")
    data = ingest_meta(cfg["data"])
    quad, cross = _quad(cfg)
    hyper = HyperPrior([tuple(cfg["bounds"])])
    tau_prior = HeterogeneityPrior(**cfg["tau_prior"])
    ens = EnsembleSpec(prior_probs=dict(cfg["prior_probs"]))
    gamma0 = [float(cfg["anchor"])]
    lo, hi = hyper.bounds[0]
    grid = np.linspace(lo + 1e-3 * (hi - lo), hi, cfg["grid_points"])

    anchors = {}
    for comp in ("fe0", "re0", "fe1", "re1"):
        anchors[comp], _ = meta_component_log_z(data, comp, gamma0, tau_prior, quad)
    p = ens.prior_probs
    log_num0 = np.logaddexp(anchors["fe1"] + math.log(p["fe1"]),
                            anchors["re1"] + math.log(p["re1"]))
    log_den0 = np.logaddexp(anchors["fe0"] + math.log(p["fe0"]),
                            anchors["re0"] + math.log(p["re0"]))
    anchor_incl = AnchorResult(gamma0=np.array(gamma0),
                               log_bf10=float(log_num0 - log_den0),
                               method=quad.method, est_error=0.0)
    _anchor_json(anchor_incl, out / "anchor.json")

    curves = {}
    if cfg["strategy"] in ("bridge", "both"):
        m_fe = meta_model(data, include_tau=False, bounds=tuple(cfg["bounds"]))
        m_re = meta_model(data, include_tau=True, tau_prior=tau_prior,
                          bounds=tuple(cfg["bounds"]))
        d_fe = _fit_or_die(m_fe, cfg, _chain_config(cfg))
        d_re = sample_extended(m_re, ChainConfig(seed=(cfg["seed"] + 1) % 2**64,
                                                 **cfg["chains"]))
        if not d_re.converged and not cfg["force"]:
            print(_diag_table(d_re), file=sys.stderr)
            raise ConvergenceError("RE extended fit failed convergence checks")
        dens_fe = iwmde_fit(d_fe, m_fe, force=True)
        dens_re = iwmde_fit(d_re, m_re, force=True)
        curves["bridge"] = inclusion_bf_curve_bridge(
            anchors, dens_fe, dens_re, hyper, ens, grid, gamma0)
        write_curve_csv(curves["bridge"], out / "inclusion_curve_bridge.csv")
    if cfg["strategy"] in ("product-space", "both"):
        ps_spec = ProductSpaceSpec(
            prior_fe=p["fe1"] / (p["fe1"] + p["re1"]),
            prior_re=p["re1"] / (p["fe1"] + p["re1"]))
        d_ps = sample_product_space(ps_spec, data, hyper, tau_prior,
                                    ChainConfig(seed=(cfg["seed"] + 2) % 2**64,
                                                **cfg["chains"]))
        if not d_ps.indicator_mixed:
            raise MixingError(
                "product-space indicator never left one state in some chain; "
                "retune the pseudo-prior (moment-matched pilot) or raise n_keep")
        if not d_ps.converged and not cfg["force"]:
            print(_diag_table(d_ps), file=sys.stderr)
            raise ConvergenceError("product-space fit failed convergence checks")
        dens_ps = iwmde_fit(d_ps, cond_prior=ConditionalPrior("normal-sd"),
                            hyper=hyper, force=True)
        curves["product-space"] = inclusion_bf_curve_product_space(
            anchor_incl, dens_ps, hyper, grid, draws=d_ps)
        write_curve_csv(curves["product-space"], out / "inclusion_curve_product_space.csv")

    # oracle validation grid: complete per-point refits
    v_grid = np.linspace(0.2, hi, int(cfg["validation_points"]))
    ratios = {name: [] for name in curves}
    with open(out / "validation.csv", "w") as fh:
        cols = ["gamma", "log_bf_incl_exact"]
        for name in curves:
            cols += [f"log_bf_incl_{name}", f"log_ratio_{name}"]
        fh.write(",".join(cols) + "\n")
        for g in v_grid:
            exact = inclusion_log_bf(data, [g], prior_probs=p, tau_prior=tau_prior,
                                     quad=quad, cross_validate=cross)
            row = [f"{g:.17g}", f"{exact:.17g}"]
            for name, curve in curves.items():
                idx = int(np.argmin(np.abs(grid - g)))
                approx = curve.log_bf[idx]
                row += [f"{approx:.17g}", f"{approx - exact:.17g}"]
                ratios[name].append(approx - exact)
            fh.write(",".join(row) + "\n")

    series = {}
    for name, curve in curves.items():
        series[name] = (grid, curve.log_bf)
    svgplot.line_plot(out / "bma.svg", series, xlabel="prior sd of the pooled effect",
                      ylabel="log inclusion BF", title="Model-averaged sensitivity",
                      anchor=(float(gamma0[0]), anchor_incl.log_bf10))
    svgplot.line_plot(out / "bma_ratio.svg",
                      {name: (v_grid, np.array(vals)) for name, vals in ratios.items()},
                      xlabel="prior sd of the pooled effect",
                      ylabel="log approximation ratio",
                      title="Validation refits: approximation ratio",
                      anchor=(float(gamma0[0]), 0.0))
    return 0


def cmd_gen_meta(args) -> int:
    data = generate_synthetic_meta(args.k, args.mu, args.tau, args.se_lo,
                                   args.se_hi, args.seed if args.seed is not None else 20240101)
    out = Path(args.out_file)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_meta_csv(data, out)
    print(f"wrote {out} (K={args.k})")
    return 0


def cmd_validate(args) -> int:
    from . import acceptance

    if args.list:
        for crit in acceptance.CRITERIA:
            print(f"{crit.id:2d}  {crit.name}  (budget {crit.budget_s:.0f}s)")
        return 0
    selected = None
    if args.criteria:
        selected = sorted({int(tok) for tok in args.criteria.split(",") if tok.strip()})
    out = _out_dir(args)
    results = acceptance.run_all(out, criteria=selected)
    report = []
    all_pass = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"criterion {res.id:2d} [{status}] {res.name}"
              f"  ({res.runtime_s:.1f}s)")
        all_pass &= res.passed
        report.append({"id": res.id, "name": res.name, "passed": res.passed,
                       "details": res.details})
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0 if all_pass else 1


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bfsens",
        description="Bayes factor sensitivity curves from a single extended MCMC fit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_estimators=False, with_strategy=False):
        p.add_argument("--config", help="JSON config overriding the defaults")
        p.add_argument("--seed", type=int, help="64-bit unsigned RNG seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--force", action="store_true",
                       help="proceed despite convergence-flagged draws")
        p.add_argument("--data", help="dataset path or bundled name")
        if with_estimators:
            p.add_argument("--estimators", help="comma-separated estimator list")
        if with_strategy:
            p.add_argument("--strategy", choices=["bridge", "product-space", "both"])

    p = sub.add_parser("curve", help="univariate t-test sensitivity curve")
    common(p, with_estimators=True)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("surface", help="bivariate informed t-test surface")
    common(p, with_estimators=True)
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("mcmc-study", help="MAE/RMSE vs number of draws")
    common(p, with_estimators=True)
    p.set_defaults(func=cmd_mcmc_study)

    p = sub.add_parser("bma", help="model-averaged meta-analysis inclusion curve")
    common(p, with_strategy=True)
    p.set_defaults(func=cmd_bma)

    p = sub.add_parser("gen-meta", help="generate a synthetic meta dataset")
    p.add_argument("--k", type=int, default=9)
    p.add_argument("--mu", type=float, default=0.2)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--se-lo", type=float, default=0.08)
    p.add_argument("--se-hi", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-file", default="meta_synthetic.csv")
    p.set_defaults(func=cmd_gen_meta)

    p = sub.add_parser("validate", help="run the acceptance criteria")
    p.add_argument("--list", action="store_true", help="list criteria without running")
    p.add_argument("--criteria", help="comma-separated criterion ids to run")
    p.add_argument("--out", default="out/validate")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except (InvalidDataError, ConvergenceError, MixingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"done in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
