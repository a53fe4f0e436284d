"""Acceptance criteria: one callable per criterion, shared by the CLI
``validate`` subcommand and the pytest acceptance suite.

Every criterion runs with fixed seeds, writes its artifacts under the
given working directory, and reports deterministic numeric details (no
wall-clock values go into files, so output trees are byte-identical
across runs).
"""

from __future__ import annotations

import json
import math
import subprocess
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from .cli import ingest_meta, ingest_ttest
from .density import exact_density, iwmde_fit, kde_fit
from .mcmc import ChainConfig, ProductSpaceSpec, sample_extended, sample_product_space
from .models import (
    ConditionalPrior,
    HeterogeneityPrior,
    HyperPrior,
    conjugate_log_z,
    conjugate_normal_model,
    default_ttest_model,
    informed_ttest_model,
    meta_model,
)
from .oracle import (
    AnchorResult,
    QuadratureSpec,
    anchor_bf,
    exact_bf_curve,
    exact_log_z,
    inclusion_log_bf,
    meta_component_log_z,
    null_log_z,
)
from .sensitivity import (
    EnsembleSpec,
    bf_curve,
    bf_surface,
    curve_error_report,
    inclusion_bf_curve_bridge,
    inclusion_bf_curve_product_space,
    write_curve_csv,
)

OOSTERWIJK = {"n1": 53, "mean1": 4.63, "sd1": 1.48, "n2": 57, "mean2": 4.87, "sd2": 1.32}
ANCHOR_R = math.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class Criterion:
    id: int
    name: str
    budget_s: float
    func: object


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    details: dict
    runtime_s: float


def _workdir(base: Path, cid: int) -> Path:
    d = Path(base) / f"criterion_{cid:02d}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _ttest_setup(grid_points: int = 100):
    model = default_ttest_model(ingest_ttest(OOSTERWIJK))
    lo, hi = model.hyper.bounds[0]
    grid = np.linspace(lo + 1e-3 * (hi - lo), hi, grid_points)
    return model, grid


def _study_row(model, grid, oracle_curve, anchor, seed, n_total, estimators):
    cfg = ChainConfig(seed=seed, n_chains=3, n_warmup=2500,
                      n_keep=max(n_total // 3, 1000))
    draws = sample_extended(model, cfg)
    out = {}
    for name in estimators:
        if name == "iwmde":
            dens = iwmde_fit(draws, model, force=True)
        else:
            dens = kde_fit(draws.gamma[:, 0], support=model.hyper.bounds)
        curve = bf_curve(anchor, dens, model.hyper, grid, method=name)
        out[name] = curve_error_report(curve, oracle_curve, support=model.hyper.bounds)
    return out


# ---------------------------------------------------------------------------
# Criteria


def c01_exact_identity(work: Path):
    """Conjugate toy: the anchor-times-density-ratio identity is exact."""
    model = conjugate_normal_model(y=1.0, sigma_y=1.0, bounds=(0.1, 4.0))
    grid = np.linspace(0.1, 4.0, 100)
    oracle_curve = exact_bf_curve(model, grid, cross_validate=False)
    dens = exact_density(lambda g: np.exp(conjugate_log_z(model, g)), model.hyper.bounds)
    anchor = anchor_bf(model, [1.0], cross_validate=False)
    curve = bf_curve(anchor, dens, model.hyper, grid)
    write_curve_csv(curve, work / "identity_curve.csv")
    max_err = float(np.max(np.abs(curve.log_bf - oracle_curve.log_bf)))
    return max_err <= 1e-10, {"max_abs_dlogbf": max_err, "tolerance": 1e-10}


def c02_iwmde_accuracy(work: Path):
    """IWMDE truncated MAE at 3,000 and 30,000 draws on the default t-test."""
    model, grid = _ttest_setup()
    anchor = anchor_bf(model, [ANCHOR_R])
    oracle_curve = exact_bf_curve(model, grid, cross_validate=True)
    r3 = _study_row(model, grid, oracle_curve, anchor, 101, 3000, ["iwmde"])
    r30 = _study_row(model, grid, oracle_curve, anchor, 102, 30000, ["iwmde"])
    details = {"mae_t_3000": r3["iwmde"]["mae_t"], "bound_3000": 0.003,
               "mae_t_30000": r30["iwmde"]["mae_t"], "bound_30000": 0.016}
    with open(work / "iwmde_accuracy.json", "w") as fh:
        json.dump(details, fh, indent=2, sort_keys=True)
        fh.write("\n")
    passed = (r3["iwmde"]["mae_t"] <= 0.003) and (r30["iwmde"]["mae_t"] <= 0.016)
    return passed, details


def c03_kde_accuracy_trend(work: Path):
    """KDE error bands and the draw-count trend of Table-1 shape."""
    model, grid = _ttest_setup()
    anchor = anchor_bf(model, [ANCHOR_R])
    oracle_curve = exact_bf_curve(model, grid, cross_validate=True)
    counts = [3000, 10000, 30000, 100000, 300000]
    rows = {}
    for i, n in enumerate(counts):
        rows[n] = _study_row(model, grid, oracle_curve, anchor, 110 + i, n,
                             ["kde", "iwmde"])
    with open(work / "mcmc_study.csv", "w") as fh:
        fh.write("n,method,mae,rmse,mae_t,rmse_t\n")
        for n in counts:
            for name in ("kde", "iwmde"):
                r = rows[n][name]
                fh.write(f"{n},{name},{r['mae']:.17g},{r['rmse']:.17g},"
                         f"{r['mae_t']:.17g},{r['rmse_t']:.17g}\n")
    checks = {
        "kde_mae_3000": rows[3000]["kde"]["mae"],
        "kde_mae_300000": rows[300000]["kde"]["mae"],
        "kde_mae_t_decreasing": rows[300000]["kde"]["mae_t"] < rows[3000]["kde"]["mae_t"],
        "iwmde_beats_kde_everywhere": all(
            rows[n]["iwmde"]["mae_t"] < rows[n]["kde"]["mae_t"] for n in counts),
    }
    passed = (checks["kde_mae_3000"] <= 0.5 and checks["kde_mae_300000"] <= 0.1
              and checks["kde_mae_t_decreasing"]
              and checks["iwmde_beats_kde_everywhere"])
    return passed, checks


def c04_estimator_dominance(work: Path):
    """IWMDE beats KDE in >= 19 of 20 seed replicates at 3,000 draws."""
    model, grid = _ttest_setup()
    anchor = anchor_bf(model, [ANCHOR_R])
    oracle_curve = exact_bf_curve(model, grid, cross_validate=False)
    wins = 0
    rows = []
    for rep in range(20):
        r = _study_row(model, grid, oracle_curve, anchor, 200 + rep, 3000,
                       ["kde", "iwmde"])
        win = r["iwmde"]["mae_t"] < r["kde"]["mae_t"]
        wins += win
        rows.append((200 + rep, r["iwmde"]["mae_t"], r["kde"]["mae_t"], int(win)))
    with open(work / "dominance.csv", "w") as fh:
        fh.write("seed,iwmde_mae_t,kde_mae_t,iwmde_wins\n")
        for row in rows:
            fh.write(f"{row[0]},{row[1]:.17g},{row[2]:.17g},{row[3]}\n")
    return wins >= 19, {"wins": wins, "replicates": 20, "required": 19}


def c05_bivariate_surface(work: Path):
    """Informed t-test surface: IWMDE accuracy + error concentration."""
    model = informed_ttest_model(ingest_ttest(OOSTERWIJK))
    g1 = np.linspace(0.0, 1.0, 41)
    g2 = np.linspace(0.05, 1.0, 41)
    pts = np.column_stack([np.repeat(g1, g2.size), np.tile(g2, g1.size)])
    oracle_surf = exact_bf_curve(model, pts, cross_validate=False)
    anchor = anchor_bf(model, [0.5, 0.5])
    draws = sample_extended(model, ChainConfig(seed=301, n_chains=3,
                                               n_warmup=2500, n_keep=10000))
    dens = iwmde_fit(draws, model, force=True)
    surf = bf_surface(anchor, dens, model.hyper, (g1, g2), method="iwmde")
    write_curve_csv(surf, work / "surface_iwmde.csv")
    write_curve_csv(oracle_surf, work / "surface_oracle.csv")
    ok = surf.ok & oracle_surf.ok
    err = np.abs(surf.log_bf - oracle_surf.log_bf)
    median_err = float(np.median(err[ok]))
    corner = (pts[:, 0] > 0.5) & (pts[:, 1] < 0.525)
    mean_corner = float(np.mean(err[ok & corner]))
    mean_else = float(np.mean(err[ok & ~corner]))
    details = {"median_abs_log_ratio": median_err, "bound": 0.1,
               "mean_err_corner": mean_corner, "mean_err_elsewhere": mean_else,
               "n_blank": int(np.sum(~surf.ok))}
    passed = median_err <= 0.1 and mean_corner >= mean_else
    return passed, details


def _bma_setup():
    data = ingest_meta("reference")
    hyper = HyperPrior([(0.0, 2.0)])
    tau_prior = HeterogeneityPrior(1.0, 0.15)
    ens = EnsembleSpec()
    return data, hyper, tau_prior, ens


def c06_bma_agreement(work: Path):
    """Bridge and product-space inclusion curves agree with each other and
    with complete quadrature refits on the 10-point validation grid."""
    data, hyper, tau_prior, ens = _bma_setup()
    gamma0 = [1.0]
    lo, hi = hyper.bounds[0]
    grid = np.linspace(lo + 1e-3 * (hi - lo), hi, 100)
    anchors = {c: meta_component_log_z(data, c, gamma0, tau_prior)[0]
               for c in ("fe0", "re0", "fe1", "re1")}
    p = ens.prior_probs
    log_num0 = np.logaddexp(anchors["fe1"] + math.log(p["fe1"]),
                            anchors["re1"] + math.log(p["re1"]))
    log_den0 = np.logaddexp(anchors["fe0"] + math.log(p["fe0"]),
                            anchors["re0"] + math.log(p["re0"]))
    anchor_incl = AnchorResult(gamma0=np.array(gamma0),
                               log_bf10=float(log_num0 - log_den0),
                               method="oracle", est_error=0.0)

    m_fe = meta_model(data, include_tau=False)
    m_re = meta_model(data, include_tau=True, tau_prior=tau_prior)
    d_fe = sample_extended(m_fe, ChainConfig(seed=401, n_chains=3, n_warmup=2500,
                                             n_keep=10000))
    d_re = sample_extended(m_re, ChainConfig(seed=402, n_chains=3, n_warmup=2500,
                                             n_keep=10000))
    curve_bridge = inclusion_bf_curve_bridge(
        anchors, iwmde_fit(d_fe, m_fe, force=True), iwmde_fit(d_re, m_re, force=True),
        hyper, ens, grid, gamma0)
    d_ps = sample_product_space(ProductSpaceSpec(), data, hyper, tau_prior,
                                ChainConfig(seed=403, n_chains=3, n_warmup=2500,
                                            n_keep=10000))
    dens_ps = iwmde_fit(d_ps, cond_prior=ConditionalPrior("normal-sd"),
                        hyper=hyper, force=True)
    curve_ps = inclusion_bf_curve_product_space(anchor_incl, dens_ps, hyper,
                                                grid, draws=d_ps)
    write_curve_csv(curve_bridge, work / "inclusion_curve_bridge.csv")
    write_curve_csv(curve_ps, work / "inclusion_curve_product_space.csv")

    interior = (grid >= lo + 0.05 * (hi - lo)) & (grid <= hi - 0.05 * (hi - lo))
    both_ok = curve_bridge.ok & curve_ps.ok & interior
    max_disagreement = float(np.max(np.abs(
        curve_bridge.log_bf[both_ok] - curve_ps.log_bf[both_ok])))

    v_grid = np.linspace(0.2, 2.0, 10)
    worst_bridge = worst_ps = 0.0
    with open(work / "validation.csv", "w") as fh:
        fh.write("gamma,log_bf_incl_exact,log_ratio_bridge,log_ratio_product_space\n")
        for g in v_grid:
            exact = inclusion_log_bf(data, [g], tau_prior=tau_prior,
                                     cross_validate=True)
            idx = int(np.argmin(np.abs(grid - g)))
            rb = float(curve_bridge.log_bf[idx] - exact)
            rp = float(curve_ps.log_bf[idx] - exact)
            worst_bridge = max(worst_bridge, abs(rb))
            worst_ps = max(worst_ps, abs(rp))
            fh.write(f"{g:.17g},{exact:.17g},{rb:.17g},{rp:.17g}\n")
    details = {"max_interior_disagreement": max_disagreement, "bound": 0.1,
               "worst_validation_bridge": worst_bridge,
               "worst_validation_product_space": worst_ps}
    passed = (max_disagreement <= 0.1 and worst_bridge <= 0.1 and worst_ps <= 0.1)
    return passed, details


def c07_anchor_shift(work: Path):
    """Multiplying the anchor by exp(eps) shifts the whole curve by eps."""
    model = conjugate_normal_model(y=1.0, sigma_y=1.0, bounds=(0.1, 4.0))
    grid = np.linspace(0.1, 4.0, 100)
    dens = exact_density(lambda g: np.exp(conjugate_log_z(model, g)), model.hyper.bounds)
    anchor = anchor_bf(model, [1.0], cross_validate=False)
    base = bf_curve(anchor, dens, model.hyper, grid)
    eps = 0.3721
    shifted_anchor = AnchorResult(anchor.gamma0, anchor.log_bf10 + eps,
                                  anchor.method, anchor.est_error)
    shifted = bf_curve(shifted_anchor, dens, model.hyper, grid)
    max_dev = float(np.max(np.abs((shifted.log_bf - base.log_bf) - eps)))
    also = base.shifted(eps)
    max_dev2 = float(np.max(np.abs(also.log_bf - shifted.log_bf)))
    details = {"max_shift_deviation": max_dev, "rebuild_vs_shifted": max_dev2,
               "tolerance": 1e-12}
    return max_dev <= 1e-12 and max_dev2 <= 1e-12, details


def c08_sddr_chain(work: Path):
    """Three-factor Bayes factor chain from draws matches the direct value."""
    model = conjugate_normal_model(y=1.0, sigma_y=1.0, bounds=(0.1, 4.0))
    anchor = anchor_bf(model, [1.0], cross_validate=False)
    draws = sample_extended(model, ChainConfig(seed=501, n_chains=3,
                                               n_warmup=2500, n_keep=10000))
    dens = iwmde_fit(draws, model, weight="conditional")
    gx = float(np.median(draws.gamma[:, 0]))
    log_pi = -math.log(model.hyper.volume)
    factor2 = math.log(dens.pdf(gx)) - log_pi
    factor3 = log_pi - math.log(dens.pdf(float(anchor.gamma0[0])))
    chain = anchor.log_bf10 + factor2 + factor3
    direct = exact_log_z(model, [gx])[0] - null_log_z(model)
    rel = abs(math.exp(chain - direct) - 1.0)
    details = {"gamma_x": gx, "chain_log_bf": chain, "direct_log_bf": direct,
               "relative_error": rel, "bound": 0.05}
    return rel <= 0.05, details


def c09_null_collapse(work: Path):
    """BF10 approaches 1 as the prior scale shrinks toward zero."""
    model, _ = _ttest_setup()
    log_bf_tiny = exact_log_z(model, [1e-3])[0] - null_log_z(model)
    anchor = anchor_bf(model, [ANCHOR_R])
    draws = sample_extended(model, ChainConfig(seed=601, n_chains=3,
                                               n_warmup=2500, n_keep=10000))
    small_grid = np.array([0.002, 0.008, 0.014, 0.02, 0.026, 0.032, 0.04, 0.05])
    trends, near_unity = {}, {}
    for name in ("iwmde", "kde"):
        if name == "iwmde":
            dens = iwmde_fit(draws, model, force=True)
        else:
            dens = kde_fit(draws.gamma[:, 0], support=model.hyper.bounds)
        curve = bf_curve(anchor, dens, model.hyper, small_grid, method=name)
        trends[name] = float(spearmanr(small_grid, np.abs(curve.log_bf)).statistic)
        near_unity[name] = float(np.max(np.abs(curve.log_bf)))
    # the KDE carries its documented 10-20% boundary deviation below the
    # figure grid, so the monotone-trend gate applies to the IWMDE; both
    # estimators must sit in near-unity territory on the shrinking tail
    details = {"oracle_abs_log_bf_at_1e-3": abs(log_bf_tiny), "bound": 0.02,
               "spearman_trend_iwmde": trends["iwmde"],
               "spearman_trend_kde": trends["kde"],
               "max_abs_log_bf_below_0.05_iwmde": near_unity["iwmde"],
               "max_abs_log_bf_below_0.05_kde": near_unity["kde"]}
    passed = (abs(log_bf_tiny) <= 0.02 and trends["iwmde"] > 0
              and near_unity["iwmde"] <= 0.25 and near_unity["kde"] <= 0.25)
    return passed, details


def c10_determinism(work: Path):
    """Two clean CLI runs produce byte-identical output trees."""
    def run(cmd, out):
        res = subprocess.run([sys.executable, "-m", "bfsens.cli", *cmd,
                              "--out", str(out)],
                             capture_output=True, text=True)
        if res.returncode != 0:
            raise RuntimeError(f"cli failed: {res.stderr[-2000:]}")

    def tree_bytes(root: Path) -> dict:
        return {str(p.relative_to(root)): p.read_bytes()
                for p in sorted(root.rglob("*")) if p.is_file()}

    pairs = []
    for tag, cmd in (("validate", ["validate", "--criteria", "1,7"]),
                     ("curve", ["curve", "--seed", "9090", "--estimators", "iwmde",
                                "--config", str(work / "curve_cfg.json")])):
        if tag == "curve":
            with open(work / "curve_cfg.json", "w") as fh:
                json.dump({"chains": {"n_keep": 1000}, "grid_points": 40,
                           "force": True}, fh)
        a, b_dir = work / f"{tag}_run_a", work / f"{tag}_run_b"
        run(cmd, a)
        run(cmd, b_dir)
        ta, tb = tree_bytes(a), tree_bytes(b_dir)
        identical = (set(ta) == set(tb)
                     and all(ta[k] == tb[k] for k in ta))
        pairs.append((tag, identical, len(ta)))
    details = {f"{tag}_identical": ident for tag, ident, _ in pairs}
    details.update({f"{tag}_files": n for tag, _, n in pairs})
    return all(ident for _, ident, _ in pairs), details


def c11_speed_ordering(work: Path):
    """Single extended fit beats 10 quadrature refits by at least 5x.

    The refit path recomputes all four component marginal likelihoods at
    each grid point with the dual-rule validated oracle (a complete
    per-point refit). The extended path is everything the single-fit method
    needs: the anchor, the pilot-tuned product-space fit, the density
    estimate, and the curve evaluation.
    """
    data, hyper, tau_prior, ens = _bma_setup()
    v_grid = np.linspace(0.2, 2.0, 10)

    t0 = time.perf_counter()
    refit_vals = [inclusion_log_bf(data, [g], tau_prior=tau_prior,
                                   cross_validate=True) for g in v_grid]
    refit_time = time.perf_counter() - t0

    t0 = time.perf_counter()
    anchor_log_bf = inclusion_log_bf(data, [1.0], tau_prior=tau_prior,
                                     cross_validate=True)
    anchor = AnchorResult(gamma0=np.array([1.0]), log_bf10=anchor_log_bf,
                          method="oracle", est_error=0.0)
    d_ps = sample_product_space(ProductSpaceSpec(), data, hyper, tau_prior,
                                ChainConfig(seed=701, n_chains=3, n_warmup=2500,
                                            n_keep=10000))
    dens = iwmde_fit(d_ps, cond_prior=ConditionalPrior("normal-sd"),
                     hyper=hyper, force=True)
    curve = inclusion_bf_curve_product_space(anchor, dens, hyper, v_grid, draws=d_ps)
    extended_time = time.perf_counter() - t0

    max_err = float(np.max(np.abs(curve.log_bf - np.array(refit_vals))))
    ratio = refit_time / extended_time
    # wall times go to stdout only so the output tree stays byte-identical
    print(f"  refit path {refit_time:.1f}s, extended path {extended_time:.1f}s, "
          f"speedup {ratio:.1f}x (required >= 5)")
    details = {"speedup_at_least_5": ratio >= 5.0,
               "max_abs_log_ratio_vs_refits": max_err}
    return ratio >= 5.0, details


CRITERIA = [
    Criterion(1, "exact identity on the conjugate toy", 1.0, c01_exact_identity),
    Criterion(2, "IWMDE accuracy (default t-test)", 120.0, c02_iwmde_accuracy),
    Criterion(3, "KDE accuracy and draw-count trend", 600.0, c03_kde_accuracy_trend),
    Criterion(4, "IWMDE dominance over 20 seeds", 600.0, c04_estimator_dominance),
    Criterion(5, "bivariate informed t-test surface", 600.0, c05_bivariate_surface),
    Criterion(6, "BMA strategy agreement + validation grid", 300.0, c06_bma_agreement),
    Criterion(7, "anchor shift propagates exactly", 10.0, c07_anchor_shift),
    Criterion(8, "SDDR chain consistency from draws", 120.0, c08_sddr_chain),
    Criterion(9, "null-collapse limit of the curve", 120.0, c09_null_collapse),
    Criterion(10, "byte-identical CLI determinism", 600.0, c10_determinism),
    Criterion(11, "extended fit at least 5x faster than refits", 900.0,
              c11_speed_ordering),
]


def run_criterion(crit: Criterion, base: Path) -> CriterionResult:
    work = _workdir(base, crit.id)
    t0 = time.perf_counter()
    passed, details = crit.func(work)
    runtime = time.perf_counter() - t0
    if runtime > crit.budget_s:
        passed = False
        details = {**details, "runtime_budget_exceeded": True,
                   "budget_s": crit.budget_s}
    return CriterionResult(id=crit.id, name=crit.name, passed=passed,
                           details=details, runtime_s=runtime)


def run_all(base: Path, criteria=None) -> list:
    base = Path(base)
    selected = criteria if criteria is not None else [c.id for c in CRITERIA]
    by_id = {c.id: c for c in CRITERIA}
    results = []
    for cid in selected:
        if cid not in by_id:
            raise KeyError(f"unknown criterion id {cid}")
        results.append(run_criterion(by_id[cid], base))
    return results
