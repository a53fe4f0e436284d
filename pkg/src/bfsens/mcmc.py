"""Self-contained adaptive MCMC for the extended models.

Random-walk Metropolis within Gibbs with per-coordinate Gaussian proposals
and Robbins-Monro scale adaptation during warmup only. Chains use
independent counter-based Philox streams keyed by (seed, chain_id), and all
variates are pre-generated in a fixed order, so results are bit-identical
across runs and thread schedules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, ndtr, ndtri
from scipy.stats import invgamma, rankdata

from .errors import ConvergenceError, InvalidDataError
from .models import (
    HeterogeneityPrior,
    HyperPrior,
    MetaData,
    SensitivityModel,
    meta_loglik,
    meta_model,
)

__all__ = [
    "ChainConfig",
    "PosteriorDraws",
    "ProductSpaceSpec",
    "sample_extended",
    "sample_product_space",
    "diagnostics",
    "chain_rng",
]

RHAT_THRESHOLD = 1.01
ESS_THRESHOLD = 400.0


@dataclass(frozen=True)
class ChainConfig:
    """Sampler settings; defaults mirror three chains of 10,000 kept draws."""

    seed: int
    n_chains: int = 3
    n_warmup: int = 2500
    n_keep: int = 10000
    target_accept: float = 0.44
    adapt_window: int = 50

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise InvalidDataError("seed must be a 64-bit unsigned integer")
        if self.n_chains < 2:
            raise InvalidDataError("n_chains must be >= 2 for diagnostics")
        if self.n_keep < 1000:
            raise InvalidDataError("n_keep must be >= 1000")
        if self.n_warmup < 1:
            raise InvalidDataError("n_warmup must be positive")
        if not (0.0 < self.target_accept < 1.0):
            raise InvalidDataError("target_accept must be in (0, 1)")
        if self.adapt_window < 1:
            raise InvalidDataError("adapt_window must be positive")


@dataclass
class PosteriorDraws:
    """Joint MCMC draws of (gamma, theta) with chain structure and diagnostics."""

    gamma: np.ndarray  # (N, gamma_dim)
    theta: np.ndarray  # (N, theta_dim)
    chain_id: np.ndarray  # (N,)
    iteration: np.ndarray  # (N,) post-warmup index within chain
    gamma_names: tuple
    theta_names: tuple
    indicator: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)
    converged: bool = True
    indicator_mixed: bool = True

    def __post_init__(self):
        n = self.gamma.shape[0]
        if not (self.theta.shape[0] == self.chain_id.shape[0]
                == self.iteration.shape[0] == n):
            raise InvalidDataError("draw arrays must be row-aligned")
        if self.indicator is not None and self.indicator.shape[0] != n:
            raise InvalidDataError("indicator must align with draws")

    @property
    def n(self) -> int:
        return self.gamma.shape[0]

    @property
    def n_chains(self) -> int:
        return int(self.chain_id.max()) + 1

    def param_matrix(self, name: str) -> np.ndarray:
        """Kept draws of one parameter as a (chains, draws) matrix."""
        if name in self.gamma_names:
            col = self.gamma[:, self.gamma_names.index(name)]
        elif name in self.theta_names:
            col = self.theta[:, self.theta_names.index(name)]
        elif name == "indicator" and self.indicator is not None:
            col = self.indicator.astype(float)
        else:
            raise InvalidDataError(f"unknown parameter {name!r}")
        per = self.n // self.n_chains
        return col.reshape(self.n_chains, per)

    def to_csv(self, path) -> None:
        cols = ["chain", "iteration", *self.gamma_names, *self.theta_names]
        if self.indicator is not None:
            cols.append("indicator")
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for i in range(self.n):
                row = [str(int(self.chain_id[i])), str(int(self.iteration[i]))]
                row += [_fmt(v) for v in self.gamma[i]]
                row += [_fmt(v) for v in self.theta[i]]
                if self.indicator is not None:
                    row.append(str(int(self.indicator[i])))
                fh.write(",".join(row) + "\n")

    @classmethod
    def from_csv(cls, path, gamma_names, theta_names) -> "PosteriorDraws":
        data = np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding=None)
        gamma = np.column_stack([np.atleast_1d(data[n]) for n in gamma_names]).astype(float)
        theta = np.column_stack([np.atleast_1d(data[n]) for n in theta_names]).astype(float)
        chain = np.atleast_1d(data["chain"]).astype(int)
        iteration = np.atleast_1d(data["iteration"]).astype(int)
        names = data.dtype.names
        ind = np.atleast_1d(data["indicator"]).astype(int) if "indicator" in names else None
        draws = cls(gamma=gamma, theta=theta, chain_id=chain, iteration=iteration,
                    gamma_names=tuple(gamma_names), theta_names=tuple(theta_names),
                    indicator=ind)
        draws.diagnostics = diagnostics(draws)
        draws.converged = _all_converged(draws.diagnostics)
        return draws


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def chain_rng(seed: int, chain_id: int, purpose: int = 0) -> np.random.Generator:
    """Counter-based per-chain stream keyed by (seed, chain_id, purpose)."""
    key = np.array([np.uint64(seed), np.uint64((chain_id << 16) | purpose)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


# ---------------------------------------------------------------------------
# Extended-model sampler


def sample_extended(model: SensitivityModel, cfg: ChainConfig) -> PosteriorDraws:
    """Sample the extended model (hyper-prior on gamma) jointly in (gamma, theta).

    theta coordinates move by adapted per-coordinate Gaussian random walks;
    gamma coordinates alternate the adapted walk with an independence
    refresh from the uniform hyper-prior (same Metropolis ratio, far lower
    autocorrelation). Proposals on or outside the open hyper-prior support
    are rejected, so every kept gamma draw is strictly inside. Adaptation
    freezes after warmup. The result carries split rank-normalized R-hat
    and bulk ESS per parameter and is flagged unconverged when any
    R-hat > 1.01 or ESS < 400.
    """
    d_g = model.gamma_dim
    d_t = model.theta_dim
    n_coords = d_g + d_t
    n_iter = cfg.n_warmup + cfg.n_keep
    C = cfg.n_chains
    lo = model.hyper.bounds[:, 0]
    hi = model.hyper.bounds[:, 1]
    width = hi - lo

    # fixed-order variate pre-generation keeps streams trajectory-independent
    Z = np.empty((C, n_iter, n_coords))
    LOG_U = np.empty((C, n_iter, n_coords))
    init_u = np.empty((C, d_g))
    init_z = np.empty((C, d_t))
    for c in range(C):
        rng = chain_rng(cfg.seed, c)
        Z[c] = rng.standard_normal((n_iter, n_coords))
        LOG_U[c] = np.log(rng.random((n_iter, n_coords)))
        init_u[c] = rng.random(d_g)
        init_z[c] = rng.standard_normal(d_t)

    gamma = lo + width * (0.25 + 0.5 * init_u)  # (C, d_g), strictly inside
    theta = np.asarray(model.theta_init, dtype=float) + (
        0.25 * np.abs(model.theta_init) + 0.05) * init_z
    theta = _shrink_into_support(model, theta)

    ll = model.loglik(theta)
    lc = model.cond_prior.logpdf(theta[:, 0], gamma)
    le = model.extra_logprior(theta) if model.extra_logprior is not None else np.zeros(C)

    log_step = np.empty((C, n_coords))
    log_step[:, :d_g] = np.log(0.25 * width)
    log_step[:, d_g:] = np.log(0.25 * np.abs(model.theta_init) + 0.25)
    acc_count = np.zeros((C, n_coords))
    batch_idx = 0

    keep_gamma = np.empty((C, cfg.n_keep, d_g))
    keep_theta = np.empty((C, cfg.n_keep, d_t))

    gauss_batch = 0
    for it in range(n_iter):
        step = np.exp(log_step)
        gauss_move = it % 2 == 0
        gauss_batch += gauss_move
        for k in range(d_g):
            if gauss_move:
                prop = gamma[:, k] + step[:, k] * Z[:, it, k]
            else:
                # independence refresh from the uniform hyper-prior: for a
                # uniform proposal the MH ratio reduces to the same target
                # ratio as the symmetric walk, and it decorrelates the
                # gamma chain far better than local moves alone
                prop = lo[k] + width[k] * ndtr(Z[:, it, k])
            inside = (prop > lo[k]) & (prop < hi[k])
            g_new = gamma.copy()
            g_new[:, k] = np.where(inside, prop, gamma[:, k])
            lc_new = model.cond_prior.logpdf(theta[:, 0], g_new)
            delta = np.where(inside, lc_new - lc, -np.inf)
            acc = LOG_U[:, it, k] < delta
            gamma[acc, k] = prop[acc]
            lc = np.where(acc, lc_new, lc)
            if gauss_move:
                acc_count[:, k] += acc
        for j in range(d_t):
            k = d_g + j
            prop = theta.copy()
            prop[:, j] = theta[:, j] + step[:, k] * Z[:, it, k]
            ll_new = model.loglik(prop)
            lc_new = model.cond_prior.logpdf(prop[:, 0], gamma) if j == 0 else lc
            le_new = (model.extra_logprior(prop)
                      if model.extra_logprior is not None else le)
            delta = (ll_new - ll) + (lc_new - lc) + (le_new - le)
            acc = LOG_U[:, it, k] < delta
            theta[acc, j] = prop[acc, j]
            ll = np.where(acc, ll_new, ll)
            lc = np.where(acc, lc_new, lc)
            le = np.where(acc, le_new, le) if model.extra_logprior is not None else le
            acc_count[:, k] += acc
        if it < cfg.n_warmup and (it + 1) % cfg.adapt_window == 0:
            batch_idx += 1
            rate = acc_count / cfg.adapt_window
            # gamma coordinates only count their Gaussian-move proposals
            rate[:, :d_g] = acc_count[:, :d_g] / max(gauss_batch, 1)
            log_step += (rate - cfg.target_accept) / math.sqrt(batch_idx)
            np.clip(log_step, -12.0, 6.0, out=log_step)
            acc_count[:] = 0.0
            gauss_batch = 0
        if it >= cfg.n_warmup:
            keep_gamma[:, it - cfg.n_warmup] = gamma
            keep_theta[:, it - cfg.n_warmup] = theta

    draws = PosteriorDraws(
        gamma=keep_gamma.reshape(C * cfg.n_keep, d_g),
        theta=keep_theta.reshape(C * cfg.n_keep, d_t),
        chain_id=np.repeat(np.arange(C), cfg.n_keep),
        iteration=np.tile(np.arange(cfg.n_keep), C),
        gamma_names=model.gamma_names,
        theta_names=model.theta_names,
    )
    draws.diagnostics = diagnostics(draws)
    draws.converged = _all_converged(draws.diagnostics)
    return draws


def _shrink_into_support(model: SensitivityModel, theta: np.ndarray) -> np.ndarray:
    """Pull initial states toward theta_init until all prior factors are finite."""
    if model.extra_logprior is None:
        return theta
    center = np.asarray(model.theta_init, dtype=float)
    for _ in range(80):
        bad = ~np.isfinite(model.extra_logprior(theta))
        if not np.any(bad):
            return theta
        theta[bad] = 0.5 * (theta[bad] + center)
    raise InvalidDataError("could not find valid initial states; check theta_init")


# ---------------------------------------------------------------------------
# Product-space spike-and-slab sampler


@dataclass(frozen=True)
class ProductSpaceSpec:
    """Two-component product space: FE (tau spike at 0) vs RE (tau slab).

    ``mu`` is always in the slab with free sigma_mu; the indicator switches
    the heterogeneity structure. The pseudo-prior supplies tau when the FE
    component is active; ``None`` moment-matches an Inverse-Gamma to the tau
    posterior of a short RE-only pilot run.
    """

    prior_fe: float = 0.5
    prior_re: float = 0.5
    pseudo_prior_tau: HeterogeneityPrior | None = None

    def __post_init__(self):
        if self.prior_fe <= 0 or self.prior_re <= 0:
            raise InvalidDataError("component prior probabilities must be positive")
        if not math.isclose(self.prior_fe + self.prior_re, 1.0, abs_tol=1e-9):
            raise InvalidDataError("component prior probabilities must sum to 1")


def fit_pseudo_prior(data: MetaData, tau_prior: HeterogeneityPrior,
                     hyper: HyperPrior, seed: int) -> HeterogeneityPrior:
    """Moment-match an Inverse-Gamma to the tau posterior of a pilot RE run."""
    pilot_model = meta_model(data, include_tau=True, tau_prior=tau_prior,
                             bounds=tuple(hyper.bounds[0]))
    pilot_cfg = ChainConfig(seed=(int(seed) + 0x9E3779B9) % 2**64, n_chains=2,
                            n_warmup=1000, n_keep=1000)
    pilot = sample_extended(pilot_model, pilot_cfg)
    tau = pilot.theta[:, 1]
    m = float(np.mean(tau))
    v = float(np.var(tau))
    if v <= 0 or m <= 0:
        return tau_prior
    shape = max(2.05, m * m / v + 2.0)
    scale = m * (shape - 1.0)
    return HeterogeneityPrior(shape=shape, scale=scale)


def sample_product_space(spec: ProductSpaceSpec, data: MetaData,
                         mu_hyper: HyperPrior, tau_prior: HeterogeneityPrior,
                         cfg: ChainConfig,
                         lik_fe=None, lik_re=None) -> PosteriorDraws:
    """Single-run spike-and-slab sampler over {FE, RE} with shared sigma_mu.

    Draws include the component indicator (0 = FE, 1 = RE). Because mu is
    always present, the pooled sigma_mu column is directly informative for
    the inclusion-BF density ratio. When the indicator never leaves one
    state within a chain, the result is flagged ``indicator_mixed = False``
    (downstream curve construction refuses such draws; retune the
    pseudo-prior).
    """
    if mu_hyper.dim != 1:
        raise InvalidDataError("product-space sampler expects 1-D sigma_mu hyper-prior")
    lik_fe = lik_fe if lik_fe is not None else (lambda mu: meta_loglik(data, mu, 0.0))
    lik_re = lik_re if lik_re is not None else (lambda mu, tau: meta_loglik(data, mu, tau))
    pseudo = spec.pseudo_prior_tau
    if pseudo is None:
        pseudo = fit_pseudo_prior(data, tau_prior, mu_hyper, cfg.seed)
    pseudo_dist = invgamma(pseudo.shape, scale=pseudo.scale)

    lo, hi = mu_hyper.bounds[0]
    width = hi - lo
    C = cfg.n_chains
    n_iter = cfg.n_warmup + cfg.n_keep
    log_prior_odds = math.log(spec.prior_re) - math.log(spec.prior_fe)

    Z = np.empty((C, n_iter, 3))
    LOG_U = np.empty((C, n_iter, 3))
    U_IND = np.empty((C, n_iter))
    U_PSEUDO = np.empty((C, n_iter))
    init = np.empty((C, 4))
    for c in range(C):
        rng = chain_rng(cfg.seed, c, purpose=1)
        Z[c] = rng.standard_normal((n_iter, 3))
        LOG_U[c] = np.log(rng.random((n_iter, 3)))
        U_IND[c] = rng.random(n_iter)
        U_PSEUDO[c] = rng.random(n_iter)
        init[c] = rng.random(4)

    mu = np.mean(data.effects) + 0.1 * (init[:, 0] - 0.5)
    sigma = lo + width * (0.25 + 0.5 * init[:, 1])
    tau = pseudo_dist.ppf(0.25 + 0.5 * init[:, 2])
    m = (init[:, 3] < 0.5).astype(int)

    def ll_eff(mu_, tau_, m_):
        return np.where(m_ == 1, lik_re(mu_, tau_), lik_fe(mu_))

    def log_mu_prior(mu_, sigma_):
        z = mu_ / sigma_
        return -0.5 * z * z - np.log(sigma_) - 0.5 * math.log(2 * math.pi)

    ll = ll_eff(mu, tau, m)

    log_step = np.tile(np.log(np.array([0.2, 0.1, 0.25 * width])), (C, 1))
    acc_count = np.zeros((C, 3))
    prop_count = np.zeros((C, 3))
    batch_idx = 0

    keep = np.empty((C, cfg.n_keep, 4))  # mu, tau, sigma, m

    for it in range(n_iter):
        step = np.exp(log_step)
        # mu
        mu_new = mu + step[:, 0] * Z[:, it, 0]
        ll_new = ll_eff(mu_new, tau, m)
        delta = ll_new - ll + log_mu_prior(mu_new, sigma) - log_mu_prior(mu, sigma)
        acc = LOG_U[:, it, 0] < delta
        mu = np.where(acc, mu_new, mu)
        ll = np.where(acc, ll_new, ll)
        acc_count[:, 0] += acc
        prop_count[:, 0] += 1
        # tau: slab RWM for RE chains, pseudo-prior refresh for FE chains
        in_re = m == 1
        tau_new = tau + step[:, 1] * Z[:, it, 1]
        with np.errstate(invalid="ignore"):
            ll_tau_new = np.where(tau_new > 0, lik_re(mu, np.abs(tau_new)), -np.inf)
        delta = (ll_tau_new + tau_prior.logpdf(tau_new)) - (ll + tau_prior.logpdf(tau))
        acc = in_re & (LOG_U[:, it, 1] < delta)
        tau = np.where(acc, tau_new, tau)
        ll = np.where(acc, ll_tau_new, ll)
        acc_count[:, 1] += acc
        prop_count[:, 1] += in_re
        tau = np.where(~in_re, pseudo_dist.ppf(U_PSEUDO[:, it]), tau)
        # sigma_mu: alternate adapted walk and uniform independence refresh
        if it % 2 == 0:
            s_new = sigma + step[:, 2] * Z[:, it, 2]
        else:
            s_new = lo + width * ndtr(Z[:, it, 2])
        inside = (s_new > lo) & (s_new < hi)
        safe = np.where(inside, s_new, sigma)
        delta = np.where(inside, log_mu_prior(mu, safe) - log_mu_prior(mu, sigma), -np.inf)
        acc = LOG_U[:, it, 2] < delta
        sigma = np.where(acc, s_new, sigma)
        if it % 2 == 0:
            acc_count[:, 2] += acc
            prop_count[:, 2] += 1
        # indicator: Gibbs flip from the full conditional
        ll_re_cur = lik_re(mu, tau)
        ll_fe_cur = lik_fe(mu)
        log_r = (log_prior_odds + ll_re_cur + tau_prior.logpdf(tau)
                 - ll_fe_cur - pseudo.logpdf(tau))
        p_re = expit(log_r)
        m = (U_IND[:, it] < p_re).astype(int)
        ll = np.where(m == 1, ll_re_cur, ll_fe_cur)

        if it < cfg.n_warmup and (it + 1) % cfg.adapt_window == 0:
            batch_idx += 1
            rate = acc_count / np.maximum(prop_count, 1.0)
            adapt = (rate - cfg.target_accept) / math.sqrt(batch_idx)
            adapt[prop_count == 0] = 0.0
            log_step += adapt
            np.clip(log_step, -12.0, 6.0, out=log_step)
            acc_count[:] = 0.0
            prop_count[:] = 0.0
        if it >= cfg.n_warmup:
            keep[:, it - cfg.n_warmup, 0] = mu
            keep[:, it - cfg.n_warmup, 1] = tau
            keep[:, it - cfg.n_warmup, 2] = sigma
            keep[:, it - cfg.n_warmup, 3] = m

    flat = keep.reshape(C * cfg.n_keep, 4)
    draws = PosteriorDraws(
        gamma=flat[:, 2:3],
        theta=flat[:, 0:2],
        chain_id=np.repeat(np.arange(C), cfg.n_keep),
        iteration=np.tile(np.arange(cfg.n_keep), C),
        gamma_names=("sigma_mu",),
        theta_names=("mu", "tau"),
        indicator=flat[:, 3].astype(int),
    )
    per_chain = keep[:, :, 3]
    draws.indicator_mixed = bool(
        np.all(np.any(per_chain == 0, axis=1) & np.any(per_chain == 1, axis=1))
    )
    draws.diagnostics = diagnostics(draws)
    draws.converged = _all_converged(draws.diagnostics) and draws.indicator_mixed
    return draws


# ---------------------------------------------------------------------------
# Convergence diagnostics


def diagnostics(draws: PosteriorDraws) -> dict:
    """Split rank-normalized R-hat and bulk ESS per parameter.

    Chains identical and constant give R-hat 1.0 by convention with the ESS
    flagged degenerate (NaN).
    """
    if draws.n_chains < 2:
        raise InvalidDataError("diagnostics require >= 2 chains")
    if draws.n // draws.n_chains < 100:
        raise InvalidDataError("diagnostics require >= 100 draws per chain")
    out = {}
    for name in (*draws.gamma_names, *draws.theta_names):
        x = draws.param_matrix(name)
        if not np.all(np.isfinite(x)):
            raise InvalidDataError(f"non-finite draws for parameter {name!r}")
        out[name] = _rhat_ess(x)
    return out


def _all_converged(diag: dict) -> bool:
    for stats in diag.values():
        if stats["degenerate"]:
            return False
        if stats["rhat"] > RHAT_THRESHOLD or stats["ess"] < ESS_THRESHOLD:
            return False
    return True


def require_converged(draws: PosteriorDraws, force: bool = False) -> None:
    """Refuse unconverged draws unless forced."""
    if draws.converged or force:
        return
    lines = [
        f"  {name}: rhat={s['rhat']:.4f} ess={s['ess']:.0f}"
        + (" (degenerate)" if s["degenerate"] else "")
        for name, s in draws.diagnostics.items()
    ]
    raise ConvergenceError(
        "MCMC draws failed convergence checks "
        f"(thresholds: rhat <= {RHAT_THRESHOLD}, ess >= {ESS_THRESHOLD:.0f}); "
        "pass force=True to override\n" + "\n".join(lines)
    )


def _split_chains(x: np.ndarray) -> np.ndarray:
    half = x.shape[1] // 2
    return np.concatenate([x[:, :half], x[:, half:2 * half]], axis=0)


def _rank_normalize(x: np.ndarray) -> np.ndarray:
    flat = rankdata(x.ravel())
    z = ndtri((flat - 0.375) / (x.size + 0.25))
    return z.reshape(x.shape)


def _rhat_ess(x: np.ndarray) -> dict:
    if np.allclose(x, x.ravel()[0], rtol=0.0, atol=0.0):
        return {"rhat": 1.0, "ess": float("nan"), "degenerate": True}
    z = _rank_normalize(_split_chains(x))
    m, length = z.shape
    chain_means = z.mean(axis=1)
    chain_vars = z.var(axis=1, ddof=1)
    w = chain_vars.mean()
    b_over_n = chain_means.var(ddof=1)
    var_plus = (length - 1) / length * w + b_over_n
    rhat = math.sqrt(var_plus / w) if w > 0 else 1.0
    ess = _bulk_ess(z, w, var_plus)
    return {"rhat": float(rhat), "ess": float(ess), "degenerate": False}


def _autocov(z: np.ndarray) -> np.ndarray:
    """Biased per-chain autocovariance via FFT; rows are chains."""
    m, length = z.shape
    centered = z - z.mean(axis=1, keepdims=True)
    size = 2 ** int(np.ceil(np.log2(2 * length)))
    f = np.fft.rfft(centered, n=size, axis=1)
    acov = np.fft.irfft(f * np.conj(f), n=size, axis=1)[:, :length].real
    return acov / length


def _bulk_ess(z: np.ndarray, w: float, var_plus: float) -> float:
    m, length = z.shape
    acov = _autocov(z)
    # correct the biased lag-0 term to the ddof=1 variance
    rho = 1.0 - (w - acov.mean(axis=0) * length / (length - 1)) / var_plus
    rho[0] = 1.0
    # Geyer initial monotone positive sequence on paired sums
    max_pairs = (length - 1) // 2
    tau = -1.0
    prev = np.inf
    for k in range(max_pairs):
        pair = rho[2 * k] + rho[2 * k + 1]
        if pair < 0:
            break
        pair = min(pair, prev)
        tau += 2.0 * pair
        prev = pair
    tau = max(tau, 1.0 / math.log10(max(m * length, 10)))
    return m * length / tau
