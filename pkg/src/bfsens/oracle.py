"""Exact quadrature oracle: marginal likelihoods, anchors, brute-force curves.

Serves as ground truth for validating the fast single-fit method and as the
source of anchor Bayes factors. Two independent quadrature rules (adaptive
Simpson and Gauss-Kronrod) are available; every reported log marginal
likelihood can be cross-checked between them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate
from scipy.stats import invgamma

from .errors import InvalidDataError, QuadratureError, SupportError
from .models import (
    ConditionalPrior,
    HeterogeneityPrior,
    HyperPrior,
    MetaData,
    SensitivityModel,
    TTestSufficient,
    conjugate_log_z,
    meta_loglik,
    ttest_loglik,
)

__all__ = [
    "QuadratureSpec",
    "AnchorResult",
    "integrate_adaptive",
    "marginal_likelihood_ttest",
    "marginal_likelihood_meta",
    "meta_component_log_z",
    "anchor_bf",
    "exact_bf_curve",
    "exact_log_z",
    "cross_validated_log_z",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Adaptive quadrature settings.

    Tolerances are interpreted on the log-marginal-likelihood scale, i.e. as
    relative tolerances on the integral value.
    """

    method: str = "gauss-kronrod"  # or "adaptive-simpson"
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    max_depth: int = 30

    def __post_init__(self):
        if self.method not in ("gauss-kronrod", "adaptive-simpson"):
            raise InvalidDataError(f"unknown quadrature method {self.method!r}")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise InvalidDataError("quadrature tolerances must be positive")
        if self.max_depth < 10:
            raise InvalidDataError("max_depth must be >= 10")


@dataclass(frozen=True)
class AnchorResult:
    """A directly computed Bayes factor that calibrates a sensitivity curve."""

    gamma0: np.ndarray
    log_bf10: float
    method: str
    est_error: float

    def __post_init__(self):
        object.__setattr__(self, "gamma0", np.atleast_1d(np.asarray(self.gamma0, dtype=float)))
        if not math.isfinite(self.est_error) or self.est_error < 0:
            raise InvalidDataError("est_error must be finite and nonnegative")


# ---------------------------------------------------------------------------
# Quadrature rules


def _adaptive_simpson(f, a, b, abs_tol, rel_tol, max_depth):
    """Stack-based adaptive Simpson with Richardson extrapolation.

    Returns (value, error_estimate); raises QuadratureError when the depth
    budget is exhausted before the tolerance is met.
    """
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    # pilot refinement for the relative-tolerance scale
    scale = abs(whole) if whole != 0.0 else 1.0
    tol0 = max(abs_tol, rel_tol * scale)
    stack = [(a, b, fa, fm, fb, whole, tol0, 0)]
    total = 0.0
    err_total = 0.0
    failed = False
    while stack:
        a0, b0, fa0, fm0, fb0, s0, tol, depth = stack.pop()
        m = 0.5 * (a0 + b0)
        lm = 0.5 * (a0 + m)
        rm = 0.5 * (m + b0)
        flm, frm = f(lm), f(rm)
        sl = (m - a0) / 6.0 * (fa0 + 4.0 * flm + fm0)
        sr = (b0 - m) / 6.0 * (fm0 + 4.0 * frm + fb0)
        err = (sl + sr - s0) / 15.0
        if abs(err) <= tol or depth >= max_depth:
            total += sl + sr + err
            err_total += abs(err)
            if abs(err) > tol:
                failed = True
        else:
            stack.append((a0, m, fa0, flm, fm0, sl, 0.5 * tol, depth + 1))
            stack.append((m, b0, fm0, frm, fb0, sr, 0.5 * tol, depth + 1))
    if failed and err_total > tol0:
        raise QuadratureError(
            f"adaptive Simpson did not converge (error ~ {err_total:.3e})",
            estimate=total,
            error_bound=err_total,
        )
    return total, err_total


def integrate_adaptive(f, a, b, spec: QuadratureSpec):
    """Integrate scalar-valued f over [a, b] per the requested rule.

    Returns (value, error_estimate).
    """
    if spec.method == "adaptive-simpson":
        return _adaptive_simpson(f, a, b, spec.abs_tol, spec.rel_tol, spec.max_depth)
    out = integrate.quad(
        f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=200, full_output=1
    )
    value, err = out[0], out[1]
    if len(out) > 3:  # warning message present
        raise QuadratureError(
            f"Gauss-Kronrod did not converge: {out[3]}", estimate=value, error_bound=err
        )
    return value, err


def _log_integral(log_f, a, b, spec: QuadratureSpec, n_probe: int = 65,
                  vectorized: bool = True):
    """log of int_a^b exp(log_f(u)) du, with a probed max-shift for stability."""
    probes = np.linspace(a, b, n_probe)[1:-1]
    if vectorized:
        probe_vals = log_f(probes)
    else:
        probe_vals = np.array([log_f(p) for p in probes])
    shift = float(np.max(probe_vals))
    if not math.isfinite(shift):
        shift = 0.0

    def f(u):
        v = log_f(u)
        return math.exp(v - shift) if math.isfinite(v) else 0.0

    value, err = integrate_adaptive(f, a, b, spec)
    if value <= 0:
        raise QuadratureError("integral evaluated to a nonpositive value",
                              estimate=value, error_bound=err)
    return shift + math.log(value), err / value


# ---------------------------------------------------------------------------
# t-test marginal likelihoods


def marginal_likelihood_ttest(suff: TTestSufficient, prior: ConditionalPrior | None,
                              gamma, quad: QuadratureSpec | None = None) -> tuple[float, float]:
    """log Z(gamma) = log int p(t | delta) p(delta | gamma) ddelta.

    ``prior = None`` is the point null delta = 0 (zero-dimensional integral).
    Infinite delta ranges are mapped to (-pi/2, pi/2) by the tangent
    substitution matched to the prior's location and scale. Returns
    (log Z, error bound on the log scale).
    """
    quad = quad or QuadratureSpec()
    if prior is None:
        return float(ttest_loglik(suff, 0.0)), 0.0
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    if prior.kind == "cauchy-scale":
        loc, scale = 0.0, float(g[0])
        if scale <= 0:
            raise SupportError("cauchy-scale gamma must be strictly positive")

        # delta = scale * tan(u): Cauchy prior mass becomes du / pi exactly
        def log_f(u):
            delta = loc + scale * np.tan(u)
            return ttest_loglik(suff, delta) - math.log(math.pi)

    elif prior.kind in ("normal-meansd", "normal-sd"):
        if prior.kind == "normal-sd":
            loc, scale = 0.0, float(g[0])
        else:
            loc, scale = float(g[0]), float(g[1])
        if scale <= 0:
            raise SupportError("normal prior sd must be strictly positive")

        def log_f(u):
            tanu = np.tan(u)
            delta = loc + scale * tanu
            jac = -2.0 * np.log(np.cos(u))
            return (
                ttest_loglik(suff, delta)
                - 0.5 * tanu * tanu
                - 0.5 * math.log(2.0 * math.pi)
                + jac
            )

    else:  # pragma: no cover
        raise InvalidDataError(f"unsupported prior kind {prior.kind!r}")
    eps = 1e-12
    return _log_integral(log_f, -math.pi / 2 + eps, math.pi / 2 - eps, quad)


# ---------------------------------------------------------------------------
# Meta-analysis marginal likelihoods


def _meta_fe_null_log_z(data: MetaData) -> float:
    return float(meta_loglik(data, 0.0, 0.0))


def marginal_likelihood_meta(data: MetaData,
                             prior_mu: ConditionalPrior | None,
                             prior_tau: HeterogeneityPrior | None,
                             gamma=None,
                             quad: QuadratureSpec | None = None) -> tuple[float, float]:
    """log Z for one meta-analysis component.

    The integral is 0-, 1-, or 2-dimensional depending on which of mu, tau
    are free: ``prior_mu = None`` fixes mu = 0 and ``prior_tau = None`` fixes
    tau = 0. The tau integral is transformed through the Inverse-Gamma
    quantile function (truncating at the 1 - 1e-10 quantile); the mu integral
    uses the tangent substitution. Returns (log Z, log-scale error bound).
    """
    quad = quad or QuadratureSpec()
    if prior_mu is None and prior_tau is None:
        return _meta_fe_null_log_z(data), 0.0

    if prior_mu is not None:
        if prior_mu.kind != "normal-sd":
            raise InvalidDataError("meta-analysis mu prior must be normal-sd")
        g = np.atleast_1d(np.asarray(gamma, dtype=float))
        sigma_mu = float(g[0])
        if sigma_mu <= 0:
            raise SupportError("sigma_mu must be strictly positive")

    eps = 1e-12
    if prior_tau is None:
        # 1-D over mu (fixed-effect alternative)
        def log_f(u):
            tanu = np.tan(u)
            mu = sigma_mu * tanu
            return (
                meta_loglik(data, mu, 0.0)
                - 0.5 * tanu * tanu
                - 0.5 * math.log(2.0 * math.pi)
                - 2.0 * np.log(np.cos(u))
            )

        return _log_integral(log_f, -math.pi / 2 + eps, math.pi / 2 - eps, quad)

    dist = invgamma(prior_tau.shape, scale=prior_tau.scale)
    v_hi = 1.0 - 1e-10  # truncate tau at the 1 - 1e-10 prior quantile

    if prior_mu is None:
        # 1-D over tau (random-effects null)
        def log_f(v):
            tau = dist.ppf(v)
            return meta_loglik(data, 0.0, tau)

        return _log_integral(log_f, eps, v_hi, quad)

    # 2-D: outer tau, inner mu; inner tolerance tightened so the inner error
    # stays negligible inside the outer rule's error estimate
    inner = replace(quad, abs_tol=quad.abs_tol * 1e-2, rel_tol=quad.rel_tol * 1e-2)

    def log_outer(v):
        tau = dist.ppf(v)

        def log_f(u):
            tanu = np.tan(u)
            mu = sigma_mu * tanu
            return (
                meta_loglik(data, mu, tau)
                - 0.5 * tanu * tanu
                - 0.5 * math.log(2.0 * math.pi)
                - 2.0 * np.log(np.cos(u))
            )

        val, _ = _log_integral(log_f, -math.pi / 2 + eps, math.pi / 2 - eps, inner)
        return val

    return _log_integral(log_outer, eps, v_hi, quad, n_probe=17, vectorized=False)


def meta_component_log_z(data: MetaData, component: str, gamma,
                         tau_prior: HeterogeneityPrior | None = None,
                         quad: QuadratureSpec | None = None) -> tuple[float, float]:
    """log Z for one of the four ensemble components: fe0, re0, fe1, re1."""
    tp = tau_prior if tau_prior is not None else HeterogeneityPrior()
    mu_prior = ConditionalPrior("normal-sd")
    if component == "fe0":
        return marginal_likelihood_meta(data, None, None, None, quad)
    if component == "re0":
        return marginal_likelihood_meta(data, None, tp, None, quad)
    if component == "fe1":
        return marginal_likelihood_meta(data, mu_prior, None, gamma, quad)
    if component == "re1":
        return marginal_likelihood_meta(data, mu_prior, tp, gamma, quad)
    raise InvalidDataError(f"unknown component {component!r}")


# ---------------------------------------------------------------------------
# Generic model-facing interface


def exact_log_z(model: SensitivityModel, gamma,
                quad: QuadratureSpec | None = None) -> tuple[float, float]:
    """log Z(gamma) for a sensitivity model, dispatched on the model kind."""
    quad = quad or QuadratureSpec()
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    if not np.all(np.isfinite(g)):
        raise SupportError("gamma must be finite")
    if model.name in ("ttest-cauchy", "ttest-informed"):
        return marginal_likelihood_ttest(model.payload["suff"], model.cond_prior, g, quad)
    if model.name == "meta-fe":
        return marginal_likelihood_meta(model.payload["data"],
                                        model.cond_prior, None, g, quad)
    if model.name == "meta-re":
        return marginal_likelihood_meta(model.payload["data"], model.cond_prior,
                                        model.payload["tau_prior"], g, quad)
    if model.name == "conjugate-normal":
        return float(np.atleast_1d(conjugate_log_z(model, g))[0]), 0.0
    raise InvalidDataError(f"no oracle for model {model.name!r}")


def null_log_z(model: SensitivityModel) -> float:
    """log Z under the matching point null hypothesis."""
    if model.name in ("ttest-cauchy", "ttest-informed"):
        return float(ttest_loglik(model.payload["suff"], 0.0))
    if model.name in ("meta-fe", "meta-re"):
        return _meta_fe_null_log_z(model.payload["data"])
    if model.name == "conjugate-normal":
        y = model.payload["y"]
        s = model.payload["sigma_y"]
        return -0.5 * ((y / s) ** 2) - math.log(s) - 0.5 * math.log(2.0 * math.pi)
    raise InvalidDataError(f"no null for model {model.name!r}")


def cross_validated_log_z(model: SensitivityModel, gamma,
                          quad: QuadratureSpec | None = None,
                          agree_tol: float = 1e-6) -> tuple[float, float]:
    """log Z computed by both quadrature rules; raises if they disagree."""
    quad = quad or QuadratureSpec()
    gk = replace(quad, method="gauss-kronrod")
    asim = replace(quad, method="adaptive-simpson")
    v1, e1 = exact_log_z(model, gamma, gk)
    v2, e2 = exact_log_z(model, gamma, asim)
    if abs(v1 - v2) > agree_tol:
        raise QuadratureError(
            f"quadrature rules disagree by {abs(v1 - v2):.3e} at gamma={gamma}",
            estimate=v1, error_bound=abs(v1 - v2),
        )
    return v1, max(e1, abs(v1 - v2))


def anchor_bf(model: SensitivityModel, gamma0,
              quad: QuadratureSpec | None = None,
              cross_validate: bool = True) -> AnchorResult:
    """Anchor Bayes factor BF10(gamma0) against the model's point null."""
    quad = quad or QuadratureSpec()
    g0 = np.atleast_1d(np.asarray(gamma0, dtype=float))
    if not np.all(model.hyper.contains(g0, strict=True)):
        raise SupportError(f"anchor {g0} must lie strictly inside the hyper-prior support")
    if cross_validate:
        log_z, err = cross_validated_log_z(model, g0, quad)
    else:
        log_z, err = exact_log_z(model, g0, quad)
    log_bf = log_z - null_log_z(model)
    return AnchorResult(gamma0=g0, log_bf10=log_bf, method=quad.method, est_error=err)


def exact_bf_curve(model: SensitivityModel, grid,
                   quad: QuadratureSpec | None = None,
                   cross_validate: bool = True):
    """Brute-force log BF10(gamma) over a grid, flagged exact.

    ``grid`` is (P,) for 1-D gamma or (P, 2) for 2-D. Every point is a full
    quadrature refit; with ``cross_validate`` both rules are run and must
    agree to 1e-6.
    """
    from .sensitivity import SensitivityCurve  # deferred: avoids import cycle

    quad = quad or QuadratureSpec()
    pts = np.asarray(grid, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    log_z0 = null_log_z(model)
    log_bf = np.empty(pts.shape[0])
    worst = 0.0
    for i, g in enumerate(pts):
        if cross_validate:
            v, e = cross_validated_log_z(model, g, quad)
        else:
            v, e = exact_log_z(model, g, quad)
        log_bf[i] = v - log_z0
        worst = max(worst, e)
    anchor = AnchorResult(gamma0=pts[0], log_bf10=float(log_bf[0]),
                          method=quad.method, est_error=worst)
    return SensitivityCurve(
        points=pts,
        log_bf=log_bf,
        flags=np.array(["exact"] * pts.shape[0], dtype=object),
        anchor=anchor,
        method="oracle",
    )


# ---------------------------------------------------------------------------
# Inclusion Bayes factors for the four-model meta ensemble


def inclusion_log_bf(data: MetaData, gamma, prior_probs=None,
                     tau_prior: HeterogeneityPrior | None = None,
                     quad: QuadratureSpec | None = None,
                     cross_validate: bool = False) -> float:
    """Exact log inclusion BF for mu at one gamma, recomputing all four
    component marginal likelihoods (a complete per-point refit)."""
    p = _normalize_probs(prior_probs)
    vals = {}
    for comp in ("fe0", "re0", "fe1", "re1"):
        if cross_validate:
            gk, _ = meta_component_log_z(data, comp, gamma, tau_prior,
                                         replace(quad or QuadratureSpec(), method="gauss-kronrod"))
            sim, _ = meta_component_log_z(data, comp, gamma, tau_prior,
                                          replace(quad or QuadratureSpec(), method="adaptive-simpson"))
            if abs(gk - sim) > 1e-6:
                raise QuadratureError(
                    f"quadrature rules disagree on {comp}: {abs(gk - sim):.3e}",
                    estimate=gk, error_bound=abs(gk - sim))
            vals[comp] = gk
        else:
            vals[comp], _ = meta_component_log_z(data, comp, gamma, tau_prior, quad)
    num = np.logaddexp(vals["fe1"] + math.log(p["fe1"]), vals["re1"] + math.log(p["re1"]))
    den = np.logaddexp(vals["fe0"] + math.log(p["fe0"]), vals["re0"] + math.log(p["re0"]))
    return float(num - den)


def _normalize_probs(prior_probs):
    if prior_probs is None:
        return {"fe0": 0.25, "re0": 0.25, "fe1": 0.25, "re1": 0.25}
    p = dict(prior_probs)
    total = sum(p.values())
    if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
        raise InvalidDataError(f"prior model probabilities must sum to 1 (got {total})")
    return p
