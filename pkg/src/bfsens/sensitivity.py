"""Assembly of Bayes factor sensitivity curves and surfaces.

The central identity: log BF10(gamma) = log BF10(gamma0)
+ log p(gamma | y) - log p(gamma0 | y) + log pi(gamma0) - log pi(gamma).
It is exact; approximation enters only through the anchor and the density
estimate, and the two errors propagate multiplicatively (additively on the
log scale). Inclusion-BF curves for the four-model meta ensemble support
both encompassing strategies: per-component reconstruction calibrated by
oracle anchors, and a single pooled density ratio from product-space draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .density import DensityEstimate
from .errors import AnchorError, InvalidDataError, MixingError
from .mcmc import PosteriorDraws
from .models import HyperPrior
from .oracle import AnchorResult

__all__ = [
    "SensitivityCurve",
    "EnsembleSpec",
    "bf_curve",
    "bf_surface",
    "inclusion_bf_curve_bridge",
    "inclusion_bf_curve_product_space",
    "curve_error_report",
    "dual_estimator_diagnostic",
    "write_curve_csv",
    "read_curve_csv",
]


@dataclass
class SensitivityCurve:
    """Grid of gamma values with log Bayes factors and per-point flags.

    Points with flag other than 'ok'/'exact' carry NaN instead of a value.
    For surfaces, ``lattice_shape`` records the (n1, n2) grid layout and
    ``points`` stores the lattice row-major.
    """

    points: np.ndarray  # (P, d)
    log_bf: np.ndarray  # (P,)
    flags: np.ndarray  # (P,) object array of str
    anchor: AnchorResult
    method: str
    lattice_shape: tuple | None = None
    anchor_index: int = field(default=-1)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.log_bf = np.asarray(self.log_bf, dtype=float)
        n = self.points.shape[0]
        if self.log_bf.shape[0] != n or self.flags.shape[0] != n:
            raise InvalidDataError("curve arrays must be row-aligned")
        if self.anchor_index < 0:
            d = self.points - self.anchor.gamma0
            self.anchor_index = int(np.argmin(np.sum(d * d, axis=1)))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def ok(self) -> np.ndarray:
        return np.isin(self.flags, ("ok", "exact"))

    def shifted(self, eps: float) -> "SensitivityCurve":
        """Curve with the anchor multiplied by exp(eps) on the BF scale."""
        anchor = AnchorResult(self.anchor.gamma0, self.anchor.log_bf10 + eps,
                              self.anchor.method, self.anchor.est_error)
        return SensitivityCurve(self.points, self.log_bf + eps, self.flags.copy(),
                                anchor, self.method, self.lattice_shape,
                                self.anchor_index)


@dataclass(frozen=True)
class EnsembleSpec:
    """Four-model meta ensemble with prior model probabilities.

    Both alternatives share the same conditional prior on mu, hence the same
    sensitivity parameter sigma_mu.
    """

    prior_probs: dict = field(
        default_factory=lambda: {"fe0": 0.25, "re0": 0.25, "fe1": 0.25, "re1": 0.25})

    def __post_init__(self):
        keys = set(self.prior_probs)
        if keys != {"fe0", "re0", "fe1", "re1"}:
            raise InvalidDataError("ensemble needs exactly fe0, re0, fe1, re1")
        if any(v <= 0 for v in self.prior_probs.values()):
            raise InvalidDataError("prior model probabilities must be positive")
        total = sum(self.prior_probs.values())
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise InvalidDataError(f"prior model probabilities must sum to 1 (got {total})")


def _grid_points(grid) -> np.ndarray:
    pts = np.asarray(grid, dtype=float)
    return pts.reshape(-1, 1) if pts.ndim == 1 else pts


def _anchor_log_density(dens: DensityEstimate, gamma0: np.ndarray) -> float:
    flag = dens.reliability(gamma0.reshape(1, -1))[0]
    p0 = dens.pdf(gamma0.reshape(1, -1))[0]
    if flag != "ok" or p0 <= 0:
        raise AnchorError(
            f"density estimate at the anchor {gamma0} is {flag} (value {p0:.3g}); "
            "re-fit at another well-supported gamma and re-anchor there"
        )
    return math.log(p0)


def bf_curve(anchor: AnchorResult, dens: DensityEstimate, hyper: HyperPrior,
             grid, method: str | None = None,
             lattice_shape: tuple | None = None) -> SensitivityCurve:
    """Sensitivity curve from one anchor and one density estimate.

    Sparse or out-of-support grid points are flagged and carry no value;
    they are never extrapolated.
    """
    pts = _grid_points(grid)
    g0 = anchor.gamma0
    log_p0 = _anchor_log_density(dens, g0)
    log_pi0 = float(hyper.logpdf(g0.reshape(1, -1))[0])
    flags = dens.reliability(pts).copy()
    log_bf = np.full(pts.shape[0], np.nan)
    ok = flags == "ok"
    if np.any(ok):
        with np.errstate(divide="ignore"):
            log_px = dens.logpdf(pts[ok])
        log_pix = hyper.logpdf(pts[ok])
        vals = anchor.log_bf10 + log_px - log_p0 + log_pi0 - log_pix
        bad = ~np.isfinite(vals)
        vals[bad] = np.nan
        log_bf[ok] = vals
        if np.any(bad):
            sub = flags[ok]
            sub[bad] = "sparse"
            flags[ok] = sub
    return SensitivityCurve(points=pts, log_bf=log_bf, flags=flags, anchor=anchor,
                            method=method or dens.kind, lattice_shape=lattice_shape)


def bf_surface(anchor: AnchorResult, dens: DensityEstimate, hyper: HyperPrior,
               lattice, method: str | None = None) -> SensitivityCurve:
    """2-D sensitivity surface; ``lattice`` is a pair of per-axis grids."""
    g1, g2 = (np.asarray(g, dtype=float) for g in lattice)
    pts = np.column_stack([np.repeat(g1, g2.size), np.tile(g2, g1.size)])
    return bf_curve(anchor, dens, hyper, pts, method=method,
                    lattice_shape=(g1.size, g2.size))


def inclusion_bf_curve_bridge(anchors: dict, dens_fe: DensityEstimate,
                              dens_re: DensityEstimate, hyper: HyperPrior,
                              spec: EnsembleSpec, grid,
                              gamma0, method: str = "bridge") -> SensitivityCurve:
    """Inclusion-BF curve from separately fitted extended components.

    ``anchors`` maps component -> log Z(gamma0) (fe1, re1) and log Z (fe0,
    re0), all on a common scale from the quadrature oracle. Each alternative
    component's marginal likelihood is rebuilt across the grid from its own
    posterior-density ratio and recombined with the prior model
    probabilities.
    """
    for key in ("fe0", "re0", "fe1", "re1"):
        if key not in anchors:
            raise InvalidDataError(f"missing anchor log Z for component {key!r}")
    pts = _grid_points(grid)
    g0 = np.atleast_1d(np.asarray(gamma0, dtype=float))
    p = spec.prior_probs

    log_pi0 = float(hyper.logpdf(g0.reshape(1, -1))[0])
    curves = {}
    flags_all = np.full(pts.shape[0], "ok", dtype=object)
    for comp, dens in (("fe1", dens_fe), ("re1", dens_re)):
        log_p0 = _anchor_log_density(dens, g0)
        flags = dens.reliability(pts)
        with np.errstate(divide="ignore"):
            log_px = dens.logpdf(pts)
        log_mlr = log_px - log_p0 + log_pi0 - hyper.logpdf(pts)
        curves[comp] = anchors[comp] + log_mlr
        bad = (flags != "ok") | ~np.isfinite(curves[comp])
        flags_all[bad] = np.where(flags[bad] != "ok", flags[bad], "sparse")

    log_den = np.logaddexp(anchors["fe0"] + math.log(p["fe0"]),
                           anchors["re0"] + math.log(p["re0"]))
    log_num = np.logaddexp(curves["fe1"] + math.log(p["fe1"]),
                           curves["re1"] + math.log(p["re1"]))
    log_bf = np.where(flags_all == "ok", log_num - log_den, np.nan)

    log_num0 = np.logaddexp(anchors["fe1"] + math.log(p["fe1"]),
                            anchors["re1"] + math.log(p["re1"]))
    anchor = AnchorResult(gamma0=g0, log_bf10=float(log_num0 - log_den),
                          method="oracle", est_error=0.0)
    return SensitivityCurve(points=pts, log_bf=log_bf, flags=flags_all,
                            anchor=anchor, method=method)


def inclusion_bf_curve_product_space(anchor: AnchorResult, dens: DensityEstimate,
                                     hyper: HyperPrior, grid,
                                     draws: PosteriorDraws | None = None,
                                     method: str = "product-space") -> SensitivityCurve:
    """Inclusion-BF curve from pooled product-space sigma_mu draws.

    A single density ratio of the pooled posterior gives the whole curve;
    no conditioning, filtering, or merging across components is needed.
    Draws with an unmixed indicator are refused.
    """
    if draws is not None:
        if draws.indicator is None:
            raise InvalidDataError("product-space strategy needs indicator draws")
        if not draws.indicator_mixed:
            raise MixingError(
                "model indicator stuck in one state for an entire chain; "
                "retune the pseudo-prior (e.g. moment-match a pilot run) and re-fit"
            )
    return bf_curve(anchor, dens, hyper, grid, method=method)


# ---------------------------------------------------------------------------
# Error metrics and diagnostics


def _common_ok(curve_a: SensitivityCurve, curve_b: SensitivityCurve) -> np.ndarray:
    if curve_a.points.shape != curve_b.points.shape or not np.allclose(
            curve_a.points, curve_b.points, rtol=0, atol=1e-12):
        raise InvalidDataError("curves must share a common grid")
    return curve_a.ok & curve_b.ok


def _truncation_mask(points: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Drop the outer 5% of the support range on each side, per dimension."""
    keep = np.ones(points.shape[0], dtype=bool)
    for d in range(points.shape[1]):
        lo, hi = support[d]
        margin = 0.05 * (hi - lo)
        keep &= (points[:, d] >= lo + margin) & (points[:, d] <= hi - margin)
    return keep


def curve_error_report(curve: SensitivityCurve, reference: SensitivityCurve,
                       support=None) -> dict:
    """MAE/RMSE of the log approximation ratio, plus truncated variants.

    Truncated metrics exclude the outer 5% of the hyper-parameter support on
    each side. Only points valid on both curves enter; disjoint valid grids
    raise.
    """
    ok = _common_ok(curve, reference)
    if not np.any(ok):
        raise InvalidDataError("no common valid grid points to compare")
    diff = curve.log_bf[ok] - reference.log_bf[ok]
    sup = (np.atleast_2d(np.asarray(support, dtype=float)) if support is not None
           else np.column_stack([curve.points.min(axis=0), curve.points.max(axis=0)]))
    trunc = _truncation_mask(curve.points[ok], sup)
    out = {
        "mae": float(np.mean(np.abs(diff))),
        "rmse": float(np.sqrt(np.mean(diff**2))),
        "n_points": int(diff.size),
    }
    if np.any(trunc):
        out["mae_t"] = float(np.mean(np.abs(diff[trunc])))
        out["rmse_t"] = float(np.sqrt(np.mean(diff[trunc] ** 2)))
        out["n_points_t"] = int(np.sum(trunc))
    else:
        out["mae_t"] = float("nan")
        out["rmse_t"] = float("nan")
        out["n_points_t"] = 0
    return out


def dual_estimator_diagnostic(curve_kde: SensitivityCurve,
                              curve_iwmde: SensitivityCurve,
                              tol: float = 0.15, support=None) -> dict:
    """Agreement check between two estimators of the same curve.

    Reports the per-point absolute log ratio, the points exceeding ``tol``
    in the interior (outer 5% of the support excluded), and a pass/warn
    verdict.
    """
    ok = _common_ok(curve_kde, curve_iwmde)
    diff = np.abs(curve_kde.log_bf - curve_iwmde.log_bf)
    sup = (np.atleast_2d(np.asarray(support, dtype=float)) if support is not None
           else np.column_stack([curve_kde.points.min(axis=0),
                                 curve_kde.points.max(axis=0)]))
    interior = ok & _truncation_mask(curve_kde.points, sup)
    if not np.any(interior):
        raise InvalidDataError("no interior points to compare")
    exceed = interior & (diff > tol)
    return {
        "verdict": "warn" if np.any(exceed) else "pass",
        "max_divergence": float(np.max(diff[interior])),
        "n_exceeding": int(np.sum(exceed)),
        "exceeding_points": curve_kde.points[exceed].tolist(),
        "tol": tol,
    }


# ---------------------------------------------------------------------------
# CSV round-trip (17 significant digits: lossless for 64-bit floats)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_curve_csv(curve: SensitivityCurve, path) -> None:
    d = curve.dim
    gcols = ["gamma"] if d == 1 else [f"gamma{i + 1}" for i in range(d)]
    acols = (["anchor_gamma"] if d == 1
             else [f"anchor_gamma{i + 1}" for i in range(d)])
    header = [*gcols, "log_bf", "bf", "flag", "method", *acols, "anchor_log_bf"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(curve.points.shape[0]):
            row = [_fmt(v) for v in curve.points[i]]
            if np.isfinite(curve.log_bf[i]):
                row += [_fmt(curve.log_bf[i]), _fmt(math.exp(curve.log_bf[i]))]
            else:
                row += ["", ""]
            row += [str(curve.flags[i]), curve.method]
            row += [_fmt(v) for v in curve.anchor.gamma0]
            row.append(_fmt(curve.anchor.log_bf10))
            fh.write(",".join(row) + "\n")


def read_curve_csv(path) -> SensitivityCurve:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    gcols = [c for c in header if c.startswith("gamma")]
    d = len(gcols)
    idx = {c: header.index(c) for c in header}
    pts = np.array([[float(r[idx[c]]) for c in gcols] for r in rows])
    log_bf = np.array([float(r[idx["log_bf"]]) if r[idx["log_bf"]] else np.nan
                       for r in rows])
    flags = np.array([r[idx["flag"]] for r in rows], dtype=object)
    method = rows[0][idx["method"]]
    acols = [c for c in header if c.startswith("anchor_gamma")]
    g0 = np.array([float(rows[0][idx[c]]) for c in acols])
    anchor = AnchorResult(gamma0=g0, log_bf10=float(rows[0][idx["anchor_log_bf"]]),
                          method="csv", est_error=0.0)
    return SensitivityCurve(points=pts, log_bf=log_bf, flags=flags,
                            anchor=anchor, method=method)
