import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from bfsens.density import (
    KdeSpec,
    _cauchy_conditional_lognorm,
    cmde_ttest,
    exact_density,
    iwmde_fit,
    kde_fit,
    plug_in_bandwidth,
    trunc_normal_fit,
)
from bfsens.errors import EstimationError, InvalidDataError
from bfsens.mcmc import ChainConfig, PosteriorDraws, sample_extended
from bfsens.models import (
    ConditionalPrior,
    HyperPrior,
    TTestData,
    conjugate_normal_model,
    default_ttest_model,
)
from bfsens.oracle import QuadratureSpec, exact_log_z, integrate_adaptive

OOSTERWIJK = TTestData(n1=53, mean1=4.63, sd1=1.48, n2=57, mean2=4.87, sd2=1.32)


def _brute_force_dpi(x):
    """Exact O(n^2) two-stage direct plug-in (the binned version's oracle)."""
    n = x.size
    sd = np.std(x, ddof=1)
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    scale = min(sd, iqr / 1.349) if iqr > 0 else sd
    psi8 = 105.0 / (32.0 * math.sqrt(math.pi) * scale**9)
    g6 = (30.0 / (math.sqrt(2 * math.pi) * psi8 * n)) ** (1.0 / 9.0)
    diffs = (x[:, None] - x[None, :]).ravel()

    def phi_d6(u):
        return (np.exp(-0.5 * u * u) / math.sqrt(2 * math.pi)
                * (u**6 - 15 * u**4 + 45 * u**2 - 15))

    def phi_d4(u):
        return (np.exp(-0.5 * u * u) / math.sqrt(2 * math.pi)
                * (u**4 - 6 * u**2 + 3))

    psi6 = float(np.sum(phi_d6(diffs / g6))) / (n * n * g6**7)
    g4 = (-6.0 / (math.sqrt(2 * math.pi) * psi6 * n)) ** (1.0 / 7.0)
    psi4 = float(np.sum(phi_d4(diffs / g4))) / (n * n * g4**5)
    return (1.0 / (2.0 * math.sqrt(math.pi) * psi4 * n)) ** 0.2


class TestPlugInBandwidth:
    def test_against_brute_force(self):
        rng = np.random.default_rng(42)
        x = rng.standard_normal(1500)
        binned = plug_in_bandwidth(x)
        exact = _brute_force_dpi(x)
        assert binned == pytest.approx(exact, rel=0.01)

    def test_brute_force_skewed_sample(self):
        rng = np.random.default_rng(43)
        x = rng.gamma(2.0, 0.5, size=1200)
        assert plug_in_bandwidth(x) == pytest.approx(_brute_force_dpi(x), rel=0.015)

    @given(c=st.floats(0.1, 10.0))
    @settings(max_examples=20, deadline=None)
    def test_scale_equivariance(self, c):
        rng = np.random.default_rng(7)
        x = rng.standard_normal(2000)
        assert plug_in_bandwidth(c * x) == pytest.approx(
            c * plug_in_bandwidth(x), rel=1e-3)

    def test_normal_reference_rate(self):
        # for a true normal the DPI converges to (4/3)^(1/5) sigma n^(-1/5)
        rng = np.random.default_rng(11)
        n = 100_000
        x = rng.standard_normal(n)
        expected = (4.0 / 3.0) ** 0.2 * n ** (-0.2)
        assert plug_in_bandwidth(x) == pytest.approx(expected, rel=0.10)

    def test_duplication_shrinks_by_n_rate(self):
        # duplicating the sample shrinks h at roughly the 2^(-1/5) n-rate;
        # the exact two-stage formula (the brute-force oracle) shrinks a bit
        # further because duplication doubles the zero-distance pair mass in
        # the psi functionals, so the oracle ratio is the binding reference
        rng = np.random.default_rng(13)
        x = rng.standard_normal(4000)
        dup = np.concatenate([x, x])
        ratio = plug_in_bandwidth(dup) / plug_in_bandwidth(x)
        oracle_ratio = _brute_force_dpi(dup) / _brute_force_dpi(x)
        assert ratio == pytest.approx(oracle_ratio, rel=0.01)
        assert ratio == pytest.approx(2 ** (-0.2), abs=0.06)

    def test_zero_variance_rejected(self):
        with pytest.raises(EstimationError):
            plug_in_bandwidth(np.full(500, 1.0))

    def test_too_few_samples_rejected(self):
        with pytest.raises(EstimationError):
            plug_in_bandwidth(np.arange(50, dtype=float))


class TestKde:
    def test_standard_normal_ordinate(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(1_000_000)
        dens = kde_fit(x, support=[(-8.0, 8.0)])
        assert dens.pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=0.01)

    def test_uniform_reflection_boundary(self):
        rng = np.random.default_rng(6)
        x = rng.random(200_000)
        dens = kde_fit(x, KdeSpec(boundary="reflect"), support=[(0.0, 1.0)])
        assert dens.pdf(0.5) == pytest.approx(1.0, rel=0.02)
        assert dens.pdf(0.01) == pytest.approx(1.0, rel=0.05)

    def test_reflect_inert_away_from_boundary(self):
        rng = np.random.default_rng(8)
        x = 0.5 + 0.02 * rng.standard_normal(5000)
        a = kde_fit(x, KdeSpec(boundary="reflect"), support=[(0.0, 1.0)])
        b = kde_fit(x, KdeSpec(boundary="none"), support=[(0.0, 1.0)])
        pts = np.linspace(0.3, 0.7, 11)  # >> 5 bandwidths from both edges
        assert np.max(np.abs(a.pdf(pts) - b.pdf(pts))) < 1e-12

    def test_integrates_to_one(self):
        # trapezoid over a refinement of the estimator's own grid: quad
        # struggles with the piecewise-linear interpolant's kinks
        rng = np.random.default_rng(9)
        x = np.clip(0.4 + 0.3 * rng.standard_normal(20_000), 0.0, 2.0)
        dens = kde_fit(x, support=[(0.0, 2.0)])
        g = np.linspace(0.0, 2.0, 4001)
        val = float(np.trapezoid(dens.pdf(g), g))
        assert val == pytest.approx(1.0, abs=1e-3)

    def test_2d_ordinate(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal((400_000, 2)) * 0.1 + 0.5
        dens = kde_fit(x, support=[(0.0, 1.0), (0.0, 1.0)])
        true = (norm.pdf(0.0, scale=0.1)) ** 2
        assert dens.pdf([0.5, 0.5]) == pytest.approx(true, rel=0.03)

    def test_2d_integrates_to_one(self):
        rng = np.random.default_rng(12)
        x = np.clip(rng.standard_normal((50_000, 2)) * 0.2 + 0.5, 0.0, 1.0)
        dens = kde_fit(x, support=[(0.0, 1.0), (0.0, 1.0)])
        g = np.linspace(0, 1, 201)
        pts = np.column_stack([np.repeat(g, g.size), np.tile(g, g.size)])
        vals = dens.pdf(pts).reshape(g.size, g.size)
        total = np.trapezoid(np.trapezoid(vals, g, axis=1), g)
        assert total == pytest.approx(1.0, abs=1e-3)

    def test_outside_support_is_zero_and_flagged(self):
        rng = np.random.default_rng(14)
        x = rng.random(5000)
        dens = kde_fit(x, support=[(0.0, 1.0)])
        assert dens.pdf(1.5) == 0.0
        assert dens.reliability(np.array([1.5]))[0] == "out-of-support"

    def test_sparse_flagging(self):
        rng = np.random.default_rng(15)
        x = np.clip(0.2 + 0.05 * rng.standard_normal(5000), 0.0, 2.0)
        dens = kde_fit(x, support=[(0.0, 2.0)])
        flags = dens.reliability(np.array([0.2, 1.9]))
        assert flags[0] == "ok"
        assert flags[1] == "sparse"

    def test_requires_samples_inside_support(self):
        with pytest.raises(InvalidDataError):
            kde_fit(np.linspace(-1, 1, 600), support=[(0.0, 1.0)])

    def test_minimum_sample_size(self):
        with pytest.raises(EstimationError):
            kde_fit(np.random.default_rng(0).random(100), support=[(0.0, 1.0)])


@pytest.fixture(scope="module")
def conjugate_fit():
    model = conjugate_normal_model(y=1.0, sigma_y=1.0, bounds=(0.1, 4.0))
    draws = sample_extended(model, ChainConfig(seed=31, n_chains=3,
                                               n_warmup=2500, n_keep=10000))
    return model, draws


@pytest.fixture(scope="module")
def ttest_fit():
    model = default_ttest_model(OOSTERWIJK)
    draws = sample_extended(model, ChainConfig(seed=32, n_chains=3,
                                               n_warmup=2500, n_keep=1000))
    return model, draws


class TestIwmde:
    def test_degenerate_draws_give_uniform_density(self):
        # all draws at gamma*, uniform weight and hyper: every term is the
        # uniform weight itself
        hyper = HyperPrior([(0.0, 2.0)])
        cond = ConditionalPrior("cauchy-scale")
        n = 1200
        draws = PosteriorDraws(
            gamma=np.full((n, 1), 0.8), theta=np.full((n, 1), -0.2),
            chain_id=np.repeat([0, 1], n // 2),
            iteration=np.tile(np.arange(n // 2), 2),
            gamma_names=("r",), theta_names=("delta",))
        dens = iwmde_fit(draws, cond_prior=cond, hyper=hyper, force=True)
        assert dens.pdf(0.8) == pytest.approx(0.5, abs=1e-12)

    def test_conjugate_posterior_ordinate(self, conjugate_fit):
        # the uniform weight has unbounded second moments on scale families
        # (the squared density ratio integral diverges for draws with small
        # gamma), so the ordinate check uses the variance-optimal
        # conditional weight, exact for this family via the E1 normalizer
        model, draws = conjugate_fit
        dens = iwmde_fit(draws, model, weight="conditional")
        gx = float(np.median(draws.gamma[:, 0]))
        # analytic ordinate: Z(gx) pi(gx) / integral of Z pi
        spec = QuadratureSpec()
        c, _ = integrate_adaptive(
            lambda g: math.exp(exact_log_z(model, [g])[0]), 0.1, 4.0, spec)
        truth = math.exp(exact_log_z(model, [gx])[0]) / c
        assert dens.pdf(gx) == pytest.approx(truth, rel=0.02)

    def test_normalization_monte_carlo(self, conjugate_fit):
        model, draws = conjugate_fit
        dens = iwmde_fit(draws, model, weight="conditional")
        val, _ = integrate.quad(lambda g: dens.pdf(g), 0.1, 4.0, limit=100)
        assert val == pytest.approx(1.0, abs=0.02)
        # uniform weight on the Cauchy family at a standard draw count
        tmodel = default_ttest_model(OOSTERWIJK)
        tdraws = sample_extended(tmodel, ChainConfig(seed=36, n_chains=3,
                                                     n_warmup=2500, n_keep=10000))
        dens_u = iwmde_fit(tdraws, tmodel, force=True)
        val, _ = integrate.quad(lambda g: dens_u.pdf(g), 0.0, 2.0, limit=100)
        assert val == pytest.approx(1.0, abs=0.02)

    def test_out_of_support_zero(self, conjugate_fit):
        model, draws = conjugate_fit
        dens = iwmde_fit(draws, model)
        assert dens.pdf(5.0) == 0.0
        assert dens.reliability(np.array([5.0]))[0] == "out-of-support"

    def test_unknown_weight_rejected(self, conjugate_fit):
        model, draws = conjugate_fit
        with pytest.raises(InvalidDataError):
            iwmde_fit(draws, model, weight="adaptive")

    def test_conditional_weight_needs_1d_scale_family(self):
        # the informed t-test indexes the prior by a 2-D gamma; no closed
        # conditional is available there
        model = default_ttest_model(OOSTERWIJK)
        from bfsens.models import informed_ttest_model
        imodel = informed_ttest_model(OOSTERWIJK)
        draws = sample_extended(imodel, ChainConfig(seed=40, n_chains=2,
                                                    n_warmup=500, n_keep=1000))
        with pytest.raises(InvalidDataError):
            iwmde_fit(draws, imodel, weight="conditional", force=True)


class TestCmde:
    def test_each_term_normalizes(self, ttest_fit):
        # the conditional gamma/(delta^2+gamma^2) over [0, U] integrates to 1
        # for any delta != 0 (checked on 20 draws)
        _, draws = ttest_fit
        deltas = draws.theta[:20, 0]
        for d in deltas:
            norm_const = math.exp(float(_cauchy_conditional_lognorm(
                np.array([d]), 0.0, 2.0)[0]))

            val, _ = integrate.quad(
                lambda g: (g / (d * d + g * g)) / norm_const, 0.0, 2.0)
            assert val == pytest.approx(1.0, abs=1e-8)

    def test_large_delta_limit(self):
        # |delta| -> inf: conditional tends to 2 gamma / U^2, i.e. gamma/2 at U=2
        n = 1000
        draws = PosteriorDraws(
            gamma=np.full((n, 1), 1.0), theta=np.full((n, 1), 1e3),
            chain_id=np.repeat([0, 1], n // 2),
            iteration=np.tile(np.arange(n // 2), 2),
            gamma_names=("r",), theta_names=("delta",))
        dens = cmde_ttest(draws, [(0.0, 2.0)], force=True)
        for g in (0.4, 1.0, 1.6):
            assert dens.pdf(g) == pytest.approx(g / 2.0, rel=1e-4)

    def test_zero_delta_term_vanishes(self):
        n = 1000
        draws = PosteriorDraws(
            gamma=np.full((n, 1), 1.0), theta=np.zeros((n, 1)),
            chain_id=np.repeat([0, 1], n // 2),
            iteration=np.tile(np.arange(n // 2), 2),
            gamma_names=("r",), theta_names=("delta",))
        dens = cmde_ttest(draws, [(0.0, 2.0)], force=True)
        assert dens.pdf(1.0) == 0.0

    def test_coincides_with_conditional_iwmde(self, ttest_fit):
        # the CMDE is the IWMDE whose weight is the exact full conditional;
        # the two separate implementations must agree to 1e-12
        model, draws = ttest_fit
        cm = cmde_ttest(draws, model.hyper.bounds, force=True)
        iw = iwmde_fit(draws, model, weight="conditional", force=True)
        pts = np.linspace(0.05, 1.95, 31)
        assert np.max(np.abs(cm.pdf(pts) - iw.pdf(pts))) < 1e-12


class TestKdeLargeSample:
    def test_kde_truncated_mae_bound_at_300k(self):
        # with 300k draws the KDE curve's truncated log-MAE against the
        # quadrature oracle must drop below 0.03
        from bfsens.oracle import anchor_bf, exact_bf_curve
        from bfsens.sensitivity import bf_curve, curve_error_report

        model = default_ttest_model(OOSTERWIJK)
        lo, hi = model.hyper.bounds[0]
        grid = np.linspace(lo + 1e-3 * (hi - lo), hi, 100)
        oracle_curve = exact_bf_curve(model, grid, cross_validate=False)
        anchor = anchor_bf(model, [math.sqrt(2) / 2], cross_validate=False)
        draws = sample_extended(model, ChainConfig(seed=37, n_chains=3,
                                                   n_warmup=2500, n_keep=100000))
        dens = kde_fit(draws.gamma[:, 0], support=model.hyper.bounds)
        curve = bf_curve(anchor, dens, model.hyper, grid)
        rep = curve_error_report(curve, oracle_curve, support=model.hyper.bounds)
        assert rep["mae_t"] <= 0.03


class TestTruncNormal:
    def test_recovers_interior_normal(self):
        rng = np.random.default_rng(17)
        x = rng.normal(0.5, 0.1, 30_000)
        dens = trunc_normal_fit(x, [(0.0, 2.0)])
        assert dens.mus[0] == pytest.approx(0.5, rel=0.02)
        assert dens.sigmas[0] == pytest.approx(0.1, rel=0.02)

    def test_symmetric_sample_centers(self):
        rng = np.random.default_rng(18)
        x = np.clip(1.0 + 0.4 * rng.standard_normal(40_000), 0.0, 2.0)
        dens = trunc_normal_fit(x, [(0.0, 2.0)])
        se = 0.4 / math.sqrt(x.size)
        assert abs(dens.mus[0] - 1.0) < 5 * se + 0.005

    def test_integrates_to_one(self):
        rng = np.random.default_rng(19)
        x = np.clip(0.3 + 0.5 * np.abs(rng.standard_normal(20_000)), 0.0, 2.0)
        dens = trunc_normal_fit(x, [(0.0, 2.0)])
        val, _ = integrate.quad(lambda g: dens.pdf(g), 0.0, 2.0, limit=200)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_2d_diagonal(self):
        rng = np.random.default_rng(20)
        x = np.column_stack([rng.normal(0.4, 0.08, 20_000),
                             rng.normal(0.6, 0.12, 20_000)])
        dens = trunc_normal_fit(x, [(0.0, 1.0), (0.0, 1.0)])
        assert dens.mus == pytest.approx([0.4, 0.6], rel=0.03)
        assert dens.sigmas == pytest.approx([0.08, 0.12], rel=0.03)


class TestSharedProperties:
    @pytest.mark.parametrize("builder", ["kde", "iwmde", "cmde", "trunc-normal"])
    def test_nonnegative_and_deterministic(self, builder, ttest_fit):
        model, draws = ttest_fit
        if builder == "kde":
            dens = kde_fit(draws.gamma[:, 0], support=model.hyper.bounds)
        elif builder == "iwmde":
            dens = iwmde_fit(draws, model, force=True)
        elif builder == "cmde":
            dens = cmde_ttest(draws, model.hyper.bounds, force=True)
        else:
            dens = trunc_normal_fit(draws.gamma[:, 0], model.hyper.bounds)
        pts = np.linspace(-0.5, 2.5, 61)
        a = dens.pdf(pts)
        b_vals = dens.pdf(pts)
        assert np.all(a >= 0)
        assert np.array_equal(a, b_vals)
        assert np.all(a[pts < 0] == 0)
        assert np.all(a[pts > 2] == 0)

    def test_exact_density_wrapper(self):
        dens = exact_density(lambda g: np.exp(-g), [(0.0, 2.0)])
        assert dens.pdf(1.0) == pytest.approx(math.exp(-1.0))
        assert dens.pdf(3.0) == 0.0
        assert dens.kind == "exact"


class TestDensityCsvExport:
    def test_columns_and_flags(self, tmp_path, ttest_fit):
        from bfsens.density import write_density_csv

        model, draws = ttest_fit
        dens = iwmde_fit(draws, model, force=True)
        grid = np.linspace(-0.1, 2.1, 23)
        path = tmp_path / "density.csv"
        write_density_csv(dens, grid, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "gamma,density,flag"
        assert len(lines) == 24
        cells = [ln.split(",") for ln in lines[1:]]
        assert cells[0][2] == "out-of-support" and float(cells[0][1]) == 0.0
        back = np.array([float(c[1]) for c in cells])
        assert np.array_equal(back, dens.pdf(grid))
