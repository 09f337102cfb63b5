import json

import numpy as np
import pytest

from makeupprior import (
    Coefficients,
    FaceMask,
    FitConfig,
    MakeupLayer,
    UvMap,
    build_pca,
    compose_alpha_blend,
    cycle_check,
    decode,
    fit_coeffs,
    loss_gradient,
    project,
    rmse,
    total_loss,
    warm_start,
)
from makeupprior.errors import DimensionError, EmptyMaskError
from makeupprior.fit import write_history_csv

from conftest import lopsided_layer, random_layer
from oracles import finite_difference, kink_free_cases


@pytest.fixture(scope="module")
def interior():
    """64x64 prior with k=8 whose decodes stay well inside (0, 1).

    The left half is darker than the right half, so no texel sits near the
    kink of the symmetry term.
    """
    rng = np.random.default_rng(7)
    return build_pca([lopsided_layer(rng, 64) for _ in range(9)], k=8), UvMap(rng.uniform(0.2, 0.8, (64, 64, 3)))


def _symmetric_prior(rng, size=8, n=4):
    layers = []
    for _ in range(n):
        half = rng.uniform(0.2, 0.8, (size, size // 2, 4))
        full = np.concatenate([half, half[:, ::-1]], axis=1)
        layers.append(MakeupLayer(UvMap(full[:, :, :3]), UvMap(full[:, :, 3:])))
    return build_pca(layers, k=3)


class TestConfig:
    def test_defaults(self):
        cfg = FitConfig()
        assert (cfg.w_pho, cfg.w_reg, cfg.w_sym, cfg.w_alpha) == (100.0, 1e-4, 8.0, 1.0)
        assert (cfg.step_size, cfg.iterations) == (1e-2, 40)
        assert (cfg.moment1, cfg.moment2, cfg.epsilon) == (0.9, 0.999, 1e-8)

    def test_json_round_trip(self, tmp_path):
        cfg = FitConfig(w_sym=3.0, iterations=7, mirror_map=[1, 0])
        doc = json.loads(cfg.to_json())
        assert set(doc) == {
            "w_pho", "w_reg", "w_sym", "w_alpha", "step_size", "iterations",
            "moment1", "moment2", "epsilon", "mirror_map",
        }
        path = tmp_path / "cfg.json"
        path.write_text(cfg.to_json(), encoding="utf-8")
        assert FitConfig.load(path) == cfg

    def test_rejects_unknown_and_invalid(self):
        with pytest.raises(ValueError):
            FitConfig.from_json('{"w_vgg": 1.0}')
        for bad in ({"w_reg": -1.0}, {"iterations": -1}, {"step_size": 0.0}):
            with pytest.raises(ValueError):
                FitConfig(**bad)


class TestLoss:
    def test_self_consistent_target_zero(self, interior):
        prior, bare = interior
        u = Coefficients(np.full(prior.k, 0.01))
        target = compose_alpha_blend(decode(prior, u), bare)
        cfg = FitConfig(w_reg=0.0, w_sym=0.0, w_alpha=0.0)
        face = FaceMask.full(64, 64)
        assert total_loss(prior, u, bare, target, face, cfg).total == 0.0

    def test_breakdown_sums(self, interior, rng):
        prior, bare = interior
        target = UvMap(rng.uniform(0, 1, (64, 64, 3)))
        loss = total_loss(prior, Coefficients(rng.normal(0, 0.1, prior.k)), bare, target, FaceMask.full(64, 64))
        parts = (loss.pho, loss.reg, loss.sym, loss.alpha)
        assert min(parts) >= 0
        assert abs(sum(parts) - loss.total) <= 1e-9 * loss.total

    def test_term_definitions(self, interior, rng):
        prior, bare = interior
        u = Coefficients(rng.normal(0, 0.05, prior.k))
        target = UvMap(rng.uniform(0, 1, (64, 64, 3)))
        face = FaceMask(rng.uniform(size=(64, 64)) < 0.5)
        layer = decode(prior, u)
        m = layer.rgba()
        loss = total_loss(prior, u, bare, target, face)
        composite = compose_alpha_blend(layer, bare).values
        np.testing.assert_allclose(loss.pho, 100 * np.abs(composite - target.values)[face.bits].mean(), rtol=1e-12)
        np.testing.assert_allclose(loss.reg, 1e-4 * np.sum(u.values**2), rtol=1e-12)
        np.testing.assert_allclose(loss.sym, 8 * np.abs(m - m[:, ::-1])[face.bits].mean(), rtol=1e-12)
        np.testing.assert_allclose(loss.alpha, np.abs(m[:, :, 3])[face.bits].mean(), rtol=1e-12)

    def test_symmetric_makeup_has_no_sym_loss(self, rng):
        prior = _symmetric_prior(rng)
        bare = UvMap(rng.uniform(0, 1, (8, 8, 3)))
        loss = total_loss(prior, Coefficients(rng.normal(0, 0.1, 3)), bare, bare, FaceMask.full(8, 8))
        assert loss.sym == 0.0

    def test_zero_alpha(self, rng):
        layers = [MakeupLayer(UvMap(rng.uniform(0, 1, (4, 4, 3))), UvMap(np.zeros((4, 4)))) for _ in range(3)]
        prior = build_pca(layers, k=2)
        bare = UvMap(rng.uniform(0, 1, (4, 4, 3)))
        target = UvMap(rng.uniform(0, 1, (4, 4, 3)))
        loss = total_loss(prior, Coefficients([0.1, -0.2]), bare, target, FaceMask.full(4, 4))
        assert loss.alpha == 0.0
        np.testing.assert_allclose(loss.pho, 100 * np.abs(bare.values - target.values).mean(), rtol=1e-12)

    def test_scaling(self, interior, rng):
        prior, bare = interior
        u = Coefficients(rng.normal(0, 0.1, prior.k))
        target = UvMap(rng.uniform(0, 1, (64, 64, 3)))
        face = FaceMask.full(64, 64)
        base = total_loss(prior, u, bare, target, face)
        for c in (0.5, 2.0, 8.0):
            scaled = total_loss(prior, u, bare, target, face, FitConfig().scaled(c))
            assert scaled.total == pytest.approx(c * base.total, rel=1e-14)

    def test_errors(self, interior):
        prior, bare = interior
        with pytest.raises(DimensionError):
            total_loss(prior, Coefficients.zeros(prior.k + 1), bare, bare, FaceMask.full(64, 64))
        with pytest.raises(DimensionError):
            total_loss(prior, Coefficients.zeros(prior.k), UvMap(np.zeros((8, 8, 3))), bare, FaceMask.full(64, 64))
        with pytest.raises(EmptyMaskError):
            total_loss(prior, Coefficients.zeros(prior.k), bare, bare, FaceMask(np.zeros((64, 64), bool)))


class TestGradient:
    def test_reg_only(self, interior, rng):
        prior, bare = interior
        u = rng.normal(size=prior.k)
        cfg = FitConfig(w_pho=0, w_sym=0, w_alpha=0, w_reg=0.3)
        g = loss_gradient(prior, Coefficients(u), bare, bare, FaceMask.full(64, 64), cfg)
        np.testing.assert_array_equal(g, 2 * 0.3 * u)
        zero = loss_gradient(prior, Coefficients.zeros(prior.k), bare, bare, FaceMask.full(64, 64), cfg)
        assert not zero.any()

    def test_matches_finite_differences(self, interior):
        prior, bare = interior
        rng = np.random.default_rng(2024)
        face = FaceMask(np.random.default_rng(1).uniform(size=(64, 64)) < 0.8)
        worst = 0.0
        for u, target in kink_free_cases(prior, bare, rng, count=8):
            target = UvMap(target)
            g = loss_gradient(prior, Coefficients(u), bare, target, face)
            fd = finite_difference(lambda x: total_loss(prior, Coefficients(x), bare, target, face).total, u)
            worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(fd))
        assert worst <= 1e-4

    def test_general_mirror_map(self, rng):
        # non-permutation correspondences take the scatter-add path
        prior = build_pca([lopsided_layer(rng, 4) for _ in range(4)], k=3)
        bare = UvMap(rng.uniform(0.2, 0.8, (4, 4, 3)))
        # each pixel maps to a random pixel in the opposite half
        mirror = [int(y * 4 + (2 if x < 2 else 0) + rng.integers(0, 2)) for y in range(4) for x in range(4)]
        cfg = FitConfig(mirror_map=mirror)
        face = FaceMask.full(4, 4)
        for u, target in kink_free_cases(prior, bare, rng, count=4, scale=0.01):
            target = UvMap(target)
            g = loss_gradient(prior, Coefficients(u), bare, target, face, cfg)
            fd = finite_difference(lambda x: total_loss(prior, Coefficients(x), bare, target, face, cfg).total, u)
            np.testing.assert_allclose(g, fd, rtol=1e-4, atol=1e-9)

    def test_clamped_entries_pass_no_gradient(self):
        mean = np.array([0.5, 0.5, 0.5, 1.5])
        basis = np.array([[0.0], [0.0], [0.0], [1.0]])
        from makeupprior import PcaPrior

        prior = PcaPrior(1, 1, mean, basis, [1.0])
        bare = UvMap(np.zeros((1, 1, 3)))
        cfg = FitConfig(w_reg=0.0, w_sym=0.0)
        g = loss_gradient(prior, Coefficients([0.0]), bare, bare, FaceMask.full(1, 1), cfg)
        assert g[0] == 0.0


class TestFit:
    def test_zero_iterations(self, interior, rng):
        prior, bare = interior
        init = Coefficients(rng.normal(0, 0.1, prior.k))
        face = FaceMask.full(64, 64)
        res = fit_coeffs(prior, bare, bare, face, FitConfig(iterations=0), init)
        assert res.coefficients == init
        assert len(res.history) == 1
        assert res.history[0] == total_loss(prior, init, bare, bare, face)

    def test_history_and_best_iterate(self, interior, rng):
        prior, bare = interior
        target = UvMap(rng.uniform(0, 1, (64, 64, 3)))
        face = FaceMask.full(64, 64)
        res = fit_coeffs(prior, bare, target, face, FitConfig(iterations=15))
        assert len(res.history) == 16
        best = res.best_so_far()
        assert np.all(np.diff(best) <= 0)
        assert total_loss(prior, res.coefficients, bare, target, face).total == best[-1]

    def test_deterministic(self, prior, corpus):
        target = compose_alpha_blend(corpus.layers[3], corpus.bares[0])
        a = fit_coeffs(prior, corpus.bares[0], target, corpus.face, FitConfig(iterations=10))
        b = fit_coeffs(prior, corpus.bares[0], target, corpus.face, FitConfig(iterations=10))
        assert np.array_equal(a.coefficients.values, b.coefficients.values)
        assert a.history == b.history and a.converged == b.converged

    def test_recovers_training_style(self, prior, corpus):
        truth = project(prior, corpus.layers[2])
        bare = corpus.bares[5]
        target = compose_alpha_blend(decode(prior, truth), bare)
        init = warm_start(prior, bare, target)
        res = fit_coeffs(prior, bare, target, corpus.face, FitConfig(), init)
        err = np.max(np.abs(res.coefficients.values - truth.values)) / max(1.0, np.max(np.abs(truth.values)))
        assert err <= 0.05
        assert rmse(compose_alpha_blend(decode(prior, res.coefficients), bare), target, corpus.face) <= 0.01

    def test_target_equals_bare(self, corpus):
        # the corpus needs a makeup-free style for "no makeup" to be in range
        clean = MakeupLayer(corpus.layers[0].bases, UvMap(np.zeros((64, 64))))
        prior = build_pca([*corpus.layers, clean], k=100)
        bare = corpus.bares[1]
        init = warm_start(prior, bare, bare)
        res = fit_coeffs(prior, bare, bare, corpus.face, FitConfig(), init)
        mean_alpha = lambda c: decode(prior, c).alpha.values[corpus.face.bits].mean()
        assert mean_alpha(res.coefficients) <= mean_alpha(init)
        assert rmse(compose_alpha_blend(decode(prior, res.coefficients), bare), bare, corpus.face) <= 0.02

    def test_argmin_invariant_under_weight_scaling(self, rng):
        # 1-component toy prior; Adam steps do not depend on gradient scale
        prior = build_pca([random_layer(rng, 6, 6, 0.3, 0.7) for _ in range(2)], k=1)
        bare = UvMap(rng.uniform(0.2, 0.8, (6, 6, 3)))
        truth = Coefficients([0.3 * float(prior.stddevs[0])])
        target = compose_alpha_blend(decode(prior, truth), bare)
        face = FaceMask.full(6, 6)
        cfg = FitConfig(iterations=300, step_size=1e-2)
        base = fit_coeffs(prior, bare, target, face, cfg).coefficients.values
        grid = np.linspace(-1, 1, 4001) * float(prior.stddevs[0])
        losses = [total_loss(prior, Coefficients([g]), bare, target, face, cfg).total for g in grid]
        assert abs(base[0] - grid[int(np.argmin(losses))]) <= 2 * (grid[1] - grid[0]) + 1e-2
        for c in (0.1, 10.0):
            other = fit_coeffs(prior, bare, target, face, cfg.scaled(c)).coefficients.values
            np.testing.assert_allclose(other, base, atol=1e-4)

    def test_init_length_checked(self, interior):
        prior, bare = interior
        with pytest.raises(DimensionError):
            fit_coeffs(prior, bare, bare, FaceMask.full(64, 64), init=Coefficients.zeros(prior.k - 1))


class TestWarmStart:
    def test_no_makeup(self, prior, corpus):
        bare = corpus.bares[0]
        got = warm_start(prior, bare, bare)
        mean_bases = np.clip(prior.mean64.reshape(64, 64, 4)[:, :, :3], 0, 1)
        expected = project(prior, MakeupLayer(UvMap(mean_bases), UvMap(np.zeros((64, 64)))))
        assert got.k == prior.k
        np.testing.assert_allclose(got.values, expected.values, atol=1e-12)

    def test_beats_cold_start(self, prior, corpus):
        truth = project(prior, corpus.layers[6])
        bare = corpus.bares[2]
        target = compose_alpha_blend(decode(prior, truth), bare)
        warm = fit_coeffs(prior, bare, target, corpus.face, FitConfig(), warm_start(prior, bare, target))
        cold = fit_coeffs(prior, bare, target, corpus.face, FitConfig(), Coefficients.zeros(prior.k))
        assert warm.history[warm.best_iteration].total < cold.history[cold.best_iteration].total


class TestCycle:
    def test_same_bare_zero_iterations(self, prior, corpus):
        coeffs = project(prior, corpus.layers[0])
        rep = cycle_check(prior, coeffs, corpus.bares[0], corpus.face, FitConfig(iterations=0), init=coeffs)
        assert rep.coeff_distance == 0.0
        assert rep.composite_rmse == 0.0

    def test_no_makeup(self, rng):
        layers = [MakeupLayer(UvMap(rng.uniform(0, 1, (16, 16, 3))), UvMap(np.zeros((16, 16)))) for _ in range(4)]
        prior = build_pca(layers, k=3)
        bare = UvMap(rng.uniform(0, 1, (16, 16, 3)))
        face = FaceMask.full(16, 16)
        rep = cycle_check(prior, Coefficients.zeros(3), bare, face)
        assert np.all(decode(prior, rep.refit).alpha.values == 0)
        assert rep.composite_rmse <= 0.02
        assert rep.coeff_distance >= 0


def test_history_csv(tmp_path, interior):
    prior, bare = interior
    res = fit_coeffs(prior, bare, bare, FaceMask.full(64, 64), FitConfig(iterations=3))
    write_history_csv(res.history, tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "iteration,pho,reg,sym,alpha,total"
    assert len(lines) == 5
    row = [float(x) for x in lines[2].split(",")]
    assert row[0] == 1 and row[5] == res.history[1].total
