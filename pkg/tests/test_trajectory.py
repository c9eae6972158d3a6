import numpy as np
import pytest

from gmrgp import GmrGpModel, ViaPoint, adapt, build, predict_trajectory
from gmrgp.exceptions import DuplicateViaInputError, NonPositiveParamError
from gmrgp.gmr import component_conditionals, gmr_mean_batch, gmr_predict
from gmrgp.trajectory import (
    model_from_json,
    model_to_json,
    sample_trajectories,
    set_component_lengthscale,
    set_noise,
    stationary_mogp,
    trajectory_to_csv,
)
from gmrgp import ObservationSet, condition, predict_batch


@pytest.fixture(scope="module")
def toy_model(toy_gmm):
    return build(toy_gmm, lengthscales=[0.3, 0.8], noise=1e-4)


class TestBuild:
    def test_fixed_params_skip_fitting(self, toy_model):
        assert np.array_equal(toy_model.lengthscales, [0.3, 0.8])
        assert toy_model.noise == 1e-4
        assert toy_model.via_points == ()

    def test_prior_mean_equals_regression_mean(self, toy_model, toy_gmm):
        # with no via-points the model reproduces the mixture regression
        # exactly: both run the same code path
        xs = np.linspace(-0.5, 2.9, 40)[:, None]
        preds = predict_trajectory(toy_model, xs)
        ref = gmr_mean_batch(toy_gmm, xs)
        diff = np.abs(np.array([p.mean for p in preds]) - ref)
        assert diff.max() == 0.0

    def test_missing_everything_rejected(self, toy_gmm):
        with pytest.raises(ValueError):
            build(toy_gmm)

    def test_fit_from_demos(self, letter_gmm, letter_demos):
        from gmrgp.gp import default_opt_config

        config = default_opt_config(2.0, 6, starts=2, max_evals=40, max_points=120)
        model = build(letter_gmm, demos=letter_demos, config=config)
        assert model.lengthscales.shape == (6,)
        assert np.all(model.lengthscales > 0)
        assert model.noise > 0


class TestViaPoints:
    def test_posterior_passes_through_via_point(self, toy_model):
        target = np.array([0.7])
        adapted = adapt(toy_model, [ViaPoint([0.4], target)])
        pred = predict_trajectory(adapted, [[0.4]])[0]
        assert abs(pred.mean[0] - target[0]) < 5e-3
        assert pred.covariance[0, 0] < 5 * toy_model.noise

    def test_reverts_to_prior_far_away(self, toy_model, toy_gmm):
        adapted = adapt(toy_model, [ViaPoint([0.4], [2.0])])
        far = np.array([[30.0]])
        pred = predict_trajectory(adapted, far)[0]
        prior = gmr_predict(toy_gmm, far[0])
        assert abs(pred.mean[0] - prior.mean[0]) < 1e-9

    def test_noise_override_loosens_constraint(self, toy_model):
        tight = adapt(toy_model, [ViaPoint([0.4], [2.0])])
        loose = adapt(toy_model, [ViaPoint([0.4], [2.0], noise_override=0.5)])
        p_tight = predict_trajectory(tight, [[0.4]])[0]
        p_loose = predict_trajectory(loose, [[0.4]])[0]
        assert abs(p_tight.mean[0] - 2.0) < abs(p_loose.mean[0] - 2.0)
        assert p_loose.covariance[0, 0] > p_tight.covariance[0, 0]

    def test_adapt_replaces_rather_than_accumulates(self, toy_model):
        first = adapt(toy_model, [ViaPoint([0.2], [1.0])])
        second = adapt(first, [ViaPoint([2.4], [0.5])])
        assert len(second.via_points) == 1
        assert second.via_points[0].input[0] == 2.4

    def test_duplicate_inputs_averaged(self, toy_model):
        adapted = adapt(
            toy_model, [ViaPoint([0.4], [1.0]), ViaPoint([0.4], [3.0])]
        )
        assert len(adapted.via_points) == 1
        assert adapted.via_points[0].output[0] == pytest.approx(2.0)

    def test_conflicting_zero_noise_duplicates_rejected(self, toy_model):
        with pytest.raises(DuplicateViaInputError):
            adapt(
                toy_model,
                [
                    ViaPoint([0.4], [1.0], noise_override=0.0),
                    ViaPoint([0.4], [3.0], noise_override=0.0),
                ],
            )

    def test_per_component_noise_varies_with_region(self, toy_gmm):
        model = build(toy_gmm, lengthscales=[0.3, 0.8], noise=np.array([1e-6, 1e-2]))
        left = adapt(model, [ViaPoint([-0.2], [1.0])])
        right = adapt(model, [ViaPoint([2.6], [1.0])])
        v_left = predict_trajectory(left, [[-0.2]])[0].covariance[0, 0]
        v_right = predict_trajectory(right, [[2.6]])[0].covariance[0, 0]
        # the left region carries the tight component noise, the right the loose
        assert v_left < v_right


class TestLengthscaleLocality:
    def test_shortened_component_forgets_faster(self, toy_gmm):
        # same via-point perturbation, measured a fixed distance away inside
        # the left component's region: a shorter left lengthscale localizes it
        def deviation(ls_left):
            model = build(toy_gmm, lengthscales=[ls_left, 0.8], noise=1e-4)
            adapted = adapt(model, [ViaPoint([-0.3], [2.0])])
            pred = predict_trajectory(adapted, [[0.3]])[0]
            prior = gmr_predict(toy_gmm, [0.3])
            return abs(pred.mean[0] - prior.mean[0])

        assert deviation(0.05) < 0.1 * deviation(1.0)

    def test_set_component_lengthscale(self, toy_model):
        changed = set_component_lengthscale(toy_model, 1, 2.5)
        assert changed.lengthscales[1] == 2.5
        assert changed.lengthscales[0] == toy_model.lengthscales[0]
        assert toy_model.lengthscales[1] == 0.8

    def test_set_component_lengthscale_validation(self, toy_model):
        with pytest.raises(IndexError):
            set_component_lengthscale(toy_model, 7, 1.0)
        with pytest.raises(NonPositiveParamError):
            set_component_lengthscale(toy_model, 0, -1.0)

    def test_set_noise_validation(self, toy_model):
        with pytest.raises(NonPositiveParamError):
            set_noise(toy_model, -1e-3)
        with pytest.raises(NonPositiveParamError):
            set_noise(toy_model, np.array([1e-4, 1e-4, 1e-4]))


class TestKernelNonstationarity:
    def test_midpoint_covariance_blends_components(self, toy_model, toy_gmm):
        # between the components the kernel diagonal is the squared-
        # responsibility blend, below each single conditional variance
        k_mid = toy_model.kernel([1.2], [1.2])
        conds = component_conditionals(toy_gmm)
        assert k_mid[0, 0] < conds[:, 0, 0].min()
        expected = 0.25 * conds[0, 0, 0] + 0.25 * conds[1, 0, 0]
        assert k_mid[0, 0] == pytest.approx(expected, rel=1e-3)


class TestSampling:
    def test_shapes_and_determinism(self, toy_model):
        xs = np.linspace(0, 2.4, 15)[:, None]
        a = sample_trajectories(toy_model, xs, 4, seed=2)
        b = sample_trajectories(toy_model, xs, 4, seed=2)
        assert a.shape == (4, 15, 1)
        assert np.array_equal(a, b)

    def test_samples_respect_via_point(self, toy_model):
        adapted = adapt(toy_model, [ViaPoint([0.5], [2.0])])
        draws = sample_trajectories(adapted, [[0.5]], 200, seed=0)
        assert abs(draws.mean() - 2.0) < 0.05


class TestStationaryBaseline:
    def test_zero_prior_mean(self, toy_gmm):
        mogp = stationary_mogp(toy_gmm, lengthscales=1.0)
        pred = predict_batch(mogp, [[1.0]])[0]
        assert pred.mean[0] == 0.0

    def test_conditioning_works(self, toy_gmm, rng):
        mogp = stationary_mogp(toy_gmm, lengthscales=1.0)
        xs = rng.uniform(0, 2, (5, 1))
        ys = rng.standard_normal((5, 1))
        conditioned = condition(mogp, ObservationSet(xs, ys, noise=1e-6))
        pred = predict_batch(conditioned, xs[:1])[0]
        assert abs(pred.mean[0] - ys[0, 0]) < 1e-3


class TestSerialization:
    def test_json_roundtrip(self, toy_model):
        adapted = adapt(
            toy_model,
            [ViaPoint([0.4], [2.0]), ViaPoint([2.0], [0.5], noise_override=0.01)],
        )
        restored = model_from_json(model_to_json(adapted))
        assert isinstance(restored, GmrGpModel)
        assert np.array_equal(restored.lengthscales, adapted.lengthscales)
        assert restored.noise == adapted.noise
        xs = np.linspace(0, 2.4, 9)[:, None]
        a = predict_trajectory(adapted, xs)
        b = predict_trajectory(restored, xs)
        for pa, pb in zip(a, b):
            assert np.allclose(pa.mean, pb.mean, atol=1e-12)
            assert np.allclose(pa.covariance, pb.covariance, atol=1e-12)

    def test_per_component_noise_roundtrip(self, toy_gmm):
        model = build(toy_gmm, lengthscales=0.4, noise=np.array([1e-4, 1e-2]))
        restored = model_from_json(model_to_json(model))
        assert np.array_equal(np.asarray(restored.noise), [1e-4, 1e-2])


class TestCsv:
    def test_bounds_are_two_sigma(self, toy_model):
        xs = np.array([[0.5], [1.5]])
        preds = predict_trajectory(toy_model, xs)
        lines = trajectory_to_csv(xs, preds).strip().split("\n")
        assert lines[0] == "x0,mean0,cov00,lo0,hi0"
        for line, pred in zip(lines[1:], preds):
            x, mean, cov, lo, hi = map(float, line.split(","))
            assert hi - mean == pytest.approx(2 * np.sqrt(cov), rel=1e-12)
            assert mean - lo == pytest.approx(2 * np.sqrt(cov), rel=1e-12)
