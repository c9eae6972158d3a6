import numpy as np
import pytest

from gmrgp import fit_gmm, sample_joint
from gmrgp.datasets import (
    generate_synthetic,
    load_demonstrations,
    save_demonstrations,
    two_component_toy_gmm,
)
from gmrgp.exceptions import NonFiniteInputError, ParseError, RaggedDemoError
from gmrgp.gmm import DemonstrationSet


class TestRoundTrip:
    def test_bit_identical(self, tmp_path, letter_demos):
        path = tmp_path / "demos.csv"
        save_demonstrations(letter_demos, path)
        loaded = load_demonstrations(path)
        assert np.array_equal(loaded.inputs, letter_demos.inputs)
        assert np.array_equal(loaded.outputs, letter_demos.outputs)
        assert loaded.demo_boundaries == letter_demos.demo_boundaries

    def test_header_shape(self, tmp_path):
        demos = generate_synthetic("minjerk", {"start": [0, 0, 0], "goal": [1, 1, 1]}, seed=1)
        path = tmp_path / "demos.csv"
        save_demonstrations(demos, path)
        header = path.read_text().split("\n", 1)[0]
        assert header == "demo,in_0,out_0,out_1,out_2"


class TestParseErrors:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            load_demonstrations(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n0,1,2\n")
        with pytest.raises(ParseError):
            load_demonstrations(path)

    def test_non_numeric_cell_names_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("demo,in_0,out_0\n0,0.0,1.0\n0,oops,2.0\n")
        with pytest.raises(ParseError, match="row 3"):
            load_demonstrations(path)

    def test_nan_cell_names_position(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("demo,in_0,out_0\n0,0.0,1.0\n0,0.5,nan\n")
        with pytest.raises(NonFiniteInputError, match="row 3.*out_0"):
            load_demonstrations(path)

    def test_short_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("demo,in_0,out_0\n0,0.0\n")
        with pytest.raises(ParseError, match="row 2"):
            load_demonstrations(path)

    def test_noncontiguous_demo_ids(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("demo,in_0,out_0\n0,0.0,1.0\n1,0.0,1.0\n0,0.5,2.0\n")
        with pytest.raises(RaggedDemoError):
            load_demonstrations(path)


class TestResample:
    def _ragged_file(self, tmp_path):
        path = tmp_path / "ragged.csv"
        rows = ["demo,in_0,out_0"]
        for i in range(4):
            rows.append(f"0,{i / 3},{2 * i / 3}")
        for i in range(7):
            rows.append(f"1,{i / 6},{2 * i / 6}")
        path.write_text("\n".join(rows) + "\n")
        return path

    def test_ragged_without_resample_rejected(self, tmp_path):
        with pytest.raises(RaggedDemoError):
            load_demonstrations(self._ragged_file(tmp_path))

    def test_resample_aligns_lengths(self, tmp_path):
        demos = load_demonstrations(self._ragged_file(tmp_path), resample_to=10)
        assert demos.num_demos == 2
        for i in range(2):
            xs, ys = demos.demo(i)
            assert xs.shape == (10, 1)
            # the underlying lines are linear, so interpolation is exact
            assert np.allclose(ys[:, 0], 2 * xs[:, 0], atol=1e-12)


class TestGenerators:
    @pytest.mark.parametrize("kind,params", [
        ("letter", {"n_demos": 3, "samples_per_demo": 50}),
        ("minjerk", {"n_demos": 2}),
        ("approach-insert", {"n_demos": 3, "samples_per_demo": 60}),
    ])
    def test_deterministic_per_seed(self, kind, params):
        a = generate_synthetic(kind, params, seed=5)
        b = generate_synthetic(kind, params, seed=5)
        c = generate_synthetic(kind, params, seed=6)
        assert np.array_equal(a.outputs, b.outputs)
        assert not np.array_equal(a.outputs, c.outputs)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            generate_synthetic("nope")

    def test_minjerk_endpoints_and_monotone_progress(self):
        demos = generate_synthetic(
            "minjerk", {"start": [0.0, 1.0], "goal": [2.0, -1.0], "noise": 0.0}, seed=0
        )
        xs, ys = demos.demo(0)
        assert np.allclose(ys[0], [0.0, 1.0], atol=1e-9)
        assert np.allclose(ys[-1], [2.0, -1.0], atol=1e-9)
        progress = (ys - ys[0]) @ (ys[-1] - ys[0])
        assert np.all(np.diff(progress) >= -1e-12)

    def test_approach_insert_descent_is_vertical(self):
        demos = generate_synthetic(
            "approach-insert", {"n_demos": 4, "samples_per_demo": 150, "noise": 0.0}, seed=2
        )
        for i in range(4):
            xs, ys = demos.demo(i)
            descent = ys[xs[:, 0] > 2.1]
            assert np.abs(descent[:, 0] - 8.0).max() < 1e-6
            assert descent[0, 1] > descent[-1, 1]

    def test_gmm_draw_fit_generate_fit_consistency(self):
        # fit a model to generator output and check it reproduces the source
        # moments: a closed loop over the generator and the fitter
        source = two_component_toy_gmm()
        demos = generate_synthetic(
            "gmm-draw", {"model": source, "n_demos": 30, "samples_per_demo": 80}, seed=4
        )
        fitted = fit_gmm(demos, 2)
        means = sorted(c.mean[1] for c in fitted.components)
        assert abs(means[0] - 0.0) < 0.1
        assert abs(means[1] - 1.0) < 0.1


class TestToyModel:
    def test_structure(self):
        model = two_component_toy_gmm()
        assert model.num_components == 2
        assert model.input_dim == 1 and model.output_dim == 1
        assert model.weights.sum() == pytest.approx(1.0)

    def test_sampling_agrees_with_moments(self):
        model = two_component_toy_gmm()
        samples = sample_joint(model, 200_000, seed=8)
        expected_mean = np.mean([c.mean for c in model.components], axis=0)
        assert np.allclose(samples.mean(axis=0), expected_mean, atol=0.01)
