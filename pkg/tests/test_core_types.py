import numpy as np
import pytest

from predevaltools.core.exceptions import ConfigurationError, DataError, NumericalError, PredEvalError
from predevaltools.core.primitives import accuracy, largest_remainder, macro_f1, softmax, top1
from predevaltools.core.types import (
    Histogram, LabelVector, LogitMatrix, Manifest, ManifestEntry, PredictionMatrix
)


class TestExceptions:
    def test_exit_codes(self):
        assert ConfigurationError('x').exit_code == 2
        assert DataError('x').exit_code == 3
        assert NumericalError('x').exit_code == 4

    def test_hierarchy(self):
        assert issubclass(DataError, PredEvalError)
        assert issubclass(ConfigurationError, PredEvalError)
        assert issubclass(NumericalError, PredEvalError)

    def test_data_error_names_path_and_line(self):
        error = DataError('malformed row', 'preds.csv', 7)

        assert str(error) == 'preds.csv:7: malformed row'
        assert error.path == 'preds.csv'
        assert error.line == 7

    def test_data_error_without_line(self):
        assert str(DataError('file not found', 'a.csv')) == 'a.csv: file not found'
        assert str(DataError('plain')) == 'plain'


class TestPredictionMatrix:
    def test_accepts_stochastic_rows(self):
        preds = PredictionMatrix(np.array([[0.2, 0.8], [0.5, 0.5]]))

        assert preds.n == 2
        assert preds.k == 2
        np.testing.assert_array_equal(preds.max_confidence(), [0.8, 0.5])

    def test_is_read_only(self):
        preds = PredictionMatrix(np.array([[0.2, 0.8]]))

        with pytest.raises(ValueError):
            preds.data[0, 0] = 1.0

    def test_copies_input(self):
        source = np.array([[0.2, 0.8]])
        preds = PredictionMatrix(source)
        source[0, 0] = 0.9

        assert preds.data[0, 0] == 0.2

    @pytest.mark.parametrize('data', [
        [[0.2, 0.7]],
        [[1.2, -0.2]],
        [[np.nan, 1.0]],
        [[1.0]],
        np.zeros((0, 3)),
        [0.5, 0.5],
    ])
    def test_rejects_invalid(self, data):
        with pytest.raises(DataError):
            PredictionMatrix(np.asarray(data, dtype=np.float64))

    def test_error_names_first_bad_row(self):
        with pytest.raises(DataError, match='row 1'):
            PredictionMatrix(np.array([[0.5, 0.5], [0.5, 0.6]]))


class TestLogitMatrix:
    def test_rejects_non_finite(self):
        with pytest.raises(DataError, match='row 0'):
            LogitMatrix(np.array([[np.inf, 0.0]]))

    def test_shape(self):
        logits = LogitMatrix(np.zeros((3, 4)))

        assert (logits.n, logits.k) == (3, 4)


class TestLabelVector:
    def test_accepts_integral_floats(self):
        labels = LabelVector(np.array([0.0, 2.0, 1.0]))

        assert labels.labels.dtype == np.int64
        assert len(labels) == 3

    def test_rejects_fractional(self):
        with pytest.raises(DataError):
            LabelVector(np.array([0.5, 1.0]))

    def test_rejects_negative(self):
        with pytest.raises(DataError, match='entry 1'):
            LabelVector(np.array([0, -1]))

    def test_check_against(self):
        labels = LabelVector(np.array([0, 3]))

        with pytest.raises(DataError, match='does not match'):
            labels.check_against(3, 4)
        with pytest.raises(DataError, match='k=3'):
            labels.check_against(2, 3)
        labels.check_against(2, 4)


class TestHistogram:
    def test_normalized(self):
        histogram = Histogram.normalized([1.0, 3.0])

        np.testing.assert_allclose(histogram.mass, [0.25, 0.75])
        assert histogram.k == 2

    def test_uniform(self):
        np.testing.assert_allclose(Histogram.uniform(4).mass, [0.25] * 4)

    @pytest.mark.parametrize('weights', [[0.0, 0.0], [1.0, -1.0], [np.inf, 1.0]])
    def test_normalized_rejects(self, weights):
        with pytest.raises(DataError):
            Histogram.normalized(weights)

    def test_rejects_unnormalized_mass(self):
        with pytest.raises(DataError):
            Histogram(np.array([0.5, 0.6]))


class TestManifest:
    def _entry(self, model_id, dataset_id):
        return ManifestEntry(model_id, dataset_id, predictions_path=f'{model_id}/{dataset_id}.csv')

    def test_dataset_centric_needs_one_model(self):
        with pytest.raises(DataError, match='exactly one model_id'):
            Manifest('dataset_centric', [self._entry('a', 'x'), self._entry('b', 'y')])

    def test_model_centric_needs_one_dataset(self):
        with pytest.raises(DataError, match='exactly one dataset_id'):
            Manifest('model_centric', [self._entry('a', 'x'), self._entry('b', 'y')])

    def test_rejects_duplicates_and_empty(self):
        with pytest.raises(DataError, match='duplicate'):
            Manifest('dataset_centric', [self._entry('a', 'x'), self._entry('a', 'x')])
        with pytest.raises(DataError, match='no entries'):
            Manifest('model_centric', [])

    def test_rejects_unknown_mode(self):
        with pytest.raises(DataError, match='unknown manifest mode'):
            Manifest('both', [self._entry('a', 'x')])  # type: ignore

    def test_subject_id(self):
        assert self._entry('m', 'd').subject_id == 'm/d'


class TestPrimitives:
    def test_softmax_is_shift_invariant(self):
        z = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]])

        shifted = softmax(LogitMatrix(z + 1000.0)).data

        np.testing.assert_allclose(softmax(LogitMatrix(z)).data, shifted, atol=1e-15)
        np.testing.assert_allclose(shifted[1], [1 / 3] * 3)

    def test_top1_ties_go_to_lowest_index(self):
        preds = PredictionMatrix(np.array([[0.5, 0.5], [0.25, 0.75]]))

        np.testing.assert_array_equal(top1(preds).labels, [0, 1])

    def test_accuracy(self):
        preds = PredictionMatrix(np.array([[0.9, 0.1], [0.2, 0.8], [0.6, 0.4]]))

        assert accuracy(preds, LabelVector(np.array([0, 1, 1]))) == pytest.approx(2 / 3)

    def test_accuracy_length_mismatch(self):
        preds = PredictionMatrix(np.array([[0.9, 0.1]]))

        with pytest.raises(DataError):
            accuracy(preds, LabelVector(np.array([0, 1])))

    def test_macro_f1(self):
        preds = PredictionMatrix(np.array([[0.9, 0.1], [0.8, 0.2], [0.2, 0.8]]))
        labels = LabelVector(np.array([0, 1, 1]))

        # class 0: tp 1, predicted 2, true 1; class 1: tp 1, predicted 1, true 2
        assert macro_f1(preds, labels) == pytest.approx(2 / 3)

    def test_macro_f1_skips_absent_classes(self):
        preds = PredictionMatrix(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
        labels = LabelVector(np.array([0, 1]))

        assert macro_f1(preds, labels) == pytest.approx(1.0)

    def test_macro_f1_class_without_true_positive(self):
        preds = PredictionMatrix(np.array([[1.0, 0.0], [1.0, 0.0]]))
        labels = LabelVector(np.array([0, 1]))

        # class 0: F1 = 2/3; class 1 never predicted: F1 = 0
        assert macro_f1(preds, labels) == pytest.approx(1 / 3)

    def test_largest_remainder(self):
        assert largest_remainder([1, 1, 1], 10) == [4, 3, 3]
        assert largest_remainder([0.5, 0.25, 0.25], 4) == [2, 1, 1]
        assert largest_remainder([1, 0], 3) == [3, 0]

    def test_largest_remainder_sums_to_total(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            weights = rng.random(rng.integers(1, 12))
            total = int(rng.integers(0, 500))

            assert sum(largest_remainder(weights, total)) == total

    def test_largest_remainder_rejects(self):
        with pytest.raises(DataError):
            largest_remainder([0, 0], 3)
        with pytest.raises(DataError):
            largest_remainder([1, 1], -1)
