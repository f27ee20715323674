import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from errbound.estimator import ErrorBoundAnalyzer
from instances import corner_instance, cube_root_instance, flat_cubic_instance


def test_fit_cubic():
    est = ErrorBoundAnalyzer(radii=(1e-1, 1e-2)).fit(cube_root_instance())
    assert est.diagnosis_ == "error-bound-holds"
    assert est.tau_ == pytest.approx(1 / 3, abs=1e-9)
    assert est.problem_.radii == (1e-1, 1e-2)


def test_predict_bounds_distance():
    est = ErrorBoundAnalyzer().fit(corner_instance())
    X = np.array([[0.1, 0.1], [-0.2, 0.05], [-1.0, -1.0]])
    dist = np.linalg.norm(np.maximum(X, 0), axis=1)
    pred = est.predict(X)
    assert np.all(dist <= pred + 1e-12)
    assert pred[2] == 0.0
    np.testing.assert_allclose(est.decision_function(X), X.max(axis=1))


def test_falls_back_to_empirical_value_when_hypotheses_fail():
    est = ErrorBoundAnalyzer().fit(flat_cubic_instance())
    assert est.diagnosis_ == "hypotheses-violated"
    assert np.isinf(est.tau_)
    assert np.isinf(est.predict([[0.01]])[0]) and est.predict([[-0.01]])[0] == 0.0


def test_params_and_clone():
    est = ErrorBoundAnalyzer(samples_per_radius=50, random_state=3)
    assert est.get_params() == {
        "radii": None,
        "samples_per_radius": 50,
        "random_state": 3,
        "agreement_gap": None,
    }
    twin = clone(est)
    assert twin.get_params() == est.get_params() and not hasattr(twin, "report_")


def test_random_state_is_applied():
    est = ErrorBoundAnalyzer(random_state=8, samples_per_radius=30).fit(cube_root_instance())
    assert est.report_.seed == 8 and est.problem_.samples_per_radius == 30


def test_unfitted_and_bad_input():
    with pytest.raises(NotFittedError):
        ErrorBoundAnalyzer().predict([[0.0]])
    with pytest.raises(TypeError):
        ErrorBoundAnalyzer().fit(np.zeros((3, 2)))
    est = ErrorBoundAnalyzer(radii=(0.1,)).fit(cube_root_instance())
    with pytest.raises(ValueError):
        est.predict([[0.0, 1.0]])
    with pytest.raises(ValueError):
        est.predict([[np.nan]])
