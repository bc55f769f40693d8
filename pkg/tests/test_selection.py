"""Information criteria, ranking, and cure-rate accuracy metrics."""

import math

import numpy as np
import pytest

from dwpcure.selection import (
    CRITERIA,
    ModelScore,
    cure_rate_metrics,
    rank,
    total_relative_bias,
)


def _score(label, ll, k, n):
    return ModelScore(
        label=label,
        loglik=ll,
        n_params=k,
        aic=-2 * ll + 2 * k,
        bic=-2 * ll + k * math.log(n),
    )


def test_information_criteria_published_values():
    s = _score("DNB", -199.108, 8, 205)
    assert s.aic == pytest.approx(414.216, abs=1e-9)
    assert s.bic == pytest.approx(440.800, abs=1e-2)


def test_zero_loglik_zero_params():
    s = _score("null", 0.0, 0, 50)
    assert s.aic == 0.0 and s.bic == 0.0


def test_rank_orderings():
    a = _score("A", -100.0, 5, 80)
    b = _score("B", -98.0, 8, 80)
    c = _score("C", -105.0, 5, 80)
    by_aic = rank([a, b, c], "AIC")
    assert [s.label for s in by_aic] == ["A", "B", "C"]
    by_ll = rank([a, b, c], "loglik")
    assert [s.label for s in by_ll] == ["B", "A", "C"]
    # BIC punishes B's extra parameters harder
    by_bic = rank([a, b, c], "BIC")
    assert by_bic[0].label == "A"


def test_rank_tie_break_prefers_fewer_parameters():
    # equal AIC by construction: loglik differs by exactly one parameter
    a = _score("seven", -100.0, 7, 60)
    b = _score("eight", -99.0, 8, 60)
    assert a.aic == b.aic
    assert [s.label for s in rank([b, a], "AIC")] == ["seven", "eight"]
    assert [s.label for s in rank([a, b], "AIC")] == ["seven", "eight"]


def test_rank_rejects_unknown_criterion():
    assert set(CRITERIA) == {"AIC", "BIC", "loglik"}
    with pytest.raises(ValueError):
        rank([_score("A", -1.0, 1, 10)], "HQIC")


def test_cure_rate_metrics_worked_example():
    trb, tmse = cure_rate_metrics(np.array([0.5, 0.5]), np.array([0.4, 0.6]))
    assert trb == pytest.approx(40.0)
    assert tmse == pytest.approx(0.02)


def test_cure_rate_metrics_perfect_estimate():
    true = np.array([0.3, 0.5, 0.7])
    trb, tmse = cure_rate_metrics(true, true.copy())
    assert trb == 0.0 and tmse == 0.0
    assert total_relative_bias(true, true) == 0.0


def test_cure_rate_metrics_guards():
    with pytest.raises(ValueError):
        cure_rate_metrics(np.array([0.5]), np.array([0.4]))  # needs n >= 2
    with pytest.raises(ValueError):
        cure_rate_metrics(np.array([0.0, 0.5]), np.array([0.1, 0.4]))
    with pytest.raises(ValueError):
        cure_rate_metrics(np.array([0.5, 0.5]), np.array([0.4]))
