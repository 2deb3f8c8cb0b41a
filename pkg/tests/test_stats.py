import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import permutation_p, spearman_oracle
from tennis_momentum.errors import (
    ConstantColumnWarning,
    DomainError,
    InsufficientDataError,
    UsageError,
)
from tennis_momentum.stats import (
    CorrelationReport,
    PcaResult,
    correlation_matrix,
    pca,
    spearman,
    top_factors,
)


def test_perfect_monotone_and_antimonotone():
    assert spearman([1, 2, 3], [10, 20, 30]) == (1.0, 0.0)
    assert spearman([1, 2, 3], [3, 2, 1])[0] == -1.0


def test_ties_match_average_rank_oracle():
    rho, _ = spearman([1, 2, 2, 4], [1, 3, 2, 4])
    assert abs(rho - spearman_oracle([1, 2, 2, 4], [1, 3, 2, 4])) <= 1e-12


@pytest.mark.parametrize("seed", range(100))
def test_monotone_transform_invariance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 30))
    x = rng.integers(0, 6, n).astype(float)  # plenty of ties
    y = rng.normal(size=n)
    if np.all(x == x[0]):
        x[0] += 1
    rho, _ = spearman(x, y)
    rho_t, _ = spearman(np.exp(x) * 3 + 1, y ** 3)
    assert abs(rho - rho_t) <= 1e-12
    assert abs(rho - spearman_oracle(x, y)) <= 1e-12


def test_exact_p_matches_permutation_oracle():
    x, y = [3, 1, 4, 1, 5, 9], [2, 7, 1, 8, 2, 8]
    rho, p = spearman(x, y, method="exact")
    assert p == pytest.approx(permutation_p(x, y), abs=1e-12)
    assert rho == pytest.approx(spearman_oracle(x, y), abs=1e-12)


def test_t_approximation_tracks_permutation_p():
    rng = np.random.default_rng(7)
    x = rng.normal(size=10)
    y = x + rng.normal(size=10)
    _, p_t = spearman(x, y)
    _, p_exact = spearman(x, y, method="exact")
    assert abs(p_t - p_exact) < 0.05


def test_spearman_edge_cases():
    rho, p = spearman([1, 1, 1], [1, 2, 3])
    assert math.isnan(rho) and math.isnan(p)
    with pytest.raises(InsufficientDataError):
        spearman([1, 2], [2, 1])
    with pytest.raises(UsageError):
        spearman([1, 2, 3], [1, 2])
    # incomplete pairs are dropped
    assert spearman([1, 2, np.nan, 4], [1, 2, 3, 4])[0] == 1.0


# -- correlation matrix ------------------------------------------------------

def test_matrix_matches_pairwise_oracle():
    rng = np.random.default_rng(1)
    T = rng.normal(size=(40, 3))
    T[:, 2] = np.round(T[:, 0] + T[:, 2])
    rep = correlation_matrix(T, names=["a", "b", "c"])
    for i in range(3):
        assert rep.rho[i, i] == 1.0
        for j in range(3):
            if i != j:
                assert abs(rep.rho[i, j] - spearman_oracle(T[:, i], T[:, j])) <= 1e-12
    assert np.array_equal(rep.rho, rep.rho.T)


def test_constant_column_flagged_undefined():
    rng = np.random.default_rng(2)
    T = np.column_stack([rng.normal(size=20), np.zeros(20), rng.normal(size=20)])
    with pytest.warns(ConstantColumnWarning, match="ace"):
        rep = correlation_matrix(T, target="y", names=["x", "ace", "y"])
    assert rep.constant_columns == ("ace",)
    assert np.all(np.isnan(rep.rho[1])) and np.all(np.isnan(rep.rho[:, 1]))
    assert rep.target_ranking()[-1][0] == "ace"
    assert math.isnan(rep.p_value("ace"))
    payload = json.loads(json.dumps(rep.to_dict()))
    assert payload["constant"] == ["ace"]
    assert rep.to_csv().splitlines()[0] == ",x,ace,y"


# -- PCA ---------------------------------------------------------------------

def _table(seed, n=60, m=5):
    rng = np.random.default_rng(seed)
    base = rng.normal(size=(n, 2))
    T = base @ rng.normal(size=(2, m)) + 0.5 * rng.normal(size=(n, m))
    return T, [f"v{j}" for j in range(m)]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_pca_contributions_and_reconstruction(seed):
    T, names = _table(seed)
    res = pca(T, names=names)
    assert abs(res.contribution.sum() - 1.0) <= 1e-9
    assert np.all(np.diff(res.cumulative) >= 0)
    assert np.all(np.diff(res.eigenvalues) <= 1e-12)
    R = res.loadings @ np.diag(res.eigenvalues) @ res.loadings.T
    assert np.max(np.abs(R - res.correlation)) <= 1e-8
    assert np.max(np.abs(res.correlation - np.corrcoef(T, rowvar=False))) <= 1e-10


def test_pca_variable_permutation():
    T, names = _table(3)
    a = pca(T, names=names)
    perm = [3, 0, 4, 2, 1]
    b = pca(T[:, perm], names=[names[i] for i in perm])
    assert np.allclose(a.eigenvalues, b.eigenvalues, atol=1e-12)
    assert np.allclose(np.abs(a.loadings[perm, 0]), np.abs(b.loadings[:, 0]), atol=1e-10)


def test_perfectly_correlated_pair():
    x = np.arange(10.0)
    res = pca(np.column_stack([x, 2 * x + 1]), names=["a", "b"])
    assert np.allclose(res.contribution, [1.0, 0.0], atol=1e-12)


def test_independent_variables_share_variance():
    rng = np.random.default_rng(0)
    res = pca(rng.normal(size=(20_000, 4)), names=list("abcd"))
    assert np.allclose(res.contribution, 0.25, atol=0.02)


def test_pca_errors():
    with pytest.raises(DomainError, match="ace"):
        pca(np.column_stack([np.arange(5.0), np.zeros(5)]), names=["x", "ace"])
    with pytest.raises(InsufficientDataError):
        pca(np.ones((5, 1)), names=["x"])
    with pytest.raises(UsageError):
        pca(np.ones((5, 2)), variables=["zz"], names=["x", "y"])


def test_pca_csv_layout():
    T, names = _table(4, m=3)
    text = pca(T, names=names).to_csv().splitlines()
    assert text[0] == ",F1,F2,F3"
    assert text[-2].startswith("Contribution Rate,")
    assert text[-1].startswith("Cumulative Contribution,")


# -- top factors -------------------------------------------------------------

def _pca_from_loadings(names, first):
    k = len(names)
    L = np.zeros((k, k))
    L[:, 0] = first
    ev = np.linspace(k, 1, k)
    return PcaResult(tuple(names), L, ev, ev / ev.sum(), np.cumsum(ev / ev.sum()), np.eye(k), 100)


def test_top_factors_published_loadings():
    names = ["p1_winner", "p1_net_pt_won", "p1_break_pt_won", "p1_break_pt_missed",
             "speed_mph", "serve_width", "serve_depth", "return_depth"]
    first = [0, -0.25, 0.11, 0.21, -0.49, -0.46, -0.47, 0.45]
    res = _pca_from_loadings(names, first)
    top = top_factors(None, res, 3)
    assert [f.name for f in top] == ["speed_mph", "serve_depth", "serve_width"]
    assert top_factors(None, res, 0) == []


def test_single_variable_carrying_variance_ranks_first():
    rng = np.random.default_rng(8)
    n = 500
    signal = rng.normal(size=n)
    T = np.column_stack([
        rng.normal(size=n),
        signal + 0.05 * rng.normal(size=n),
        signal + 0.05 * rng.normal(size=n),
        rng.normal(size=n),
    ])
    names = ["noise1", "driver", "echo", "noise2"]
    target = signal + 0.01 * rng.normal(size=n)
    table = np.column_stack([T, target])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = correlation_matrix(table, target="y", names=names + ["y"])
    res = pca(T, names=names)
    top = top_factors(rep, res, 2)
    assert {f.name for f in top} == {"driver", "echo"}
    assert all(f.p_value < 1e-6 for f in top)
    assert isinstance(rep, CorrelationReport)
