from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthmetric.builtin import PlantedSpec, make_planted
from synthmetric.errors import NonBinaryFeature, SchemaMismatch, TooFewFeatures, TooFewRows
from synthmetric.fidelity import (
    METRIC_IDS,
    Dimension,
    FidelityVector,
    MetricId,
    cramers_v_score,
    euclidean_mean_score,
    evaluate_all,
    hellinger_marginal_score,
    jsd_marginal_score,
    mean_similarity_score,
    mmd_score,
    pearson_assoc_score,
    pmse_score,
)
from synthmetric.generators import GeneratorKind, GeneratorSpec, fit, sample
from synthmetric.tabular import Dataset, FeatureSchema

from . import oracles
from .conftest import binary_dataset, random_dataset

DETERMINISTIC = [
    hellinger_marginal_score,
    euclidean_mean_score,
    pearson_assoc_score,
    cramers_v_score,
    mean_similarity_score,
    jsd_marginal_score,
]


def _col(values):
    return binary_dataset(np.asarray(values, dtype=float)[:, None])


def test_metric_catalogue():
    assert len(METRIC_IDS) == 8
    for dim in Dimension:
        assert sum(m.dimension is dim for m in METRIC_IDS) == 2


# -- Hellinger ----------------------------------------------------------------


def test_hellinger_examples():
    assert hellinger_marginal_score(_col([1, 1]), _col([0, 0])) == 0.0
    h = math.sqrt(1 - math.sqrt(0.5))
    assert hellinger_marginal_score(_col([1, 1]), _col([0, 1])) == pytest.approx(1 - h, abs=1e-12)
    assert 1 - h == pytest.approx(0.4588, abs=1e-4)


# -- Euclidean / mean similarity ---------------------------------------------


def test_euclidean_examples():
    zeros = binary_dataset([[0, 0], [0, 0]])
    ones = binary_dataset([[1, 1], [1, 1]])
    assert euclidean_mean_score(zeros, ones) == 0.0
    real = binary_dataset([[0, 0], [1, 1]])
    syn = binary_dataset([[1, 0], [1, 1]])
    assert euclidean_mean_score(real, syn) == pytest.approx(1 - 0.5 / math.sqrt(2), abs=1e-12)
    assert euclidean_mean_score(real, syn) == pytest.approx(0.6464, abs=1e-4)


def test_mean_similarity_examples():
    assert mean_similarity_score(binary_dataset([[0]] * 3), binary_dataset([[1]] * 3)) == 0.0
    real = binary_dataset([[1, 1], [0, 1], [0, 0], [0, 0], [0, 0]])  # means 0.2, 0.4
    syn = binary_dataset([[1, 1], [1, 1], [0, 0], [0, 0], [0, 0]])  # means 0.4, 0.4
    assert mean_similarity_score(real, syn) == pytest.approx(0.9, abs=1e-12)


# -- association ----------------------------------------------------------------


PERFECT = binary_dataset([[0, 0], [1, 1], [0, 0], [1, 1]])
ANTI = binary_dataset([[0, 1], [1, 0], [0, 1], [1, 0]])
INDEPENDENT = binary_dataset([[0, 0], [0, 1], [1, 0], [1, 1]])


def test_pearson_examples():
    assert pearson_assoc_score(PERFECT, ANTI) == 0.0
    assert pearson_assoc_score(PERFECT, INDEPENDENT) == pytest.approx(0.5, abs=1e-12)


def test_cramers_v_examples():
    assert cramers_v_score(PERFECT, INDEPENDENT) == 0.0
    # table n11=3, n00=3, n10=1, n01=1 gives phi = (9 - 1) / 16 = 0.5
    half = binary_dataset([[1, 1]] * 3 + [[0, 0]] * 3 + [[1, 0], [0, 1]])
    assert oracles.phi_from_table([r[0] for r in half.rows], [r[1] for r in half.rows]) == 0.5
    assert cramers_v_score(PERFECT, half) == pytest.approx(0.5, abs=1e-12)


def test_association_preconditions():
    one = binary_dataset([[0], [1]])
    with pytest.raises(TooFewFeatures):
        pearson_assoc_score(one, one)
    with pytest.raises(TooFewFeatures):
        cramers_v_score(one, one)
    mixed = random_dataset(np.random.default_rng(0), 10, 3, continuous=1)
    with pytest.raises(NonBinaryFeature):
        cramers_v_score(mixed, mixed)


def test_zero_variance_pairs_contribute_zero():
    const = binary_dataset([[1, 0], [1, 1], [1, 0], [1, 1]])
    assert pearson_assoc_score(const, INDEPENDENT) == 1.0
    assert cramers_v_score(const, INDEPENDENT) == 1.0


# -- JSD ------------------------------------------------------------------------


def test_jsd_examples():
    assert jsd_marginal_score(_col([1, 1]), _col([0, 0])) == 0.0
    # P = (0, 1), Q = (1/2, 1/2), M = (1/4, 3/4)
    expected_jsd = 1.5 - 0.75 * math.log2(3)
    assert expected_jsd == pytest.approx(0.3113, abs=1e-4)
    assert jsd_marginal_score(_col([1, 1]), _col([0, 1])) == pytest.approx(1 - expected_jsd, abs=1e-12)
    brute = oracles.jsd_score([[1], [1]], [[0], [1]], [True])
    assert jsd_marginal_score(_col([1, 1]), _col([0, 1])) == pytest.approx(brute, abs=1e-12)


# -- pMSE / MMD -------------------------------------------------------------------


def test_pmse_same_distribution_large_n():
    real = make_planted(PlantedSpec(n=5000, d=20, seed=3, block_size=4))
    gen = fit(GeneratorSpec(GeneratorKind.INDEPENDENT_MARGINALS), real)
    a = sample(gen, 2500, seed=1)
    b = sample(gen, 2500, seed=2)
    assert pmse_score(a, b, seed=0) >= 0.95


def test_pmse_separable_limit():
    real = binary_dataset([[0, 0, 0]] * 50)
    syn = binary_dataset([[1, 1, 1]] * 50)
    assert pmse_score(real, syn, seed=0) == pytest.approx(0.0, abs=0.05)


def test_pmse_exact_copy(planted):
    assert pmse_score(planted, planted, seed=0) >= 0.95


def test_pmse_needs_rows():
    small = binary_dataset(np.zeros((10, 2)))
    with pytest.raises(TooFewRows):
        pmse_score(small, small, seed=0)


def test_mmd_examples():
    data = random_dataset(np.random.default_rng(1), 30, 6)
    assert mmd_score(data, data) == 1.0
    a = binary_dataset([[0] * 20] * 10)
    b = binary_dataset([[1] * 20] * 10)
    assert mmd_score(a, b) == pytest.approx(0.0, abs=1e-3)
    with pytest.raises(TooFewRows):
        mmd_score(binary_dataset([[0, 1]], [0]), binary_dataset([[0, 1], [1, 0]]))


def test_mmd_oracle_random_30x10():
    rng = np.random.default_rng(2024)
    real = random_dataset(rng, 30, 10, continuous=3)
    syn = random_dataset(rng, 30, 10, continuous=3)
    assert mmd_score(real, syn) == pytest.approx(
        oracles.mmd_score(real.rows.tolist(), syn.rows.tolist()), abs=1e-9
    )


# -- evaluate_all -----------------------------------------------------------------


def test_evaluate_all_identity(planted):
    fv = evaluate_all(planted, planted, seed=1)
    assert len(fv.scores) == 8
    assert all(fv[m] >= 0.95 for m in METRIC_IDS)


def test_evaluate_all_schema_mismatch():
    a = binary_dataset(np.zeros((30, 2)))
    b = binary_dataset(np.zeros((30, 3)))
    with pytest.raises(SchemaMismatch):
        evaluate_all(a, b, seed=0)
    renamed = Dataset(FeatureSchema(("x", "y"), a.schema.feature_kinds, "label"), a.rows, a.labels)
    with pytest.raises(SchemaMismatch):
        hellinger_marginal_score(a, renamed)


def test_fidelity_vector_contract():
    fv = FidelityVector({m: 0.5 for m in METRIC_IDS})
    assert FidelityVector.from_dict(fv.to_dict()) == fv
    with pytest.raises(ValueError):
        FidelityVector({m: 0.5 for m in METRIC_IDS[:7]})
    with pytest.raises(ValueError):
        FidelityVector({m: 1.5 for m in METRIC_IDS})
    assert fv[MetricId.MMD] == fv["Mmd"] == 0.5


# -- properties ---------------------------------------------------------------------


datasets = st.builds(
    lambda seed, n, d, cont: (
        random_dataset(np.random.default_rng(seed), n, d, continuous=cont),
        random_dataset(np.random.default_rng(seed + 1), n, d, continuous=cont),
    ),
    seed=st.integers(0, 2**32 - 2),
    n=st.integers(2, 50),
    d=st.integers(2, 10),
    cont=st.integers(0, 2),
)


@settings(max_examples=60, deadline=None)
@given(pair=datasets)
def test_oracle_equivalence(pair):
    real, syn = pair
    r, s = real.rows.tolist(), syn.rows.tolist()
    flags = list(real.schema.binary_mask)
    assert hellinger_marginal_score(real, syn) == pytest.approx(oracles.hellinger_score(r, s, flags), abs=1e-9)
    assert jsd_marginal_score(real, syn) == pytest.approx(oracles.jsd_score(r, s, flags), abs=1e-9)
    assert pearson_assoc_score(real, syn) == pytest.approx(oracles.pearson_assoc_score(r, s), abs=1e-9)
    assert euclidean_mean_score(real, syn) == pytest.approx(oracles.euclidean_score(r, s), abs=1e-9)
    assert mean_similarity_score(real, syn) == pytest.approx(oracles.mean_similarity_score(r, s), abs=1e-9)
    assert mmd_score(real, syn) == pytest.approx(oracles.mmd_score(r, s), abs=1e-9)
    if real.schema.all_binary:
        assert cramers_v_score(real, syn) == pytest.approx(oracles.cramers_v_score(r, s), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(pair=datasets)
def test_range_and_identity(pair):
    real, syn = pair
    for metric in DETERMINISTIC:
        if metric is cramers_v_score and not real.schema.all_binary:
            continue
        assert 0.0 <= metric(real, syn) <= 1.0
        assert metric(real, real) == 1.0
    assert 0.0 <= mmd_score(real, syn) <= 1.0
    assert mmd_score(real, real) == 1.0
    if real.n >= 20:
        assert 0.0 <= pmse_score(real, syn, seed=0) <= 1.0


def test_symmetric_degradation(planted):
    previous = None
    for eps in (0.0, 0.1, 0.2, 0.4):
        gen = fit(GeneratorSpec(GeneratorKind.NOISY_COPY, flip_rate=eps), planted)
        syn = sample(gen, 500, seed=1)
        current = evaluate_all(planted, syn, seed=1).as_array()
        if previous is not None:
            assert (current <= previous + 0.02).all(), (eps, previous, current)
        previous = current
