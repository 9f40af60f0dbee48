"""Eight fidelity metrics over four dimensions.

Every score lies in [0, 1] with 1 meaning the synthetic table cannot be told
apart from the real one by that criterion. Raw distances are divided by their
analytic maxima so the scores can be mixed in a convex combination.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .classifiers import ClassifierKind, ClassifierSpec, predict_proba, train
from .errors import NonBinaryFeature, SchemaMismatch, TooFewFeatures, TooFewRows
from .tabular import Dataset, check_same_schema

N_BINS = 10
PMSE_MIN_ROWS = 20
# Stronger than the utility defaults so separable tables drive propensities
# to {0, 1} within the epoch budget.
PMSE_DISCRIMINATOR = ClassifierSpec(
    ClassifierKind.LOGISTIC, {"lr": 1.0, "epochs": 500, "l2": 0.0}
)


class Dimension(str, Enum):
    DISTANCE = "Distance"
    CORRELATION_ASSOCIATION = "CorrelationAssociation"
    FEATURE_SIMILARITY = "FeatureSimilarity"
    MULTIVARIATE_DISTRIBUTION = "MultivariateDistribution"


class MetricId(str, Enum):
    HELLINGER_MARGINAL = "HellingerMarginal"
    EUCLIDEAN_MEAN = "EuclideanMean"
    PEARSON_ASSOC = "PearsonAssoc"
    CRAMERS_V_ASSOC = "CramersVAssoc"
    MEAN_SIMILARITY = "MeanSimilarity"
    JSD_MARGINAL = "JsdMarginal"
    PMSE = "Pmse"
    MMD = "Mmd"

    @property
    def dimension(self) -> Dimension:
        return _DIMENSIONS[self]


_DIMENSIONS = {
    MetricId.HELLINGER_MARGINAL: Dimension.DISTANCE,
    MetricId.EUCLIDEAN_MEAN: Dimension.DISTANCE,
    MetricId.PEARSON_ASSOC: Dimension.CORRELATION_ASSOCIATION,
    MetricId.CRAMERS_V_ASSOC: Dimension.CORRELATION_ASSOCIATION,
    MetricId.MEAN_SIMILARITY: Dimension.FEATURE_SIMILARITY,
    MetricId.JSD_MARGINAL: Dimension.FEATURE_SIMILARITY,
    MetricId.PMSE: Dimension.MULTIVARIATE_DISTRIBUTION,
    MetricId.MMD: Dimension.MULTIVARIATE_DISTRIBUTION,
}

METRIC_IDS: tuple[MetricId, ...] = tuple(MetricId)


@dataclass(frozen=True)
class FidelityVector:
    scores: Mapping[MetricId, float]

    def __post_init__(self) -> None:
        scores = {MetricId(k): float(v) for k, v in dict(self.scores).items()}
        if set(scores) != set(METRIC_IDS):
            raise ValueError("FidelityVector needs exactly the eight metric scores")
        for k, v in scores.items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{k.value} score {v} outside [0, 1]")
        object.__setattr__(self, "scores", {m: scores[m] for m in METRIC_IDS})

    def __getitem__(self, metric: MetricId | str) -> float:
        return self.scores[MetricId(metric)]

    def as_array(self) -> np.ndarray:
        return np.array([self.scores[m] for m in METRIC_IDS])

    def to_dict(self) -> dict[str, float]:
        return {m.value: self.scores[m] for m in METRIC_IDS}

    @classmethod
    def from_dict(cls, raw: Mapping[str, float]) -> FidelityVector:
        return cls({MetricId(k): v for k, v in raw.items()})


# -- marginal distributions -------------------------------------------------


def _marginals(data: Dataset) -> list[np.ndarray]:
    """Per-feature probability vectors: (P[0], P[1]) or a 10-bin histogram."""
    out = []
    for j, is_bin in enumerate(data.schema.binary_mask):
        col = data.rows[:, j]
        if is_bin:
            p = col.mean()
            out.append(np.array([1.0 - p, p]))
        else:
            counts, _ = np.histogram(col, bins=N_BINS, range=(0.0, 1.0))
            out.append(counts / col.size)
    return out


def _hellinger(p: np.ndarray, q: np.ndarray) -> float:
    # Equals sqrt(1 - sum(sqrt(p*q))) for normalized p, q; this form is exact
    # at p == q.
    return float(np.sqrt(0.5 * np.sum((np.sqrt(p) - np.sqrt(q)) ** 2)))


def _jsd(p: np.ndarray, q: np.ndarray) -> float:
    m = 0.5 * (p + q)

    def kl(a: np.ndarray) -> float:
        nz = a > 0
        return float(np.sum(a[nz] * np.log2(a[nz] / m[nz])))

    return float(np.clip(0.5 * kl(p) + 0.5 * kl(q), 0.0, 1.0))


def hellinger_marginal_score(real: Dataset, syn: Dataset) -> float:
    check_same_schema(real, syn)
    dists = [_hellinger(p, q) for p, q in zip(_marginals(real), _marginals(syn))]
    return float(np.clip(1.0 - np.mean(dists), 0.0, 1.0))


def jsd_marginal_score(real: Dataset, syn: Dataset) -> float:
    check_same_schema(real, syn)
    divs = [_jsd(p, q) for p, q in zip(_marginals(real), _marginals(syn))]
    return float(np.clip(1.0 - np.mean(divs), 0.0, 1.0))


def euclidean_mean_score(real: Dataset, syn: Dataset) -> float:
    check_same_schema(real, syn)
    gap = np.linalg.norm(real.rows.mean(axis=0) - syn.rows.mean(axis=0))
    return float(np.clip(1.0 - gap / np.sqrt(real.d), 0.0, 1.0))


def mean_similarity_score(real: Dataset, syn: Dataset) -> float:
    check_same_schema(real, syn)
    gap = np.abs(real.rows.mean(axis=0) - syn.rows.mean(axis=0))
    return float(np.clip(1.0 - gap.mean(), 0.0, 1.0))


# -- pairwise association ---------------------------------------------------


def correlation_matrix(x: np.ndarray) -> np.ndarray:
    """Pearson correlation; any pair involving a constant column is 0."""
    varying = np.ptp(x, axis=0) > 0
    centered = x - x.mean(axis=0)
    norms = np.sqrt(np.sum(centered**2, axis=0))
    safe = np.where(varying, norms, 1.0)
    corr = (centered.T @ centered) / np.outer(safe, safe)
    corr[~varying, :] = 0.0
    corr[:, ~varying] = 0.0
    return np.clip(corr, -1.0, 1.0)


def _upper_pairs(d: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(d, k=1)


def pearson_assoc_score(real: Dataset, syn: Dataset) -> float:
    check_same_schema(real, syn)
    if real.d < 2:
        raise TooFewFeatures("pairwise association needs at least 2 features")
    iu = _upper_pairs(real.d)
    delta = np.abs(correlation_matrix(real.rows)[iu] - correlation_matrix(syn.rows)[iu])
    return float(np.clip(1.0 - delta.mean() / 2.0, 0.0, 1.0))


def cramers_v_matrix(x: np.ndarray) -> np.ndarray:
    """|phi| for every pair of binary columns, from their 2x2 tables."""
    n = x.shape[0]
    n11 = x.T @ x
    ones = x.sum(axis=0)
    n10 = ones[:, None] - n11
    n01 = ones[None, :] - n11
    n00 = n - n11 - n10 - n01
    denom = np.outer(ones, ones) * np.outer(n - ones, n - ones)
    with np.errstate(invalid="ignore", divide="ignore"):
        phi = (n11 * n00 - n10 * n01) / np.sqrt(denom)
    phi = np.where(denom > 0, phi, 0.0)
    return np.clip(np.abs(phi), 0.0, 1.0)


def cramers_v_score(real: Dataset, syn: Dataset) -> float:
    check_same_schema(real, syn)
    if not real.schema.all_binary:
        raise NonBinaryFeature("Cramer's V association is defined for binary features only")
    if real.d < 2:
        raise TooFewFeatures("pairwise association needs at least 2 features")
    iu = _upper_pairs(real.d)
    delta = np.abs(cramers_v_matrix(real.rows)[iu] - cramers_v_matrix(syn.rows)[iu])
    return float(np.clip(1.0 - delta.mean(), 0.0, 1.0))


# -- multivariate -----------------------------------------------------------


def pmse_score(real: Dataset, syn: Dataset, seed: int) -> float:
    """1 - pMSE / (c (1 - c)) from a logistic real-vs-synthetic discriminator."""
    check_same_schema(real, syn)
    if real.n < PMSE_MIN_ROWS or syn.n < PMSE_MIN_ROWS:
        raise TooFewRows(f"pMSE needs at least {PMSE_MIN_ROWS} rows per side")
    combined = Dataset(
        real.schema,
        np.vstack([real.rows, syn.rows]),
        np.concatenate([np.zeros(real.n, dtype=np.int64), np.ones(syn.n, dtype=np.int64)]),
    )
    c = syn.n / combined.n
    model = train(PMSE_DISCRIMINATOR, combined, seed)
    p = predict_proba(model, combined.rows)
    pmse = np.mean((p - c) ** 2)
    return float(np.clip(1.0 - pmse / (c * (1.0 - c)), 0.0, 1.0))


def rbf_bandwidth(real_rows: np.ndarray) -> float:
    """Median squared pairwise distance among real rows (1.0 if that is 0)."""
    if real_rows.shape[0] < 2:
        return 1.0
    sigma2 = float(np.median(pdist(real_rows, metric="sqeuclidean")))
    return sigma2 if sigma2 > 0 else 1.0


def mmd_squared(x: np.ndarray, y: np.ndarray, sigma2: float) -> float:
    """Biased MMD^2 with k(a, b) = exp(-|a - b|^2 / (2 sigma2))."""

    def mean_kernel(a: np.ndarray, b: np.ndarray) -> float:
        return float(np.exp(-cdist(a, b, metric="sqeuclidean") / (2.0 * sigma2)).mean())

    return mean_kernel(x, x) + mean_kernel(y, y) - 2.0 * mean_kernel(x, y)


def mmd_score(real: Dataset, syn: Dataset) -> float:
    check_same_schema(real, syn)
    if real.n < 2 or syn.n < 2:
        raise TooFewRows("MMD needs at least 2 rows per side")
    mmd2 = mmd_squared(real.rows, syn.rows, rbf_bandwidth(real.rows))
    return float(np.clip(1.0 - mmd2 / 2.0, 0.0, 1.0))


def evaluate_all(real: Dataset, syn: Dataset, seed: int) -> FidelityVector:
    """Compute all eight scores; inapplicable metrics raise."""
    if real.schema != syn.schema:
        raise SchemaMismatch("real and synthetic datasets have different schemas")
    return FidelityVector(
        {
            MetricId.HELLINGER_MARGINAL: hellinger_marginal_score(real, syn),
            MetricId.EUCLIDEAN_MEAN: euclidean_mean_score(real, syn),
            MetricId.PEARSON_ASSOC: pearson_assoc_score(real, syn),
            MetricId.CRAMERS_V_ASSOC: cramers_v_score(real, syn),
            MetricId.MEAN_SIMILARITY: mean_similarity_score(real, syn),
            MetricId.JSD_MARGINAL: jsd_marginal_score(real, syn),
            MetricId.PMSE: pmse_score(real, syn, seed),
            MetricId.MMD: mmd_score(real, syn),
        }
    )
