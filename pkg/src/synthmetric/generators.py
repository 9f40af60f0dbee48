"""Seeded class-conditional baseline generators.

These stand in for heavier generative models: each one is fitted on a real
training split and samples a balanced synthetic set. Externally generated
CSVs can be benchmarked instead through :mod:`synthmetric.pipeline`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import norm

from .errors import DegenerateClass, TooFewNeighbors
from .rng import make_rng
from .tabular import Dataset, FeatureSchema


class GeneratorKind(str, Enum):
    INDEPENDENT_MARGINALS = "IndependentMarginals"
    GAUSSIAN_COPULA = "GaussianCopula"
    SMOTE = "Smote"
    NOISY_COPY = "NoisyCopy"


DEFAULT_FAMILY = {
    GeneratorKind.INDEPENDENT_MARGINALS: "statistical",
    GeneratorKind.GAUSSIAN_COPULA: "statistical",
    GeneratorKind.SMOTE: "oversampling",
    GeneratorKind.NOISY_COPY: "noise",
}


@dataclass(frozen=True)
class GeneratorSpec:
    kind: GeneratorKind
    k_neighbors: int = 5
    flip_rate: float = 0.0
    family: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GeneratorKind(self.kind))
        if not self.family:
            object.__setattr__(self, "family", DEFAULT_FAMILY[self.kind])
        if not 0.0 <= self.flip_rate <= 1.0:
            raise ValueError(f"flip_rate must lie in [0, 1], got {self.flip_rate}")
        if self.k_neighbors < 1:
            raise ValueError(f"k_neighbors must be >= 1, got {self.k_neighbors}")

    def params(self) -> dict[str, Any]:
        if self.kind is GeneratorKind.SMOTE:
            return {"k_neighbors": self.k_neighbors}
        if self.kind is GeneratorKind.NOISY_COPY:
            return {"flip_rate": self.flip_rate}
        return {}

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "family": self.family, **self.params()}

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> GeneratorSpec:
        return cls(
            kind=GeneratorKind(raw["kind"]),
            k_neighbors=int(raw.get("k_neighbors", 5)),
            flip_rate=float(raw.get("flip_rate", 0.0)),
            family=str(raw.get("family", "")),
        )


@dataclass(frozen=True)
class ClassStats:
    """Sufficient statistics for one class of the training split."""

    p_hat: np.ndarray
    rows: np.ndarray
    chol: np.ndarray | None = None
    neighbors: np.ndarray | None = None


@dataclass(frozen=True)
class FittedGenerator:
    spec: GeneratorSpec
    schema: FeatureSchema
    classes: dict[int, ClassStats] = field(default_factory=dict)


def latent_correlation(x: np.ndarray) -> np.ndarray:
    """Pearson correlation with zero-variance features decoupled (rho = 0)."""
    d = x.shape[1]
    varying = np.ptp(x, axis=0) > 0
    corr = np.eye(d)
    if varying.sum() >= 2:
        corr[np.ix_(varying, varying)] = np.corrcoef(x[:, varying], rowvar=False)
    corr = np.clip(corr, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def jittered_cholesky(corr: np.ndarray, start: float = 1e-6) -> np.ndarray:
    """Cholesky factor of ``corr``, adding ``eps * I`` (doubling) until PD.

    The jittered matrix is rescaled to unit diagonal so latent marginals stay
    standard normal.
    """
    d = corr.shape[0]
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        pass
    eps = start
    while True:
        try:
            return np.linalg.cholesky((corr + eps * np.eye(d)) / (1.0 + eps))
        except np.linalg.LinAlgError:
            eps *= 2.0


def smote_neighbors(x: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest other rows (L1 = Hamming on bits).

    Ties resolve to the lower row index.
    """
    dist = cdist(x, x, metric="cityblock")
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")
    return order[:, :k]


def fit(spec: GeneratorSpec, train: Dataset) -> FittedGenerator:
    """Fit per-class statistics on ``train``.

    Raises:
        DegenerateClass: a class has no rows.
        TooFewNeighbors: SMOTE needs more than ``k_neighbors`` rows per class.
    """
    classes = {}
    for label in (0, 1):
        x = np.asarray(train.class_rows(label))
        if x.shape[0] == 0:
            raise DegenerateClass(f"class {label} absent from training split")
        p_hat = x.mean(axis=0)
        chol = neighbors = None
        if spec.kind is GeneratorKind.GAUSSIAN_COPULA:
            chol = jittered_cholesky(latent_correlation(x))
        elif spec.kind is GeneratorKind.SMOTE:
            if x.shape[0] <= spec.k_neighbors:
                raise TooFewNeighbors(
                    f"class {label} has {x.shape[0]} rows; SMOTE with "
                    f"k_neighbors={spec.k_neighbors} needs more"
                )
            neighbors = smote_neighbors(x, spec.k_neighbors)
        classes[label] = ClassStats(p_hat=p_hat, rows=x, chol=chol, neighbors=neighbors)
    return FittedGenerator(spec, train.schema, classes)


def _sample_class(
    gen: FittedGenerator, stats: ClassStats, m: int, rng: np.random.Generator
) -> np.ndarray:
    kind = gen.spec.kind
    binary = gen.schema.binary_mask
    d = stats.rows.shape[1]

    if kind is GeneratorKind.INDEPENDENT_MARGINALS:
        out = (rng.random((m, d)) < stats.p_hat).astype(np.float64)
        if not binary.all():
            # continuous columns: independent draws from the empirical marginal
            pick = rng.integers(stats.rows.shape[0], size=(m, d))
            empirical = stats.rows[pick, np.arange(d)]
            out[:, ~binary] = empirical[:, ~binary]
        return out

    if kind is GeneratorKind.GAUSSIAN_COPULA:
        z = rng.standard_normal((m, d)) @ stats.chol.T
        with np.errstate(divide="ignore"):
            thresholds = norm.ppf(1.0 - stats.p_hat)
        out = (z > thresholds).astype(np.float64)
        if not binary.all():
            u = norm.cdf(z[:, ~binary])
            out[:, ~binary] = _empirical_quantiles(stats.rows[:, ~binary], u)
        return out

    if kind is GeneratorKind.SMOTE:
        base = rng.integers(stats.rows.shape[0], size=m)
        nb = stats.neighbors[base, rng.integers(gen.spec.k_neighbors, size=m)]
        u = rng.random(m)[:, None]
        x = stats.rows[base]
        out = x + u * (stats.rows[nb] - x)
        out[:, binary] = (out[:, binary] >= 0.5).astype(np.float64)
        return np.clip(out, 0.0, 1.0)

    # NoisyCopy
    out = stats.rows[rng.integers(stats.rows.shape[0], size=m)].copy()
    flips = (rng.random((m, d)) < gen.spec.flip_rate) & binary
    out[flips] = 1.0 - out[flips]
    return out


def _empirical_quantiles(values: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    for j in range(values.shape[1]):
        out[:, j] = np.quantile(values[:, j], u[:, j])
    return out


def sample(gen: FittedGenerator, n_per_class: int, seed: int) -> Dataset:
    """Draw ``n_per_class`` rows for each class, in seeded shuffled order.

    The shuffle matters downstream: classifiers that break distance ties by
    row index would otherwise always favour whichever class comes first.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    blocks = []
    for label in (0, 1):
        rng = make_rng(seed, "sample", gen.spec.kind.value, label)
        blocks.append(_sample_class(gen, gen.classes[label], n_per_class, rng))
    labels = np.repeat([0, 1], n_per_class)
    order = make_rng(seed, "sample", gen.spec.kind.value, "order").permutation(labels.size)
    return Dataset(gen.schema, np.vstack(blocks)[order], labels[order])
