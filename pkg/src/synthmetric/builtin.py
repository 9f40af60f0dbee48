"""Planted-model datasets that stand in for real malware feature tables.

Features come in blocks that share a latent Gaussian factor, are thresholded
to sparse bits, and the label is the top half of a noisy linear score, so the
classes are exactly balanced and depend on the features.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Mapping

import numpy as np
from scipy.stats import norm

from .rng import make_rng
from .tabular import Dataset, FeatureSchema


@dataclass(frozen=True)
class PlantedSpec:
    n: int = 1000
    d: int = 30
    seed: int = 1
    block_size: int = 5
    block_corr: float = 0.6
    label_noise: float = 0.5
    n_informative: int = 10
    p_min: float = 0.05
    p_max: float = 0.5

    def __post_init__(self) -> None:
        if self.n < 4 or self.d < 1:
            raise ValueError("planted dataset needs n >= 4 and d >= 1")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if not 0.0 <= self.block_corr < 1.0:
            raise ValueError("block_corr must lie in [0, 1)")
        if self.label_noise < 0:
            raise ValueError("label_noise must be >= 0")
        if not 0.0 < self.p_min <= self.p_max < 1.0:
            raise ValueError("need 0 < p_min <= p_max < 1")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> PlantedSpec:
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown planted-model fields: {sorted(unknown)}")
        return cls(**raw)


def make_planted(spec: PlantedSpec) -> Dataset:
    rng = make_rng(spec.seed, "planted", spec.n, spec.d)
    n_blocks = -(-spec.d // spec.block_size)
    block_of = np.arange(spec.d) // spec.block_size

    factors = rng.standard_normal((spec.n, n_blocks))
    noise = rng.standard_normal((spec.n, spec.d))
    a = np.sqrt(spec.block_corr)
    latent = a * factors[:, block_of] + np.sqrt(1.0 - spec.block_corr) * noise
    rates = rng.uniform(spec.p_min, spec.p_max, size=spec.d)
    rows = (latent > norm.ppf(1.0 - rates)).astype(np.float64)

    informative = rng.choice(spec.d, size=min(spec.n_informative, spec.d), replace=False)
    beta = np.zeros(spec.d)
    beta[informative] = rng.choice([-1.0, 1.0], size=informative.size) * rng.uniform(
        0.5, 1.5, size=informative.size
    )
    signal = rows @ beta
    spread = signal.std() if signal.std() > 0 else 1.0
    score = signal + spec.label_noise * spread * rng.standard_normal(spec.n)
    labels = np.zeros(spec.n, dtype=np.int64)
    labels[np.argsort(score, kind="stable")[spec.n - spec.n // 2 :]] = 1
    return Dataset(FeatureSchema.binary(spec.d), rows, labels)


DEFAULT_PLANTED: tuple[tuple[str, PlantedSpec], ...] = tuple(
    (
        f"planted_{i + 1}",
        PlantedSpec(n=1000, d=30, seed=i + 1, block_corr=corr, label_noise=noise),
    )
    for i, (corr, noise) in enumerate(
        [(0.6, 0.5), (0.3, 0.8), (0.75, 0.3), (0.45, 1.0), (0.9, 0.6)]
    )
)
