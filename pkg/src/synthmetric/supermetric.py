"""Convex aggregation of the fidelity scores and per-dataset weight fitting.

The fitted weights maximise

    J(w) = (rho_recall + rho_f1) / 2 - lambda_gap * |rho_recall - rho_f1|

where ``rho_*`` is the Pearson correlation, across runs, between the weighted
score and mean TSTR recall / F1. ``lambda_gap = 0`` is plain correlation
maximisation; larger values favour weights whose two correlations agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import InsufficientVariation, InvalidWeights, TooFewRuns
from .fidelity import METRIC_IDS, FidelityVector, MetricId
from .rng import make_rng
from .stats import pearson_corr

N_METRICS = len(METRIC_IDS)
SUM_TOL = 1e-9
INVARIANCE_TOL = 1e-12


@dataclass(frozen=True)
class WeightVector:
    w: tuple[float, ...]

    def __post_init__(self) -> None:
        w = tuple(float(v) for v in self.w)
        if len(w) != N_METRICS:
            raise InvalidWeights(f"expected {N_METRICS} weights, got {len(w)}")
        if any(not np.isfinite(v) or v < 0.0 for v in w):
            raise InvalidWeights("weights must be finite and non-negative")
        if abs(sum(w) - 1.0) > SUM_TOL:
            raise InvalidWeights(f"weights sum to {sum(w)!r}, not 1")
        object.__setattr__(self, "w", w)

    @classmethod
    def uniform(cls) -> WeightVector:
        return cls((1.0 / N_METRICS,) * N_METRICS)

    @classmethod
    def from_array(cls, a: np.ndarray) -> WeightVector:
        a = np.clip(np.asarray(a, dtype=np.float64), 0.0, None)
        return cls(tuple(a / a.sum()))

    @classmethod
    def concentrated(cls, metric: MetricId) -> WeightVector:
        return cls(tuple(1.0 if m is metric else 0.0 for m in METRIC_IDS))

    def as_array(self) -> np.ndarray:
        return np.array(self.w)

    def to_dict(self) -> dict[str, float]:
        return {m.value: v for m, v in zip(METRIC_IDS, self.w)}

    @classmethod
    def from_dict(cls, raw: Mapping[str, float]) -> WeightVector:
        return cls(tuple(float(raw[m.value]) for m in METRIC_IDS))


@dataclass(frozen=True)
class RunRecord:
    generator_id: str
    dataset_id: str
    fidelity: FidelityVector
    recall: float
    f1: float
    fold: int = 0
    external: bool = False

    def __post_init__(self) -> None:
        for name in ("recall", "f1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} {v} outside [0, 1]")


@dataclass(frozen=True)
class FitConfig:
    lambda_gap: float = 0.5
    n_random: int = 2000
    refine_passes: int = 5
    refine_step: float = 0.02
    polish_starts: int = 3
    polish_maxiter: int = 2000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.lambda_gap < 0:
            raise ValueError("lambda_gap must be >= 0")
        if self.n_random < 1:
            raise ValueError("n_random must be >= 1")
        if self.refine_passes < 0 or self.refine_step <= 0:
            raise ValueError("refine_passes must be >= 0 and refine_step > 0")
        if self.polish_starts < 0 or self.polish_maxiter < 1:
            raise ValueError("polish_starts must be >= 0 and polish_maxiter >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda_gap": self.lambda_gap,
            "n_random": self.n_random,
            "refine_passes": self.refine_passes,
            "refine_step": self.refine_step,
            "polish_starts": self.polish_starts,
            "polish_maxiter": self.polish_maxiter,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class FitResult:
    weights: WeightVector
    objective: float
    corr_recall: float
    corr_f1: float
    meta: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "weights": self.weights.to_dict(),
            "objective": self.objective,
            "corr_recall": self.corr_recall,
            "corr_f1": self.corr_f1,
            **self.meta,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> FitResult:
        meta = {
            k: v
            for k, v in raw.items()
            if k not in ("weights", "objective", "corr_recall", "corr_f1")
        }
        return cls(
            WeightVector.from_dict(raw["weights"]),
            float(raw["objective"]),
            float(raw["corr_recall"]),
            float(raw["corr_f1"]),
            meta,
        )


def _weights_array(weights: WeightVector | np.ndarray | Sequence[float]) -> np.ndarray:
    if isinstance(weights, WeightVector):
        return weights.as_array()
    return WeightVector(tuple(np.asarray(weights, dtype=np.float64))).as_array()


def score(weights: WeightVector, fidelity: FidelityVector) -> float:
    """Weighted Super-Metric score in [0, 1]."""
    w = _weights_array(weights)
    return float(np.clip(np.dot(w, fidelity.as_array()), 0.0, 1.0))


def _matrices(runs: Sequence[RunRecord]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(runs) < 3:
        raise TooFewRuns(f"need at least 3 runs, got {len(runs)}")
    fid = np.vstack([r.fidelity.as_array() for r in runs])
    recall = np.array([r.recall for r in runs])
    f1 = np.array([r.f1 for r in runs])
    if np.ptp(recall) == 0 or np.ptp(f1) == 0:
        raise InsufficientVariation("recall or F1 is constant across runs")
    return fid, recall, f1


def _combine(rho_r: float | np.ndarray, rho_f: float | np.ndarray, lam: float):
    return 0.5 * (rho_r + rho_f) - lam * np.abs(rho_r - rho_f)


def _correlations(w: np.ndarray, fid: np.ndarray, recall: np.ndarray, f1: np.ndarray):
    s = fid @ w
    return pearson_corr(s, recall), pearson_corr(s, f1)


def objective_J(
    weights: WeightVector | np.ndarray, runs: Sequence[RunRecord], lambda_gap: float
) -> float:
    """Objective value of ``weights`` over ``runs``.

    Raises:
        TooFewRuns: fewer than 3 runs.
        InsufficientVariation: the weighted score, recall or F1 is constant.
    """
    fid, recall, f1 = _matrices(runs)
    rho_r, rho_f = _correlations(_weights_array(weights), fid, recall, f1)
    return float(_combine(rho_r, rho_f, lambda_gap))


def batch_objective(
    candidates: np.ndarray, fid: np.ndarray, recall: np.ndarray, f1: np.ndarray, lam: float
) -> np.ndarray:
    """J for each row of ``candidates``; NaN where the score is constant."""
    s = fid @ candidates.T
    sc = s - s.mean(axis=0)
    rc = recall - recall.mean()
    fc = f1 - f1.mean()
    s_norm = np.sqrt(np.sum(sc**2, axis=0))
    constant = np.ptp(s, axis=0) == 0
    s_norm = np.where(constant, 1.0, s_norm)
    rho_r = np.clip(sc.T @ rc / (s_norm * np.sqrt(rc @ rc)), -1.0, 1.0)
    rho_f = np.clip(sc.T @ fc / (s_norm * np.sqrt(fc @ fc)), -1.0, 1.0)
    out = _combine(rho_r, rho_f, lam)
    return np.where(constant, np.nan, out)


def _safe_objective(w: np.ndarray, fid, recall, f1, lam: float) -> float:
    try:
        return float(_combine(*_correlations(w, fid, recall, f1), lam))
    except InsufficientVariation:
        return -np.inf


class _FastObjective:
    """Scalar J with the utility columns pre-centred; -inf for a constant score."""

    def __init__(self, fid: np.ndarray, recall: np.ndarray, f1: np.ndarray, lam: float):
        self.fid = fid
        self.lam = lam
        rc = recall - recall.mean()
        fc = f1 - f1.mean()
        self.rc = rc / np.sqrt(rc @ rc)
        self.fc = fc / np.sqrt(fc @ fc)

    def __call__(self, w: np.ndarray) -> float:
        s = self.fid @ w
        if np.ptp(s) == 0:
            return -np.inf
        sc = s - s.mean()
        sc = sc / np.sqrt(sc @ sc)
        rho_r = min(max(float(sc @ self.rc), -1.0), 1.0)
        rho_f = min(max(float(sc @ self.fc), -1.0), 1.0)
        return float(_combine(rho_r, rho_f, self.lam))


def _amplitudes_to_weights(v: np.ndarray) -> np.ndarray:
    a = v * v
    total = a.sum()
    if not np.isfinite(total) or total <= 0:
        return WeightVector.uniform().as_array()
    return WeightVector.from_array(a).as_array()


def _polish(w: np.ndarray, j: float, objective: _FastObjective, maxiter: int):
    """Nelder-Mead on square-root amplitudes, so every iterate is on the simplex."""
    res = minimize(
        lambda v: -objective(_amplitudes_to_weights(v)),
        np.sqrt(w),
        method="Nelder-Mead",
        options={
            "maxiter": maxiter,
            "maxfev": 2 * maxiter,
            "xatol": 1e-7,
            "fatol": 1e-12,
            "adaptive": True,
        },
    )
    cand = _amplitudes_to_weights(res.x)
    j_cand = objective(cand)
    return (cand, j_cand) if j_cand > j else (w, j)


def fit_weights(runs: Sequence[RunRecord], cfg: FitConfig) -> FitResult:
    """Fit Super-Metric weights for the runs of one dataset.

    1. Score ``cfg.n_random`` seeded Dirichlet(1, ..., 1) draws; keep the best.
    2. Polish the ``cfg.polish_starts`` best draws with Nelder-Mead (a
       derivative-free simplex search) and keep the best improvement.
    3. Run ``cfg.refine_passes`` coordinate passes: nudge one weight by
       ``+/- cfg.refine_step``, renormalise, keep the move only when J
       strictly improves.

    Ties always keep the earlier candidate. If J does not depend on the
    weights (within 1e-12) the uniform vector is returned.

    Raises:
        TooFewRuns: fewer than 3 runs.
        InsufficientVariation: recall, F1 or every weighted score is constant.
    """
    datasets = {r.dataset_id for r in runs}
    if len(datasets) > 1:
        raise ValueError(f"runs span several datasets: {sorted(datasets)}")
    fid, recall, f1 = _matrices(runs)
    lam = cfg.lambda_gap
    objective = _FastObjective(fid, recall, f1, lam)

    rng = make_rng(cfg.seed, "fit_weights")
    draws = rng.dirichlet(np.ones(N_METRICS), size=cfg.n_random)
    values = batch_objective(draws, fid, recall, f1, lam)
    finite = np.isfinite(values)
    if not finite.any():
        raise InsufficientVariation("weighted score is constant for every candidate")

    uniform = WeightVector.uniform().as_array()
    j_uniform = _safe_objective(uniform, fid, recall, f1, lam)
    spread = np.append(values[finite], j_uniform)
    if np.isfinite(j_uniform) and np.ptp(spread) <= INVARIANCE_TOL:
        return _result(uniform, fid, recall, f1, lam, cfg, runs, fallback=True)

    ranked = np.argsort(-np.where(finite, values, -np.inf), kind="stable")
    w = WeightVector.from_array(draws[ranked[0]]).as_array()
    j_best = objective(w)
    random_j = _safe_objective(w, fid, recall, f1, lam)

    for idx in ranked[: cfg.polish_starts]:
        start = WeightVector.from_array(draws[idx]).as_array()
        cand, j = _polish(start, objective(start), objective, cfg.polish_maxiter)
        if j > j_best:
            w, j_best = cand, j

    for _ in range(cfg.refine_passes):
        for k in range(N_METRICS):
            for sign in (1.0, -1.0):
                cand = w.copy()
                cand[k] = max(cand[k] + sign * cfg.refine_step, 0.0)
                if cand.sum() <= 0:
                    continue
                cand = WeightVector.from_array(cand).as_array()
                j = objective(cand)
                if j > j_best:
                    w, j_best = cand, j
                    break

    result = _result(w, fid, recall, f1, lam, cfg, runs, fallback=False)
    result.meta["random_search_objective"] = random_j
    return result


def _result(w, fid, recall, f1, lam, cfg: FitConfig, runs, fallback: bool) -> FitResult:
    weights = WeightVector(tuple(w))
    rho_r, rho_f = _correlations(weights.as_array(), fid, recall, f1)
    return FitResult(
        weights=weights,
        objective=float(_combine(rho_r, rho_f, lam)),
        corr_recall=rho_r,
        corr_f1=rho_f,
        meta={
            "dataset_id": runs[0].dataset_id,
            "n_runs": len(runs),
            "uniform_fallback": fallback,
            "config": cfg.to_dict(),
        },
    )
