"""Exception hierarchy shared by every synthmetric module."""

from __future__ import annotations


class SynthMetricError(Exception):
    """Base class for all errors raised by synthmetric."""


class ConfigInvalid(SynthMetricError, ValueError):
    pass


# -- data ingestion ---------------------------------------------------------


class MissingLabelColumn(SynthMetricError, ValueError):
    pass


class NonNumericCell(SynthMetricError, ValueError):
    def __init__(self, row: int, col: str, value: str) -> None:
        super().__init__(f"non-numeric cell at row {row}, column {col!r}: {value!r}")
        self.row = row
        self.col = col
        self.value = value


class InvalidLabel(SynthMetricError, ValueError):
    pass


class EmptyDataset(SynthMetricError, ValueError):
    pass


class ConstantLabel(SynthMetricError, ValueError):
    pass


class SchemaMismatch(SynthMetricError, ValueError):
    pass


class TooFewSamplesPerClass(SynthMetricError, ValueError):
    pass


# -- generators / classifiers -----------------------------------------------


class DegenerateClass(SynthMetricError, ValueError):
    pass


class TooFewNeighbors(SynthMetricError, ValueError):
    pass


class SingleClass(SynthMetricError, ValueError):
    pass


# -- fidelity metrics -------------------------------------------------------


class TooFewFeatures(SynthMetricError, ValueError):
    pass


class NonBinaryFeature(SynthMetricError, ValueError):
    pass


class TooFewRows(SynthMetricError, ValueError):
    pass


# -- weighting and analysis -------------------------------------------------


class InvalidWeights(SynthMetricError, ValueError):
    pass


class TooFewRuns(SynthMetricError, ValueError):
    pass


class InsufficientVariation(SynthMetricError, ValueError):
    pass


class LengthMismatch(SynthMetricError, ValueError):
    pass


class NoDefinedCells(SynthMetricError, ValueError):
    pass


class TooFewCells(SynthMetricError, ValueError):
    pass


class TooFewFamilies(SynthMetricError, ValueError):
    pass


class EmptyTable(SynthMetricError, ValueError):
    pass


class EmptySummaries(SynthMetricError, ValueError):
    pass
