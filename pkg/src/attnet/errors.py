"""Exception hierarchy shared by every stage of the pipeline."""
from __future__ import annotations


class AttnetError(Exception):
    """Base class for all errors raised by attnet."""


# ingest
class MalformedRow(AttnetError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class LengthMismatch(AttnetError):
    pass


class UnknownRegionLabel(AttnetError):
    pass


class DimensionMismatch(AttnetError):
    pass


# stitch
class NoOverlap(AttnetError):
    pass


class MissingReference(AttnetError):
    pass


class TargetSetMismatch(AttnetError):
    pass


class TooShort(AttnetError):
    pass


# netbuild / graphmetrics
class PeriodMismatch(AttnetError):
    pass


class EmptyNetwork(AttnetError):
    pass


class UnknownNode(AttnetError):
    pass


class NoOutEdges(AttnetError):
    pass


class ZeroMean(AttnetError):
    pass


class InsufficientNodes(AttnetError):
    pass


# motifs
class TooFewEdges(AttnetError):
    pass


# community
class NonConvergence(AttnetError):
    pass


class IncompletePartition(AttnetError):
    pass


# causality
class DegenerateSeries(AttnetError):
    pass


class InsufficientLength(AttnetError):
    pass


class SingularDesign(AttnetError):
    pass


class AllLagsInfeasible(AttnetError):
    pass


class DirectionMismatch(AttnetError):
    pass


# stats
class InvalidDof(AttnetError):
    pass


class ZeroMarginal(AttnetError):
    pass


class EmptySample(AttnetError):
    pass


class ConstantInput(AttnetError):
    pass


# topics / regions / simgen
class EmptyPhrase(AttnetError):
    pass


class NoCoverage(AttnetError):
    pass


class UnmappedCountry(AttnetError):
    def __init__(self, countries):
        self.countries = sorted(countries)
        super().__init__("countries without a region: " + ", ".join(self.countries))


class InvalidSpec(AttnetError):
    pass


# cli
class ConfigError(AttnetError):
    pass


class StageError(AttnetError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
