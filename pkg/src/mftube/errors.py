"""Exception hierarchy with stable machine-readable codes.

Every error the library raises deliberately carries a ``code`` string that
the CLI serializes to stderr as JSON, so scripted callers can dispatch on it
without parsing prose.
"""

from __future__ import annotations


class MFTubeError(Exception):
    """Base class for all library errors."""

    code = "MFTubeError"
    exit_status = 3

    def payload(self) -> dict:
        return {"error": self.code, "message": str(self)}


class InvalidSystem(MFTubeError):
    code = "InvalidSystem"
    exit_status = 2


class InvalidConfig(MFTubeError):
    code = "InvalidConfig"
    exit_status = 2


class BudgetExceeded(MFTubeError):
    code = "BudgetExceeded"


class NoConvergence(MFTubeError):
    code = "NoConvergence"


class DimensionMismatch(MFTubeError):
    code = "DimensionMismatch"


class DegenerateBall(MFTubeError):
    code = "DegenerateBall"


class DegenerateConstraint(MFTubeError):
    code = "DegenerateConstraint"


class ExcludedExponent(MFTubeError):
    code = "ExcludedExponent"


class NotArithmetic(MFTubeError):
    code = "NotArithmetic"


class NearPole(MFTubeError):
    code = "NearPole"


class RootFindingFailure(MFTubeError):
    code = "RootFindingFailure"


class MultipleRoot(MFTubeError):
    code = "MultipleRoot"


class NonSimplePole(MFTubeError):
    code = "NonSimplePole"


class UnresolvedCluster(MFTubeError):
    code = "UnresolvedCluster"


class BadContour(MFTubeError):
    code = "BadContour"


class InsufficientSamples(MFTubeError):
    code = "InsufficientSamples"
