"""Exception hierarchy shared by all critaudit modules.

``ValidationError`` subclasses signal malformed *input* (CLI exit code 2);
other ``AuditError`` subclasses signal domain failures (exit code 1).
"""

from __future__ import annotations


class AuditError(Exception):
    """Base class for all domain errors raised by this package."""


class ValidationError(AuditError):
    """Malformed or inconsistent input data."""


class EmptyDataset(ValidationError):
    pass


class MalformedRecord(ValidationError):
    pass


class EmptyGroup(ValidationError):
    pass


class NoEligibleGroups(AuditError):
    pass


class DegenerateFavoredRate(AuditError):
    pass


class ManifestInvalid(ValidationError):
    pass


class DuplicateCriterion(ManifestInvalid):
    pass


class UnknownCriterion(AuditError):
    pass


class UnresolvedFact(AuditError):
    pass


class MissingArtifact(AuditError):
    pass


class KindMismatch(AuditError):
    pass


class MissingRationale(ValidationError):
    pass


class InapplicableCriterion(AuditError):
    pass


class IncompleteEvaluation(AuditError):
    pass


class IllegalState(AuditError):
    pass


class IllegalTransition(AuditError):
    pass


class NotFound(AuditError):
    pass


class IndependenceViolation(AuditError):
    pass


class StructuralMismatch(AuditError):
    pass


class ReportIncomplete(AuditError):
    pass


class TamperedReport(AuditError):
    pass
