"""critaudit: criterion-audit engine for algorithmic systems."""

__version__ = "0.1.0"

from .criteria import (  # noqa: F401
    AuditOutcome,
    CriteriaManifest,
    CriterionNode,
    EvaluationRecord,
    EvaluationStatus,
    Verdict,
    determine_outcome,
    load_manifest,
    load_shipped_manifest,
    rollup,
)
from .stats import (  # noqa: F401
    AnalysisReport,
    CandidateRecord,
    DemographicScheme,
    GroupRate,
    ImpactRatioEntry,
    InferenceErrorModel,
    OutcomeDataset,
    RateMethod,
    TestResult,
    run_disparate_impact_analysis,
)
