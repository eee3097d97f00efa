// Payload shapes of the /api/v1 workbench API.

export type EngagementStateName =
  | "scoping"
  | "documentation_submission"
  | "evidence_verification"
  | "reporting"
  | "certified"
  | "withdrawn";

export type CriterionStatus =
  | "met"
  | "not_met"
  | "not_applicable"
  | "pending"
  | "needs_more_evidence";

export type CriterionKind = "auto" | "manual" | "hybrid";

export interface CriterionNodePayload {
  id: string;
  text: string;
  kind: CriterionKind;
  status: CriterionStatus;
  applicable: boolean;
  unresolved_facts: boolean;
  evidence_refs: string[];
  rationale: string;
  children: CriterionNodePayload[];
}

export interface CriteriaTreePayload {
  engagement_id: string;
  state: EngagementStateName;
  etag: string;
  sections: CriterionNodePayload[];
}

export interface EngagementSummary {
  id: string;
  state: EngagementStateName;
  framework_id: string;
  auditee: string;
  system: string;
}

export interface EngagementDetail {
  id: string;
  state: EngagementStateName;
  framework_id: string;
  facts: Record<string, unknown>;
  analysis_attached: boolean;
  outcome: { verdict: string; comments: string[]; formal_opinion: string } | null;
  verification_loops: number;
  legal_targets: EngagementStateName[];
}

export interface EvidenceItemPayload {
  id: string;
  kind: string;
  title: string;
  digest: string;
  submitted_at: string;
  status: "unverified" | "verified" | "rejected";
  duplicate_of: string | null;
}

export interface SectionRollup {
  section: string;
  status: CriterionStatus;
  statuses: Record<string, CriterionStatus>;
}

export interface ApiError {
  error: string;
  message?: string;
}
