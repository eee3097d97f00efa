import type { EngagementStateName } from "./model.js";

// The engagement state machine's legal transition relation.  This table is
// the UI's single source of truth for enabling lifecycle actions; it must
// stay identical to transitions.json, which the backend test suite also
// checks against the engine (guarded by tests/transitions.test.ts here).
export const TRANSITIONS: Record<EngagementStateName, EngagementStateName[]> = {
  scoping: ["documentation_submission", "withdrawn"],
  documentation_submission: ["evidence_verification", "withdrawn"],
  evidence_verification: ["documentation_submission", "reporting", "withdrawn"],
  reporting: ["certified", "withdrawn"],
  certified: ["withdrawn"],
  withdrawn: [],
};

export const ALL_STATES: EngagementStateName[] = [
  "scoping",
  "documentation_submission",
  "evidence_verification",
  "reporting",
  "certified",
  "withdrawn",
];

export function isLegalTransition(
  source: EngagementStateName,
  target: EngagementStateName,
): boolean {
  return TRANSITIONS[source].includes(target);
}
