import type { EngagementStateName } from "./model.js";
import { TRANSITIONS, isLegalTransition } from "./transitions.js";

// Which workbench actions are available in each engagement state.  Button
// enablement for lifecycle moves comes straight from the transition
// relation; everything else mirrors the engine's per-operation state
// preconditions.

const EVIDENCE_STATES: EngagementStateName[] = [
  "documentation_submission",
  "evidence_verification",
];

export interface Controls {
  transitionTargets: EngagementStateName[];
  canSubmitEvidence: boolean;
  canVerifyEvidence: boolean;
  canRecordOpinion: boolean;
  canRunChecks: boolean;
  canRequestMoreEvidence: boolean;
  canPreviewReport: boolean;
}

export function controlsFor(
  state: EngagementStateName,
  analysisAttached: boolean,
): Controls {
  return {
    transitionTargets: [...TRANSITIONS[state]],
    canSubmitEvidence: EVIDENCE_STATES.includes(state),
    canVerifyEvidence: state === "evidence_verification",
    canRecordOpinion: EVIDENCE_STATES.includes(state),
    canRunChecks: EVIDENCE_STATES.includes(state) && analysisAttached,
    canRequestMoreEvidence: isLegalTransition(state, "documentation_submission"),
    canPreviewReport: state !== "withdrawn",
  };
}

export function transitionButtonEnabled(
  source: EngagementStateName,
  target: EngagementStateName,
): boolean {
  return isLegalTransition(source, target);
}

export const TRANSITION_LABELS: Record<EngagementStateName, string> = {
  scoping: "Back to scoping",
  documentation_submission: "Request more evidence",
  evidence_verification: "Start evidence verification",
  reporting: "Move to reporting",
  certified: "Certify",
  withdrawn: "Withdraw engagement",
};
