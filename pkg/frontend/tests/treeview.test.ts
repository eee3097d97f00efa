import { describe, expect, it } from "vitest";

import type { CriterionNodePayload } from "../src/model.js";
import {
  acceptsOpinion,
  findNode,
  flattenTree,
  sectionSummaries,
  statusBadge,
} from "../src/treeview.js";

const node = (
  id: string,
  overrides: Partial<CriterionNodePayload> = {},
): CriterionNodePayload => ({
  id,
  text: `text for ${id}`,
  kind: "manual",
  status: "pending",
  applicable: true,
  unresolved_facts: false,
  evidence_refs: [],
  rationale: "",
  children: [],
  ...overrides,
});

const sampleSections = (): CriterionNodePayload[] => [
  node("Q", {
    status: "not_met",
    children: [
      node("Q.A", { status: "met", children: [node("Q.A.1", { status: "met" })] }),
      node("Q.B", {
        status: "not_applicable",
        applicable: false,
        children: [node("Q.B.1", { status: "not_applicable", applicable: false })],
      }),
      node("Q.C", { status: "not_met", kind: "auto" }),
    ],
  }),
  node("G", { status: "met", children: [node("G.A", { status: "met" })] }),
];

describe("flattenTree", () => {
  it("lists rows depth-first with depths", () => {
    const rows = flattenTree(sampleSections());
    expect(rows.map((row) => row.id)).toEqual([
      "Q",
      "Q.A",
      "Q.A.1",
      "Q.B",
      "Q.C",
      "G",
      "G.A",
    ]);
    expect(rows[0].depth).toBe(0);
    expect(rows[2].depth).toBe(2);
    expect(rows[0].isSection).toBe(true);
    expect(rows[1].isSection).toBe(false);
  });

  it("collapses not-applicable subtrees to their dimmed root", () => {
    const rows = flattenTree(sampleSections());
    const ids = rows.map((row) => row.id);
    expect(ids).toContain("Q.B");
    expect(ids).not.toContain("Q.B.1");
    const qb = rows.find((row) => row.id === "Q.B")!;
    expect(qb.applicable).toBe(false);
    expect(qb.hasHiddenChildren).toBe(true);
  });

  it("keeps every rendered status equal to the payload status", () => {
    const sections = sampleSections();
    const byId = new Map<string, CriterionNodePayload>();
    const collect = (n: CriterionNodePayload) => {
      byId.set(n.id, n);
      n.children.forEach(collect);
    };
    sections.forEach(collect);
    for (const row of flattenTree(sections)) {
      expect(row.status).toBe(byId.get(row.id)!.status);
    }
  });

  it("is reproducible from the same payload (full reload equivalence)", () => {
    expect(flattenTree(sampleSections())).toEqual(flattenTree(sampleSections()));
  });
});

describe("statusBadge", () => {
  it("maps every status to a distinct badge", () => {
    const statuses = [
      "met",
      "not_met",
      "not_applicable",
      "pending",
      "needs_more_evidence",
    ] as const;
    const classes = statuses.map((status) => statusBadge(status).cssClass);
    expect(new Set(classes).size).toBe(statuses.length);
    expect(statusBadge("not_met").label).toBe("Not met");
  });
});

describe("sectionSummaries", () => {
  it("exposes section rollup statuses for the header badges", () => {
    const summaries = sectionSummaries(sampleSections());
    expect(summaries).toEqual([
      { id: "Q", text: "text for Q", status: "not_met" },
      { id: "G", text: "text for G", status: "met" },
    ]);
  });
});

describe("acceptsOpinion", () => {
  it("manual and hybrid applicable criteria accept opinions", () => {
    expect(acceptsOpinion(node("X", { kind: "manual" }))).toBe(true);
    expect(acceptsOpinion(node("X", { kind: "hybrid" }))).toBe(true);
  });

  it("auto and inapplicable criteria do not", () => {
    expect(acceptsOpinion(node("X", { kind: "auto" }))).toBe(false);
    expect(acceptsOpinion(node("X", { applicable: false }))).toBe(false);
  });
});

describe("findNode", () => {
  it("locates nested nodes and misses gracefully", () => {
    const sections = sampleSections();
    expect(findNode(sections, "Q.A.1")?.id).toBe("Q.A.1");
    expect(findNode(sections, "Z.9")).toBeUndefined();
  });
});
