const BADGES = {
    met: { label: "Met", cssClass: "badge badge-met" },
    not_met: { label: "Not met", cssClass: "badge badge-not-met" },
    not_applicable: { label: "N/A", cssClass: "badge badge-na" },
    pending: { label: "Pending", cssClass: "badge badge-pending" },
    needs_more_evidence: { label: "Needs evidence", cssClass: "badge badge-needs" },
};
export function statusBadge(status) {
    return BADGES[status];
}
// Not-applicable subtrees collapse to their root: the dimmed node stays
// visible, its children do not.
export function flattenTree(sections) {
    const rows = [];
    const visit = (node, depth) => {
        const collapse = node.status === "not_applicable" || !node.applicable;
        rows.push({
            id: node.id,
            text: node.text,
            kind: node.kind,
            status: node.status,
            applicable: node.applicable,
            depth,
            isSection: depth === 0,
            hasHiddenChildren: collapse && node.children.length > 0,
            evidenceRefs: node.evidence_refs,
            rationale: node.rationale,
        });
        if (!collapse) {
            for (const child of node.children) {
                visit(child, depth + 1);
            }
        }
    };
    for (const section of sections) {
        visit(section, 0);
    }
    return rows;
}
export function sectionSummaries(sections) {
    return sections.map((section) => ({
        id: section.id,
        text: section.text,
        status: section.status,
    }));
}
// Manual and hybrid criteria accept auditor opinions; auto ones never do.
export function acceptsOpinion(node) {
    return node.applicable && (node.kind === "manual" || node.kind === "hybrid");
}
export function findNode(sections, id) {
    const stack = [...sections];
    while (stack.length > 0) {
        const node = stack.pop();
        if (node.id === id) {
            return node;
        }
        stack.push(...node.children);
    }
    return undefined;
}
