import { ApiRequestError, WorkbenchClient } from "./api.js";
import { TRANSITION_LABELS, controlsFor } from "./enablement.js";
import { acceptsOpinion, findNode, flattenTree, statusBadge } from "./treeview.js";
const POLL_INTERVAL_MS = 5000;
const state = {
    engagementId: null,
    detail: null,
    tree: null,
    etag: null,
    evidence: [],
    selectedCriterion: null,
};
const client = new WorkbenchClient("");
function el(id) {
    const node = document.getElementById(id);
    if (!node) {
        throw new Error(`missing element #${id}`);
    }
    return node;
}
function banner(message, kind) {
    const box = el("banner");
    box.textContent = message;
    box.className = `banner banner-${kind}`;
    box.hidden = false;
    window.setTimeout(() => {
        box.hidden = true;
    }, 6000);
}
function describeError(error) {
    if (error instanceof ApiRequestError) {
        return `${error.detail.error}: ${error.detail.message ?? ""}`;
    }
    return String(error);
}
async function guarded(action) {
    try {
        await action();
    }
    catch (error) {
        banner(describeError(error), "error");
    }
}
async function loadEngagements() {
    const body = await client.listEngagements();
    const select = el("engagement-select");
    select.innerHTML = "";
    for (const engagement of body.engagements) {
        const option = document.createElement("option");
        option.value = engagement.id;
        option.textContent = `${engagement.id} — ${engagement.system} (${engagement.state})`;
        select.appendChild(option);
    }
    if (body.engagements.length > 0 && !state.engagementId) {
        state.engagementId = body.engagements[0].id;
        select.value = state.engagementId;
    }
}
async function refresh(force = false) {
    if (!state.engagementId) {
        return;
    }
    state.detail = await client.engagementDetail(state.engagementId);
    const tree = await client.criteriaTree(state.engagementId, force ? null : state.etag);
    if (tree) {
        state.tree = tree;
        state.etag = tree.etag;
    }
    state.evidence = (await client.listEvidence(state.engagementId)).items;
    render();
}
function render() {
    renderHeader();
    renderTree();
    renderOpinionForm();
    renderEvidence();
    renderControls();
}
function renderHeader() {
    const detail = state.detail;
    el("engagement-state").textContent = detail
        ? `${detail.state}${detail.outcome ? ` · outcome: ${detail.outcome.verdict}` : ""}`
        : "—";
    el("loop-counter").textContent = detail
        ? String(detail.verification_loops)
        : "0";
}
function renderTree() {
    const host = el("criteria-tree");
    host.innerHTML = "";
    if (!state.tree) {
        return;
    }
    for (const row of flattenTree(state.tree.sections)) {
        const line = document.createElement("div");
        line.className = `tree-row depth-${row.depth}${row.applicable ? "" : " dimmed"}`;
        if (row.id === state.selectedCriterion) {
            line.classList.add("selected");
        }
        const badge = statusBadge(row.status);
        const label = document.createElement("span");
        label.className = badge.cssClass;
        label.textContent = badge.label;
        const idSpan = document.createElement("span");
        idSpan.className = "criterion-id";
        idSpan.textContent = row.id;
        const textSpan = document.createElement("span");
        textSpan.className = "criterion-text";
        textSpan.textContent =
            row.text + (row.hasHiddenChildren ? " (sub-criteria not applicable)" : "");
        line.append(idSpan, label, textSpan);
        line.addEventListener("click", () => {
            state.selectedCriterion = row.id;
            render();
        });
        host.appendChild(line);
    }
}
function renderOpinionForm() {
    const form = el("opinion-form");
    const hint = el("opinion-hint");
    const node = state.tree && state.selectedCriterion
        ? findNode(state.tree.sections, state.selectedCriterion)
        : undefined;
    const controls = state.detail
        ? controlsFor(state.detail.state, state.detail.analysis_attached)
        : null;
    const usable = Boolean(node && controls?.canRecordOpinion && acceptsOpinion(node));
    for (const input of form.querySelectorAll("input, select, button, textarea")) {
        input.disabled = !usable;
    }
    if (!node) {
        hint.textContent = "Select a criterion in the tree.";
    }
    else if (!acceptsOpinion(node)) {
        hint.textContent = `${node.id} is ${node.applicable ? "an automated check" : "not applicable"}; no opinion can be recorded.`;
    }
    else if (!controls?.canRecordOpinion) {
        hint.textContent = "Opinions are recorded during documentation submission or evidence verification.";
    }
    else {
        hint.textContent = `Recording an opinion on ${node.id} (${node.kind}).`;
    }
    el("opinion-target").textContent = node ? node.id : "—";
    const refs = el("opinion-evidence");
    refs.innerHTML = "";
    for (const item of state.evidence) {
        const option = document.createElement("option");
        option.value = item.id;
        option.textContent = `${item.id} ${item.title} [${item.status}]`;
        refs.appendChild(option);
    }
}
function renderEvidence() {
    const host = el("evidence-rows");
    host.innerHTML = "";
    const controls = state.detail
        ? controlsFor(state.detail.state, state.detail.analysis_attached)
        : null;
    for (const item of state.evidence) {
        const row = document.createElement("tr");
        const verify = document.createElement("button");
        verify.textContent = "Verify";
        verify.disabled = !(controls?.canVerifyEvidence && item.status === "unverified");
        verify.addEventListener("click", () => guarded(async () => {
            const finding = window.prompt(`Verification finding for ${item.id}:`, "");
            if (!finding) {
                return;
            }
            const verdict = window.confirm("Accept this evidence? (cancel rejects)")
                ? "verified"
                : "rejected";
            await client.postVerification(state.engagementId, {
                item_id: item.id,
                verdict,
                method: "recomputation",
                finding,
            });
            banner(`${item.id} ${verdict}`, "ok");
            await refresh(true);
        }));
        const cells = [
            item.id,
            item.kind,
            item.title,
            item.status + (item.duplicate_of ? ` (duplicate of ${item.duplicate_of})` : ""),
        ];
        for (const value of cells) {
            const cell = document.createElement("td");
            cell.textContent = value;
            row.appendChild(cell);
        }
        const actionCell = document.createElement("td");
        actionCell.appendChild(verify);
        row.appendChild(actionCell);
        host.appendChild(row);
    }
    const submitButton = el("evidence-submit");
    submitButton.disabled = !controls?.canSubmitEvidence;
}
function renderControls() {
    const host = el("transition-buttons");
    host.innerHTML = "";
    if (!state.detail) {
        return;
    }
    const controls = controlsFor(state.detail.state, state.detail.analysis_attached);
    for (const target of controls.transitionTargets) {
        const button = document.createElement("button");
        button.textContent = TRANSITION_LABELS[target];
        button.dataset.target = target;
        button.addEventListener("click", () => guarded(async () => {
            const result = await client.postTransition(state.engagementId, target);
            banner(`now in ${result.state}`, "ok");
            state.etag = null;
            await refresh(true);
        }));
        host.appendChild(button);
    }
    el("run-checks").disabled = !controls.canRunChecks;
    el("preview-report").disabled = !controls.canPreviewReport;
}
function wireForms() {
    el("token-apply").addEventListener("click", () => {
        client.setToken(el("token-input").value.trim());
        banner("session token set", "ok");
    });
    el("engagement-select").addEventListener("change", (event) => {
        state.engagementId = event.target.value;
        state.etag = null;
        state.selectedCriterion = null;
        void guarded(() => refresh(true));
    });
    el("opinion-form").addEventListener("submit", (event) => {
        event.preventDefault();
        void guarded(async () => {
            const node = state.tree && state.selectedCriterion
                ? findNode(state.tree.sections, state.selectedCriterion)
                : undefined;
            if (!node) {
                return;
            }
            const rationale = el("opinion-rationale").value;
            const status = el("opinion-status").value;
            const refs = Array.from(el("opinion-evidence").selectedOptions).map((option) => option.value);
            const result = await client.postOpinion(state.engagementId, {
                criterion_id: node.id,
                status,
                rationale,
                evidence_refs: refs,
            });
            banner(`${node.id} recorded; section ${result.rollup.section} is ${result.rollup.status}`, "ok");
            el("opinion-rationale").value = "";
            await refresh(true);
        });
    });
    el("evidence-form").addEventListener("submit", (event) => {
        event.preventDefault();
        void guarded(async () => {
            const input = el("evidence-file");
            const title = el("evidence-title").value.trim();
            const kind = el("evidence-kind").value;
            const file = input.files?.[0];
            if (!file || !title) {
                banner("pick a file and a title", "error");
                return;
            }
            const bytes = new Uint8Array(await file.arrayBuffer());
            let binary = "";
            for (const byte of bytes) {
                binary += String.fromCharCode(byte);
            }
            const result = await client.postEvidence(state.engagementId, {
                kind,
                title,
                content_base64: btoa(binary),
            });
            banner(`submitted ${result.item.id}`, "ok");
            input.value = "";
            el("evidence-title").value = "";
            await refresh(true);
        });
    });
    el("run-checks").addEventListener("click", () => guarded(async () => {
        const result = await client.runChecks(state.engagementId);
        banner(`${result.recorded} check records written`, "ok");
        await refresh(true);
    }));
    el("preview-report").addEventListener("click", () => guarded(async () => {
        const preview = await client.reportPreview(state.engagementId);
        el("preview-pane").textContent = preview.markdown;
    }));
    el("refresh").addEventListener("click", () => guarded(async () => {
        await loadEngagements();
        await refresh(true);
    }));
}
function poll() {
    window.setInterval(() => {
        // every mutation round-trips before rendering; polling only picks up
        // changes made elsewhere (for example through the CLI)
        void guarded(() => refresh(false));
    }, POLL_INTERVAL_MS);
}
export function start() {
    wireForms();
    void guarded(async () => {
        await loadEngagements();
        await refresh(true);
    });
    poll();
}
start();
