const API = "/api/v1";
export class ApiRequestError extends Error {
    constructor(status, detail) {
        super(detail.message ?? detail.error);
        this.status = status;
        this.detail = detail;
    }
}
async function parseError(response) {
    let detail = { error: `HTTP ${response.status}` };
    try {
        const body = await response.json();
        if (body && typeof body === "object" && "detail" in body) {
            detail = body.detail;
        }
    }
    catch {
        // non-JSON error body; keep the HTTP status
    }
    throw new ApiRequestError(response.status, detail);
}
export class WorkbenchClient {
    constructor(token) {
        this.token = token;
    }
    setToken(token) {
        this.token = token;
    }
    headers(mutating) {
        const headers = { "Content-Type": "application/json" };
        if (mutating && this.token) {
            headers["Authorization"] = `Bearer ${this.token}`;
        }
        return headers;
    }
    async get(path) {
        const response = await fetch(`${API}${path}`);
        if (!response.ok) {
            return parseError(response);
        }
        return (await response.json());
    }
    async post(path, payload) {
        const response = await fetch(`${API}${path}`, {
            method: "POST",
            headers: this.headers(true),
            body: JSON.stringify(payload),
        });
        if (!response.ok) {
            return parseError(response);
        }
        return (await response.json());
    }
    listEngagements() {
        return this.get("/engagements");
    }
    engagementDetail(id) {
        return this.get(`/engagements/${id}`);
    }
    // Conditional fetch: resolves to null when the tree is unchanged (304).
    async criteriaTree(id, etag) {
        const headers = {};
        if (etag) {
            headers["If-None-Match"] = etag;
        }
        const response = await fetch(`${API}/engagements/${id}/criteria`, { headers });
        if (response.status === 304) {
            return null;
        }
        if (!response.ok) {
            return parseError(response);
        }
        return (await response.json());
    }
    listEvidence(id) {
        return this.get(`/engagements/${id}/evidence`);
    }
    postOpinion(id, body) {
        return this.post(`/engagements/${id}/opinions`, body);
    }
    postEvidence(id, body) {
        return this.post(`/engagements/${id}/evidence`, body);
    }
    postVerification(id, body) {
        return this.post(`/engagements/${id}/verifications`, body);
    }
    postTransition(id, target, note = "") {
        return this.post(`/engagements/${id}/transitions`, { target, note });
    }
    runChecks(id) {
        return this.post(`/engagements/${id}/checks`, {});
    }
    reportPreview(id) {
        return this.get(`/engagements/${id}/report-preview`);
    }
}
