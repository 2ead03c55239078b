/**
 * Typed client for the authentication service v1 endpoints.
 *
 * Both the base URL and the fetch implementation are injectable so the
 * same client runs in the browser page and in scripted tests.
 */
export class AuthApi {
    constructor(baseUrl = "", fetchFn = fetch.bind(globalThis)) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
    }
    async post(path, body) {
        const response = await this.fetchFn(`${this.baseUrl}${path}`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
        const payload = (await response.json());
        if (!payload || typeof payload.status !== "string") {
            return { status: "error", message: "malformed server response" };
        }
        return payload;
    }
    login(username, password, rttNonce) {
        const body = { username, password };
        if (rttNonce) {
            body.rtt_nonce = rttNonce;
        }
        return this.post("/v1/auth", body);
    }
    verify(username, passcode) {
        return this.post("/v1/auth/verify", { username, passcode });
    }
}
