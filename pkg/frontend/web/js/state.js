/**
 * Login view state machine.
 *
 * States: the credentials form, an error box over the form, the
 * re-authentication passcode prompt, and the logged-in view.  The
 * passcode prompt is reachable only from a "passcode required"
 * response, and transitions follow only the edges drawn here.
 */
export const PASSCODE_PATTERN = /^[0-9]{6}$/;
const MAX_PASSCODE_ATTEMPTS = 3;
const GENERIC_ERROR = "Something went wrong. Please try again.";
export class LoginFlow {
    constructor(api) {
        this.api = api;
        this.state = { kind: "credentials_form" };
        this.username = null;
        this.rttNonce = null;
    }
    get current() {
        return this.state;
    }
    /** Dismiss an error and return to the credentials form. */
    reset() {
        this.state = { kind: "credentials_form" };
        this.username = null;
        return this.state;
    }
    async submitLogin(username, password) {
        if (this.state.kind === "passcode_prompt" || this.state.kind === "logged_in") {
            throw new Error(`submitLogin is not a legal transition from ${this.state.kind}`);
        }
        if (!username || !password) {
            this.state = { kind: "error_shown", message: "Enter a username and password." };
            return this.state;
        }
        let response;
        try {
            response = await this.api.login(username, password, this.rttNonce);
        }
        catch {
            this.state = { kind: "error_shown", message: GENERIC_ERROR };
            return this.state;
        }
        switch (response.status) {
            case "success":
                this.state = { kind: "logged_in", token: response.token };
                break;
            case "passcode_required":
                this.username = username;
                this.state = {
                    kind: "passcode_prompt",
                    notice: null,
                    attemptsLeft: MAX_PASSCODE_ATTEMPTS,
                };
                break;
            default:
                this.state = { kind: "error_shown", message: response.message };
        }
        return this.state;
    }
    async submitPasscode(code) {
        if (this.state.kind !== "passcode_prompt" || this.username === null) {
            throw new Error(`submitPasscode is not a legal transition from ${this.state.kind}`);
        }
        if (!PASSCODE_PATTERN.test(code)) {
            // blocked client-side; no request goes out
            this.state = { ...this.state, notice: "The code is six digits." };
            return this.state;
        }
        let response;
        try {
            response = await this.api.verify(this.username, code);
        }
        catch {
            this.state = { kind: "error_shown", message: GENERIC_ERROR };
            return this.state;
        }
        if (response.status === "success") {
            this.state = { kind: "logged_in", token: response.token };
            return this.state;
        }
        const attemptsLeft = this.state.attemptsLeft - 1;
        if (attemptsLeft <= 0) {
            // challenge exhausted; back through the error box to the form
            this.username = null;
            this.state = {
                kind: "error_shown",
                message: "Verification failed. Please sign in again.",
            };
        }
        else {
            this.state = {
                kind: "passcode_prompt",
                notice: "That code was not accepted. Please try again.",
                attemptsLeft,
            };
        }
        return this.state;
    }
}
