/**
 * DOM glue for the demo login page.  All behavior lives in the state
 * machine and view-model; this file only moves values between them
 * and the document.
 */
import { AuthApi } from "./api.js";
import { collectRtt } from "./rtt.js";
import { LoginFlow } from "./state.js";
import { viewModel } from "./render.js";
const api = new AuthApi("");
const flow = new LoginFlow(api);
function el(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing element #${id}`);
    return node;
}
function render() {
    const vm = viewModel(flow.current);
    el("login-section").hidden = !vm.formVisible;
    el("error-box").hidden = !vm.errorVisible;
    el("error-box").textContent = vm.errorText;
    el("passcode-section").hidden = !vm.promptVisible;
    el("passcode-title").textContent = vm.promptTitle;
    el("passcode-text").textContent = vm.promptText;
    el("passcode-notice").hidden = !vm.promptNotice;
    el("passcode-notice").textContent = vm.promptNotice;
    el("dashboard-section").hidden = !vm.dashboardVisible;
    if (flow.current.kind === "passcode_prompt") {
        el("passcode").focus();
    }
}
async function main() {
    // participate in the RTT measurement as soon as the page loads
    const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/v1/rtt`;
    collectRtt((url) => new WebSocket(url), wsUrl).then((result) => {
        flow.rttNonce = result.nonce;
    });
    el("login-form").addEventListener("submit", async (event) => {
        event.preventDefault();
        const username = el("username").value.trim();
        const password = el("password").value;
        await flow.submitLogin(username, password);
        render();
    });
    el("passcode-form").addEventListener("submit", async (event) => {
        event.preventDefault();
        await flow.submitPasscode(el("passcode").value.trim());
        render();
    });
    render();
}
document.addEventListener("DOMContentLoaded", () => {
    void main();
});
