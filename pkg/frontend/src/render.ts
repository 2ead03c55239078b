/**
 * Pure view-model derivation from the login state.
 *
 * Keeps the DOM glue in main.ts trivial and the display rules
 * testable without a browser.  The prompt wording never includes the
 * user's contact address; only the fact that a code was sent.
 */

import { LoginViewState } from "./state.js";

export interface ViewModel {
  formVisible: boolean;
  errorVisible: boolean;
  errorText: string;
  promptVisible: boolean;
  promptTitle: string;
  promptText: string;
  promptNotice: string;
  dashboardVisible: boolean;
}

export const PROMPT_TITLE = "Verify Your Identity";
export const PROMPT_TEXT =
  "A verification code has been sent to your registered contact address. " +
  "Enter the six-digit code to continue.";

export function viewModel(state: LoginViewState): ViewModel {
  return {
    formVisible: state.kind === "credentials_form" || state.kind === "error_shown",
    errorVisible: state.kind === "error_shown",
    errorText: state.kind === "error_shown" ? state.message : "",
    promptVisible: state.kind === "passcode_prompt",
    promptTitle: PROMPT_TITLE,
    promptText: PROMPT_TEXT,
    promptNotice:
      state.kind === "passcode_prompt" && state.notice ? state.notice : "",
    dashboardVisible: state.kind === "logged_in",
  };
}
