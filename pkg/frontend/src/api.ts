/**
 * Typed client for the authentication service v1 endpoints.
 *
 * Both the base URL and the fetch implementation are injectable so the
 * same client runs in the browser page and in scripted tests.
 */

export interface AuthSuccess {
  status: "success";
  token: string;
  expires_at: number;
}

export interface AuthFailure {
  status: "failure";
  message: string;
}

export interface PasscodeRequired {
  status: "passcode_required";
  message: string;
}

export interface ServiceError {
  status: "error";
  message: string;
}

export type AuthResponse = AuthSuccess | AuthFailure | PasscodeRequired | ServiceError;

export class AuthApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async post(path: string, body: unknown): Promise<AuthResponse> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = (await response.json()) as AuthResponse;
    if (!payload || typeof payload.status !== "string") {
      return { status: "error", message: "malformed server response" };
    }
    return payload;
  }

  login(username: string, password: string, rttNonce?: string | null): Promise<AuthResponse> {
    const body: Record<string, string> = { username, password };
    if (rttNonce) {
      body.rtt_nonce = rttNonce;
    }
    return this.post("/v1/auth", body);
  }

  verify(username: string, passcode: string): Promise<AuthResponse> {
    return this.post("/v1/auth/verify", { username, passcode });
  }
}
