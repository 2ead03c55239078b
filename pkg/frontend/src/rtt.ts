/**
 * Round-trip-time echo participant.
 *
 * Connects to the service's RTT channel, records the attempt nonce
 * from the hello frame, and echoes every sequenced ping immediately
 * and verbatim -- the handler does no awaitable work before replying,
 * so the measurement reflects the network, not the page.  Any channel
 * failure degrades silently: login proceeds without the RTT feature.
 */

// Handler parameters are `any` so both the browser WebSocket and the
// Node `ws` client satisfy this structurally; only `.data` is read.
export interface WebSocketLike {
  onopen: ((ev: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev: any) => void) | null;
  onerror: ((ev: any) => void) | null;
  send(data: string): void;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface RttResult {
  /** Attempt nonce to attach to the login request; null on failure. */
  nonce: string | null;
  /** Sequence ids echoed back, in the order they were answered. */
  echoed: number[];
}

export function collectRtt(factory: WebSocketFactory, url: string): Promise<RttResult> {
  return new Promise((resolve) => {
    const echoed: number[] = [];
    let nonce: string | null = null;
    let settled = false;
    const settle = () => {
      if (!settled) {
        settled = true;
        resolve({ nonce, echoed });
      }
    };

    let socket: WebSocketLike;
    try {
      socket = factory(url);
    } catch {
      resolve({ nonce: null, echoed });
      return;
    }

    socket.onmessage = (event: { data: unknown }) => {
      let frame: { type?: string; nonce?: string; seq?: number };
      try {
        frame = JSON.parse(String(event.data));
      } catch {
        return;
      }
      if (frame.type === "hello" && typeof frame.nonce === "string") {
        nonce = frame.nonce;
      } else if (frame.type === "ping" && typeof frame.seq === "number") {
        // echo verbatim, synchronously
        socket.send(String(event.data));
        echoed.push(frame.seq);
      } else if (frame.type === "done") {
        settle();
        socket.close();
      }
    };
    socket.onclose = settle;
    socket.onerror = settle;
  });
}
