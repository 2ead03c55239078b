/**
 * Round-trip-time echo participant.
 *
 * Connects to the service's RTT channel, records the attempt nonce
 * from the hello frame, and echoes every sequenced ping immediately
 * and verbatim -- the handler does no awaitable work before replying,
 * so the measurement reflects the network, not the page.  Any channel
 * failure degrades silently: login proceeds without the RTT feature.
 */
export function collectRtt(factory, url) {
    return new Promise((resolve) => {
        const echoed = [];
        let nonce = null;
        let settled = false;
        const settle = () => {
            if (!settled) {
                settled = true;
                resolve({ nonce, echoed });
            }
        };
        let socket;
        try {
            socket = factory(url);
        }
        catch {
            resolve({ nonce: null, echoed });
            return;
        }
        socket.onmessage = (event) => {
            let frame;
            try {
                frame = JSON.parse(String(event.data));
            }
            catch {
                return;
            }
            if (frame.type === "hello" && typeof frame.nonce === "string") {
                nonce = frame.nonce;
            }
            else if (frame.type === "ping" && typeof frame.seq === "number") {
                // echo verbatim, synchronously
                socket.send(String(event.data));
                echoed.push(frame.seq);
            }
            else if (frame.type === "done") {
                settle();
                socket.close();
            }
        };
        socket.onclose = settle;
        socket.onerror = settle;
    });
}
