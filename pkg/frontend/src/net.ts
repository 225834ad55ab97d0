// Websocket client: hello handshake, version checking, reconnect with
// backoff. The view model is the only thing mutated from network events.

import {
    PROTOCOL_VERSION,
    ServerMessage,
    makeHello,
    parseServerMessage,
} from "./protocol.js";

export interface NetCallbacks {
    onMessage: (msg: ServerMessage) => void;
    onStatus: (status: "connecting" | "connected" | "closed") => void;
}

export class SocketClient {
    private ws: WebSocket | null = null;
    private retryMs = 500;
    private closedByUser = false;

    constructor(private url: string, private callbacks: NetCallbacks) {}

    connect(): void {
        this.callbacks.onStatus("connecting");
        this.ws = new WebSocket(this.url);
        this.ws.onopen = () => {
            this.retryMs = 500;
            this.callbacks.onStatus("connected");
            this.ws?.send(makeHello());
        };
        this.ws.onmessage = (event) => {
            let msg: ServerMessage;
            try {
                msg = parseServerMessage(event.data as string);
            } catch (e) {
                console.warn("dropping malformed frame:", e);
                return;
            }
            if (msg.type === "hello" && msg.v !== PROTOCOL_VERSION) {
                // surfaced, never silently ignored
                this.callbacks.onMessage({
                    type: "error", v: PROTOCOL_VERSION,
                    reason: `protocol mismatch: server v${msg.v}, client v${PROTOCOL_VERSION}`,
                });
            }
            this.callbacks.onMessage(msg);
        };
        this.ws.onclose = () => {
            this.callbacks.onStatus("closed");
            if (!this.closedByUser) {
                setTimeout(() => this.connect(), this.retryMs);
                this.retryMs = Math.min(this.retryMs * 2, 8000);
            }
        };
        this.ws.onerror = () => {
            this.ws?.close();
        };
    }

    send(frame: string): boolean {
        if (this.ws === null || this.ws.readyState !== WebSocket.OPEN) {
            return false;
        }
        this.ws.send(frame);
        return true;
    }

    close(): void {
        this.closedByUser = true;
        this.ws?.close();
    }
}

export function sessionUrl(): string {
    const params = new URLSearchParams(window.location.search);
    const host = params.get("host") ?? window.location.hostname ?? "localhost";
    const port = params.get("port") ?? (window.location.port || "8000");
    const scheme = window.location.protocol === "https:" ? "wss" : "ws";
    return `${scheme}://${host}:${port}/ws`;
}
