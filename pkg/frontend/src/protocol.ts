// Wire protocol for the live session (see ../protocol.md at the repo root).

export const PROTOCOL_VERSION = 1;

export interface TraceTarget {
    p: [number, number];
    vel: [number, number];
    present: boolean;
    carrier: string | null;
}

export interface TraceOccluder {
    id: string;
    a: [number, number];
    b: [number, number];
}

export interface TraceHuman {
    id: string;
    p: [number, number];
}

export interface TraceRecord {
    v: number;
    tick: number;
    t: number;
    robot: [number, number, number, number]; // x, y, heading, pan
    target: TraceTarget;
    occluders: TraceOccluder[];
    humans: TraceHuman[];
    z: [number, number] | null;
    features: [number, number, number, number];
    belief: [number, number, number, number];
    action: string;
    phase: string;
    estimate: [number, number];
    n_eff: number;
    entropy: number;
    flags: string[];
    goal?: number[];
}

export interface SessionMetrics {
    ticks: number;
    tracking_ratio: number;
    episodes: number;
    episodes_restored: number;
    failure_time: number | null;
}

export interface HelloMessage {
    type: "hello";
    v: number;
    scenario: string;
    seed: number;
    tick: number;
    speed: number;
    paused: boolean;
}

export interface SnapshotMessage {
    type: "snapshot";
    v: number;
    tick: number;
    t: number;
    record: TraceRecord;
    particles: [number, number, number][];
    metrics: SessionMetrics;
    paused: boolean;
    speed: number;
    terminal: boolean;
}

export interface ErrorMessage {
    type: "error";
    v: number;
    reason: string;
    seq?: number;
}

export type ServerMessage = HelloMessage | SnapshotMessage | ErrorMessage;

export type CommandKind =
    | "drag_target"
    | "place_occluder"
    | "remove_occluder"
    | "move_human"
    | "spawn_human"
    | "take_target"
    | "drop_target"
    | "pause"
    | "resume"
    | "set_speed"
    | "step"
    | "reset";

export interface CommandMessage {
    type: "command";
    v: number;
    kind: CommandKind;
    seq?: number;
    [key: string]: unknown;
}

export class ProtocolError extends Error {}

function isPair(v: unknown): v is [number, number] {
    return Array.isArray(v) && v.length === 2 &&
        v.every((x) => typeof x === "number" && isFinite(x));
}

/** Parse a server frame; throws ProtocolError on anything malformed. */
export function parseServerMessage(text: string): ServerMessage {
    let data: any;
    try {
        data = JSON.parse(text);
    } catch (e) {
        throw new ProtocolError(`not JSON: ${e}`);
    }
    if (typeof data !== "object" || data === null || typeof data.type !== "string") {
        throw new ProtocolError("missing type tag");
    }
    if (typeof data.v !== "number") {
        throw new ProtocolError("missing protocol version");
    }
    switch (data.type) {
        case "hello":
            if (typeof data.scenario !== "string" || typeof data.seed !== "number") {
                throw new ProtocolError("bad hello");
            }
            return data as HelloMessage;
        case "error":
            if (typeof data.reason !== "string") {
                throw new ProtocolError("bad error message");
            }
            return data as ErrorMessage;
        case "snapshot": {
            const r = data.record;
            if (typeof data.tick !== "number" || typeof r !== "object" || r === null) {
                throw new ProtocolError("bad snapshot");
            }
            if (!Array.isArray(r.robot) || r.robot.length !== 4) {
                throw new ProtocolError("bad snapshot robot");
            }
            if (!isPair(r.target?.p) || !Array.isArray(r.belief) || r.belief.length !== 4) {
                throw new ProtocolError("bad snapshot target/belief");
            }
            if (!Array.isArray(data.particles)) {
                throw new ProtocolError("bad snapshot particles");
            }
            return data as SnapshotMessage;
        }
        default:
            throw new ProtocolError(`unknown message type ${data.type}`);
    }
}

export function makeHello(): string {
    return JSON.stringify({ type: "hello", v: PROTOCOL_VERSION });
}

let seqCounter = 0;

export function makeCommand(kind: CommandKind, payload: Record<string, unknown> = {}): string {
    seqCounter += 1;
    const msg: CommandMessage = { type: "command", v: PROTOCOL_VERSION, kind, seq: seqCounter, ...payload };
    return JSON.stringify(msg);
}

/** Round-trip helper used by tests: parse a command frame back. */
export function parseCommand(text: string): CommandMessage {
    const data = JSON.parse(text);
    if (data.type !== "command" || typeof data.kind !== "string") {
        throw new ProtocolError("not a command frame");
    }
    return data as CommandMessage;
}
