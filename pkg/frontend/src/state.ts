// View model: the latest snapshot plus camera and tool state. Frames that
// arrive out of order are dropped so the renderer only ever sees the most
// recent tick.

import { SnapshotMessage } from "./protocol.js";

export type Tool = "drag" | "occluder" | "human" | "takedrop";

export type ConnectionStatus = "connecting" | "connected" | "closed";

export interface Camera {
    // world-to-screen: screen = (world - center) * scale + viewport/2
    centerX: number;
    centerY: number;
    scale: number; // pixels per meter
}

export class ViewModel {
    snapshot: SnapshotMessage | null = null;
    camera: Camera = { centerX: 0, centerY: 0, scale: 36 };
    tool: Tool = "drag";
    status: ConnectionStatus = "connecting";
    scenario = "";
    lastError: string | null = null;
    errorShownAt = 0;
    // in-progress occluder gesture (first corner picked)
    pendingWall: [number, number] | null = null;
    nextWallId = 1;
    nextHumanId = 1;

    /** Accept a snapshot only if it is newer than what we already show. */
    ingest(snapshot: SnapshotMessage): boolean {
        if (this.snapshot !== null && snapshot.tick < this.snapshot.tick) {
            return false;
        }
        this.snapshot = snapshot;
        return true;
    }

    showError(reason: string, now: number): void {
        this.lastError = reason;
        this.errorShownAt = now;
    }

    /** Errors fade after a few seconds. */
    activeError(now: number): string | null {
        if (this.lastError === null || now - this.errorShownAt > 4000) return null;
        return this.lastError;
    }

    toScreen(wx: number, wy: number, width: number, height: number): [number, number] {
        const { centerX, centerY, scale } = this.camera;
        return [
            (wx - centerX) * scale + width / 2,
            height / 2 - (wy - centerY) * scale,
        ];
    }

    toWorld(sx: number, sy: number, width: number, height: number): [number, number] {
        const { centerX, centerY, scale } = this.camera;
        return [
            (sx - width / 2) / scale + centerX,
            (height / 2 - sy) / scale + centerY,
        ];
    }
}
