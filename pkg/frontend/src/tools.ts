// Pointer gestures -> adversary commands. The UI never mutates simulation
// state directly; every edit goes through a command frame.

import { CommandKind, makeCommand } from "./protocol.js";
import { ViewModel } from "./state.js";

export interface GestureSink {
    send(frame: string): boolean;
}

const DRAG_THROTTLE_MS = 100; // matches the default tick rate

export class ToolController {
    private dragging = false;
    private lastDragSent = 0;
    private draggingHuman: string | null = null;

    constructor(private vm: ViewModel, private sink: GestureSink,
                private now: () => number = () => Date.now()) {}

    command(kind: CommandKind, payload: Record<string, unknown> = {}): void {
        this.sink.send(makeCommand(kind, payload));
    }

    pointerDown(wx: number, wy: number): void {
        const vm = this.vm;
        if (vm.tool === "drag") {
            this.dragging = true;
            this.sendDrag(wx, wy, true);
        } else if (vm.tool === "occluder") {
            if (vm.pendingWall === null) {
                vm.pendingWall = [wx, wy];
            } else {
                this.placeWall(wx, wy);
            }
        } else if (vm.tool === "human") {
            const existing = this.humanAt(wx, wy);
            if (existing !== null) {
                this.draggingHuman = existing;
            } else {
                const id = `adv${vm.nextHumanId++}`;
                this.command("spawn_human", { id, at: [wx, wy] });
            }
        } else if (vm.tool === "takedrop") {
            const carried = vm.snapshot?.record.target.carrier ?? null;
            if (carried !== null) {
                this.command("drop_target", { position: [wx, wy] });
            } else {
                const human = this.humanAt(wx, wy);
                if (human !== null) {
                    this.command("take_target", { id: human });
                }
            }
        }
    }

    pointerMove(wx: number, wy: number): void {
        if (this.dragging && this.vm.tool === "drag") {
            this.sendDrag(wx, wy, false);
        } else if (this.draggingHuman !== null && this.vm.tool === "human") {
            const t = this.now();
            if (t - this.lastDragSent >= DRAG_THROTTLE_MS) {
                this.command("move_human", { id: this.draggingHuman, to: [wx, wy] });
                this.lastDragSent = t;
            }
        }
    }

    pointerUp(wx: number, wy: number): void {
        if (this.dragging && this.vm.tool === "drag") {
            this.sendDrag(wx, wy, true); // final position always goes out
        }
        // wall gesture: a drag of meaningful length completes on release;
        // a plain click leaves the first corner pending for a second click
        const pending = this.vm.pendingWall;
        if (this.vm.tool === "occluder" && pending !== null
                && Math.hypot(wx - pending[0], wy - pending[1]) > 0.2) {
            this.placeWall(wx, wy);
        }
        this.dragging = false;
        this.draggingHuman = null;
    }

    private placeWall(wx: number, wy: number): void {
        const vm = this.vm;
        if (vm.pendingWall === null) return;
        const id = `wall${vm.nextWallId++}`;
        this.command("place_occluder", { id, a: vm.pendingWall, b: [wx, wy] });
        vm.pendingWall = null;
    }

    private sendDrag(wx: number, wy: number, force: boolean): void {
        const t = this.now();
        if (!force && t - this.lastDragSent < DRAG_THROTTLE_MS) {
            return;
        }
        this.command("drag_target", { to: [wx, wy] });
        this.lastDragSent = t;
    }

    private humanAt(wx: number, wy: number, radius = 0.5): string | null {
        const humans = this.vm.snapshot?.record.humans ?? [];
        let best: string | null = null;
        let bestD = radius;
        for (const h of humans) {
            const d = Math.hypot(h.p[0] - wx, h.p[1] - wy);
            if (d < bestD) {
                best = h.id;
                bestD = d;
            }
        }
        return best;
    }
}
