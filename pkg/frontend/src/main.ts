// Entry point: wire the socket, the view model, the tools and the canvas.

import { SocketClient, sessionUrl } from "./net.js";
import { makeCommand } from "./protocol.js";
import { buildScene } from "./scene.js";
import { paint } from "./render.js";
import { Tool, ViewModel } from "./state.js";
import { ToolController } from "./tools.js";

const canvas = document.getElementById("arena") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const vm = new ViewModel();

function resize(): void {
    canvas.width = window.innerWidth;
    canvas.height = window.innerHeight;
}
resize();
window.addEventListener("resize", resize);

const client = new SocketClient(sessionUrl(), {
    onMessage: (msg) => {
        if (msg.type === "snapshot") {
            vm.ingest(msg);
        } else if (msg.type === "hello") {
            vm.scenario = msg.scenario;
        } else if (msg.type === "error") {
            vm.showError(msg.reason, performance.now());
        }
    },
    onStatus: (status) => {
        vm.status = status;
    },
});
client.connect();

const tools = new ToolController(vm, client);

function pointerWorld(ev: PointerEvent): [number, number] {
    const rect = canvas.getBoundingClientRect();
    return vm.toWorld(ev.clientX - rect.left, ev.clientY - rect.top,
                      canvas.width, canvas.height);
}

canvas.addEventListener("pointerdown", (ev) => {
    const [wx, wy] = pointerWorld(ev);
    tools.pointerDown(wx, wy);
});
canvas.addEventListener("pointermove", (ev) => {
    const [wx, wy] = pointerWorld(ev);
    tools.pointerMove(wx, wy);
});
canvas.addEventListener("pointerup", (ev) => {
    const [wx, wy] = pointerWorld(ev);
    tools.pointerUp(wx, wy);
});

const TOOL_KEYS: Record<string, Tool> = {
    "1": "drag", "2": "occluder", "3": "human", "4": "takedrop",
};

window.addEventListener("keydown", (ev) => {
    if (ev.key in TOOL_KEYS) {
        vm.tool = TOOL_KEYS[ev.key];
        vm.pendingWall = null;
    } else if (ev.key === " ") {
        ev.preventDefault();
        const paused = vm.snapshot?.paused ?? false;
        client.send(makeCommand(paused ? "resume" : "pause"));
    } else if (ev.key === "r") {
        client.send(makeCommand("reset"));
    } else if (ev.key === "+" || ev.key === "=") {
        vm.camera.scale = Math.min(vm.camera.scale * 1.2, 200);
    } else if (ev.key === "-") {
        vm.camera.scale = Math.max(vm.camera.scale / 1.2, 8);
    }
});

for (const button of document.querySelectorAll<HTMLButtonElement>("[data-tool]")) {
    button.addEventListener("click", () => {
        vm.tool = button.dataset.tool as Tool;
        vm.pendingWall = null;
    });
}

function frame(): void {
    if (vm.snapshot !== null) {
        paint(ctx, buildScene(vm.snapshot), vm, canvas.width, canvas.height);
    } else {
        paint(ctx, emptyScene(), vm, canvas.width, canvas.height);
    }
    requestAnimationFrame(frame);
}

function emptyScene() {
    return {
        bounds: [-10, -10, 10, 10] as [number, number, number, number],
        fovPolygon: [], sectorPolygon: [], walls: [],
        robot: { x: 0, y: 0, heading: 0, view: 0 },
        entities: [], particles: [], beliefBars: [],
        hud: { action: "-", phase: "-", tick: 0, t: 0, trackingRatio: 0,
               episodes: "0/0", failureTime: null, paused: false, terminal: false },
    };
}

requestAnimationFrame(frame);
