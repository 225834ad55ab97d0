// Canvas painting of a SceneGraph. All layout decisions live in scene.ts;
// this file only draws.

import { SceneGraph, Visibility } from "./scene.js";
import { ViewModel } from "./state.js";

const COLORS = {
    background: "#10141a",
    grid: "#1c2430",
    boundary: "#31405a",
    sector: "rgba(90, 140, 220, 0.10)",
    fov: "rgba(110, 180, 255, 0.18)",
    fovEdge: "rgba(130, 190, 255, 0.5)",
    wall: "#d2884b",
    particle: "#64d2a0",
    robot: "#e8eef6",
    targetVisible: "#f2d257",
    targetShadow: "#8a7a40",
    targetOutside: "#6d6452",
    human: "#d46a9f",
    humanDim: "#7a4a64",
    detection: "#7fd0ff",
    estimate: "#9ad0b0",
    text: "#cfd8e3",
    bar: "#5a8cdc",
    error: "#e06060",
};

function entityColor(kind: string, vis: Visibility): string {
    if (kind === "target") {
        return vis === "visible" ? COLORS.targetVisible
            : vis === "shadow" ? COLORS.targetShadow : COLORS.targetOutside;
    }
    if (kind === "human") {
        return vis === "visible" ? COLORS.human : COLORS.humanDim;
    }
    return kind === "detection" ? COLORS.detection : COLORS.estimate;
}

export function paint(ctx: CanvasRenderingContext2D, scene: SceneGraph,
                      vm: ViewModel, width: number, height: number): void {
    ctx.fillStyle = COLORS.background;
    ctx.fillRect(0, 0, width, height);

    const w2s = (x: number, y: number) => vm.toScreen(x, y, width, height);

    // arena bounds + grid
    const [x0, y0, x1, y1] = scene.bounds;
    ctx.strokeStyle = COLORS.grid;
    ctx.lineWidth = 1;
    for (let gx = Math.ceil(x0); gx <= x1; gx += 2) {
        const [sx0, sy0] = w2s(gx, y0);
        const [sx1, sy1] = w2s(gx, y1);
        ctx.beginPath(); ctx.moveTo(sx0, sy0); ctx.lineTo(sx1, sy1); ctx.stroke();
    }
    for (let gy = Math.ceil(y0); gy <= y1; gy += 2) {
        const [sx0, sy0] = w2s(x0, gy);
        const [sx1, sy1] = w2s(x1, gy);
        ctx.beginPath(); ctx.moveTo(sx0, sy0); ctx.lineTo(sx1, sy1); ctx.stroke();
    }
    ctx.strokeStyle = COLORS.boundary;
    ctx.lineWidth = 2;
    const [bx0, by0] = w2s(x0, y1);
    const [bx1, by1] = w2s(x1, y0);
    ctx.strokeRect(bx0, by0, bx1 - bx0, by1 - by0);

    // raw sector, then the visible region on top: the difference reads as
    // the shadowed part of the view
    drawPolygon(ctx, scene.sectorPolygon, COLORS.sector, null, w2s);
    drawPolygon(ctx, scene.fovPolygon, COLORS.fov, COLORS.fovEdge, w2s);

    // particles, weight-mapped opacity
    for (const p of scene.particles) {
        if (p.opacity <= 0) continue;
        const [sx, sy] = w2s(p.x, p.y);
        ctx.fillStyle = COLORS.particle;
        ctx.globalAlpha = 0.15 + 0.85 * p.opacity;
        ctx.fillRect(sx - 1.5, sy - 1.5, 3, 3);
    }
    ctx.globalAlpha = 1;

    // walls
    ctx.strokeStyle = COLORS.wall;
    ctx.lineWidth = 4;
    for (const wall of scene.walls) {
        const [ax, ay] = w2s(wall.a[0], wall.a[1]);
        const [bx2, by2] = w2s(wall.b[0], wall.b[1]);
        ctx.beginPath(); ctx.moveTo(ax, ay); ctx.lineTo(bx2, by2); ctx.stroke();
    }

    // entities
    for (const e of scene.entities) {
        const [sx, sy] = w2s(e.x, e.y);
        ctx.fillStyle = entityColor(e.kind, e.visibility);
        ctx.beginPath();
        if (e.kind === "human") {
            ctx.arc(sx, sy, 9, 0, 2 * Math.PI);
            ctx.fill();
            ctx.fillStyle = COLORS.background;
            ctx.font = "10px sans-serif";
            ctx.textAlign = "center";
            ctx.fillText(e.id, sx, sy + 3);
        } else if (e.kind === "target") {
            ctx.arc(sx, sy, 7, 0, 2 * Math.PI);
            ctx.fill();
            if (e.visibility === "shadow") {
                ctx.strokeStyle = COLORS.targetVisible;
                ctx.setLineDash([3, 3]);
                ctx.stroke();
                ctx.setLineDash([]);
            }
        } else if (e.kind === "detection") {
            ctx.arc(sx, sy, 5, 0, 2 * Math.PI);
            ctx.lineWidth = 2;
            ctx.strokeStyle = COLORS.detection;
            ctx.stroke();
        } else {
            ctx.moveTo(sx - 5, sy); ctx.lineTo(sx + 5, sy);
            ctx.moveTo(sx, sy - 5); ctx.lineTo(sx, sy + 5);
            ctx.lineWidth = 1.5;
            ctx.strokeStyle = COLORS.estimate;
            ctx.stroke();
        }
    }

    // robot
    const [rx, ry] = w2s(scene.robot.x, scene.robot.y);
    ctx.fillStyle = COLORS.robot;
    ctx.beginPath();
    ctx.arc(rx, ry, 8, 0, 2 * Math.PI);
    ctx.fill();
    ctx.strokeStyle = COLORS.robot;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(rx, ry);
    const hx = rx + 16 * Math.cos(-scene.robot.heading);
    const hy = ry + 16 * Math.sin(-scene.robot.heading);
    ctx.lineTo(hx, hy);
    ctx.stroke();

    drawHud(ctx, scene, vm, width, height);
}

function drawPolygon(ctx: CanvasRenderingContext2D, pts: [number, number][],
                     fill: string, edge: string | null,
                     w2s: (x: number, y: number) => [number, number]): void {
    if (pts.length < 3) return;
    ctx.beginPath();
    const [sx, sy] = w2s(pts[0][0], pts[0][1]);
    ctx.moveTo(sx, sy);
    for (const [x, y] of pts.slice(1)) {
        const [px, py] = w2s(x, y);
        ctx.lineTo(px, py);
    }
    ctx.closePath();
    ctx.fillStyle = fill;
    ctx.fill();
    if (edge) {
        ctx.strokeStyle = edge;
        ctx.lineWidth = 1;
        ctx.stroke();
    }
}

function drawHud(ctx: CanvasRenderingContext2D, scene: SceneGraph,
                 vm: ViewModel, width: number, height: number): void {
    const hud = scene.hud;
    ctx.font = "13px monospace";
    ctx.textAlign = "left";
    ctx.fillStyle = COLORS.text;
    const lines = [
        `t=${hud.t.toFixed(1)}s  tick ${hud.tick}${hud.paused ? "  [paused]" : ""}` +
        `${hud.terminal ? "  [TERMINAL]" : ""}`,
        `action: ${hud.action} (${hud.phase})`,
        `TR ${hud.trackingRatio.toFixed(2)}  episodes ${hud.episodes}` +
        (hud.failureTime !== null ? `  FT ${hud.failureTime.toFixed(1)}s` : ""),
        `tool: ${vm.tool}`,
    ];
    lines.forEach((line, i) => ctx.fillText(line, 12, 20 + 16 * i));

    // belief bars, bottom left
    const barW = 90;
    const baseY = height - 16;
    scene.beliefBars.forEach((bar, i) => {
        const y = baseY - (scene.beliefBars.length - 1 - i) * 18;
        ctx.fillStyle = COLORS.text;
        ctx.fillText(bar.label.padEnd(9), 12, y + 4);
        ctx.fillStyle = COLORS.grid;
        ctx.fillRect(100, y - 6, barW, 12);
        ctx.fillStyle = COLORS.bar;
        ctx.fillRect(100, y - 6, barW * bar.value, 12);
        ctx.fillStyle = COLORS.text;
        ctx.fillText(bar.value.toFixed(2), 100 + barW + 8, y + 4);
    });

    const err = vm.activeError(performance.now());
    if (err) {
        ctx.fillStyle = COLORS.error;
        ctx.textAlign = "center";
        ctx.fillText(err, width / 2, 24);
    }
    if (vm.status !== "connected") {
        ctx.fillStyle = "rgba(16, 20, 26, 0.8)";
        ctx.fillRect(0, 0, width, height);
        ctx.fillStyle = COLORS.text;
        ctx.textAlign = "center";
        ctx.font = "16px sans-serif";
        ctx.fillText(vm.status === "connecting" ? "connecting..."
            : "disconnected - retrying", width / 2, height / 2);
    }
}
