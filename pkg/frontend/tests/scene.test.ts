import { describe, expect, it } from "vitest";

import {
    Segment,
    SensorPose,
    effectiveFovContains,
    fovContains,
} from "../src/geometry.js";
import { DEFAULT_FOV, buildScene } from "../src/scene.js";
import { makeRng, makeSnapshot } from "./helpers.js";

// Acceptance A10: occluded-region styling of every rendered entity agrees
// with an effective-FOV recomputation on the same snapshot, over 100
// randomized snapshots.
describe("scene styling vs visibility recomputation", () => {
    it("classifies every entity consistently on 100 random snapshots", () => {
        const rng = makeRng(2024);
        let entitiesChecked = 0;
        for (let i = 0; i < 100; i++) {
            const snap = makeSnapshot(rng, 1 + Math.floor(rng() * 3),
                                      1 + Math.floor(rng() * 3));
            const scene = buildScene(snap);
            const [x, y, heading, pan] = snap.record.robot;
            const q: SensorPose = { x, y, heading, pan };
            const walls: Segment[] = snap.record.occluders.map(
                (o) => ({ a: o.a, b: o.b }));
            for (const e of scene.entities) {
                const p: [number, number] = [e.x, e.y];
                const visible = effectiveFovContains(q, DEFAULT_FOV, p, walls);
                const inSector = fovContains(q, DEFAULT_FOV, p);
                const expected = !inSector ? "outside" : visible ? "visible" : "shadow";
                expect(e.visibility).toBe(expected);
                entitiesChecked += 1;
            }
        }
        expect(entitiesChecked).toBeGreaterThan(300);
    });
});

describe("scene contents", () => {
    it("maps particle weights to opacity with zero weight invisible", () => {
        const rng = makeRng(5);
        const snap = makeSnapshot(rng);
        snap.particles = [[0, 0, 0.5], [1, 1, 0.25], [2, 2, 0.0]];
        const scene = buildScene(snap);
        expect(scene.particles[0].opacity).toBe(1);
        expect(scene.particles[1].opacity).toBe(0.5);
        expect(scene.particles[2].opacity).toBe(0);
    });

    it("renders four belief bars summing to one", () => {
        const rng = makeRng(6);
        const scene = buildScene(makeSnapshot(rng));
        expect(scene.beliefBars.length).toBe(4);
        const total = scene.beliefBars.reduce((a, b) => a + b.value, 0);
        expect(total).toBeCloseTo(1.0, 9);
    });

    it("equal belief gives four equal bars", () => {
        const rng = makeRng(7);
        const snap = makeSnapshot(rng);
        snap.record.belief = [0.25, 0.25, 0.25, 0.25];
        const scene = buildScene(snap);
        for (const bar of scene.beliefBars) {
            expect(bar.value).toBeCloseTo(0.25, 12);
        }
    });

    it("absent target is not drawn", () => {
        const rng = makeRng(8);
        const snap = makeSnapshot(rng);
        snap.record.target.present = false;
        const scene = buildScene(snap);
        expect(scene.entities.some((e) => e.kind === "target")).toBe(false);
    });

    it("fov polygon is carved by walls, sector polygon is not", () => {
        const rng = makeRng(9);
        const snap = makeSnapshot(rng, 0, 0);
        snap.record.robot = [0, 0, 0, 0];
        snap.record.occluders = [{ id: "w", a: [1, -2], b: [1, 2] }];
        const scene = buildScene(snap);
        // every carved vertex stops at the wall, sector vertices reach full range
        const maxCarved = Math.max(...scene.fovPolygon.slice(1).map(
            ([px, py]) => Math.hypot(px, py)));
        const maxSector = Math.max(...scene.sectorPolygon.slice(1).map(
            ([px, py]) => Math.hypot(px, py)));
        expect(maxCarved).toBeLessThan(1.2);
        expect(maxSector).toBeCloseTo(DEFAULT_FOV.radius, 6);
    });

    it("drops stale frames", async () => {
        const { ViewModel } = await import("../src/state.js");
        const vm = new ViewModel();
        const rng = makeRng(10);
        const newer = makeSnapshot(rng);
        newer.tick = 100;
        const older = makeSnapshot(rng);
        older.tick = 50;
        expect(vm.ingest(newer)).toBe(true);
        expect(vm.ingest(older)).toBe(false);
        expect(vm.snapshot?.tick).toBe(100);
    });
});
