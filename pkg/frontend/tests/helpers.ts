// Shared test helpers: a tiny seeded PRNG and snapshot builders.

import { SnapshotMessage, TraceRecord } from "../src/protocol.js";

/** mulberry32: small deterministic PRNG for test data. */
export function makeRng(seed: number): () => number {
    let s = seed >>> 0;
    return () => {
        s = (s + 0x6d2b79f5) >>> 0;
        let t = s;
        t = Math.imul(t ^ (t >>> 15), t | 1);
        t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
        return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    };
}

export function uniform(rng: () => number, lo: number, hi: number): number {
    return lo + (hi - lo) * rng();
}

export function makeRecord(rng: () => number, nWalls: number, nHumans: number): TraceRecord {
    const walls = [];
    for (let i = 0; i < nWalls; i++) {
        walls.push({
            id: `w${i}`,
            a: [uniform(rng, -6, 6), uniform(rng, -6, 6)] as [number, number],
            b: [uniform(rng, -6, 6), uniform(rng, -6, 6)] as [number, number],
        });
    }
    const humans = [];
    for (let i = 0; i < nHumans; i++) {
        humans.push({
            id: `h${i}`,
            p: [uniform(rng, -7, 7), uniform(rng, -7, 7)] as [number, number],
        });
    }
    const belief = [rng(), rng(), rng(), rng()];
    const total = belief.reduce((a, b) => a + b, 0);
    return {
        v: 1,
        tick: Math.floor(rng() * 1000),
        t: rng() * 100,
        robot: [uniform(rng, -4, 4), uniform(rng, -4, 4),
                uniform(rng, -Math.PI, Math.PI), uniform(rng, -1.5, 1.5)],
        target: {
            p: [uniform(rng, -7, 7), uniform(rng, -7, 7)],
            vel: [0, 0],
            present: rng() > 0.15,
            carrier: null,
        },
        occluders: walls,
        humans,
        z: rng() > 0.5 ? [uniform(rng, -5, 5), uniform(rng, -5, 5)] : null,
        features: [0, 0, 0, 0],
        belief: belief.map((b) => b / total) as [number, number, number, number],
        action: "track",
        phase: "active",
        estimate: [uniform(rng, -5, 5), uniform(rng, -5, 5)],
        n_eff: 100,
        entropy: 3.2,
        flags: [],
    };
}

export function makeSnapshot(rng: () => number, nWalls = 2, nHumans = 2): SnapshotMessage {
    const record = makeRecord(rng, nWalls, nHumans);
    const particles: [number, number, number][] = [];
    const n = 40;
    for (let i = 0; i < n; i++) {
        particles.push([uniform(rng, -7, 7), uniform(rng, -7, 7), rng() / n]);
    }
    return {
        type: "snapshot",
        v: 1,
        tick: record.tick,
        t: record.t,
        record,
        particles,
        metrics: {
            ticks: record.tick + 1, tracking_ratio: rng(), episodes: 1,
            episodes_restored: 1, failure_time: null,
        },
        paused: false,
        speed: 1,
        terminal: false,
    };
}
