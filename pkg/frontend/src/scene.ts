// Scene construction: snapshot -> typed draw list. Pure data in, data out,
// so visibility styling is testable without a canvas; render.ts paints it.

import {
    FovParams,
    SensorPose,
    Segment,
    castRay,
    effectiveFovContains,
    fovContains,
} from "./geometry.js";
import { SnapshotMessage, TraceRecord } from "./protocol.js";

export type Visibility = "visible" | "shadow" | "outside";

export interface EntityItem {
    kind: "target" | "human" | "detection" | "estimate";
    id: string;
    x: number;
    y: number;
    visibility: Visibility;
    present?: boolean;
    carried?: boolean;
}

export interface ParticleItem {
    x: number;
    y: number;
    opacity: number; // weight-mapped; zero-weight particles are invisible
}

export interface SceneGraph {
    bounds: [number, number, number, number];
    fovPolygon: [number, number][];     // visible region (shadows carved out)
    sectorPolygon: [number, number][];  // raw sector outline
    walls: { id: string; a: [number, number]; b: [number, number] }[];
    robot: { x: number; y: number; heading: number; view: number };
    entities: EntityItem[];
    particles: ParticleItem[];
    beliefBars: { label: string; value: number }[];
    hud: { action: string; phase: string; tick: number; t: number;
           trackingRatio: number; episodes: string; failureTime: number | null;
           paused: boolean; terminal: boolean };
}

export const DEFAULT_FOV: FovParams = { alpha: Math.PI / 3, radius: 4.0 };
export const WORLD_BOUNDS: [number, number, number, number] = [-10, -10, 10, 10];

const BELIEF_LABELS = ["visible", "occluded", "disappear", "lost"];
const FOV_RAYS = 96;

export function classify(
    q: SensorPose, f: FovParams, p: [number, number], occluders: Segment[],
): Visibility {
    if (!fovContains(q, f, p)) return "outside";
    return effectiveFovContains(q, f, p, occluders) ? "visible" : "shadow";
}

function sensorPose(record: TraceRecord): SensorPose {
    const [x, y, heading, pan] = record.robot;
    return { x, y, heading, pan };
}

function wallSegments(record: TraceRecord): Segment[] {
    return record.occluders.map((o) => ({ a: o.a, b: o.b }));
}

function fovOutline(q: SensorPose, f: FovParams, occluders: Segment[],
                    carveShadows: boolean): [number, number][] {
    const view = q.heading + q.pan;
    const pts: [number, number][] = [[q.x, q.y]];
    for (let i = 0; i <= FOV_RAYS; i++) {
        const phi = view - f.alpha / 2 + (f.alpha * i) / FOV_RAYS;
        const r = carveShadows ? castRay(q, phi, f.radius, occluders) : f.radius;
        pts.push([q.x + r * Math.cos(phi), q.y + r * Math.sin(phi)]);
    }
    return pts;
}

export function buildScene(snapshot: SnapshotMessage,
                           fov: FovParams = DEFAULT_FOV,
                           bounds = WORLD_BOUNDS): SceneGraph {
    const record = snapshot.record;
    const q = sensorPose(record);
    const walls = wallSegments(record);

    const entities: EntityItem[] = [];
    if (record.target.present) {
        entities.push({
            kind: "target",
            id: "target",
            x: record.target.p[0],
            y: record.target.p[1],
            visibility: classify(q, fov, record.target.p, walls),
            present: true,
            carried: record.target.carrier !== null,
        });
    }
    for (const h of record.humans) {
        entities.push({
            kind: "human",
            id: h.id,
            x: h.p[0],
            y: h.p[1],
            visibility: classify(q, fov, h.p, walls),
        });
    }
    if (record.z !== null) {
        entities.push({
            kind: "detection", id: "z", x: record.z[0], y: record.z[1],
            visibility: classify(q, fov, record.z, walls),
        });
    }
    entities.push({
        kind: "estimate", id: "estimate",
        x: record.estimate[0], y: record.estimate[1],
        visibility: classify(q, fov, record.estimate, walls),
    });

    let maxW = 0;
    for (const [, , w] of snapshot.particles) maxW = Math.max(maxW, w);
    const particles: ParticleItem[] = snapshot.particles.map(([x, y, w]) => ({
        x, y, opacity: maxW > 0 ? w / maxW : 0,
    }));

    const m = snapshot.metrics;
    return {
        bounds,
        fovPolygon: fovOutline(q, fov, walls, true),
        sectorPolygon: fovOutline(q, fov, walls, false),
        walls: record.occluders.map((o) => ({ id: o.id, a: o.a, b: o.b })),
        robot: { x: q.x, y: q.y, heading: q.heading, view: q.heading + q.pan },
        entities,
        particles,
        beliefBars: record.belief.map((value, i) => ({
            label: BELIEF_LABELS[i], value,
        })),
        hud: {
            action: record.action,
            phase: record.phase,
            tick: snapshot.tick,
            t: snapshot.t,
            trackingRatio: m.tracking_ratio,
            episodes: `${m.episodes_restored}/${m.episodes}`,
            failureTime: m.failure_time,
            paused: snapshot.paused,
            terminal: snapshot.terminal,
        },
    };
}
