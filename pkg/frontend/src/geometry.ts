// Visibility math mirroring the simulator: sector membership and
// line-of-sight occlusion. Used to style entities (visible / in shadow /
// out of view) from snapshot data alone.

export type Vec2 = [number, number];

export interface FovParams {
    alpha: number;
    radius: number;
}

export interface SensorPose {
    x: number;
    y: number;
    heading: number;
    pan: number;
}

export interface Segment {
    a: Vec2;
    b: Vec2;
}

export function wrapAngle(a: number): number {
    const tau = 2 * Math.PI;
    let r = a % tau;
    if (r <= -Math.PI) r += tau;
    else if (r > Math.PI) r -= tau;
    return r;
}

export function fovContains(q: SensorPose, f: FovParams, p: Vec2): boolean {
    const dx = p[0] - q.x;
    const dy = p[1] - q.y;
    const r = Math.hypot(dx, dy);
    if (r > f.radius) return false;
    if (r === 0) return true;
    const bearing = Math.atan2(dy, dx);
    const view = wrapAngle(q.heading + q.pan);
    return Math.abs(wrapAngle(bearing - view)) <= f.alpha / 2 + 1e-12;
}

function cross(ox: number, oy: number, ax: number, ay: number, bx: number, by: number): number {
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
}

/** Proper crossing of the open segments p0-p1 and q0-q1 (grazing contact
 * does not block, matching the simulator's convention). */
export function segmentsCross(p0: Vec2, p1: Vec2, q0: Vec2, q1: Vec2): boolean {
    const d1 = cross(q0[0], q0[1], q1[0], q1[1], p0[0], p0[1]);
    const d2 = cross(q0[0], q0[1], q1[0], q1[1], p1[0], p1[1]);
    const d3 = cross(p0[0], p0[1], p1[0], p1[1], q0[0], q0[1]);
    const d4 = cross(p0[0], p0[1], p1[0], p1[1], q1[0], q1[1]);
    return d1 * d2 < 0 && d3 * d4 < 0;
}

export function occluded(q: SensorPose, p: Vec2, occluders: Segment[]): boolean {
    const origin: Vec2 = [q.x, q.y];
    for (const occ of occluders) {
        if (segmentsCross(origin, p, occ.a, occ.b)) return true;
    }
    return false;
}

export function effectiveFovContains(
    q: SensorPose, f: FovParams, p: Vec2, occluders: Segment[],
): boolean {
    return fovContains(q, f, p) && !occluded(q, p, occluders);
}

/** Visible range along a bearing: distance to the first blocking wall,
 * capped at the sensor radius. Drives the shadow rendering. */
export function castRay(
    q: SensorPose, bearing: number, maxRange: number, occluders: Segment[],
): number {
    const dx = Math.cos(bearing);
    const dy = Math.sin(bearing);
    let best = maxRange;
    for (const occ of occluders) {
        const vx = occ.b[0] - occ.a[0];
        const vy = occ.b[1] - occ.a[1];
        const denom = dx * vy - dy * vx;
        if (Math.abs(denom) < 1e-15) continue;
        const wx = occ.a[0] - q.x;
        const wy = occ.a[1] - q.y;
        const t = (wx * vy - wy * vx) / denom;
        const u = (wx * dy - wy * dx) / denom;
        if (t > 1e-12 && u >= 0 && u <= 1 && t < best) best = t;
    }
    return best;
}
