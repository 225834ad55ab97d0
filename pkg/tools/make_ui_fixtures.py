#!/usr/bin/env python3
"""Generate the cross-language visibility fixture for the frontend tests.

Random sensor poses, walls and probe points are classified with the
simulator's effective-FOV test; the frontend asserts its own TypeScript
implementation gives identical answers on every case.

Usage: python3 tools/make_ui_fixtures.py
"""
import json
import math
from pathlib import Path

import numpy as np

from tracksim.geometry import (
    FovParams,
    Occluder,
    RobotConfig,
    TargetState,
    WorldState,
    effective_fov_contains,
    fov_contains,
)

OUT = Path(__file__).resolve().parents[1] / "frontend" / "tests" / "fixtures" / "visibility.json"


def main() -> None:
    rng = np.random.default_rng(20240601)
    cases = []
    for _ in range(100):
        q = RobotConfig(
            float(rng.uniform(-4, 4)), float(rng.uniform(-4, 4)),
            float(rng.uniform(-math.pi, math.pi)), float(rng.uniform(-1.5, 1.5)),
        )
        fov = FovParams(alpha=float(rng.uniform(0.4, 2.2)),
                        radius=float(rng.uniform(2.0, 6.0)))
        walls = [
            {
                "a": [float(v) for v in rng.uniform(-6, 6, 2)],
                "b": [float(v) for v in rng.uniform(-6, 6, 2)],
            }
            for _ in range(int(rng.integers(0, 4)))
        ]
        world = WorldState(
            robot=q, target=TargetState((0.0, 0.0)),
            occluders=tuple(Occluder(f"w{i}", tuple(w["a"]), tuple(w["b"]))
                            for i, w in enumerate(walls)),
        )
        points = []
        for _ in range(12):
            p = rng.uniform(-7, 7, 2)
            in_sector = fov_contains(q, fov, p)
            visible = effective_fov_contains(world, q, fov, p)
            points.append({
                "p": [float(p[0]), float(p[1])],
                "in_sector": bool(in_sector),
                "visible": bool(visible),
            })
        cases.append({
            "robot": [q.x, q.y, q.heading, q.pan],
            "fov": {"alpha": fov.alpha, "radius": fov.radius},
            "walls": walls,
            "points": points,
        })
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"cases": cases}, indent=1))
    print(f"wrote {len(cases)} cases to {OUT}")


if __name__ == "__main__":
    main()
