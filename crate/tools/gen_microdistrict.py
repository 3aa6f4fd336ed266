#!/usr/bin/env python3
"""Generate the bundled micro-district fixture (footprints, DEM, weather).

Deterministic: fixed RNG seed, fixed rounding. Re-run to regenerate
data/microdistrict/* after changing the layout parameters.
"""

import json
import math
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "microdistrict"
LON0, LAT0 = 7.75, 48.58
M_PER_DEG_LON = 111320.0 * math.cos(math.radians(LAT0))
M_PER_DEG_LAT = 110540.0

rng = random.Random(20240115)


def to_lonlat(x, y):
    return (round(LON0 + x / M_PER_DEG_LON, 7), round(LAT0 + y / M_PER_DEG_LAT, 7))


def rect(cx, cy, w, d, angle_deg):
    a = math.radians(angle_deg)
    ca, sa = math.cos(a), math.sin(a)
    pts = [(-w / 2, -d / 2), (w / 2, -d / 2), (w / 2, d / 2), (-w / 2, d / 2)]
    return [(cx + px * ca - py * sa, cy + px * sa + py * ca) for px, py in pts]


def l_shape(cx, cy, w, d, angle_deg):
    a = math.radians(angle_deg)
    ca, sa = math.cos(a), math.sin(a)
    pts = [(0, 0), (w, 0), (w, d * 0.45), (w * 0.45, d * 0.45), (w * 0.45, d), (0, d)]
    pts = [(px - w / 2, py - d / 2) for px, py in pts]
    return [(cx + px * ca - py * sa, cy + px * sa + py * ca) for px, py in pts]


def u_shape(cx, cy, w, d, angle_deg):
    a = math.radians(angle_deg)
    ca, sa = math.cos(a), math.sin(a)
    t = 0.3
    pts = [
        (0, 0), (w, 0), (w, d), (w * (1 - t), d), (w * (1 - t), d * t),
        (w * t, d * t), (w * t, d), (0, d),
    ]
    pts = [(px - w / 2, py - d / 2) for px, py in pts]
    return [(cx + px * ca - py * sa, cy + px * sa + py * ca) for px, py in pts]


def courtyard(cx, cy, w, d):
    outer = rect(cx, cy, w, d, 0.0)
    hole = rect(cx, cy, w * 0.5, d * 0.5, 0.0)
    return outer, hole


features = []
fid = 0


def add(rings_local, props):
    global fid
    coords = []
    for ring in rings_local:
        r = [to_lonlat(x, y) for x, y in ring]
        r.append(r[0])
        coords.append([[lon, lat] for lon, lat in r])
    props = dict(props)
    props.setdefault("id", f"m{fid:04d}")
    features.append(
        {
            "type": "Feature",
            "geometry": {"type": "Polygon", "coordinates": coords},
            "properties": props,
        }
    )
    fid += 1


def height_props():
    kind = rng.random()
    if kind < 0.55:
        return {"height": rng.choice([6, 7.5, 9, 12, 15, 18, 21])}
    if kind < 0.9:
        return {"building:levels": rng.choice([2, 3, 4, 5, 6])}
    # Both attributes present: height wins, the conflict is logged.
    levels = rng.choice([2, 3, 4])
    return {"height": levels * 3 + 1.5, "building:levels": levels}


# Street grid of blocks, ~380 x 280 m; one building per 21 x 19 m slot so
# buildings stay detached except for the deliberate touching row below.
for gy in range(-3, 4):
    for gx in range(-4, 5):
        bx, by = gx * 42.0, gy * 38.0
        for sy in (-1, 1):
            for sx in (-1, 1):
                if rng.random() < 0.18:
                    continue  # empty lot
                cx = bx + sx * 10.5 + rng.uniform(-2, 2)
                cy = by + sy * 9.5 + rng.uniform(-2, 2)
                shape = rng.random()
                ang = rng.choice([0, 0, 0, 15, 30, 45, 90])
                if shape < 0.6:
                    ring = rect(cx, cy, rng.uniform(8, 13), rng.uniform(7, 11), ang)
                    add([ring], height_props())
                elif shape < 0.8:
                    ring = l_shape(cx, cy, rng.uniform(10, 13), rng.uniform(10, 13), ang)
                    add([ring], height_props())
                else:
                    ring = u_shape(cx, cy, rng.uniform(11, 13), rng.uniform(11, 13), ang)
                    add([ring], height_props())

# A few courtyard blocks with holes.
for cx, cy in [(-150, 130), (160, -120), (0, 150)]:
    outer, hole = courtyard(cx, cy, 30, 26)
    add([outer, hole], {"height": 15})

# One row of touching houses (exercises the union path).
for i in range(4):
    ring = rect(-170 + i * 10.0, -140.0, 10.0, 12.0, 0.0)
    add([ring], {"height": 9, "id": f"row{i}"})

# One MultiPolygon feature (two detached halls sharing metadata).
half1 = rect(185, 140, 14, 10, 0.0)
half2 = rect(185, 122, 14, 10, 0.0)


def ring_coords(ring):
    r = [to_lonlat(x, y) for x, y in ring]
    r.append(r[0])
    return [[lon, lat] for lon, lat in r]


features.append(
    {
        "type": "Feature",
        "geometry": {
            "type": "MultiPolygon",
            "coordinates": [[ring_coords(half1)], [ring_coords(half2)]],
        },
        "properties": {"id": "halls", "height": 8},
    }
)

OUT.mkdir(parents=True, exist_ok=True)
doc = {"type": "FeatureCollection", "features": features}
(OUT / "footprints.geojson").write_text(json.dumps(doc, indent=1) + "\n")
print(f"{len(features)} features")

# DEM in local-frame meters: gentle east slope plus a knoll.
ncols, nrows, cell = 46, 36, 20
x0, y0 = -460.0, -360.0
lines = [
    f"ncols {ncols}",
    f"nrows {nrows}",
    f"xllcorner {x0}",
    f"yllcorner {y0}",
    f"cellsize {cell}",
    "NODATA_value -9999",
]
for r in range(nrows):  # north to south
    y = y0 + (nrows - 1 - r + 0.5) * cell
    row = []
    for c in range(ncols):
        x = x0 + (c + 0.5) * cell
        z = 140.0 + 0.006 * x + 2.5 * math.exp(-((x - 60) ** 2 + (y + 50) ** 2) / (2 * 90.0**2))
        row.append(f"{z:.2f}")
    lines.append(" ".join(row))
(OUT / "elevation.asc").write_text("\n".join(lines) + "\n")

# 24 h of winter weather (UTC), sinusoidal temperature and a daylight bell.
rows = ["timestamp,t_out,dni,dhi"]
for h in range(24):
    t_out = 1.0 + 2.5 * math.sin((h - 14) / 24 * 2 * math.pi)
    if 8 <= h <= 16:
        bell = math.sin((h - 8) / 8 * math.pi)
        dni, dhi = 520 * bell, 85 * bell
    else:
        dni, dhi = 0.0, 0.0
    rows.append(f"2024-01-15T{h:02d}:00:00Z,{t_out:.2f},{dni:.1f},{dhi:.1f}")
(OUT / "weather.csv").write_text("\n".join(rows) + "\n")

(OUT / "run.conf").write_text(
    """# Micro-district demo run (paths relative to the repository root).
footprints = data/microdistrict/footprints.geojson
weather = data/microdistrict/weather.csv
elevation = data/microdistrict/elevation.asc
out = out/micro
zoom = 15
lod = 1
sky_az = 36
sky_alt = 6
mask_samples = 16
vf_rays = 20000
workers = 2
partition_case = 0
seed = 42
archetype = old
setpoint_c = 20
"""
)
print("wrote", OUT)
