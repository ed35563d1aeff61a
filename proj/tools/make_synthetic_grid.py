#!/usr/bin/env python3
"""Write scenarios/synthetic_grid.json.

The transit layout is an approximation: three east-west lines (y = -6, 0, 6,
stations every km from x = -9 to 9) and four north-south lines
(x = -6, -2, 2, 6, stations every 2 km from y = -10 to 10). Crossings are
shared, which gives 89 stations.

beta_tbar is the mean vehicle tour length (minutes) of the beta = 0,
transit-off run at 100 requests/h with these settings.
"""
import json
import pathlib
import sys

stations = []
index = {}


def station(x, y):
    key = (x, y)
    if key not in index:
        index[key] = len(stations)
        stations.append([x, y])
    return index[key]


lines = []
for y in (-6, 0, 6):
    lines.append({"stations": [station(x, y) for x in range(-9, 10)]})
for x in (-6, -2, 2, 6):
    lines.append({"stations": [station(x, y) for y in range(-10, 11, 2)]})
assert len(stations) == 89

scenario = {
    "description": "Synthetic 20x20 km grid, 16 zones, depot start. Transit layout is an "
    "approximation (3 east-west + 4 north-south lines, 89 stations); parallel lines "
    "do not connect to each other.",
    "network": {
        "area": [-10, -10, 10, 10],
        "zones": {"grid": [4, 4]},
        "speeds": {"vehicle": 36, "walk": 5, "train": 80},
        "transit": {"enabled": True, "headway": 5, "stations": stations, "lines": lines},
    },
    "demand": {"rate_per_hour": 100, "horizon": 120, "seed": 1},
    "fleet": {"size": 40, "capacity": 4, "placement": "depot", "depot": [0, 0]},
    "dispatch": {"gamma": 0.5, "beta_k": 0, "beta_tbar": 73.6, "k": 4, "walk_limit": 30},
    "relocation": {"policy": "nonmyopic", "interval": 10, "warmup": 10, "theta": 0.1,
                   "eta": 0.95, "b": 0, "node_limit": 300},
    "estimation": {"adaptive_mu": True, "dynamic_centroid": True, "mu0": "auto"},
    "simulation": {"switching": True},
}

out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else
                   pathlib.Path(__file__).resolve().parent.parent / "scenarios" / "synthetic_grid.json")
out.write_text(json.dumps(scenario, indent=2) + "\n")
