"""Regenerate the bundled 30-bus demo case and its hourly profiles.

    python scripts/make_demo.py [--out src/hybridgrid/data]

Deterministic: the RNG seed is fixed, so reruns produce identical files.
"""
import argparse
import math
from pathlib import Path

import numpy as np

from hybridgrid.grid_model import (NEW, NEW_LINE, RES, TRANSFORMER, Branch, Bus, Generator, HvdcLink,
                                   dumps_canonical, make_network, save_case)

SEED = 20170
ROWS, COLS = 5, 6
X_PER_KM = 1.7e-4     # p.u./km on 100 MVA, 380 kV
R_PER_KM = 2.1e-5
HOURS = 8760


def bus_id(row, col):
    return row * COLS + col + 1


def build(rng):
    buses = []
    n_existing = ROWS * COLS - 1          # the last grid position is a new bus
    load_rows = [0.15, 0.35, 0.6, 1.0, 1.25]
    for row in range(ROWS):
        for col in range(COLS):
            bid = bus_id(row, col)
            if bid > n_existing:
                continue
            load = round(float(load_rows[row] * rng.uniform(250, 450)), 1)
            buses.append(Bus(bid, f"B{row}{col}", load, "load"))
    new_bus = ROWS * COLS
    buses.append(Bus(new_bus, "NEWGEN", 0.0, None))

    branches = []
    bid = 1
    pos = [(r, c) for r in range(ROWS) for c in range(COLS)]
    trafo_pairs = {(bus_id(1, 0), bus_id(1, 1)), (bus_id(2, 3), bus_id(2, 4)), (bus_id(3, 1), bus_id(3, 2)),
                   (bus_id(1, 4), bus_id(2, 4)), (bus_id(3, 5), bus_id(4, 5)), (bus_id(0, 2), bus_id(1, 2))}
    for r, c in pos:
        here = bus_id(r, c)
        for dr, dc in ((0, 1), (1, 0)):
            rr, cc = r + dr, c + dc
            if rr >= ROWS or cc >= COLS:
                continue
            there = bus_id(rr, cc)
            if new_bus in (here, there):
                continue
            if rng.uniform() < 0.12 and (here, there) not in trafo_pairs:
                continue
            if (here, there) in trafo_pairs:
                x = 0.012
                branches.append(Branch(bid, here, there, r=0.0004, b=round(1 / x, 4), rating=1600.0,
                                       kind=TRANSFORMER))
            else:
                km = round(float(rng.uniform(45, 140)), 1)
                branches.append(Branch(bid, here, there, r=round(R_PER_KM * km, 7),
                                       b=round(1 / (X_PER_KM * km), 4),
                                       rating=float(rng.choice([1700.0, 2000.0, 2400.0])), length_km=km))
            bid += 1
    # one existing branch with negligible resistance (preprocessing floors it)
    branches.append(Branch(bid, bus_id(2, 0), bus_id(2, 1), r=2e-7, b=round(1 / (X_PER_KM * 8.0), 4),
                           rating=1500.0, length_km=8.0))
    bid += 1
    # expansion plan: a radial connection for the new bus, reinforcements, a parallel circuit
    branches.append(Branch(bid, bus_id(4, 4), new_bus, r=round(R_PER_KM * 60, 7), b=round(1 / (X_PER_KM * 60), 4),
                           rating=2000.0, length_km=60.0, status=NEW, essential=True))
    bid += 1
    for a, b_, km in ((bus_id(0, 0), bus_id(2, 2), 210.0), (bus_id(1, 3), bus_id(3, 4), 230.0),
                      (bus_id(0, 5), bus_id(2, 5), 190.0), (bus_id(2, 1), bus_id(4, 1), 205.0)):
        branches.append(Branch(bid, a, b_, r=round(R_PER_KM * km, 7), b=round(1 / (X_PER_KM * km), 4),
                               rating=2000.0, length_km=km, status=NEW))
        bid += 1
    par = branches[2]
    branches.append(Branch(bid, par.from_bus, par.to_bus, r=par.r, b=par.b, rating=par.rating,
                           length_km=par.length_km))
    bid += 1

    gens = []
    gid = 1
    # north: wind and lignite; middle: hard coal; south: gas
    for col in range(COLS):
        gens.append(Generator(gid, bus_id(0, col), 0.0, 900.0, ((0.0, 0.0), (900.0, 900.0)), RES, "wind"))
        gid += 1
    for col in (0, 2, 4):
        gens.append(Generator(gid, bus_id(0, col), 0.0, 700.0,
                              ((0.0, 0.0), (400.0, 400 * 22.0), (700.0, 400 * 22.0 + 300 * 27.0))))
        gid += 1
    for col in (1, 3, 5):
        gens.append(Generator(gid, bus_id(1, col), 0.0, 600.0,
                              ((0.0, 0.0), (300.0, 300 * 38.0), (600.0, 300 * 38.0 + 300 * 44.0))))
        gid += 1
    for col in (0, 1, 3, 4):
        gens.append(Generator(gid, bus_id(2, col), 0.0, 250.0, ((0.0, 0.0), (250.0, 250 * 0.5)), RES, "solar"))
        gid += 1
    for row, col, cap in ((3, 0, 700.0), (3, 3, 700.0), (4, 2, 800.0), (4, 5, 800.0), (4, 0, 500.0)):
        mc = 70.0 + 4.0 * col
        gens.append(Generator(gid, bus_id(row, col), 0.0, cap,
                              ((0.0, 0.0), (cap / 2, cap / 2 * mc), (cap, cap / 2 * mc + cap / 2 * (mc + 25.0)))))
        gid += 1
    # two units sharing a bus (aggregated during preprocessing)
    gens.append(Generator(gid, bus_id(4, 2), 0.0, 300.0, ((0.0, 0.0), (300.0, 300 * 80.0))))
    gid += 1
    gens.append(Generator(gid, new_bus, 0.0, 600.0, ((0.0, 0.0), (600.0, 600.0)), RES, "wind"))
    gid += 1

    links = [HvdcLink(1, bus_id(0, 1), bus_id(4, 3), p_max=2000.0, q_max=1000.0, loss_k=0.003, loss_d=1.6,
                      length_km=620.0, converter_id="M9", origin=NEW_LINE, cable=True)]
    return buses, branches, gens, links


def profiles(rng):
    h = np.arange(HOURS)
    day = 2 * math.pi * h / 24
    season = 2 * math.pi * (h - 400) / HOURS
    load = 0.70 + 0.12 * np.cos(season) + 0.10 * np.sin(day - 2.0) + 0.02 * rng.standard_normal(HOURS)
    weekly = np.where((h // 24) % 7 >= 5, -0.06, 0.0)
    load = load + weekly
    load = load / load.max()
    wind = np.clip(0.35 + 0.15 * np.cos(season) + 0.25 * np.sin(2 * math.pi * h / 97.0)
                   + 0.08 * rng.standard_normal(HOURS), 0.0, 1.0)
    solar = np.clip(np.sin(day - math.pi / 2) * (0.6 - 0.25 * np.cos(season)), 0.0, 1.0)
    return {"load": np.round(load, 4).tolist(), "solar": np.round(solar, 4).tolist(),
            "wind": np.round(wind, 4).tolist()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/hybridgrid/data"))
    args = ap.parse_args()
    rng = np.random.default_rng(SEED)
    buses, branches, gens, links = build(rng)
    prof = profiles(rng)
    net = make_network(buses, branches, gens, links, base_mva=100.0)
    out = Path(args.out)
    save_case(net, out / "demo_case30.json")
    (out / "demo_profiles.json").write_text(dumps_canonical(prof) + "\n")
    print(f"wrote {len(net.buses)} buses, {len(net.branches)} branches, {len(net.generators)} generators")


if __name__ == "__main__":
    main()
