"""Writes the bundled example dataset: 21 synthetic county values on the New
Jersey county adjacency graph.

The values are simulated from the CAR model itself. Magnitudes follow the
scaling the engine expects for home values (z in units of $10^4), movers and
permits in hundreds, median household income in thousands. Nothing here is
observed data.

    python tools/make_example_data.py [out_dir]
"""

import csv
import pathlib
import sys

import numpy as np

NEIGHBORS = {
    "Atlantic": ["Burlington", "Camden", "Cape May", "Cumberland", "Gloucester", "Ocean"],
    "Bergen": ["Essex", "Hudson", "Passaic"],
    "Burlington": ["Atlantic", "Camden", "Mercer", "Monmouth", "Ocean"],
    "Camden": ["Atlantic", "Burlington", "Gloucester"],
    "Cape May": ["Atlantic", "Cumberland"],
    "Cumberland": ["Atlantic", "Cape May", "Gloucester", "Salem"],
    "Essex": ["Bergen", "Hudson", "Morris", "Passaic", "Union"],
    "Gloucester": ["Atlantic", "Camden", "Cumberland", "Salem"],
    "Hudson": ["Bergen", "Essex"],
    "Hunterdon": ["Mercer", "Morris", "Somerset", "Warren"],
    "Mercer": ["Burlington", "Hunterdon", "Middlesex", "Monmouth", "Somerset"],
    "Middlesex": ["Mercer", "Monmouth", "Somerset", "Union"],
    "Monmouth": ["Burlington", "Mercer", "Middlesex", "Ocean"],
    "Morris": ["Essex", "Hunterdon", "Passaic", "Somerset", "Sussex", "Union", "Warren"],
    "Ocean": ["Atlantic", "Burlington", "Monmouth"],
    "Passaic": ["Bergen", "Essex", "Morris", "Sussex"],
    "Salem": ["Cumberland", "Gloucester"],
    "Somerset": ["Hunterdon", "Mercer", "Middlesex", "Morris", "Union"],
    "Sussex": ["Morris", "Passaic", "Warren"],
    "Union": ["Essex", "Middlesex", "Morris", "Somerset"],
    "Warren": ["Hunterdon", "Morris", "Sussex"],
}

# thousands of dollars; rough county-level spread, not survey figures
INCOME = {
    "Atlantic": 65, "Bergen": 108, "Burlington": 92, "Camden": 74, "Cape May": 72,
    "Cumberland": 55, "Essex": 66, "Gloucester": 90, "Hudson": 77, "Hunterdon": 126,
    "Mercer": 85, "Middlesex": 97, "Monmouth": 110, "Morris": 130, "Ocean": 78,
    "Passaic": 72, "Salem": 68, "Somerset": 131, "Sussex": 100, "Union": 86, "Warren": 85,
}

BETA = np.array([14.0, 0.05, 0.02, 0.18])  # intercept, permits, movers, income
RHO_FRACTION = 0.6  # of the upper admissible bound
TAU = 8.0
SEED = 20180401


def main(out_dir: pathlib.Path) -> None:
    names = sorted(NEIGHBORS)
    for a, nbrs in NEIGHBORS.items():
        for b in nbrs:
            assert a in NEIGHBORS[b], (a, b)
    n = len(names)
    index = {name: i for i, name in enumerate(names)}
    c = np.zeros((n, n))
    for a, nbrs in NEIGHBORS.items():
        for b in nbrs:
            c[index[a], index[b]] = 1.0
    rho = RHO_FRACTION / np.linalg.eigvalsh(c).max()

    rng = np.random.default_rng(SEED)
    income = np.array([INCOME[name] for name in names], dtype=float)
    permits = np.round(rng.uniform(2.0, 30.0, n), 2)
    movers = np.round(rng.uniform(20.0, 120.0, n), 2)
    x = np.column_stack([np.ones(n), permits, movers, income])
    cov = TAU**2 * np.linalg.inv(np.eye(n) - rho * c)
    z = rng.multivariate_normal(x @ BETA, cov)

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "nj_counties.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["region_id", "z", "permits", "movers", "income"])
        for i, name in enumerate(names):
            w.writerow([name, f"{z[i] * 1e4:.0f}", f"{permits[i] * 100:.0f}", f"{movers[i] * 100:.0f}",
                        f"{income[i] * 1000:.0f}"])
    with open(out_dir / "nj_adjacency.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["region_a", "region_b"])
        for a in names:
            for b in sorted(NEIGHBORS[a]):
                if a < b:
                    w.writerow([a, b])


if __name__ == "__main__":
    main(pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent / "data")
