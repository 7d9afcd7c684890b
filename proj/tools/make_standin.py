#!/usr/bin/env python3
"""Writes data/cloud_aerosol_standin.csv: 200 synthetic steps with the column
layout of the cloud-aerosol table (COD, AOD and six meteorological proxies).

Values are simulated, not observed. A shared AR(1) driver confounds AOD and COD
and shows up in every proxy at a plausible physical scale.
"""
import random
import sys
from pathlib import Path

N = 200


def main(path: Path) -> None:
    rng = random.Random(20240517)
    z, aod, cod = 0.1, 0.15, 8.0
    rows = []
    for t in range(N):
        z = 0.85 * z + rng.gauss(0.0, 0.5)
        aod = max(0.01, 0.6 * aod + 0.06 + 0.03 * z + rng.gauss(0.0, 0.02))
        cod = 0.3 * cod + 5.0 + 1.2 * z + 6.0 * aod + rng.gauss(0.0, 0.8)
        sst = 291.0 + 0.8 * z + rng.gauss(0.0, 0.3)
        eis = 4.0 + 0.9 * z + rng.gauss(0.0, 0.5)
        w500 = -0.02 + 0.01 * z + rng.gauss(0.0, 0.01)
        rh = [min(99.0, max(5.0, base + 6.0 * z + rng.gauss(0.0, 4.0)))
              for base in (35.0, 60.0, 75.0)]
        rows.append([t, cod, aod, sst, eis, w500] + rh)
    with path.open("w") as f:
        f.write("t,COD,AOD,SST,EIS,w500,RH700,RH850,RH900\n")
        for r in rows:
            f.write(",".join([str(r[0])] + [f"{v:.6g}" for v in r[1:]]) + "\n")


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "cloud_aerosol_standin.csv"
    main(out)
