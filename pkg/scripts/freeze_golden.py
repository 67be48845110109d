"""Measure the theta / Pf^2 constants and write them to src/hcx/data/golden.json.

Run once after a deliberate change of normalization; the test suite only reads the file.
"""
import json
from pathlib import Path

from hcx.exactcore import BaseRing
from hcx.pfaffian import THETA_FAMILIES, THETA_POINTS, theta_pf_constant


def measure():
    R = BaseRing()
    out = {}
    for m, fams in THETA_FAMILIES.items():
        consts = {name: str(theta_pf_constant(R, f, THETA_POINTS)) for name, f in fams.items()}
        if len(set(consts.values())) != 1:
            raise SystemExit(f"families of rank {m} disagree: {consts}")
        out[f"0|{m}"] = {"constant": next(iter(consts.values())), "families": consts,
                         "points": list(THETA_POINTS)}
    return out


if __name__ == "__main__":
    path = Path(__file__).resolve().parents[1] / "src" / "hcx" / "data" / "golden.json"
    data = {"theta_pf_ratio": measure()}
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(path.read_text())
