#!/usr/bin/env python3
"""Regenerate the stored CLI parity fixtures.

Each case holds the input clouds plus the JSON reports the pointfreq CLI
produced for them; the binding tests replay the same inputs through the
bindings and compare against these files.

Run from the bindings directory: python3 scripts/make_fixtures.py
"""

import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
CASES = 10
UP_N = 96
ORI_N = 24
HF_M = 32


def save_xyz(points, path):
    path.write_text(
        "".join(f"{x!r} {y!r} {z!r}\n" for x, y, z in points.tolist())
    )


def run(args):
    subprocess.run(["pointfreq", *args], check=True, capture_output=True)


def main():
    if FIXTURES.exists():
        shutil.rmtree(FIXTURES)
    FIXTURES.mkdir(parents=True)

    for case in range(CASES):
        rng = np.random.default_rng(9000 + case)
        base = FIXTURES / f"case_{case:02d}"
        base.mkdir()

        def sphere(n):
            v = rng.normal(size=(n, 3))
            return v / np.linalg.norm(v, axis=1, keepdims=True)

        ori = sphere(ORI_N)
        up = sphere(UP_N) + rng.normal(scale=0.02, size=(UP_N, 3))
        gt = sphere(UP_N)
        save_xyz(up, base / "up.xyz")
        save_xyz(gt, base / "gt.xyz")
        save_xyz(ori, base / "ori.xyz")

        run([
            "metrics", "--up", str(base / "up.xyz"), "--gt", str(base / "gt.xyz"),
            "--hf-m", str(HF_M), "--json", str(base / "metrics.json"),
        ])
        run([
            "losses", "--up", str(base / "up.xyz"), "--gt", str(base / "gt.xyz"),
            "--ori", str(base / "ori.xyz"), "--json", str(base / "losses.json"),
        ])
        run([
            "hf", "extract", "--in", str(base / "up.xyz"), "--m", str(HF_M),
            "--out", str(base / "hf.xyz"), "--json", str(base / "hf.json"),
        ])
        # strip the volatile manifest fields so the fixtures are stable
        for name in ("metrics.json", "losses.json", "hf.json"):
            payload = json.loads((base / name).read_text())
            payload.pop("manifest", None)
            (base / name).write_text(json.dumps(payload, indent=2, sort_keys=True))
        (base / "hf.xyz.manifest.json").unlink(missing_ok=True)
        print(f"case_{case:02d} done")


if __name__ == "__main__":
    sys.exit(main())
