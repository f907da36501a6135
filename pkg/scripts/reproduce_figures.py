#!/usr/bin/env python3
"""Regenerate all figure-style data files from the checked-in configs.

Writes one CSV per figure into the output directory: simulated bond and
short-rate paths for the four driver families, and the two call-price
surfaces. Rerunning with the same seed reproduces the files byte for
byte.

Usage:
    python scripts/reproduce_figures.py --outdir out/figures --seed 42
"""

import argparse
import pathlib
import sys

from levyrates.cli import main as cli_main

CONFIG_DIR = pathlib.Path(__file__).resolve().parent.parent / "configs"

JOBS = [
    ("fig1_gbm.json", "simulate", "fig1_gbm_path.csv"),
    ("fig2_jd.json", "simulate", "fig2_jd_path.csv"),
    ("fig3_gamma.json", "simulate", "fig3_gamma_path.csv"),
    ("fig4_vg.json", "simulate", "fig4_vg_path.csv"),
    ("fig5_jd_surface.json", "surface", "fig5_jd_surface.csv"),
    ("fig5_vg_surface.json", "surface", "fig5_vg_surface.csv"),
]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="out/figures")
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for config, command, filename in JOBS:
        target = outdir / filename
        rc = cli_main(
            [
                command,
                "--config",
                str(CONFIG_DIR / config),
                "--seed",
                str(args.seed),
                "--out",
                str(target),
            ]
        )
        if rc != 0:
            print(f"{command} on {config} failed with exit code {rc}", file=sys.stderr)
            return rc
        print(f"wrote {target}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
