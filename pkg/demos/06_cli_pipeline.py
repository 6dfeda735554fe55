"""Drive the full CLI pipeline: simulate -> fit -> select -> scan -> diagnose.

Copies the shipped configs from demos/pipeline/ into a scratch directory
and runs every subcommand through the console entry point, leaving all
artifacts under ./pipeline_out for inspection.
"""

import shutil
import sys
from pathlib import Path

from netdisturb.cli import main

HERE = Path(__file__).parent
workspace = Path("pipeline_out")
workspace.mkdir(exist_ok=True)
for name in ("sim.cfg", "run.cfg"):
    shutil.copy(HERE / "pipeline" / name, workspace / name)

steps = [
    ["simulate", "--spec", str(workspace / "sim.cfg"), "--out", str(workspace / "data")],
    ["fit", "--config", str(workspace / "run.cfg"), "--out", str(workspace / "out")],
    ["select", "--config", str(workspace / "run.cfg"), "--out", str(workspace / "out")],
    ["scan-cutoff", "--config", str(workspace / "run.cfg"), "--out", str(workspace / "out")],
    ["diagnose", "--config", str(workspace / "run.cfg"), "--out", str(workspace / "out")],
]
for argv in steps:
    print(f"\n$ netdisturb {' '.join(argv)}")
    code = main(argv)
    if code != 0:
        sys.exit(code)

print("\nartifacts:")
for path in sorted((workspace / "out").rglob("*")):
    if path.is_file():
        print(" ", path)
