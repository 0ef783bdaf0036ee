"""
Kaggle laptop ratings
=====================

Runs the full report on the public Flipkart laptop table ("Laptop data",
Kaggle 2022). Download the CSV to ``demos/data/laptops.csv`` first, or pass
its path as the first argument. The default settings (population 100,
50 generations, five model kinds) take a while on one core.

    python demos/04_laptops.py [path/to/laptops.csv]
"""

import dataclasses
import json
import sys
from pathlib import Path

from attrib_forge import pipeline
from attrib_forge.config import load_config

here = Path(__file__).resolve().parent
cfg = load_config(here / "laptops.cfg", out=str(here / "out_laptops"))
if len(sys.argv) > 1:
    cfg = dataclasses.replace(cfg, input=str(Path(sys.argv[1]).resolve()))
if not Path(cfg.input).is_file():
    sys.exit(f"laptop CSV not found at {cfg.input}")

report = pipeline.cmd_report(cfg)
print(json.dumps(report["preprocessing"], indent=2))
for sub in report["subsets"]:
    print(f"MAE {sub['mae']:.3f}  {sub['features']}")
for row in report["comparison"]:
    print(f"{row['model']:<8} standalone MAE {row['standalone']['mae']:.3f}"
          f"  wrapper MAE {row['wrapper']['mae']:.3f}")
