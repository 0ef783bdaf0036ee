"""Synthetic product tables for demos and tests."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

BRANDS = ("ASUS", "DELL", "HP", "Lenovo", "APPLE", "Avita")
_BRAND_EFFECT = {"ASUS": 0.05, "DELL": -0.1, "HP": 0.0, "Lenovo": -0.15, "APPLE": 0.4, "Avita": -0.35}


def synthetic_products(n: int = 300, seed: int = 0) -> tuple[list[str], list[list[str]]]:
    """Laptop-like rows whose star rating depends on brand, SSD size and price.

    ``processor_gnrtn`` is mostly empty and ``display_size`` has a few gaps,
    so the imputation and column-drop paths are exercised.
    """
    rng = np.random.default_rng(seed)
    header = ["brand", "ram_gb", "ssd", "weight", "display_size", "processor_gnrtn",
              "latest_price", "ratings", "star_rating", "reviews"]
    rows = []
    for _ in range(n):
        brand = BRANDS[rng.integers(len(BRANDS))]
        ram = ("4 GB", "8 GB", "16 GB")[rng.integers(3)]
        ssd = int((0, 256, 512, 1024)[rng.integers(4)])
        weight = ("Casual", "Gaming", "ThinNlight")[rng.integers(3)]
        display = "" if rng.random() < 0.1 else f"{(13.3, 14.0, 15.6)[rng.integers(3)]}"
        gen = "" if rng.random() < 0.7 else f"{rng.integers(8, 12)}th"
        price = int(20000 + rng.integers(0, 200) * 1000)
        star = 3.9 + _BRAND_EFFECT[brand] + 0.0004 * ssd - 0.000002 * price + rng.normal(0, 0.1)
        star = float(np.clip(star, 1.0, 5.0))
        count = int(rng.integers(0, 400))
        rows.append([brand, ram, str(ssd), weight, display, gen, str(price), str(count),
                     f"{star:.1f}", str(int(count * 0.1))])
    return header, rows


def write_csv(path: str | Path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path
