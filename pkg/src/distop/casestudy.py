"""Circle / disc / noisy-circle comparison: full degree-1 diagrams versus
averaged persistence images of many small random subsets."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datasets import circle, disc, noisy_circle
from .distributed import compute_distributed, sample_subsets
from .geometry import pairwise_distances, save_matrix, save_point_cloud
from .metrics import average_images, bottleneck, image_config_for, image_l2, persistence_image
from .persistence import rips_persistence

NAMES = ("circle", "disc", "noisy_circle")


@dataclass
class CaseStudy:
    clouds: dict
    diagrams: dict
    images: dict
    bottleneck_table: dict
    image_table: dict
    raw_image_table: dict

    def orderings(self) -> dict:
        b, l2 = self.bottleneck_table, self.image_table
        return {
            "full_diagram_noisy_closer_to_disc": b["noisy_circle"]["disc"] < b["noisy_circle"]["circle"],
            "averaged_image_noisy_closer_to_circle": l2["noisy_circle"]["circle"] < l2["noisy_circle"]["disc"],
        }


def _normalized_l2(a, b):
    # each averaged image on its own colour scale, as it would be plotted
    return float(np.linalg.norm(a.normalized()[0] - b.normalized()[0]))


def _table(items, dist):
    return {a: {b: dist(items[a], items[b]) for b in NAMES} for a in NAMES}


def run_case_study(n: int = 500, k: int = 10, M: int = 1000, seed: int = 0,
                   shape=(20, 20), sigma_fraction: float = 0.05, workers=None) -> CaseStudy:
    clouds = {"circle": circle(n), "disc": disc(n, seed=seed), "noisy_circle": noisy_circle(n, seed=seed)}
    diagrams = {name: rips_persistence(pairwise_distances(c))[0] for name, c in clouds.items()}
    local = {}
    for i, name in enumerate(NAMES):
        C = sample_subsets(n, k, M, seed + 1 + i)
        local[name] = list(compute_distributed(clouds[name], C, "RP", 2, workers).entries.values())
    # one grid for all three so images are comparable
    cfg = image_config_for([d for name in NAMES for d in local[name]], 1, shape, sigma_fraction)
    images = {name: average_images(persistence_image(d, 1, cfg) for d in local[name]) for name in NAMES}
    return CaseStudy(clouds, diagrams, images,
                     _table(diagrams, lambda a, b: bottleneck(a, b, 1)),
                     _table(images, _normalized_l2), _table(images, image_l2))


def write_case_study(cs: CaseStudy, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"clouds": [], "diagrams": [], "images": [], "tables": []}
    for name in NAMES:
        save_point_cloud(cs.clouds[name], out / f"{name}.csv")
        (out / f"{name}_diagram.json").write_text(json.dumps(cs.diagrams[name].to_json(), sort_keys=True))
        save_matrix(cs.images[name].grid, out / f"{name}_image.csv")
        files["clouds"].append(f"{name}.csv")
        files["diagrams"].append(f"{name}_diagram.json")
        files["images"].append(f"{name}_image.csv")
    cfg = cs.images[NAMES[0]].config
    tables = {
        "bottleneck_degree1.json": {"note": "bottleneck distance between full degree-1 Rips diagrams",
                                    "table": cs.bottleneck_table},
        "image_l2.json": {"note": "pixelwise L2 between averaged degree-1 persistence images, each scaled "
                                  "to maximum 1 (a quantitative stand-in for visual comparison); "
                                  "raw_table holds the unscaled L2",
                          "raw_table": cs.raw_image_table,
                          "grid": {"birth_range": list(cfg.birth_range),
                                   "persistence_range": list(cfg.persistence_range),
                                   "shape": list(cfg.shape), "sigma": cfg.sigma},
                          "table": cs.image_table},
    }
    for fname, body in tables.items():
        (out / fname).write_text(json.dumps(body, sort_keys=True, indent=1))
        files["tables"].append(fname)
    manifest = {"files": files, "orderings": cs.orderings()}
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1))
    return manifest
