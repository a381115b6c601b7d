#!/usr/bin/env python3
"""Writes the synthetic clustered-object fixture used by the tests.

Ten 600x800 images, each with a few tight clusters of small objects on a
lattice (no two boxes overlap). Image 10 also holds one bus wider than a
cell of a 3x4 grid, placed away from the clusters.
"""

import argparse
import json
import random

HEIGHT, WIDTH = 600, 800
CATEGORIES = [
    {"id": 1, "name": "car"},
    {"id": 2, "name": "pedestrian"},
    {"id": 3, "name": "bus"},
]
BUS = [300.0, 420.0, 250.0, 120.0]


def overlaps(a, b, gap=0.0):
    return not (a[0] + a[2] + gap <= b[0] or b[0] + b[2] + gap <= a[0] or
                a[1] + a[3] + gap <= b[1] or b[1] + b[3] + gap <= a[1])


def cluster(rng, cx, cy):
    boxes = []
    rows, cols = rng.randint(3, 4), rng.randint(3, 5)
    pitch = 20.0
    for r in range(rows):
        for c in range(cols):
            if rng.random() < 0.15:
                continue
            if rng.random() < 0.7:
                cat, w, h = 1, rng.uniform(11, 15), rng.uniform(11, 15)
            else:
                cat, w, h = 2, rng.uniform(5, 8), rng.uniform(9, 13)
            x = cx + (c - cols / 2) * pitch + rng.uniform(0, pitch - w - 1)
            y = cy + (r - rows / 2) * pitch + rng.uniform(0, pitch - h - 1)
            boxes.append((cat, [round(x, 2), round(y, 2), round(w, 2), round(h, 2)]))
    return boxes


def build(seed):
    rng = random.Random(seed)
    images, annotations = [], []
    for image_id in range(1, 11):
        images.append({"id": image_id, "file_name": f"synthetic_{image_id:02d}.jpg",
                       "width": WIDTH, "height": HEIGHT})
        regions = []
        if image_id == 10:
            annotations.append({"id": len(annotations) + 1, "image_id": image_id,
                                "category_id": 3, "bbox": BUS, "area": BUS[2] * BUS[3],
                                "iscrowd": 0})
            regions.append(BUS)
        wanted, placed = rng.randint(2, 3), 0
        for _ in range(1000):
            if placed == wanted:
                break
            cx, cy = rng.uniform(120, WIDTH - 120), rng.uniform(120, HEIGHT - 120)
            extent = [cx - 100, cy - 100, 200, 200]
            if any(overlaps(extent, r) for r in regions):
                continue
            regions.append(extent)
            placed += 1
            for cat, bbox in cluster(rng, cx, cy):
                annotations.append({"id": len(annotations) + 1, "image_id": image_id,
                                    "category_id": cat, "bbox": bbox,
                                    "area": round(bbox[2] * bbox[3], 4), "iscrowd": 0})
    return {"images": images, "annotations": annotations, "categories": CATEGORIES}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=2020)
    parser.add_argument("--out", required=True)
    args = parser.parse_args()
    with open(args.out, "w") as f:
        json.dump(build(args.seed), f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
