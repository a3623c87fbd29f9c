#!/usr/bin/env python3
"""Generate the small precomputed fixture set under tests/fixtures/golden.

Layout written:
  manifest.json            custom dataset, 8 classes, contiguous folds
  gt/<stem>.png            ground-truth masks (64x64)
  episodes.jsonl           20 episodes, folds 0 and 1
  fss/<episode_id>.png     coarse masks (one deliberately empty)
  sam/<mode>/<id>.png      boosted masks per prompt mode (one deliberately missing)
  sam/<mode>/manifest.json episode_id -> width/height

Run tools/oracle/brute_force_oracle.py afterwards to refresh the golden reports.
"""

import json
import random
import sys
from pathlib import Path

from PIL import Image

SIZE = 64
MODES = ("point", "box", "mixed")


def blank():
    return [[0] * SIZE for _ in range(SIZE)]


def ellipse(cx, cy, rx, ry):
    m = blank()
    for y in range(SIZE):
        for x in range(SIZE):
            if ((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2 <= 1.0:
                m[y][x] = 1
    return m


def rect(x1, y1, x2, y2):
    m = blank()
    for y in range(max(0, y1), min(SIZE, y2 + 1)):
        for x in range(max(0, x1), min(SIZE, x2 + 1)):
            m[y][x] = 1
    return m


def shift(m, dx, dy):
    out = blank()
    for y in range(SIZE):
        for x in range(SIZE):
            sx, sy = x - dx, y - dy
            if 0 <= sx < SIZE and 0 <= sy < SIZE:
                out[y][x] = m[sy][sx]
    return out


def union(a, b):
    return [[a[y][x] | b[y][x] for x in range(SIZE)] for y in range(SIZE)]


def flip_noise(rng, m, n):
    out = [row[:] for row in m]
    for _ in range(n):
        x, y = rng.randrange(SIZE), rng.randrange(SIZE)
        out[y][x] ^= 1
    return out


def erode(m):
    out = blank()
    for y in range(1, SIZE - 1):
        for x in range(1, SIZE - 1):
            if all(m[y + dy][x + dx] for dy in (-1, 0, 1) for dx in (-1, 0, 1)):
                out[y][x] = 1
    return out


def save(path, m):
    path.parent.mkdir(parents=True, exist_ok=True)
    img = Image.new("L", (SIZE, SIZE))
    img.putdata([255 if m[y][x] else 0 for y in range(SIZE) for x in range(SIZE)])
    img.save(path)


def main(root):
    rng = random.Random(20231105)
    root = Path(root)
    entries = []
    gts = {}
    # Folds 0 and 1 of an 8-class contiguous split: classes 1..4.
    for cls in (1, 2, 3, 4):
        for k in range(4):
            stem = f"img_c{cls}_{k}"
            cx, cy = rng.randint(18, 45), rng.randint(18, 45)
            if rng.random() < 0.5:
                gt = ellipse(cx, cy, rng.randint(6, 14), rng.randint(6, 14))
            else:
                gt = rect(cx - rng.randint(5, 12), cy - rng.randint(5, 12),
                          cx + rng.randint(5, 12), cy + rng.randint(5, 12))
            gts[stem] = gt
            save(root / "gt" / f"{stem}.png", gt)
            entries.append({"image_ref": f"images/{stem}.jpg",
                            "gt_mask_ref": f"gt/{stem}.png", "class_id": cls})
    manifest = {"name": "custom", "class_count": 8, "split_scheme": "contiguous",
                "entries": entries}
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    episodes = []
    for index in range(20):
        fold = 0 if index < 10 else 1
        cls = rng.choice((1, 2) if fold == 0 else (3, 4))
        pool = [e for e in entries if e["class_id"] == cls]
        query = rng.choice(pool)
        support = rng.choice([e for e in pool if e is not query])
        stem = Path(query["image_ref"]).stem
        eid = f"gold-f{fold}-c{cls:02d}-{stem}-{index:04d}"
        episodes.append({"id": eid, "fold": fold, "class_id": cls, "shots": 1,
                         "query": {"image_ref": query["image_ref"],
                                   "gt_mask_ref": query["gt_mask_ref"]},
                         "supports": [{"image_ref": support["image_ref"],
                                       "mask_ref": support["gt_mask_ref"]}],
                         "fss_mask_ref": eid + ".png"})
    with open(root / "episodes.jsonl", "w") as f:
        for e in episodes:
            f.write(json.dumps(e, separators=(",", ":")) + "\n")

    for index, e in enumerate(episodes):
        gt = gts[Path(e["query"]["image_ref"]).stem]
        eid = e["id"]
        if index == 3:
            fss = blank()  # coarse model found nothing
        elif index % 7 == 5:
            fss = ellipse(rng.randint(8, 56), rng.randint(8, 56), 6, 6)  # wrong location
        else:
            fss = flip_noise(rng, shift(gt, rng.randint(-1, 1), rng.randint(-1, 1)), 6)
        save(root / "fss" / f"{eid}.png", fss)

        for mode in MODES:
            if index == 8 and mode == "box":
                continue  # missing precomputed mask -> fallback on error
            kind = rng.randrange(5)
            if kind == 0:
                sam = gt
            elif kind == 1:
                sam = flip_noise(rng, gt, 10)
            elif kind == 2:
                sam = erode(gt)
            elif kind == 3:
                sam = union(gt, rect(0, 0, rng.randint(10, 30), rng.randint(10, 30)))
            else:
                sam = ellipse(rng.randint(8, 56), rng.randint(8, 56), 8, 5)
            save(root / "sam" / mode / f"{eid}.png", sam)

    for mode in MODES:
        shapes = {e["id"]: {"width": SIZE, "height": SIZE} for e in episodes}
        (root / "sam" / mode / "manifest.json").write_text(json.dumps(shapes, indent=2) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/golden")
