#!/usr/bin/env python3
"""Standalone per-pixel reference for the evaluation pipeline.

Reads a fixture directory (manifest.json, episodes.jsonl, fss/, sam/<mode>/)
and writes golden reports computed with exact fractions and plain loops. It
shares no code with the C++ implementation.

  brute_force_oracle.py <fixture_dir> [<out_dir>]
"""

import json
import sys
from fractions import Fraction
from pathlib import Path

from PIL import Image

MODES = ("point", "box", "mixed")
SWEEP = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_T = 0.75


def load(path):
    img = Image.open(path)
    if img.mode not in ("L", "1"):
        raise ValueError(f"{path}: not 8-bit grayscale")
    img = img.convert("L")
    w, h = img.size
    px = img.tobytes()
    return w, h, [[1 if px[y * w + x] != 0 else 0 for x in range(w)] for y in range(h)]


def counts(pred, gt):
    fi = fu = bi = bu = 0
    for prow, grow in zip(pred, gt):
        for p, g in zip(prow, grow):
            fi += p and g
            fu += p or g
            bi += (not p) and (not g)
            bu += (not p) or (not g)
    return fi, fu, bi, bu


def ratio(i, u):
    return Fraction(1) if u == 0 else Fraction(i, u)


def is_empty(m):
    return not any(any(row) for row in m)


def stage(per_episode, classes):
    per_class = {}
    tot = [0, 0, 0, 0]
    for cls, c in per_episode:
        acc = per_class.setdefault(cls, [0, 0, 0])
        acc[0] += c[0]
        acc[1] += c[1]
        acc[2] += 1
        for k in range(4):
            tot[k] += c[k]
    miou = sum(ratio(per_class[c][0], per_class[c][1]) for c in classes) / len(classes)
    fg = ratio(tot[0], tot[1])
    bg = ratio(tot[2], tot[3])
    return {
        "miou": float(miou),
        "fb_miou": float((fg + bg) / 2),
        "fg_iou": float(fg),
        "bg_iou": float(bg),
        "fg_intersection": tot[0],
        "fg_union": tot[1],
        "bg_intersection": tot[2],
        "bg_union": tot[3],
        "per_class": [
            {"class_id": c, "episodes": per_class[c][2], "intersection": per_class[c][0],
             "union": per_class[c][1], "iou": float(ratio(per_class[c][0], per_class[c][1]))}
            for c in sorted(per_class)
        ],
    }


def fold_classes(n, fold):
    per = n // 4
    return set(range(fold * per + 1, (fold + 1) * per + 1))


def evaluate(root, sam_dir, threshold):
    manifest = json.loads((root / "manifest.json").read_text())
    episodes = [json.loads(l) for l in (root / "episodes.jsonl").read_text().splitlines() if l.strip()]
    folds = {}
    for e in episodes:
        folds.setdefault(e["fold"], []).append(e)

    T = Fraction(threshold)
    out_folds = []
    for fold in sorted(folds):
        eps = folds[fold]
        base, sam_only, final = [], [], []
        prs = {"sam_selected": 0, "fss_selected": 0, "fallback_empty": 0, "fallback_error": 0}
        sit = {k: {"count": 0, "intersection": 0, "union": 0} for k in ("improved", "degraded", "unchanged")}
        cand = {"sam_better": 0, "sam_worse": 0, "sam_tie": 0, "no_sam": 0, "selected_worse": 0}
        present = set()
        for e in eps:
            cls = e["class_id"]
            present.add(cls)
            _, _, gt = load(root / e["query"]["gt_mask_ref"])
            _, _, fss = load(root / "fss" / e["fss_mask_ref"])
            sam = None
            if is_empty(fss):
                source = "FSS_fallback_empty"
            else:
                path = sam_dir / (e["id"] + ".png")
                if not path.exists():
                    source = "FSS_fallback_error"
                else:
                    _, _, sam = load(path)
                    i, u, _, _ = counts(fss, sam)
                    source = "SAM" if ratio(i, u) > T else "FSS"
            chosen = sam if source == "SAM" else fss
            cb = counts(fss, gt)
            cf = counts(chosen, gt)
            cs = counts(sam, gt) if sam is not None else cb
            base.append((cls, cb))
            final.append((cls, cf))
            sam_only.append((cls, cs))
            key = {"SAM": "sam_selected", "FSS": "fss_selected",
                   "FSS_fallback_empty": "fallback_empty", "FSS_fallback_error": "fallback_error"}[source]
            prs[key] += 1

            r_fss = ratio(cb[0], cb[1])
            r_sam = ratio(cs[0], cs[1])
            if source == "SAM" and r_sam > r_fss:
                s = "improved"
            elif source == "SAM" and r_sam < r_fss:
                s = "degraded"
            else:
                s = "unchanged"
            sit[s]["count"] += 1
            sit[s]["intersection"] += cf[0]
            sit[s]["union"] += cf[1]

            if sam is None:
                cand["no_sam"] += 1
            elif r_sam > r_fss:
                cand["sam_better"] += 1
            elif r_sam < r_fss:
                cand["sam_worse"] += 1
                if source == "SAM":
                    cand["selected_worse"] += 1
            else:
                cand["sam_tie"] += 1

        all_classes = fold_classes(manifest["class_count"], fold)
        classes = sorted(all_classes & present)
        total_i = sum(g["intersection"] for g in sit.values())
        total_u = sum(g["union"] for g in sit.values())
        sit["fb_miou_s"] = float(ratio(total_i, total_u))
        out_folds.append({
            "fold": fold,
            "classes": classes,
            "missing_classes": sorted(all_classes - present),
            "episodes": len(eps),
            "threshold": threshold,
            "base": stage(base, classes),
            "sam_only": stage(sam_only, classes),
            "final": stage(final, classes),
            "prs": prs,
            "situations": sit,
            "candidates": cand,
        })

    def mean(path):
        vals = []
        for f in out_folds:
            v = f
            for k in path:
                v = v[k]
            vals.append(Fraction(v))
        return float(sum(vals) / len(vals))

    return {
        "threshold": threshold,
        "folds": out_folds,
        "mean": {
            "base": {"miou": mean(("base", "miou")), "fb_miou": mean(("base", "fb_miou"))},
            "sam_only": {"miou": mean(("sam_only", "miou")), "fb_miou": mean(("sam_only", "fb_miou"))},
            "final": {"miou": mean(("final", "miou")), "fb_miou": mean(("final", "fb_miou"))},
            "fb_miou_s": mean(("situations", "fb_miou_s")),
        },
    }


def main():
    root = Path(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/golden")
    out = Path(sys.argv[2]) if len(sys.argv) > 2 else root / "expected"
    out.mkdir(parents=True, exist_ok=True)

    run = evaluate(root, root / "sam" / "box", DEFAULT_T)
    run["prompt_mode"] = "box"
    (out / "run_box.json").write_text(json.dumps(run, indent=2) + "\n")

    sweep = {"prompt_mode": "box", "thresholds": list(SWEEP),
             "runs": [evaluate(root, root / "sam" / "box", t) for t in SWEEP]}
    (out / "sweep_box.json").write_text(json.dumps(sweep, indent=2) + "\n")

    runs = []
    for mode in MODES:
        r = evaluate(root, root / "sam" / mode, DEFAULT_T)
        r["prompt_mode"] = mode
        runs.append(r)
    ablation = {"threshold": DEFAULT_T, "modes": list(MODES), "runs": runs}
    (out / "ablation.json").write_text(json.dumps(ablation, indent=2) + "\n")


if __name__ == "__main__":
    main()
