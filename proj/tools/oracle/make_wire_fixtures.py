#!/usr/bin/env python3
"""Write the wire-protocol golden bodies under tests/fixtures/wire.

Bodies are compact JSON with keys in protocol order. Masks are 8-bit gray
PNGs produced by Pillow, independently of the C++ encoder.
"""

import base64
import io
import json
import sys
from pathlib import Path

from PIL import Image

# 4x3 mask, foreground at (0,0) (1,0) (2,1) (3,2)
FOREGROUND = {(0, 0), (1, 0), (2, 1), (3, 2)}


def png_b64(w, h, fg):
    img = Image.new("L", (w, h))
    img.putdata([255 if (x, y) in fg else 0 for y in range(h) for x in range(w)])
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def dump(path, obj):
    path.write_text(json.dumps(obj, separators=(",", ":")))


def main(root):
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    dump(root / "request_box_uri.json", {
        "episode_id": "ep_007",
        "image": {"uri": "images/query_007.jpg"},
        "prompts": {"mode": "box", "point": None, "box": {"x1": 1, "y1": 2, "x2": 4, "y2": 7}},
    })
    dump(root / "request_mixed_b64.json", {
        "episode_id": "ep_011",
        "image": {"png_b64": base64.b64encode(bytes(range(0, 256, 5))).decode("ascii")},
        "prompts": {"mode": "mixed", "point": {"x": 4.5, "y": 0.25, "label": 1},
                    "box": {"x1": 0, "y1": 0, "x2": 9, "y2": 9}},
    })
    dump(root / "request_point_uri.json", {
        "episode_id": "ep_012",
        "image": {"uri": "file:///data/q12.png"},
        "prompts": {"mode": "point", "point": {"x": 3.0, "y": 5.0, "label": 1}, "box": None},
    })
    dump(root / "response_4x3.json", {
        "mask_png_b64": png_b64(4, 3, FOREGROUND), "score": 0.875, "width": 4, "height": 3,
    })
    dump(root / "response_4x3_null_score.json", {
        "mask_png_b64": png_b64(4, 3, FOREGROUND), "score": None, "width": 4, "height": 3,
    })
    dump(root / "response_mismatch.json", {
        "mask_png_b64": png_b64(4, 3, FOREGROUND), "score": 0.5, "width": 5, "height": 3,
    })
    dump(root / "health.json", {"status": "ok", "model_id": "stub-sam-vit-h"})


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/wire")
