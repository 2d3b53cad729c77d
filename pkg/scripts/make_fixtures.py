#!/usr/bin/env python3
"""Regenerate the packaged camera fixtures and their manifest.

Draws small synthetic office scenes with Pillow, encodes them as JPEG, then
pins each frame's detection results against the digest of the *decoded*
pixels. Digesting after a decode round trip means the manifest keys match what
the gateway computes on an uploaded frame, independent of JPEG loss.

Run from the repository root:

    python scripts/make_fixtures.py
"""

from __future__ import annotations

import io
import json
import sys
from pathlib import Path

from PIL import Image as PILImage
from PIL import ImageDraw

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from smartcloud.apps.images import decode_jpeg  # noqa: E402

OUT_DIR = ROOT / "src" / "smartcloud" / "data" / "fixtures"

SIZE = (320, 240)
QUALITY = 85

# file name -> (scene painter, pinned detection results)
SCENES = {
    "office.jpg": [["Trash Can", 0.66], ["Swivel Chair", 0.72], ["File Cabinet", 0.44]],
    "hall_a.jpg": [["Door", 0.21], ["Whiteboard", 0.12]],
    "hall_b.jpg": [["Bookshelf", 0.18]],
    "hall_c.jpg": [["Door", 0.09], ["Monitor", 0.11]],
}


def _base(draw: ImageDraw.ImageDraw, wall: tuple, floor: tuple) -> None:
    draw.rectangle([0, 0, SIZE[0], 160], fill=wall)
    draw.rectangle([0, 160, SIZE[0], SIZE[1]], fill=floor)


def paint_office(draw: ImageDraw.ImageDraw) -> None:
    _base(draw, wall=(214, 210, 196), floor=(120, 104, 84))
    # file cabinet, left
    draw.rectangle([30, 70, 95, 190], fill=(142, 144, 150))
    for y in (100, 130, 160):
        draw.line([36, y, 89, y], fill=(90, 92, 98), width=3)
    # swivel chair, center
    draw.ellipse([140, 150, 205, 185], fill=(40, 40, 46))
    draw.rectangle([166, 95, 180, 155], fill=(52, 52, 58))
    draw.rectangle([132, 60, 214, 100], fill=(44, 44, 50))
    # trash can, right
    draw.polygon([(250, 140), (296, 140), (290, 200), (256, 200)], fill=(60, 110, 70))
    draw.ellipse([250, 132, 296, 148], fill=(80, 140, 92))


def paint_hall_a(draw: ImageDraw.ImageDraw) -> None:
    _base(draw, wall=(198, 196, 188), floor=(150, 142, 128))
    draw.rectangle([130, 40, 200, 180], fill=(110, 78, 48))  # door
    draw.ellipse([184, 108, 194, 118], fill=(220, 190, 90))
    draw.rectangle([230, 55, 305, 110], fill=(240, 240, 240))  # whiteboard


def paint_hall_b(draw: ImageDraw.ImageDraw) -> None:
    _base(draw, wall=(188, 190, 184), floor=(140, 134, 122))
    draw.rectangle([60, 40, 250, 190], fill=(104, 72, 44))  # bookshelf
    for y in (70, 110, 150):
        draw.rectangle([68, y, 242, y + 28], fill=(70, 48, 30))
        for i, x in enumerate(range(72, 236, 18)):
            tone = 60 + 22 * (i % 5)
            draw.rectangle([x, y + 2, x + 12, y + 26], fill=(tone, 40, 46))


def paint_hall_c(draw: ImageDraw.ImageDraw) -> None:
    _base(draw, wall=(206, 204, 198), floor=(132, 126, 116))
    draw.rectangle([40, 50, 110, 180], fill=(116, 84, 52))  # door, ajar
    draw.polygon([(110, 50), (150, 70), (150, 190), (110, 180)], fill=(96, 68, 42))
    draw.rectangle([210, 70, 300, 135], fill=(20, 22, 28))  # monitor
    draw.rectangle([216, 76, 294, 129], fill=(48, 96, 150))
    draw.rectangle([248, 135, 262, 155], fill=(30, 32, 38))


PAINTERS = {
    "office.jpg": paint_office,
    "hall_a.jpg": paint_hall_a,
    "hall_b.jpg": paint_hall_b,
    "hall_c.jpg": paint_hall_c,
}


def main() -> int:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    entries = []
    for name, results in SCENES.items():
        img = PILImage.new("RGB", SIZE, (0, 0, 0))
        PAINTERS[name](ImageDraw.Draw(img))
        buf = io.BytesIO()
        img.save(buf, format="JPEG", quality=QUALITY)
        data = buf.getvalue()
        (OUT_DIR / name).write_bytes(data)
        digest = decode_jpeg(data).digest()
        entries.append({"file": name, "digest": digest, "results": results})
        print(f"{name}: {len(data)} bytes, digest {digest[:16]}...")
    manifest = {"format": "smartcloud-fixtures/1", "fixtures": entries}
    path = OUT_DIR / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
