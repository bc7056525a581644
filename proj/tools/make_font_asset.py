#!/usr/bin/env python3
"""Rasterizes printable ASCII into 8x16 cells for the screenshot renderer.

Output format: one line per glyph, "<code> <16 hex bytes>", each byte a row
with the most significant bit on the left.
"""
import sys
from pathlib import Path

from PIL import Image, ImageDraw, ImageFont

FONT = "/usr/share/fonts/truetype/dejavu/DejaVuSansMono.ttf"
OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "assets/browser/font8x16.txt"


def main():
    font = ImageFont.truetype(FONT, 13)
    lines = []
    for code in range(32, 127):
        img = Image.new("L", (8, 16), 0)
        ImageDraw.Draw(img).text((0, 0), chr(code), fill=255, font=font)
        rows = []
        for y in range(16):
            byte = 0
            for x in range(8):
                if img.getpixel((x, y)) >= 110:
                    byte |= 0x80 >> x
            rows.append(f"{byte:02x}")
        lines.append(f"{code} {''.join(rows)}")
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
