#!/usr/bin/env python3
"""Convert the digit JSON files shipped in the `mnist` npm package into IDX files.

The package (npm pack mnist@1.1.0) carries 10,000 MNIST digits as
src/digits/<label>.json, each holding a flat list of pixel intensities already
divided by 255 and rounded to three decimals. This writes them back out as a
standard idx3-ubyte / idx1-ubyte pair, digits grouped by label.

usage: mnist_json_to_idx.py <package/src/digits> <out_dir>
"""
import json
import os
import struct
import sys

ROWS = COLS = 28


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    src, out = sys.argv[1], sys.argv[2]
    os.makedirs(out, exist_ok=True)
    pixels = bytearray()
    labels = bytearray()
    for label in range(10):
        with open(os.path.join(src, f"{label}.json")) as fh:
            data = json.load(fh)["data"]
        count = len(data) // (ROWS * COLS)
        for v in data[: count * ROWS * COLS]:
            pixels.append(max(0, min(255, round(v * 255))))
        labels.extend([label] * count)
    n = len(labels)
    with open(os.path.join(out, "images-idx3-ubyte"), "wb") as fh:
        fh.write(struct.pack(">IIII", 2051, n, ROWS, COLS))
        fh.write(pixels)
    with open(os.path.join(out, "labels-idx1-ubyte"), "wb") as fh:
        fh.write(struct.pack(">II", 2049, n))
        fh.write(labels)
    print(f"wrote {n} digits to {out}")


if __name__ == "__main__":
    main()
