#!/usr/bin/env python3
"""Regenerate data/corpus/*.pgm from the sample images bundled with scikit-image.

Each image is converted to 8-bit grayscale, center-cropped to a square and
resampled to 256x256.
"""
import argparse
import pathlib

import numpy as np
import skimage.data
from skimage.color import rgb2gray
from skimage.transform import resize

NAMES = [
    "camera", "astronaut", "coffee", "chelsea", "rocket", "moon", "coins",
    "gravel", "brick", "grass", "retina", "immunohistochemistry",
]


def to_gray_u8(img):
    if img.ndim == 3:
        img = rgb2gray(img[..., :3])
    img = img.astype(np.float64)
    if img.max() > 1.0:
        img = img / 255.0
    h, w = img.shape
    s = min(h, w)
    y0, x0 = (h - s) // 2, (w - s) // 2
    img = img[y0:y0 + s, x0:x0 + s]
    img = resize(img, (256, 256), anti_aliasing=True)
    return np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out", type=pathlib.Path)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in NAMES:
        pix = to_gray_u8(getattr(skimage.data, name)())
        with open(args.out / f"{name}.pgm", "wb") as f:
            f.write(b"P5\n256 256\n255\n")
            f.write(pix.tobytes())
        print(name)


if __name__ == "__main__":
    main()
