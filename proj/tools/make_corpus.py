#!/usr/bin/env python3
"""Builds the bundled desk corpus: 128x128 grayscale PNGs from the
scikit-image sample images plus a few procedural textures and edges."""

import argparse
import pathlib

import numpy as np
from PIL import Image
from skimage import color, data, transform

SIZE = 128


def gray(img):
    img = np.asarray(img)
    if img.dtype == bool:
        img = img.astype(np.float64)
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3])
    img = img.astype(np.float64)
    if img.max() > 1.0:
        img = img / 255.0
    return img


def square(img, cx=0.5, cy=0.5, frac=1.0):
    """Square crop of side frac*min(h, w) centred at (cx, cy), resized."""
    h, w = img.shape
    side = int(min(h, w) * frac)
    x0 = int(np.clip(cx * w - side / 2, 0, w - side))
    y0 = int(np.clip(cy * h - side / 2, 0, h - side))
    crop = img[y0:y0 + side, x0:x0 + side]
    return transform.resize(crop, (SIZE, SIZE), anti_aliasing=True)


def samples():
    cam = gray(data.camera())
    astro = gray(data.astronaut())
    coffee = gray(data.coffee())
    cat = gray(data.chelsea())
    yield "camera", square(cam)
    yield "camera_face", square(cam, 0.45, 0.3, 0.35)
    yield "camera_grass", square(cam, 0.5, 0.85, 0.3)
    yield "astronaut", square(astro)
    yield "astronaut_face", square(astro, 0.45, 0.25, 0.35)
    yield "astronaut_flag", square(astro, 0.85, 0.8, 0.3)
    yield "coffee", square(coffee)
    yield "coffee_cup", square(coffee, 0.35, 0.45, 0.6)
    yield "chelsea", square(cat)
    yield "chelsea_fur", square(cat, 0.7, 0.5, 0.4)
    yield "coins", square(gray(data.coins()))
    yield "moon", square(gray(data.moon()))
    yield "brick", square(gray(data.brick()), frac=0.5)
    yield "grass", square(gray(data.grass()), frac=0.5)
    yield "gravel", square(gray(data.gravel()), frac=0.5)
    yield "text", square(gray(data.text()), 0.3, 0.5, 1.0)
    yield "page", square(gray(data.page()), 0.4, 0.5, 1.0)
    yield "rocket", square(gray(data.rocket()), 0.45, 0.5)
    yield "clock", square(gray(data.clock()))
    yield "cell", square(gray(data.cell()))
    yield "hubble", square(gray(data.hubble_deep_field()), frac=0.4)
    yield "immuno", square(gray(data.immunohistochemistry()), frac=0.5)
    yield "retina", square(gray(data.retina()), 0.5, 0.5, 0.5)
    yield "horse", square(gray(data.horse()))
    yield "phantom", square(gray(data.shepp_logan_phantom()))
    yield from procedural()


def procedural():
    rng = np.random.default_rng(20240611)
    y, x = np.mgrid[0:SIZE, 0:SIZE] / SIZE

    ramp = 0.15 + 0.7 * x
    ramp[(x - 0.5) ** 2 + (y - 0.5) ** 2 < 0.08] = 0.9
    ramp[y > 0.75] = 0.2
    yield "edges_disc", ramp

    grating = 0.5 + 0.35 * np.sin(2 * np.pi * (6 * x + 3 * y)) * np.exp(-2 * y)
    yield "grating", grating

    squares = ((np.floor(x * 8) + np.floor(y * 8)) % 2) * 0.6 + 0.2
    yield "checker", transform.resize(squares, (SIZE, SIZE), anti_aliasing=True)

    blobs = gray(data.binary_blobs(length=SIZE, blob_size_fraction=0.12, rng=3))
    yield "blobs", 0.25 + 0.5 * blobs

    field = rng.standard_normal((16, 16))
    smooth = transform.resize(field, (SIZE, SIZE), order=3)
    smooth = (smooth - smooth.min()) / (smooth.max() - smooth.min())
    yield "clouds", 0.1 + 0.8 * smooth

    seeds = rng.random((24, 2))
    d = np.stack([(x - sx) ** 2 + (y - sy) ** 2 for sx, sy in seeds])
    cells = rng.random(24)[d.argmin(axis=0)]
    yield "cells", 0.15 + 0.7 * cells

    r = np.hypot(x - 0.5, y - 0.5)
    yield "rings", 0.5 + 0.4 * np.cos(2 * np.pi * 40 * r ** 2)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", type=pathlib.Path, nargs="?",
                        default=pathlib.Path(__file__).resolve().parent.parent / "data" / "corpus")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    count = 0
    for name, img in samples():
        px = np.clip(np.rint(np.clip(img, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(px, mode="L").save(args.out / f"{name}.png")
        count += 1
    print(f"wrote {count} images to {args.out}")


if __name__ == "__main__":
    main()
