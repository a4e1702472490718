"""Writes the grayscale test photographs and the small pristine corpus used
by the quality-metric tests (all images ship with scikit-image)."""
import os
import sys

import numpy as np
from PIL import Image
from skimage import io
import skimage.data

DATA = os.path.dirname(skimage.data.__file__)
OUT = sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/data"

CORPUS = ["coffee.png", "gravel.png", "brick.png", "grass.png", "hubble_deep_field.jpg",
          "moon.png", "rocket.jpg", "chelsea.png", "motorcycle_left.png",
          "motorcycle_right.png", "retina.jpg", "ihc.png"]
PHOTOS = ["camera.png", "astronaut.png", "coins.png"]
HELD_OUT = ["clock_motion.png", "page.png", "horse.png", "cell.png", "text.png"]


def gray(name):
    img = io.imread(os.path.join(DATA, name))
    if img.ndim == 3:
        rgb = img[..., :3].astype(np.float64)
        img = np.floor(rgb @ [0.299, 0.587, 0.114] + 0.5)
    return np.clip(img, 0, 255).astype(np.uint8)


def centre(img, size):
    h, w = img.shape
    s = min(size, h, w)
    r, c = (h - s) // 2, (w - s) // 2
    return img[r:r + s, c:c + s]


def save(img, path):
    Image.fromarray(img, mode="L").save(path, optimize=True)


for n in CORPUS:
    save(centre(gray(n), 288), os.path.join(OUT, "corpus", n.split(".")[0] + ".png"))
for n in PHOTOS:
    save(centre(gray(n), 256), os.path.join(OUT, "photos", n.split(".")[0] + ".png"))
os.makedirs(os.path.join(OUT, "held_out"), exist_ok=True)
for n in HELD_OUT:
    save(centre(gray(n), 256), os.path.join(OUT, "held_out", n.split(".")[0] + ".png"))
