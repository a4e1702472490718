"""Reference scores for the quality-metric regression tests.

Writes the degraded fixtures (seeded Gaussian noise, heavy blur) next to the
clean photographs and prints reference PIQE, NIQE and BRISQUE values computed
with independent implementations:

* PIQE: pypiqe, with the surround deviation taken over all columns except the
  two centre ones.
* NIQE: pyiqa's NIQE in float64 with the bundled model parameters; the
  pooled covariance gets the same ridge (1e-6 * trace / dim) before inversion.
* BRISQUE: pyiqa's feature helpers (replicate padding) with the bundled SVR.

Usage: python scripts/iqa_oracles.py [data_dir] [models_dir]
"""
import glob
import importlib
import os
import sys

import cv2
import numpy as np
import torch
from PIL import Image

from pyiqa.archs.niqe_arch import niqe as pyiqa_niqe
from pyiqa.archs.func_util import estimate_aggd_param, estimate_ggd_param, normalize_img_with_gauss
from pyiqa.matlab_utils import imresize

pq = importlib.import_module("pypiqe.piqe")

DATA = sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/data"
MODELS = sys.argv[2] if len(sys.argv) > 2 else "crates/core/models"
SIGMAS = [5, 15, 30]


def centre_sur_dev(block, block_size):
    c1 = (block_size + 1) // 2
    centre = np.concatenate((block[:, c1 - 1], block[:, c1]))
    surround = np.delete(block, [c1 - 1, c1], axis=1)
    r = np.std(centre, ddof=1) / np.std(surround, ddof=1)
    return 0 if np.isnan(r) else r


pq.centerSurDev = centre_sur_dev


def load(path):
    return np.array(Image.open(path), dtype=np.uint8)


def write_fixtures():
    os.makedirs(os.path.join(DATA, "degraded"), exist_ok=True)
    for k, path in enumerate(sorted(glob.glob(os.path.join(DATA, "photos", "*.png")))):
        name = os.path.basename(path)[:-4]
        img = load(path).astype(np.float64)
        for s in SIGMAS:
            rng = np.random.default_rng(1000 + 10 * k + s)
            noisy = np.clip(np.floor(img + rng.normal(0, s, img.shape) + 0.5), 0, 255)
            Image.fromarray(noisy.astype(np.uint8), mode="L").save(
                os.path.join(DATA, "degraded", f"{name}_noise{s}.png"))
        blur = cv2.GaussianBlur(img, (0, 0), 1.5, borderType=cv2.BORDER_REPLICATE)
        Image.fromarray(np.clip(np.floor(blur + 0.5), 0, 255).astype(np.uint8), mode="L").save(
            os.path.join(DATA, "degraded", f"{name}_blur.png"))


def read_niqe(path):
    rows = [l.split() for l in open(path) if l.strip()]
    mean = np.array([float(v) for v in rows[4][1:]])
    cov = np.array([[float(v) for v in r[1:]] for r in rows[5:]])
    return mean, cov


def read_brisque(path):
    rows = [l.split() for l in open(path) if l.strip() and not l.startswith("#")]
    lo = np.array([float(v) for v in rows[3][1:]])
    hi = np.array([float(v) for v in rows[4][1:]])
    gamma, rho = float(rows[5][1]), float(rows[6][1])
    sv = np.array([[float(v) for v in r] for r in rows[8:]])
    return lo, hi, gamma, rho, sv[:, 0], sv[:, 1:]


def ridge_inverse(m):
    d = m.shape[-1]
    eps = 1e-6 * torch.diagonal(m, dim1=-2, dim2=-1).sum(-1) / d
    return torch.linalg.inv(m + eps[..., None, None] * torch.eye(d))


def niqe_ref(img, mean, cov):
    x = torch.from_numpy(img.astype(np.float64))[None, None]
    return float(pyiqa_niqe(x, torch.from_numpy(mean)[None], torch.from_numpy(cov)[None]))


def brisque_features(img):
    x = torch.from_numpy(img.astype(np.float64))[None, None]
    feats = []
    for _ in range(2):
        n = normalize_img_with_gauss(x, 7, 7 / 6, padding="replicate")
        a, s = estimate_ggd_param(n)
        feats += [float(a), float(s) ** 2]
        for shift in [(0, 1), (1, 0), (1, 1), (-1, 1)]:
            a, sl, sr = estimate_aggd_param(n * torch.roll(n, shift, dims=(-2, -1)), return_sigma=True)
            a, sl, sr = float(a), float(sl), float(sr)
            from math import lgamma, exp
            eta = (sr - sl) * exp(lgamma(2 / a) - (lgamma(1 / a) + lgamma(3 / a)) / 2)
            feats += [a, eta, sl ** 2, sr ** 2]
        x = imresize(x / 255.0, scale=0.5, antialiasing=True) * 255.0
    return np.array(feats)


def brisque_ref(img, model):
    lo, hi, gamma, rho, coef, sv = model
    f = -1 + 2 * (brisque_features(img) - lo) / (hi - lo)
    return float(np.sum(coef * np.exp(-gamma * np.sum((sv - f) ** 2, axis=1))) - rho)


def main():
    torch.set_default_dtype(torch.float64)
    torch.linalg.pinv = ridge_inverse
    write_fixtures()
    mean, cov = read_niqe(os.path.join(MODELS, "niqe_small.model"))
    bmodel = read_brisque(os.path.join(MODELS, "brisque_live.model"))
    paths = sorted(glob.glob(os.path.join(DATA, "photos", "*.png"))) + \
        sorted(glob.glob(os.path.join(DATA, "degraded", "*.png")))
    print("image, piqe, niqe, brisque")
    for p in paths:
        img = load(p)
        rel = os.path.relpath(p, DATA)
        print(f'("{rel}", {float(pq.piqe(img)[0])!r}, {niqe_ref(img, mean, cov)!r}, {brisque_ref(img, bmodel)!r}),')


if __name__ == "__main__":
    main()
