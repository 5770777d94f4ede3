"""The ten image perturbations used to build synthetic shifted test sets.

Geometric cases follow the keras ImageDataGenerator semantics: per-image
random parameters drawn uniformly from the configured range, an affine
transform composed as rotation @ shift @ shear @ zoom, offset to the image
center, and resampled bilinearly with nearest-edge padding (dimensions are
preserved, zooms crop or pad implicitly). Brightness multiplies pixel
values by the drawn factor; the noise case adds iid Gaussian noise.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

# case number -> parameter ranges
CASES = {
    1: {"rotation": 5.0},
    2: {"shear": 20.0},
    3: {"width_shift": 0.02, "height_shift": 0.02},
    4: {"zoom": (0.8, 1.2)},
    5: {"zoom": (1.0, 1.1)},
    6: {"zoom": (0.9, 1.0)},
    7: {"brightness": (0.2, 2.0)},
    8: {"brightness": (1.0, 2.0)},
    9: {"brightness": (0.2, 1.0)},
    10: {"noise_sigma": 0.05},
}


def _offset_center(matrix: np.ndarray, h: int, w: int) -> np.ndarray:
    o_x = float(h) / 2 + 0.5
    o_y = float(w) / 2 + 0.5
    offset = np.array([[1, 0, o_x], [0, 1, o_y], [0, 0, 1]])
    reset = np.array([[1, 0, -o_x], [0, 1, -o_y], [0, 0, 1]])
    return offset @ matrix @ reset


def _affine(image: np.ndarray, theta: float, tx: float, ty: float,
            shear: float, zx: float, zy: float) -> np.ndarray:
    transform = np.eye(3)
    if theta != 0.0:
        rad = np.deg2rad(theta)
        transform = transform @ np.array([
            [np.cos(rad), -np.sin(rad), 0],
            [np.sin(rad), np.cos(rad), 0],
            [0, 0, 1],
        ])
    if tx != 0.0 or ty != 0.0:
        transform = transform @ np.array([[1, 0, tx], [0, 1, ty], [0, 0, 1]])
    if shear != 0.0:
        rad = np.deg2rad(shear)
        transform = transform @ np.array([
            [1, -np.sin(rad), 0],
            [0, np.cos(rad), 0],
            [0, 0, 1],
        ])
    if zx != 1.0 or zy != 1.0:
        transform = transform @ np.diag([zx, zy, 1.0])
    if np.array_equal(transform, np.eye(3)):
        return image
    h, w = image.shape
    transform = _offset_center(transform, h, w)
    return ndimage.affine_transform(
        image, transform[:2, :2], transform[:2, 2], order=1, mode="nearest")


def perturb(images: np.ndarray, case: int, seed: int = 0, **overrides) -> np.ndarray:
    """Apply the numbered perturbation to a stack of (N, H, W) images.

    Each image draws its own random parameters from the case's ranges;
    keyword overrides replace any range (e.g. ``noise_sigma=0`` turns case
    10 into the identity).
    """
    if case not in CASES:
        raise ValueError(f"case must be in 1..10, got {case}")
    x = np.asarray(images, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"images must be (N, H, W), got shape {x.shape}")
    params = dict(CASES[case])
    unknown = set(overrides) - {
        "rotation", "shear", "width_shift", "height_shift", "zoom",
        "brightness", "noise_sigma",
    }
    if unknown:
        raise ValueError(f"unknown perturbation parameters {sorted(unknown)}")
    params.update(overrides)

    rng = np.random.default_rng(seed)
    n, h, w = x.shape
    out = np.empty_like(x)
    for i in range(n):
        img = x[i]
        rotation = params.get("rotation", 0.0)
        theta = rng.uniform(-rotation, rotation) if rotation else 0.0
        hs = params.get("height_shift", 0.0)
        tx = rng.uniform(-hs, hs) * h if hs else 0.0
        ws = params.get("width_shift", 0.0)
        ty = rng.uniform(-ws, ws) * w if ws else 0.0
        shear_range = params.get("shear", 0.0)
        shear = rng.uniform(-shear_range, shear_range) if shear_range else 0.0
        zoom = params.get("zoom")
        if zoom is not None:
            zx, zy = rng.uniform(zoom[0], zoom[1], 2)
        else:
            zx = zy = 1.0
        img = _affine(img, theta, tx, ty, shear, zx, zy)
        brightness = params.get("brightness")
        if brightness is not None:
            img = img * rng.uniform(brightness[0], brightness[1])
        sigma = params.get("noise_sigma", 0.0)
        if sigma:
            img = img + rng.normal(0.0, sigma, size=img.shape)
        out[i] = img
    return out
