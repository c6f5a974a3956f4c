#!/usr/bin/env python3
# Copyright 2026 The dcanet Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates tests/data from the scikit-image sample images.

Writes 8-bit grayscale PNG crops plus a manifest.json with train/test splits.
"""
import argparse
import json
import os

import numpy as np
from PIL import Image
from skimage import color, data

# (name, split, crop top, crop left, size)
CROPS = [
    ("camera", "train", 60, 180, 128),
    ("astronaut", "train", 40, 160, 128),
    ("coffee", "train", 120, 200, 128),
    ("chelsea", "train", 60, 150, 128),
    ("rocket", "train", 150, 260, 128),
    ("coins", "train", 80, 120, 128),
    ("moon", "train", 200, 200, 128),
    ("brick", "train", 100, 100, 128),
    ("hubble_deep_field", "train", 300, 400, 128),
    ("immunohistochemistry", "train", 200, 200, 128),
    ("camera", "test", 300, 40, 96),
    ("astronaut", "test", 250, 330, 96),
    ("chelsea", "test", 180, 40, 96),
    ("coffee", "test", 250, 420, 96),
    ("clock", "test", 100, 150, 96),
    ("cell", "test", 250, 250, 96),
]


def to_gray_u8(img):
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3])
        return np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    return img.astype(np.uint8)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "tests", "data"))
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)
    entries = []
    for name, split, top, left, size in CROPS:
        gray = to_gray_u8(getattr(data, name)())
        crop = gray[top:top + size, left:left + size]
        assert crop.shape == (size, size), (name, crop.shape)
        file = f"{split}_{name}.png"
        Image.fromarray(crop, mode="L").save(os.path.join(args.out, file))
        entries.append({"clean": file, "split": split})
    with open(os.path.join(args.out, "manifest.json"), "w") as f:
        json.dump(entries, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
