"""Shared fixtures: pure-Python oracles, expected registry tables, CLI runner.

The oracle functions deliberately avoid the library's vectorized code
paths; they loop in plain Python and reduce with math.fsum so the test
side stays an independent check.
"""

from __future__ import annotations

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from chirascope.weights_io import ConvLayer


def make_layer(data4d, name="layer", stage=None) -> ConvLayer:
    arr = np.asarray(data4d, dtype=np.float64)
    if arr.ndim != 4:
        raise ValueError("make_layer expects (kernels, channels, h, w)")
    b, c, h, w = arr.shape
    return ConvLayer(
        name=name, out_channels=b, in_channels=c, height=h, width=w,
        stage=stage, data=arr.reshape(-1).copy(),
    )


def naive_flip(kernel) -> list:
    """Column-reversed copy of one (C, H, W) kernel, built index by index."""
    c, h, w = len(kernel), len(kernel[0]), len(kernel[0][0])
    return [
        [[float(kernel[ci][hi][w - 1 - wi]) for wi in range(w)] for hi in range(h)]
        for ci in range(c)
    ]


def _flatten(kernel) -> list:
    return [float(v) for ch in kernel for row in ch for v in row]


def naive_layer_similarity(kernels, flipped=True) -> float:
    """Double-loop mean |cosine| between kernels and their mirrored copies."""
    originals = [_flatten(k) for k in kernels]
    if flipped:
        mirrored = [_flatten(naive_flip(k)) for k in kernels]
    else:
        mirrored = originals
    norms = [math.sqrt(math.fsum(v * v for v in row)) for row in originals]
    mirrored_norms = [math.sqrt(math.fsum(v * v for v in row)) for row in mirrored]
    b = len(originals)
    cells = []
    for i in range(b):
        for j in range(b):
            dot = math.fsum(x * y for x, y in zip(originals[i], mirrored[j]))
            cells.append(abs(dot) / (norms[i] * mirrored_norms[j]))
    return math.fsum(cells) / (b * b)


def run_cli(*args, env_extra=None, cwd=None) -> subprocess.CompletedProcess:
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "chirascope", *map(str, args)],
        capture_output=True, text=True, env=env, cwd=cwd,
    )


# Expected layer tables, written out by hand rather than derived from the
# registry code under test. Shapes are (out, in, h, w).

ALEXNET_TABLE = (
    ("features.0.weight", (64, 3, 11, 11), 1, True),
    ("features.3.weight", (192, 64, 5, 5), 2, True),
    ("features.6.weight", (384, 192, 3, 3), 3, True),
    ("features.8.weight", (256, 384, 3, 3), 4, True),
    ("features.10.weight", (256, 256, 3, 3), 5, True),
)

VGG16_TABLE = (
    ("features.0.weight", (64, 3, 3, 3), 1, True),
    ("features.2.weight", (64, 64, 3, 3), 1, True),
    ("features.5.weight", (128, 64, 3, 3), 2, True),
    ("features.7.weight", (128, 128, 3, 3), 2, True),
    ("features.10.weight", (256, 128, 3, 3), 3, True),
    ("features.12.weight", (256, 256, 3, 3), 3, True),
    ("features.14.weight", (256, 256, 3, 3), 3, True),
    ("features.17.weight", (512, 256, 3, 3), 4, True),
    ("features.19.weight", (512, 512, 3, 3), 4, True),
    ("features.21.weight", (512, 512, 3, 3), 4, True),
    ("features.24.weight", (512, 512, 3, 3), 5, True),
    ("features.26.weight", (512, 512, 3, 3), 5, True),
    ("features.28.weight", (512, 512, 3, 3), 5, True),
)

VGG19_TABLE = (
    ("features.0.weight", (64, 3, 3, 3), 1, True),
    ("features.2.weight", (64, 64, 3, 3), 1, True),
    ("features.5.weight", (128, 64, 3, 3), 2, True),
    ("features.7.weight", (128, 128, 3, 3), 2, True),
    ("features.10.weight", (256, 128, 3, 3), 3, True),
    ("features.12.weight", (256, 256, 3, 3), 3, True),
    ("features.14.weight", (256, 256, 3, 3), 3, True),
    ("features.16.weight", (256, 256, 3, 3), 3, True),
    ("features.19.weight", (512, 256, 3, 3), 4, True),
    ("features.21.weight", (512, 512, 3, 3), 4, True),
    ("features.23.weight", (512, 512, 3, 3), 4, True),
    ("features.25.weight", (512, 512, 3, 3), 4, True),
    ("features.28.weight", (512, 512, 3, 3), 5, True),
    ("features.30.weight", (512, 512, 3, 3), 5, True),
    ("features.32.weight", (512, 512, 3, 3), 5, True),
    ("features.34.weight", (512, 512, 3, 3), 5, True),
)

RESNET18_TABLE = (
    ("conv1.weight", (64, 3, 7, 7), 1, False),
    ("layer1.0.conv1.weight", (64, 64, 3, 3), 2, True),
    ("layer1.0.conv2.weight", (64, 64, 3, 3), 2, True),
    ("layer1.1.conv1.weight", (64, 64, 3, 3), 2, True),
    ("layer1.1.conv2.weight", (64, 64, 3, 3), 2, True),
    ("layer2.0.conv1.weight", (128, 64, 3, 3), 3, True),
    ("layer2.0.conv2.weight", (128, 128, 3, 3), 3, True),
    ("layer2.0.downsample.0.weight", (128, 64, 1, 1), 3, False),
    ("layer2.1.conv1.weight", (128, 128, 3, 3), 3, True),
    ("layer2.1.conv2.weight", (128, 128, 3, 3), 3, True),
    ("layer3.0.conv1.weight", (256, 128, 3, 3), 4, True),
    ("layer3.0.conv2.weight", (256, 256, 3, 3), 4, True),
    ("layer3.0.downsample.0.weight", (256, 128, 1, 1), 4, False),
    ("layer3.1.conv1.weight", (256, 256, 3, 3), 4, True),
    ("layer3.1.conv2.weight", (256, 256, 3, 3), 4, True),
    ("layer4.0.conv1.weight", (512, 256, 3, 3), 5, True),
    ("layer4.0.conv2.weight", (512, 512, 3, 3), 5, True),
    ("layer4.0.downsample.0.weight", (512, 256, 1, 1), 5, False),
    ("layer4.1.conv1.weight", (512, 512, 3, 3), 5, True),
    ("layer4.1.conv2.weight", (512, 512, 3, 3), 5, True),
)

# First bottleneck of resnet50, enough to pin the 1-3-1 wiring.
RESNET50_FIRST_BLOCK = (
    ("layer1.0.conv1.weight", (64, 64, 1, 1), 2, False),
    ("layer1.0.conv2.weight", (64, 64, 3, 3), 2, True),
    ("layer1.0.conv3.weight", (256, 64, 1, 1), 2, False),
    ("layer1.0.downsample.0.weight", (256, 64, 1, 1), 2, False),
)

ANALYZABLE_COUNTS = {
    "alexnet": 5,
    "vgg11": 8,
    "vgg13": 10,
    "vgg16": 13,
    "vgg19": 16,
    "resnet18": 16,
    "resnet34": 32,
    "resnet50": 16,
    "resnet101": 33,
    "resnet152": 50,
}

TOTAL_CONV_COUNTS = {
    "alexnet": 5,
    "vgg11": 8,
    "vgg13": 10,
    "vgg16": 13,
    "vgg19": 16,
    "resnet18": 20,
    "resnet34": 36,
    "resnet50": 53,
    "resnet101": 104,
    "resnet152": 155,
}


@pytest.fixture
def rng_np():
    return np.random.default_rng(20260817)
