#!/usr/bin/env python3
"""Write the bundled Spike-* model specs (CIFAR-sized input, T=4) to data/models/."""

import argparse
import json
from pathlib import Path

T = 4


def conv(lid, c, k, kernel, out, inputs=None, residual=None):
    layer = {
        "id": lid,
        "kind": "conv",
        "in_channels": c,
        "out_channels": k,
        "kernel": [kernel, kernel],
        "out": [out, out],
        "timesteps": T,
    }
    if inputs:
        layer["inputs"] = inputs
    if residual:
        layer["residual"] = residual
    return layer


def fc(lid, c, k, inputs=None):
    layer = {
        "id": lid,
        "kind": "fc",
        "in_channels": c,
        "out_channels": k,
        "kernel": [1, 1],
        "out": [1, 1],
        "timesteps": T,
    }
    if inputs:
        layer["inputs"] = inputs
    return layer


def resnet18(classes=10):
    layers = [conv("conv1", 3, 64, 3, 32)]
    tail, ch, size = "conv1", 64, 32
    for stage, width in enumerate([64, 128, 256, 512], start=1):
        for block in range(2):
            name = f"layer{stage}.{block}"
            down = stage > 1 and block == 0
            out = size // 2 if down else size
            layers.append(conv(f"{name}.conv_a", ch, width, 3, out, [tail]))
            skip = tail
            if down:
                layers.append(conv(f"{name}.ds", ch, width, 1, out, [tail]))
                skip = f"{name}.ds"
            layers.append(conv(f"{name}.conv_b", width, width, 3, out, [f"{name}.conv_a"], [skip]))
            tail, ch, size = f"{name}.conv_b", width, out
    layers.append(fc("fc", ch, classes, [tail]))
    return layers


def resnet50(classes=10):
    layers = [conv("conv1", 3, 64, 3, 32)]
    tail, ch, size = "conv1", 64, 32
    for stage, (width, blocks) in enumerate(zip([64, 128, 256, 512], [3, 4, 6, 3]), start=1):
        for block in range(blocks):
            name = f"layer{stage}.{block}"
            out = size // 2 if stage > 1 and block == 0 else size
            layers.append(conv(f"{name}.c1", ch, width, 1, size, [tail]))
            layers.append(conv(f"{name}.c2", width, width, 3, out, [f"{name}.c1"]))
            skip = tail
            if block == 0:
                layers.append(conv(f"{name}.ds", ch, 4 * width, 1, out, [tail]))
                skip = f"{name}.ds"
            layers.append(conv(f"{name}.c3", width, 4 * width, 1, out, [f"{name}.c2"], [skip]))
            tail, ch, size = f"{name}.c3", 4 * width, out
    layers.append(fc("fc", ch, classes, [tail]))
    return layers


def vgg16(classes=10):
    cfg = [(64, 32), (64, 32), (128, 16), (128, 16), (256, 8), (256, 8), (256, 8),
           (512, 4), (512, 4), (512, 4), (512, 2), (512, 2), (512, 2)]
    layers = []
    ch = 3
    for i, (width, out) in enumerate(cfg, start=1):
        layers.append(conv(f"conv{i}", ch, width, 3, out))
        ch = width
    layers += [fc("fc1", 512, 4096), fc("fc2", 4096, 4096), fc("fc3", 4096, classes)]
    return layers


def toy8():
    return [
        conv("c1", 3, 16, 3, 16),
        conv("c2", 16, 16, 3, 16),
        conv("c3", 16, 32, 3, 8),
        conv("c4", 32, 32, 3, 8),
        conv("c5", 32, 64, 3, 4),
        conv("c6", 64, 64, 3, 4),
        fc("f1", 64, 32),
        fc("f2", 32, 10),
    ]


MODELS = {
    "spike_resnet18": resnet18,
    "spike_vgg16": vgg16,
    "spike_resnet50": resnet50,
    "toy8": toy8,
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "models")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, build in MODELS.items():
        path = args.out / f"{name}.json"
        path.write_text(json.dumps({"layers": build()}, indent=2) + "\n")
        print(f"{path} ({len(build())} layers)")


if __name__ == "__main__":
    main()
