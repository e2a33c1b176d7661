#!/usr/bin/env python3
"""Build the toy model fixture and its reference outputs with PyTorch.

Writes tests/fixtures/toy/{model.json,*.bin,labels.txt,image.png,mask.png,expected.json}.
The expected values come from torch, which is independent of the C++ runtime.
"""
import json
import pathlib
import sys

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

OUT = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/toy")
MEAN = [0.485, 0.456, 0.406]
STD = [0.229, 0.224, 0.225]
CLASSES = ["apple", "boat", "cat", "dock", "eel", "fern", "gull", "harp", "ibis", "jeep"]


def make_layers():
    g = torch.Generator().manual_seed(7)

    def conv(name, cin, cout, k, pad, relu):
        w = (torch.rand(cout, cin, k, k, generator=g) * 2 - 1) * (3.0 / (cin * k * k)) ** 0.5
        b = (torch.rand(cout, generator=g) * 2 - 1) * 0.1
        return dict(name=name, cin=cin, cout=cout, k=k, pad=pad, relu=relu, w=w, b=b)

    return {
        "conv1": conv("conv1", 3, 8, 3, 1, True),
        "fire.squeeze": conv("fire.squeeze", 8, 4, 1, 0, True),
        "fire.expand1x1": conv("fire.expand1x1", 4, 8, 1, 0, True),
        "fire.expand3x3": conv("fire.expand3x3", 4, 8, 3, 1, True),
        "classifier": conv("classifier", 16, len(CLASSES), 1, 0, False),
    }


def run(layers, x):
    def c(name, t):
        L = layers[name]
        y = F.conv2d(t.double(), L["w"].double(), L["b"].double(), padding=L["pad"])
        return F.relu(y) if L["relu"] else y

    y = c("conv1", x)
    y = F.max_pool2d(y, 3, 2, ceil_mode=True)
    s = c("fire.squeeze", y)
    y = torch.cat([c("fire.expand1x1", s), c("fire.expand3x3", s)], dim=1)
    feat = c("classifier", y)
    logits = feat.mean(dim=(2, 3))
    probs = torch.softmax(logits, dim=1)
    return feat, logits, probs


def preprocess(img01):
    t = torch.from_numpy(img01).permute(2, 0, 1).unsqueeze(0).double()
    t = F.interpolate(t, size=(32, 32), mode="bilinear", align_corners=False, antialias=False)
    mean = torch.tensor(MEAN, dtype=torch.float64).view(1, 3, 1, 1)
    std = torch.tensor(STD, dtype=torch.float64).view(1, 3, 1, 1)
    # the runtime stores tensors as f32, so round the network input the same way
    return ((t.float().double() - mean) * (1.0 / std).float().double()).float().double()


def fixture_image():
    h, w = 40, 48
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    r = 0.5 + 0.4 * np.sin(xx / 5.0)
    gch = 0.3 + 0.6 * yy / (h - 1)
    b = 0.5 + 0.4 * np.cos((xx + yy) / 7.0)
    img = np.stack([r, gch, b], axis=2)
    img[12:26, 18:32] = [0.9, 0.2, 0.1]
    return np.clip(np.floor(img * 255 + 0.5), 0, 255).astype(np.uint8)


def fixture_mask():
    h, w = 40, 48
    m = np.zeros((h, w), np.uint8)
    m[14:24, 20:30] = 255
    return m


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    layers = make_layers()
    manifest_layers = []

    def add_conv(name, inputs):
        L = layers[name]
        L["w"].numpy().astype("<f4").tofile(OUT / f"{name}.weight.bin")
        L["b"].numpy().astype("<f4").tofile(OUT / f"{name}.bias.bin")
        manifest_layers.append({
            "name": name, "op": "conv2d", "inputs": inputs,
            "in_channels": L["cin"], "out_channels": L["cout"], "kernel": L["k"],
            "stride": 1, "padding": L["pad"], "activation": "relu" if L["relu"] else "none",
            "weight": f"{name}.weight.bin", "bias": f"{name}.bias.bin",
        })

    add_conv("conv1", ["data"])
    manifest_layers.append({"name": "pool1", "op": "maxpool2d", "inputs": ["conv1"],
                            "kernel": 3, "stride": 2, "ceil_mode": True})
    add_conv("fire.squeeze", ["pool1"])
    add_conv("fire.expand1x1", ["fire.squeeze"])
    add_conv("fire.expand3x3", ["fire.squeeze"])
    manifest_layers.append({"name": "fire", "op": "concat_channels",
                            "inputs": ["fire.expand1x1", "fire.expand3x3"]})
    add_conv("classifier", ["fire"])
    manifest_layers.append({"name": "gap", "op": "global_avg_pool", "inputs": ["classifier"]})
    manifest_layers.append({"name": "prob", "op": "softmax", "inputs": ["gap"]})

    manifest = {
        "format": "whatif-model", "version": 1,
        "input": {"name": "data", "shape": [1, 3, 32, 32], "mean": MEAN, "scale": [1.0 / s for s in STD]},
        "layers": manifest_layers,
        "labels": "labels.txt",
    }
    (OUT / "model.json").write_text(json.dumps(manifest, indent=2) + "\n")
    (OUT / "labels.txt").write_text("\n".join(CLASSES) + "\n")

    img8 = fixture_image()
    Image.fromarray(img8, "RGB").save(OUT / "image.png")
    Image.fromarray(fixture_mask(), "L").save(OUT / "mask.png")
    Image.fromarray(img8, "RGB").save(OUT / "image.jpg", quality=95)
    Image.fromarray(img8, "RGB").convert("L").save(OUT / "gray.jpg", quality=95)

    expected = {}
    zero = torch.zeros(1, 3, 32, 32, dtype=torch.float64)
    _, logits, probs = run(layers, zero)
    expected["zero_input"] = {"logits": logits[0].tolist(), "probabilities": probs[0].tolist()}

    x = preprocess(img8.astype(np.float64) / 255.0)
    feat, logits, probs = run(layers, x)
    top = int(torch.argmax(probs[0]))
    expected["image"] = {
        "logits": logits[0].tolist(),
        "probabilities": probs[0].tolist(),
        "feature_shape": list(feat.shape),
        "top_class": top,
        "top_feature_map": feat[0, top].flatten().tolist(),
    }
    (OUT / "expected.json").write_text(json.dumps(expected, indent=1) + "\n")
    print(f"wrote fixture to {OUT}; top class {top} ({CLASSES[top]}) p={float(probs[0, top]):.4f}")


if __name__ == "__main__":
    main()
