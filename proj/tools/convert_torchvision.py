#!/usr/bin/env python3
"""Export a torchvision SqueezeNet 1.0/1.1 checkpoint to the whatif model format.

    python3 tools/convert_torchvision.py OUT_DIR [--arch squeezenet1_1] [--weights PATH|imagenet|random]
                                         [--labels FILE] [--size 227]

--weights imagenet downloads the torchvision pretrained weights (needs network);
PATH loads a saved state_dict; random keeps the default initialization, handy for
checking the runtime against torch without a download.
"""
import argparse
import json
import pathlib

import numpy as np
import torch
import torchvision

MEAN = [0.485, 0.456, 0.406]
STD = [0.229, 0.224, 0.225]


class Writer:
    def __init__(self, out):
        self.out = out
        self.layers = []

    def blob(self, name, tensor):
        path = f"{name}.bin"
        tensor.detach().cpu().numpy().astype("<f4").tofile(self.out / path)
        return path

    def conv(self, name, inputs, module, relu):
        w = module.weight
        self.layers.append({
            "name": name, "op": "conv2d", "inputs": [inputs],
            "in_channels": w.shape[1], "out_channels": w.shape[0], "kernel": w.shape[2],
            "stride": module.stride[0], "padding": module.padding[0],
            "activation": "relu" if relu else "none",
            "weight": self.blob(name + ".weight", w), "bias": self.blob(name + ".bias", module.bias),
        })
        return name

    def pool(self, name, inputs, module):
        self.layers.append({"name": name, "op": "maxpool2d", "inputs": [inputs], "kernel": module.kernel_size,
                            "stride": module.stride, "padding": module.padding, "ceil_mode": bool(module.ceil_mode)})
        return name

    def fire(self, name, inputs, module):
        sq = self.conv(name + ".squeeze", inputs, module.squeeze, True)
        e1 = self.conv(name + ".expand1x1", sq, module.expand1x1, True)
        e3 = self.conv(name + ".expand3x3", sq, module.expand3x3, True)
        self.layers.append({"name": name, "op": "concat_channels", "inputs": [e1, e3]})
        return name


def export(model, out, size, labels):
    out.mkdir(parents=True, exist_ok=True)
    wr = Writer(out)
    x = "data"
    fire_index = 0
    feats = list(model.features)
    i = 0
    while i < len(feats):
        m = feats[i]
        if isinstance(m, torch.nn.Conv2d):
            relu = i + 1 < len(feats) and isinstance(feats[i + 1], torch.nn.ReLU)
            x = wr.conv(f"conv{i}", x, m, relu)
            i += 2 if relu else 1
            continue
        if isinstance(m, torch.nn.MaxPool2d):
            x = wr.pool(f"pool{i}", x, m)
        elif type(m).__name__ == "Fire":
            fire_index += 1
            x = wr.fire(f"fire{fire_index}", x, m)
        else:
            raise SystemExit(f"unsupported feature module {m}")
        i += 1
    # classifier: Dropout, Conv2d(512, classes, 1), ReLU, AdaptiveAvgPool2d(1)
    conv = [m for m in model.classifier if isinstance(m, torch.nn.Conv2d)][0]
    has_relu = any(isinstance(m, torch.nn.ReLU) for m in model.classifier)
    x = wr.conv("classifier", x, conv, has_relu)
    wr.layers.append({"name": "gap", "op": "global_avg_pool", "inputs": [x]})
    wr.layers.append({"name": "prob", "op": "softmax", "inputs": ["gap"]})

    manifest = {
        "format": "whatif-model", "version": 1,
        "input": {"name": "data", "shape": [1, 3, size, size], "mean": MEAN, "scale": [1.0 / s for s in STD]},
        "layers": wr.layers,
    }
    if labels:
        (out / "labels.txt").write_text("\n".join(labels) + "\n")
        manifest["labels"] = "labels.txt"
    (out / "model.json").write_text(json.dumps(manifest, indent=2) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("out", type=pathlib.Path)
    ap.add_argument("--arch", default="squeezenet1_1", choices=["squeezenet1_0", "squeezenet1_1"])
    ap.add_argument("--weights", default="imagenet")
    ap.add_argument("--labels", type=pathlib.Path, help="one label per line")
    ap.add_argument("--size", type=int, default=227)
    ap.add_argument("--check", type=pathlib.Path, help="write torch probabilities for a random input here")
    args = ap.parse_args()

    labels = None
    if args.weights == "imagenet":
        weights = torchvision.models.get_model_weights(args.arch).DEFAULT
        model = torchvision.models.get_model(args.arch, weights=weights)
        labels = weights.meta["categories"]
    else:
        torch.manual_seed(0)
        model = torchvision.models.get_model(args.arch, weights=None)
        if args.weights != "random":
            model.load_state_dict(torch.load(args.weights, map_location="cpu"))
    if args.labels:
        labels = args.labels.read_text().splitlines()
    model.eval()
    export(model, args.out, args.size, labels)

    if args.check:
        g = torch.Generator().manual_seed(1)
        img = torch.rand(args.size, args.size, 3, generator=g)
        q = torch.floor(img * 255 + 0.5) / 255
        np_img = (q.numpy() * 255).astype(np.uint8)
        from PIL import Image
        Image.fromarray(np_img, "RGB").save(args.check.with_suffix(".png"))
        mean = torch.tensor(MEAN).view(1, 3, 1, 1)
        scale = torch.tensor([1.0 / s for s in STD]).view(1, 3, 1, 1)
        x = (q.permute(2, 0, 1).unsqueeze(0) - mean) * scale
        with torch.no_grad():
            probs = torch.softmax(model.double()(x.double()), dim=1)[0]
        args.check.write_text(json.dumps(probs.tolist()))
    print(f"wrote {args.out / 'model.json'}")


if __name__ == "__main__":
    main()
