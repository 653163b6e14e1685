#!/usr/bin/env python3
# Copyright 2026 The Project Authors. All Rights Reserved.
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
"""Writes torchvision's ImageNet VGG-19 convolution weights as vgg19.bin.

The output goes to $TABLENET_CACHE (or --out) in the flat weight-file format
read by buildNetwork(spec, pretrained=true).

    python3 tools/export_vgg19.py --out ~/.cache/tablenet
"""

import argparse
import os
import struct
import sys

import torch
import torchvision

BLOCK_DEPTH = [2, 2, 4, 4, 4]
DTYPE_F32 = 0


def conv_names():
    return [f"conv{b + 1}_{i + 1}" for b, depth in enumerate(BLOCK_DEPTH) for i in range(depth)]


def write_weights(path, tensors):
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(b"TNWT")
        f.write(struct.pack("<IQ", 1, len(tensors)))
        for name in sorted(tensors):
            t = tensors[name].detach().to(torch.float32).contiguous().cpu()
            raw = name.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(struct.pack("<I", t.dim()))
            f.write(struct.pack(f"<{t.dim()}q", *t.shape))
            f.write(struct.pack("<B", DTYPE_F32))
            f.write(t.numpy().tobytes())
    os.replace(tmp, path)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=os.environ.get("TABLENET_CACHE"), help="cache directory")
    args = parser.parse_args()
    if not args.out:
        sys.exit("set TABLENET_CACHE or pass --out")

    model = torchvision.models.vgg19(weights=torchvision.models.VGG19_Weights.IMAGENET1K_V1)
    convs = [m for m in model.features if isinstance(m, torch.nn.Conv2d)]
    names = conv_names()
    assert len(convs) == len(names)
    tensors = {}
    for name, conv in zip(names, convs):
        tensors[name + ".weight"] = conv.weight
        tensors[name + ".bias"] = conv.bias

    os.makedirs(args.out, exist_ok=True)
    target = os.path.join(args.out, "vgg19.bin")
    write_weights(target, tensors)
    print(f"wrote {len(tensors)} tensors to {target}")


if __name__ == "__main__":
    main()
