#!/usr/bin/env python3
"""Convert a torchvision ResNet into a protofsl checkpoint (<stem>.ckpt + <stem>.json).

  export_torchvision.py --arch resnet34 --weights imagenet --output weights/resnet34
  export_torchvision.py --arch resnet18 --weights random --seed 3 --output fx/r18 --dump-io 2

With --dump-io N the script also writes N random standardized inputs and
torchvision's eval-mode embeddings next to the checkpoint (<stem>.io), which
the C++ test suite compares against its own forward pass.
"""
import argparse
import json
import os
import struct
import sys

import torch
import torchvision

MAGIC = b"PFSCKPT1"
IO_MAGIC = b"PFSIO1"


def put_string(f, s):
    b = s.encode()
    f.write(struct.pack("<I", len(b)))
    f.write(b)


def write_archive(path, tensors):
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(tensors)))
        for name in sorted(tensors):
            t = tensors[name].detach().to(torch.float32).contiguous()
            put_string(f, name)
            f.write(struct.pack("<I", t.dim()))
            for d in t.shape:
                f.write(struct.pack("<Q", d))
            f.write(t.numpy().astype("<f4").tobytes())


def write_io(path, x, y):
    with open(path, "wb") as f:
        f.write(IO_MAGIC)
        for t in (x, y):
            t = t.detach().to(torch.float32).contiguous()
            f.write(struct.pack("<I", t.dim()))
            for d in t.shape:
                f.write(struct.pack("<Q", d))
            f.write(t.numpy().astype("<f4").tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--arch", choices=["resnet18", "resnet34", "resnet50"], required=True)
    ap.add_argument("--weights", choices=["imagenet", "random"], default="imagenet")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output", required=True, help="checkpoint stem")
    ap.add_argument("--dump-io", type=int, default=0, metavar="N")
    ap.add_argument("--size", type=int, default=64, help="input side for --dump-io")
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    ctor = getattr(torchvision.models, args.arch)
    if args.weights == "imagenet":
        model = ctor(weights="DEFAULT")
    else:
        model = ctor(weights=None)
        # Non-trivial BN statistics so eval-mode normalization is exercised.
        with torch.no_grad():
            for m in model.modules():
                if isinstance(m, torch.nn.BatchNorm2d):
                    m.weight.uniform_(0.5, 1.5)
                    m.bias.uniform_(-0.2, 0.2)
                    m.running_mean.uniform_(-0.2, 0.2)
                    m.running_var.uniform_(0.5, 2.0)
    model.fc = torch.nn.Identity()
    model.eval()

    os.makedirs(os.path.dirname(os.path.abspath(args.output)), exist_ok=True)
    tensors = {k: v for k, v in model.state_dict().items()
               if not k.endswith("num_batches_tracked") and not k.startswith("fc.")}
    write_archive(args.output + ".ckpt", tensors)
    dim = 2048 if args.arch == "resnet50" else 512
    with open(args.output + ".json", "w") as f:
        json.dump({"identity": args.arch, "embedding_dim": dim, "pretrained": args.weights == "imagenet",
                   "config_hash": "", "step": 0, "head_classes": 0, "class_order": []}, f, indent=2)
        f.write("\n")

    if args.dump_io:
        x = torch.randn(args.dump_io, 3, args.size, args.size)
        with torch.no_grad():
            y = model(x)
        write_io(args.output + ".io", x, y)
    print(f"wrote {args.output}.ckpt ({len(tensors)} tensors)", file=sys.stderr)


if __name__ == "__main__":
    main()
