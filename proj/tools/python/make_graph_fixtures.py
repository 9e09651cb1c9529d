#!/usr/bin/env python3
"""Write graph fixtures and torch reference outputs for the C++ graph tests.

Default: two tiny seeded networks (residual and squeeze-excite/depthwise
flavours) into tests/data/graphs. With --torchvision the full resnet18 and
mobilenet_v3_small feature extractors are exported instead (large; used by the
optional cross-runtime test, never committed).
"""

import argparse
import json
import os
import struct
import sys
import zlib

import torch
import torch.nn as nn
import torch.nn.functional as F

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import export_graph  # noqa: E402


def randomize_bn(model, gen):
    for m in model.modules():
        if isinstance(m, nn.BatchNorm2d):
            n = m.num_features
            m.running_mean.copy_(torch.randn(n, generator=gen) * 0.2)
            m.running_var.copy_(torch.rand(n, generator=gen) + 0.5)
            m.weight.data.copy_(torch.rand(n, generator=gen) + 0.5)
            m.bias.data.copy_(torch.randn(n, generator=gen) * 0.1)


class Basic(nn.Module):
    def __init__(self, cin, cout, stride):
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, stride, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(cout)
        self.relu = nn.ReLU(inplace=True)
        self.conv2 = nn.Conv2d(cout, cout, 3, 1, 1, bias=False)
        self.bn2 = nn.BatchNorm2d(cout)
        self.down = None
        if stride != 1 or cin != cout:
            self.down = nn.Sequential(nn.Conv2d(cin, cout, 1, stride, bias=False), nn.BatchNorm2d(cout))

    def forward(self, x):
        identity = x if self.down is None else self.down(x)
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        out += identity
        return self.relu(out)


class TinyResNet(nn.Module):
    # 64 -> 32 (stem) -> 16 (max pool) -> 8 (strided block): 8 x 8 x 16
    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(3, 8, 3, 2, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(8)
        self.relu = nn.ReLU(inplace=True)
        self.maxpool = nn.MaxPool2d(3, 2, 1)
        self.layer1 = Basic(8, 8, 1)
        self.layer2 = Basic(8, 16, 2)

    def forward(self, x):
        return self.layer2(self.layer1(self.maxpool(self.relu(self.bn1(self.conv1(x))))))


class SqueezeExcite(nn.Module):
    def __init__(self, c, squeeze):
        super().__init__()
        self.fc1 = nn.Conv2d(c, squeeze, 1)
        self.fc2 = nn.Conv2d(squeeze, c, 1)
        self.act = nn.ReLU()
        self.gate = nn.Hardsigmoid()

    def forward(self, x):
        s = F.adaptive_avg_pool2d(x, 1)
        s = self.gate(self.fc2(self.act(self.fc1(s))))
        return s * x


class TinyMobileNet(nn.Module):
    # 64 -> 32 -> 16 -> 8, mixing depthwise convs, SE gating, relu6/hardswish/sigmoid
    def __init__(self):
        super().__init__()
        self.stem = nn.Sequential(nn.Conv2d(3, 8, 3, 2, 1, bias=False), nn.BatchNorm2d(8), nn.Hardswish())
        self.dw = nn.Sequential(nn.Conv2d(8, 8, 3, 2, 1, groups=8, bias=False), nn.BatchNorm2d(8), nn.ReLU())
        self.se = SqueezeExcite(8, 4)
        self.pw = nn.Sequential(nn.Conv2d(8, 12, 1, bias=False), nn.BatchNorm2d(12))
        self.expand = nn.Sequential(nn.Conv2d(12, 24, 1, bias=False), nn.BatchNorm2d(24), nn.Hardswish())
        self.dw5 = nn.Sequential(nn.Conv2d(24, 24, 5, 2, 2, groups=24, bias=False), nn.BatchNorm2d(24), nn.ReLU6())
        self.project = nn.Sequential(nn.Conv2d(24, 16, 1, bias=False), nn.BatchNorm2d(16))
        self.block = nn.Sequential(nn.Conv2d(16, 16, 3, 1, 2, dilation=2, groups=4), nn.Sigmoid())
        self.smooth = nn.AvgPool2d(3, 1, 1)

    def forward(self, x):
        x = self.pw(self.se(self.dw(self.stem(x))))
        x = self.project(self.dw5(self.expand(x)))
        x = x + self.block(x)
        return self.smooth(x)


def png_bytes(rgb):
    """Minimal 8-bit RGB PNG writer (rgb: H x W x 3 uint8 tensor)."""
    h, w, _ = rgb.shape
    raw = b"".join(b"\x00" + rgb[y].contiguous().numpy().tobytes() for y in range(h))

    def chunk(tag, data):
        return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", zlib.crc32(tag + data))

    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0))
            + chunk(b"IDAT", zlib.compress(raw, 9)) + chunk(b"IEND", b""))


def test_image(h, w):
    ys = torch.arange(h, dtype=torch.float64).view(h, 1)
    xs = torch.arange(w, dtype=torch.float64).view(1, w)
    r = 127.5 + 127.5 * torch.sin(xs * 0.21 + ys * 0.05)
    g = 255.0 * ((xs // 7 + ys // 5) % 2)
    b = (xs * 3 + ys * 2) % 256
    return torch.stack([r, g.expand(h, w), b], dim=-1).round().clamp(0, 255).to(torch.uint8)


def preprocess(rgb, size, norm):
    x = rgb.permute(2, 0, 1).unsqueeze(0).to(torch.float32)
    x = F.interpolate(x, size=(size, size), mode="bilinear", align_corners=False, antialias=False)
    x = x / 255.0
    mean = torch.tensor(norm["mean"]).view(1, 3, 1, 1)
    std = torch.tensor(norm["std"]).view(1, 3, 1, 1)
    return (x - mean) / std


def save_f32(path, t):
    with open(path, "wb") as f:
        f.write(t.detach().to(torch.float32).contiguous().numpy().astype("<f4").tobytes())


def export_case(out_dir, name, model, size, gen, image_name):
    model.eval()
    graph, sidecar = export_graph.export_module(model, size, name)
    export_graph.write(os.path.join(out_dir, name + ".flgr"), graph, sidecar)
    x = torch.randn(1, 3, size, size, generator=gen)
    with torch.no_grad():
        y = export_graph.run(model, x)
        rgb = test_image(size + 37, size + 21)
        z = export_graph.run(model, preprocess(rgb, size, sidecar["normalization"]))
        pooled = F.avg_pool2d(z, 2)
    save_f32(os.path.join(out_dir, name + ".input.f32"), x[0])
    save_f32(os.path.join(out_dir, name + ".output.f32"), y[0])
    # features in H x W x C flatten order
    save_f32(os.path.join(out_dir, name + ".features.f32"), pooled[0].permute(1, 2, 0).reshape(-1))
    with open(os.path.join(out_dir, image_name), "wb") as f:
        f.write(png_bytes(rgb))
    return {
        "name": name,
        "graph": name + ".flgr",
        "input": name + ".input.f32",
        "input_shape": list(x.shape[1:]),
        "output": name + ".output.f32",
        "output_shape": list(y.shape[1:]),
        "image": image_name,
        "features": name + ".features.f32",
        "max_abs_output": float(y.abs().max()),
    }


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--out-dir", required=True)
    p.add_argument("--torchvision", action="store_true")
    p.add_argument("--input-size", type=int, default=64)
    args = p.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    torch.manual_seed(0)
    gen = torch.Generator().manual_seed(1234)
    cases = []
    if args.torchvision:
        for name in ("resnet18", "mobilenet_v3_small"):
            model = export_graph.torchvision_backbone(name)
            randomize_bn(model, gen)
            cases.append(export_case(args.out_dir, name, model, args.input_size, gen, name + ".png"))
    else:
        for name, model in (("tiny_resnet", TinyResNet()), ("tiny_mobilenet", TinyMobileNet())):
            randomize_bn(model, gen)
            cases.append(export_case(args.out_dir, name, model, 64, gen, name + ".png"))
    with open(os.path.join(args.out_dir, "reference.json"), "w") as f:
        json.dump({"cases": cases}, f, indent=2)
        f.write("\n")
    for c in cases:
        print(f"{c['name']}: output {c['output_shape']} max |y| {c['max_abs_output']:.3g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
