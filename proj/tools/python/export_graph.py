#!/usr/bin/env python3
"""Export a frozen torch vision backbone to the FLGR graph format.

The graph is traced with torch.fx; only the ops the C++ runtime knows are
accepted. BatchNorm layers are folded to a per-channel scale and shift.

    export_graph.py --model resnet18 --out r18.flgr
    export_graph.py --model mobilenet_v3_small --input-size 256 --out mnv3.flgr
    export_graph.py --model resnet18 --state-dict weights.pth --out r18.flgr

Without --state-dict the network keeps its seeded random initialisation, which
is enough for testing the runtime. Real pretrained weights must be supplied as
a local state dict (no downloads happen here).
"""

import argparse
import json
import operator
import struct
import sys

import torch
import torch.fx
import torch.nn as nn
import torch.nn.functional as F

MAGIC = b"FLGR"
VERSION = 1
IMAGENET = {"mean": [0.485, 0.456, 0.406], "std": [0.229, 0.224, 0.225]}


class ExportError(RuntimeError):
    pass


def _pair(v):
    if isinstance(v, (tuple, list)):
        return [int(v[0]), int(v[1])]
    return [int(v), int(v)]


class _Writer:
    def __init__(self):
        self.nodes = []
        self.tensors = []  # (name, np-like float32 tensor)

    def tensor(self, name, t):
        self.tensors.append((name, t.detach().to(torch.float32).contiguous().cpu()))
        return name

    def node(self, op, name, inputs, output, attrs=None, params=None):
        n = {"op": op, "name": name, "inputs": list(inputs), "output": output}
        if attrs:
            n["attrs"] = attrs
        if params:
            n["params"] = params
        self.nodes.append(n)

    def encode(self):
        desc = json.dumps({"nodes": self.nodes, "tensor_count": len(self.tensors)},
                          separators=(",", ":"), sort_keys=True).encode()
        out = bytearray(MAGIC)
        out += struct.pack("<HI", VERSION, len(desc))
        out += desc
        for name, t in self.tensors:
            raw = name.encode()
            out += struct.pack("<H", len(raw)) + raw
            out += struct.pack("<B", t.dim())
            out += struct.pack("<%dI" % t.dim(), *t.shape)
            out += t.numpy().astype("<f4").tobytes()
        return bytes(out)


_ACTIVATION_MODULES = {
    nn.ReLU: "relu",
    nn.ReLU6: "relu6",
    nn.Hardswish: "hardswish",
    nn.Hardsigmoid: "hardsigmoid",
    nn.Sigmoid: "sigmoid",
    nn.Identity: "identity",
    nn.Dropout: "identity",
}

_ACTIVATION_FUNCTIONS = {
    F.relu: "relu",
    torch.relu: "relu",
    F.relu6: "relu6",
    F.hardswish: "hardswish",
    F.hardsigmoid: "hardsigmoid",
    torch.sigmoid: "sigmoid",
    F.dropout: "identity",
}

_BINARY_FUNCTIONS = {
    operator.add: "add",
    operator.iadd: "add",
    torch.add: "add",
    operator.mul: "mul",
    operator.imul: "mul",
    torch.mul: "mul",
}

_METHODS = {"relu": "relu", "relu_": "relu", "sigmoid": "sigmoid", "add": "add",
            "add_": "add", "mul": "mul", "mul_": "mul"}


def _input_names(node):
    names = []
    for a in node.args:
        if isinstance(a, torch.fx.Node):
            names.append(a.name)
    return names


def _module_node(w, name, mod, inputs, output):
    if isinstance(mod, nn.Conv2d):
        if mod.padding_mode != "zeros" or isinstance(mod.padding, str):
            raise ExportError(f"{name}: only explicit zero padding is supported")
        params = {"weight": w.tensor(name + ".weight", mod.weight)}
        if mod.bias is not None:
            params["bias"] = w.tensor(name + ".bias", mod.bias)
        w.node("conv2d", name, inputs, output,
               {"stride": _pair(mod.stride), "padding": _pair(mod.padding),
                "dilation": _pair(mod.dilation), "groups": int(mod.groups)}, params)
    elif isinstance(mod, nn.BatchNorm2d):
        var = mod.running_var if mod.running_var is not None else torch.ones(mod.num_features)
        mean = mod.running_mean if mod.running_mean is not None else torch.zeros(mod.num_features)
        gamma = mod.weight if mod.weight is not None else torch.ones(mod.num_features)
        beta = mod.bias if mod.bias is not None else torch.zeros(mod.num_features)
        scale = gamma.double() / torch.sqrt(var.double() + mod.eps)
        shift = beta.double() - mean.double() * scale
        w.node("batch_norm", name, inputs, output, None,
               {"scale": w.tensor(name + ".scale", scale), "shift": w.tensor(name + ".shift", shift)})
    elif type(mod) in _ACTIVATION_MODULES:
        w.node(_ACTIVATION_MODULES[type(mod)], name, inputs, output)
    elif isinstance(mod, nn.MaxPool2d):
        if mod.ceil_mode or _pair(mod.dilation) != [1, 1]:
            raise ExportError(f"{name}: ceil_mode/dilation pooling is not supported")
        w.node("max_pool2d", name, inputs, output,
               {"kernel": _pair(mod.kernel_size),
                "stride": _pair(mod.stride if mod.stride is not None else mod.kernel_size),
                "padding": _pair(mod.padding)})
    elif isinstance(mod, nn.AvgPool2d):
        if mod.ceil_mode or (not mod.count_include_pad and _pair(mod.padding) != [0, 0]):
            raise ExportError(f"{name}: unsupported avg_pool2d configuration")
        w.node("avg_pool2d", name, inputs, output,
               {"kernel": _pair(mod.kernel_size),
                "stride": _pair(mod.stride if mod.stride is not None else mod.kernel_size),
                "padding": _pair(mod.padding)})
    elif isinstance(mod, nn.AdaptiveAvgPool2d):
        if _pair(mod.output_size) != [1, 1]:
            raise ExportError(f"{name}: only global adaptive average pooling is supported")
        w.node("global_avg_pool", name, inputs, output)
    else:
        raise ExportError(f"{name}: unsupported module {type(mod).__name__}")


def export_module(model, input_size, model_id, normalization=IMAGENET):
    """Returns (graph bytes, sidecar dict) for an eval-mode module."""
    model = model.eval()
    gm = model if isinstance(model, torch.fx.GraphModule) else torch.fx.symbolic_trace(model)
    modules = dict(gm.named_modules())
    w = _Writer()
    input_name = None
    output_name = None
    for node in gm.graph.nodes:
        if node.op == "placeholder":
            if input_name is not None:
                raise ExportError("graph must have exactly one input")
            input_name = node.name
        elif node.op == "call_module":
            _module_node(w, node.target, modules[node.target], _input_names(node), node.name)
        elif node.op == "call_function":
            fn = node.target
            if fn in _BINARY_FUNCTIONS:
                if len(_input_names(node)) != 2:
                    raise ExportError(f"{node.name}: scalar operands are not supported")
                w.node(_BINARY_FUNCTIONS[fn], node.name, _input_names(node), node.name)
            elif fn in _ACTIVATION_FUNCTIONS:
                w.node(_ACTIVATION_FUNCTIONS[fn], node.name, _input_names(node)[:1], node.name)
            elif fn is F.adaptive_avg_pool2d:
                if _pair(node.args[1]) != [1, 1]:
                    raise ExportError(f"{node.name}: only global adaptive pooling is supported")
                w.node("global_avg_pool", node.name, _input_names(node)[:1], node.name)
            else:
                raise ExportError(f"{node.name}: unsupported function {fn}")
        elif node.op == "call_method":
            if node.target not in _METHODS:
                raise ExportError(f"{node.name}: unsupported method {node.target}")
            w.node(_METHODS[node.target], node.name, _input_names(node), node.name)
        elif node.op == "output":
            result = node.args[0]
            if isinstance(result, dict):
                result = list(result.values())
            if isinstance(result, (list, tuple)):
                if len(result) != 1:
                    raise ExportError("graph must have exactly one output")
                result = result[0]
            output_name = result.name
        else:
            raise ExportError(f"{node.name}: unsupported node kind {node.op}")

    with torch.no_grad():
        out = run(gm, torch.zeros(1, 3, input_size, input_size))
    sidecar = {
        "id": model_id,
        "input": input_name,
        "output": output_name,
        "input_size": [input_size, input_size],
        "output_shape": [int(out.shape[2]), int(out.shape[3]), int(out.shape[1])],
        "normalization": normalization,
    }
    return w.encode(), sidecar


def run(model, x):
    out = model(x)
    if isinstance(out, dict):
        out = next(iter(out.values()))
    if isinstance(out, (list, tuple)):
        out = out[0]
    return out


def write(path, graph, sidecar):
    with open(path, "wb") as f:
        f.write(graph)
    with open(str(path) + ".json", "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")


def torchvision_backbone(name):
    """Penultimate feature extractor of a torchvision classifier."""
    import torchvision
    from torchvision.models.feature_extraction import create_feature_extractor

    if name == "resnet18":
        return create_feature_extractor(torchvision.models.resnet18(weights=None),
                                        return_nodes={"layer4": "out"})
    if name == "resnet50":
        return create_feature_extractor(torchvision.models.resnet50(weights=None),
                                        return_nodes={"layer4": "out"})
    if name == "mobilenet_v3_small":
        return torchvision.models.mobilenet_v3_small(weights=None).features
    if name == "mobilenet_v3_large":
        return torchvision.models.mobilenet_v3_large(weights=None).features
    raise ExportError(f"unknown model '{name}'")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--model", required=True,
                   help="resnet18, resnet50, mobilenet_v3_small or mobilenet_v3_large")
    p.add_argument("--state-dict", help="local .pth state dict for the full classifier")
    p.add_argument("--input-size", type=int, default=256)
    p.add_argument("--seed", type=int, default=0, help="init seed when no weights are given")
    p.add_argument("--id", help="backbone id recorded in the sidecar")
    p.add_argument("--out", required=True)
    args = p.parse_args(argv)

    torch.manual_seed(args.seed)
    model = torchvision_backbone(args.model)
    if args.state_dict:
        state = torch.load(args.state_dict, map_location="cpu")
        missing, _ = model.load_state_dict(state, strict=False)
        if missing:
            raise ExportError(f"state dict is missing {len(missing)} tensors, e.g. {missing[0]}")
    model_id = args.id or (args.model + ("" if args.state_dict else f"-random{args.seed}"))
    graph, sidecar = export_module(model, args.input_size, model_id)
    write(args.out, graph, sidecar)
    print(f"wrote {args.out} ({len(graph)} bytes), output {sidecar['output_shape']}")
    return 0


if __name__ == "__main__":
    try:
        sys.exit(main())
    except ExportError as e:
        print(f"error: {e}", file=sys.stderr)
        sys.exit(2)
