#!/usr/bin/env python3
"""Export ImageNet backbone weights in the layout the C++ models expect.

Writes <out>/<backbone>.pt (torch.save of a flat dict of tensors). Point
HISTO_WEIGHTS_DIR at <out> to use them with model.pretrained = true.

  python3 tools/export_weights.py --out weights
  python3 tools/export_weights.py --out ref --random --reference   # no download

--reference also writes <backbone>_reference.pt holding a fixed input and the
four stage activations of the source model, which the backbone tests compare
against.
"""

import argparse
import os
import re
import sys

import torch

BACKBONES = ["resnet50", "efficientnet", "convnexttiny_v2", "xception", "inception_resnet"]
HEAD_PREFIXES = ("fc.", "classifier.", "head.", "classif.", "last_linear.")


def build(name, pretrained):
    if name in ("resnet50", "efficientnet"):
        import torchvision

        if name == "resnet50":
            return torchvision.models.resnet50(weights="IMAGENET1K_V1" if pretrained else None)
        return torchvision.models.efficientnet_b0(weights="IMAGENET1K_V1" if pretrained else None)
    import timm

    timm_name = {
        "convnexttiny_v2": "convnextv2_tiny.fcmae_ft_in1k",
        "xception": "legacy_xception",
        "inception_resnet": "inception_resnet_v2",
    }[name]
    return timm.create_model(timm_name, pretrained=pretrained)


def convnext_key(k, v):
    # timm layout -> downsample_layers / stages layout
    k = re.sub(r"^stem\.", "downsample_layers.0.", k)
    k = re.sub(r"^stages\.(\d+)\.downsample\.", r"downsample_layers.\1.", k)
    m = re.match(r"^stages\.(\d+)\.blocks\.(\d+)\.(.*)$", k)
    if m:
        rest = m.group(3)
        rest = rest.replace("conv_dw.", "dwconv.").replace("mlp.fc1.", "pwconv1.").replace("mlp.fc2.", "pwconv2.")
        if rest == "mlp.grn.weight":
            rest, v = "grn.gamma", v.reshape(1, 1, 1, -1)
        elif rest == "mlp.grn.bias":
            rest, v = "grn.beta", v.reshape(1, 1, 1, -1)
        k = f"stages.{m.group(1)}.{m.group(2)}.{rest}"
    return k, v


def convert(name, state):
    out = {}
    for k, v in state.items():
        if k.startswith(HEAD_PREFIXES):
            continue
        if name == "convnexttiny_v2":
            k, v = convnext_key(k, v)
        out[k] = v.detach().clone().contiguous()
    return out


def stages(name, m, x):
    if name == "resnet50":
        y = m.maxpool(m.relu(m.bn1(m.conv1(x))))
        res = []
        for layer in (m.layer1, m.layer2, m.layer3, m.layer4):
            y = layer(y)
            res.append(y)
        return res
    if name == "efficientnet":
        res, y = [], x
        for i, f in enumerate(m.features):
            y = f(y)
            if i in (2, 3, 5):
                res.append(y)
        return res + [y]
    if name == "convnexttiny_v2":
        y, res = m.stem(x), []
        for s in m.stages:
            y = s(y)
            res.append(y)
        return res
    if name == "xception":
        y = m.act2(m.bn2(m.conv2(m.act1(m.bn1(m.conv1(x))))))
        s0 = y = m.block1(y)
        s1 = y = m.block2(y)
        y = m.block3(y)
        for i in range(4, 12):
            y = getattr(m, f"block{i}")(y)
        s2 = y
        y = m.act3(m.bn3(m.conv3(m.block12(y))))
        return [s0, s1, s2, m.act4(m.bn4(m.conv4(y)))]
    y = m.maxpool_3a(m.conv2d_2b(m.conv2d_2a(m.conv2d_1a(x))))
    s0 = y = m.conv2d_4a(m.conv2d_3b(y))
    s1 = y = m.repeat(m.mixed_5b(m.maxpool_5a(y)))
    s2 = y = m.repeat_1(m.mixed_6a(y))
    y = m.block8(m.repeat_2(m.mixed_7a(y)))
    return [s0, s1, s2, m.conv2d_7b(y)]


def randomise_norms(m, gen):
    # Non-trivial normalisation statistics so eps or ordering mistakes show up.
    for mod in m.modules():
        if isinstance(mod, torch.nn.modules.batchnorm._BatchNorm):
            mod.running_mean.copy_(torch.randn(mod.running_mean.shape, generator=gen) * 0.1)
            mod.running_var.copy_(torch.rand(mod.running_var.shape, generator=gen) + 0.5)
        for pname in ("weight", "bias"):
            p = getattr(mod, pname, None)
            if isinstance(mod, (torch.nn.modules.batchnorm._BatchNorm, torch.nn.LayerNorm)) and p is not None:
                p.copy_(p + torch.randn(p.shape, generator=gen) * 0.1)
        if type(mod).__name__ == "GlobalResponseNorm":
            mod.weight.copy_(torch.randn(mod.weight.shape, generator=gen) * 0.1)
            mod.bias.copy_(torch.randn(mod.bias.shape, generator=gen) * 0.1)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", required=True)
    ap.add_argument("--backbone", nargs="*", default=BACKBONES, choices=BACKBONES)
    ap.add_argument("--random", action="store_true", help="random initialisation instead of ImageNet weights")
    ap.add_argument("--reference", action="store_true", help="also write stage activations for a fixed input")
    ap.add_argument("--size", type=int, default=96, help="reference input side")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    torch.manual_seed(args.seed)
    for name in args.backbone:
        m = build(name, pretrained=not args.random).eval()
        if args.random:
            with torch.no_grad():
                randomise_norms(m, torch.Generator().manual_seed(args.seed + 1))
        weights = convert(name, m.state_dict())
        torch.save(weights, os.path.join(args.out, f"{name}.pt"))
        msg = f"{name}: {len(weights)} tensors"
        if args.reference:
            x = torch.randn(1, 3, args.size, args.size, generator=torch.Generator().manual_seed(args.seed + 2))
            with torch.no_grad():
                outs = stages(name, m, x)
            ref = {"input": x}
            ref.update({f"stage{i}": o.contiguous() for i, o in enumerate(outs)})
            torch.save(ref, os.path.join(args.out, f"{name}_reference.pt"))
            msg += ", stages " + " ".join(str(tuple(o.shape[1:])) for o in outs)
        print(msg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
