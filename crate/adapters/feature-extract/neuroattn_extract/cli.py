import argparse
import os
import sys

from .frames import load_frames
from .manifest import write_manifest
from .tensorfile import write_tensor


def extract_features(in_path, layer, out_dir, weights=None, seed=None, responses="responses.atn", lag=4):
    from .network import Extractor

    net = Extractor(layer, weights=weights, seed=seed)
    os.makedirs(os.path.join(out_dir, "features"), exist_ok=True)
    frames, stimulus = [], None
    for fid, rgb in enumerate(load_frames(in_path)):
        if stimulus is None:
            stimulus = rgb.shape[:2]
        elif rgb.shape[:2] != stimulus:
            raise ValueError(f"frame {fid} is {rgb.shape[:2]}, expected {stimulus}")
        rel = os.path.join("features", f"f{fid:06d}.atn")
        write_tensor(os.path.join(out_dir, rel), net(rgb))
        frames.append((fid, rel))
    if not frames:
        raise ValueError(f"{in_path}: no frames sampled")
    return write_manifest(os.path.join(out_dir, "manifest.cfg"), frames, stimulus, net.sha256, responses, lag)


def main(argv=None):
    p = argparse.ArgumentParser(prog="extract", description="Per-frame network activations as neuroattn tensors.")
    p.add_argument("--in", dest="in_path", required=True, help="video file or directory of frame images")
    p.add_argument("--layer", default="layer4")
    p.add_argument("--out", required=True)
    p.add_argument("--weights", help="ResNet-50 state dict")
    p.add_argument("--seed", type=int, help="random-init weights instead of a state dict")
    p.add_argument("--responses", default="responses.atn", help="response matrix path written into the manifest")
    p.add_argument("--lag", type=int, default=4)
    a = p.parse_args(argv)
    if not os.path.exists(a.in_path):
        print(f"extract: {a.in_path}: no such file or directory", file=sys.stderr)
        return 1
    try:
        extract_features(a.in_path, a.layer, a.out, a.weights, a.seed, a.responses, a.lag)
    except ValueError as e:
        print(f"extract: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
