import os


def write_manifest(path, frames, stimulus, weights_sha256, responses="responses.atn", lag_seconds=4, split="train"):
    """`frames` is a list of (frame_id, relative tensor path)."""
    lines = [
        f"responses = {responses}",
        f"lag_seconds = {lag_seconds}",
        f"stimulus = {stimulus[0]}x{stimulus[1]}",
        f"weights_sha256 = {weights_sha256}",
    ]
    lines += [f"frame = {split} {fid} {rel}" for fid, rel in frames]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    return os.fspath(path)
