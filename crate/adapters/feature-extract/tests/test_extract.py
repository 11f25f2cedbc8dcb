import os
import struct

import numpy as np
import pytest
from PIL import Image

from neuroattn_extract.cli import extract_features, main
from neuroattn_extract.frames import last_frame_of_each_second
from neuroattn_extract.tensorfile import read_tensor, write_tensor


def test_tensor_bytes_match_layout(tmp_path):
    p = tmp_path / "t.atn"
    write_tensor(p, np.array([[1.0, 2.0, 3.0]], dtype=np.float32))
    raw = p.read_bytes()
    assert raw[:8] == b"ATTN0001"
    assert struct.unpack_from("<I2Q", raw, 8) == (2, 1, 3)
    assert raw[28] == 1
    assert raw[29:] == struct.pack("<3f", 1.0, 2.0, 3.0)


def test_tensor_rejects_bad_input(tmp_path):
    with pytest.raises(ValueError):
        write_tensor(tmp_path / "a.atn", np.array([1, 2], dtype=np.int32))
    with pytest.raises(ValueError):
        write_tensor(tmp_path / "b.atn", np.array([np.nan]))
    (tmp_path / "c.atn").write_bytes(b"ATTN0001" + struct.pack("<IQ", 1, 4) + b"\x02" + b"\x00" * 8)
    with pytest.raises(ValueError, match="payload"):
        read_tensor(tmp_path / "c.atn")


def test_sampling_takes_last_frame_of_each_second():
    assert last_frame_of_each_second(75, 24) == [23, 47, 71]
    assert last_frame_of_each_second(59, 29.97) == [28]
    assert last_frame_of_each_second(10, 24) == []
    with pytest.raises(ValueError):
        last_frame_of_each_second(10, 0)


@pytest.fixture(scope="module")
def zero_frames(tmp_path_factory):
    d = tmp_path_factory.mktemp("frames")
    Image.fromarray(np.zeros((720, 1280, 3), np.uint8)).save(d / "0000.png")
    return d


def test_zero_frame_extracts_deterministically(zero_frames, tmp_path):
    outs = []
    for run, layer in (("a", "layer4"), ("b", "res5")):
        extract_features(str(zero_frames), layer, str(tmp_path / run), seed=0)
        outs.append((tmp_path / run / "features" / "f000000.atn").read_bytes())
    assert outs[0] == outs[1]
    t = read_tensor(tmp_path / "a" / "features" / "f000000.atn")
    # stride 32 over 720x1280
    assert t.shape == (23, 40, 2048)
    assert t.dtype == np.float32 and np.all(np.isfinite(t))
    manifest = (tmp_path / "a" / "manifest.cfg").read_text().splitlines()
    assert "stimulus = 720x1280" in manifest
    assert "frame = train 0 features/f000000.atn" in manifest
    assert any(line.startswith("weights_sha256 = ") and len(line) == 17 + 64 for line in manifest)


def test_cli_errors(zero_frames, tmp_path):
    assert main(["--in", str(tmp_path / "missing"), "--out", str(tmp_path / "o")]) == 1
    assert main(["--in", str(zero_frames), "--out", str(tmp_path / "o"), "--seed", "0", "--layer", "res9"]) == 2
    assert main(["--in", str(zero_frames), "--out", str(tmp_path / "o")]) == 2
    assert not os.path.exists(tmp_path / "o" / "manifest.cfg")
