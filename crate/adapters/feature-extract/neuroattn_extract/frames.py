import os

import cv2
import numpy as np
from PIL import Image

IMAGE_EXTS = {".png", ".jpg", ".jpeg", ".bmp", ".ppm", ".tif", ".tiff"}


def last_frame_of_each_second(n_frames, fps):
    """Index of the last frame inside every whole second of the video."""
    if fps <= 0:
        raise ValueError(f"sampling rate must be positive, got {fps}")
    seconds = int(n_frames / fps + 1e-9)
    return [min(int((k + 1) * fps + 1e-9) - 1, n_frames - 1) for k in range(seconds)]


def load_frames(path):
    """RGB uint8 frames from a directory of images (one per second, sorted
    by name) or from a video file."""
    if os.path.isdir(path):
        names = sorted(n for n in os.listdir(path) if os.path.splitext(n)[1].lower() in IMAGE_EXTS)
        if not names:
            raise ValueError(f"{path}: no images")
        for n in names:
            yield np.asarray(Image.open(os.path.join(path, n)).convert("RGB"))
        return
    cap = cv2.VideoCapture(path)
    if not cap.isOpened():
        raise ValueError(f"{path}: unreadable input")
    total = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
    wanted = set(last_frame_of_each_second(total, cap.get(cv2.CAP_PROP_FPS)))
    i = 0
    while True:
        ok, bgr = cap.read()
        if not ok:
            break
        if i in wanted:
            yield cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB)
        i += 1
    cap.release()
