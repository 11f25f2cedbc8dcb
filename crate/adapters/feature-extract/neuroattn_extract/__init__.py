"""Runs an image-recognition network over stimulus frames and writes the
per-frame activations in the neuroattn tensor format, plus a manifest."""

from .tensorfile import read_tensor, write_tensor
from .manifest import write_manifest

__all__ = ["read_tensor", "write_tensor", "write_manifest"]
