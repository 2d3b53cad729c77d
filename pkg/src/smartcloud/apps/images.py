"""Base64/JPEG frame decoding for the image offloading path."""

from __future__ import annotations

import base64
import binascii
import hashlib
import io
from dataclasses import dataclass

from PIL import Image as PILImage
from PIL import UnidentifiedImageError

DATA_URL_PREFIX = "data:image/jpeg;base64,"
JPEG_MAGIC = b"\xff\xd8\xff"


class ImageError(Exception):
    """Base class for frame decoding problems."""


class BadPrefix(ImageError):
    """The data-URL scheme is not the supported jpeg/base64 one."""


class BadBase64(ImageError):
    """The body is not valid base64."""


class BadJpeg(ImageError):
    """The decoded bytes are not a decodable image."""


@dataclass(frozen=True)
class Image:
    """An 8-bit RGB raster, row-major."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self) -> None:
        if len(self.pixels) != self.width * self.height * 3:
            raise ImageError(
                f"pixel buffer length {len(self.pixels)} != {self.width}x{self.height}x3"
            )

    def digest(self) -> str:
        """Content digest over dimensions and pixel data (classifier fixture key)."""
        h = hashlib.sha256()
        h.update(f"{self.width}x{self.height}:".encode("ascii"))
        h.update(self.pixels)
        return h.hexdigest()


def decode_jpeg(raw: bytes) -> Image:
    """Decode compressed image bytes to RGB."""
    try:
        with PILImage.open(io.BytesIO(raw)) as im:
            rgb = im.convert("RGB")
            return Image(rgb.width, rgb.height, rgb.tobytes())
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise BadJpeg(f"undecodable image payload: {exc}") from exc


def decode_base64_image(text: str) -> Image:
    """Decode a bare base64 body or a ``data:image/jpeg;base64,`` URL to an Image."""
    if text.startswith("data:"):
        if not text.startswith(DATA_URL_PREFIX):
            scheme = text.split(",", 1)[0]
            raise BadPrefix(f"unsupported data-URL scheme {scheme!r}")
        body = text[len(DATA_URL_PREFIX):]
    else:
        body = text
    try:
        raw = base64.b64decode(body, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise BadBase64(f"body is not valid base64: {exc}") from exc
    return decode_jpeg(raw)


def encode_base64_image(raw_jpeg: bytes, data_url: bool = True) -> str:
    """Inverse convenience for simulated camera robots."""
    body = base64.b64encode(raw_jpeg).decode("ascii")
    return DATA_URL_PREFIX + body if data_url else body
