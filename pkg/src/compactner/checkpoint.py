"""Self-describing binary checkpoints.

Layout: magic "CDT1", a 4-byte little-endian header length, a UTF-8 JSON
header (version, config, tagset, vocab, array manifest with shapes and
byte offsets, provenance), then the named arrays concatenated as
little-endian float32 in manifest order. Endianness is fixed by the
format, so files load identically on any platform.
"""

import json
import struct

import numpy as np

from .autodiff import Tensor
from .data import TagSet, Vocab
from .errors import FormatError
from .model import ModelBundle, TaggerConfig, TaggerParams

MAGIC = b"CDT1"
VERSION = 1


def save_checkpoint(bundle, path, provenance=None):
    arrays = bundle.params.named()
    manifest = []
    offset = 0
    blobs = []
    for name, tensor in arrays.items():
        blob = np.ascontiguousarray(tensor.data, dtype="<f4").tobytes()
        manifest.append({
            "name": name,
            "shape": list(tensor.data.shape),
            "offset": offset,
            "nbytes": len(blob),
        })
        blobs.append(blob)
        offset += len(blob)
    header = {
        "version": VERSION,
        "config": bundle.config.to_dict(),
        "tagset": bundle.tagset.labels,
        "vocab": {"words": bundle.vocab.words, "chars": bundle.vocab.chars},
        "arrays": manifest,
        "provenance": provenance or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r}, expected {MAGIC!r}")
    if len(raw) < 8:
        raise FormatError("truncated file: header length missing")
    (header_len,) = struct.unpack("<I", raw[4:8])
    if len(raw) < 8 + header_len:
        raise FormatError(f"truncated header: expected {header_len} bytes, got {len(raw) - 8}")
    try:
        header = json.loads(raw[8:8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable header: {exc}") from exc
    if header.get("version") != VERSION:
        raise FormatError(f"unsupported version {header.get('version')}, expected {VERSION}")

    payload = raw[8 + header_len:]
    expected = sum(entry["nbytes"] for entry in header["arrays"])
    if len(payload) != expected:
        raise FormatError(f"corrupt payload: expected {expected} bytes, got {len(payload)}")

    arrays = {}
    for entry in header["arrays"]:
        seg = payload[entry["offset"]:entry["offset"] + entry["nbytes"]]
        arr = np.frombuffer(seg, dtype="<f4").reshape(entry["shape"])
        arrays[entry["name"]] = Tensor(arr.astype(np.float32), requires_grad=True)

    config = TaggerConfig.from_dict(header["config"])
    tagset = TagSet(header["tagset"])
    vocab = Vocab(header["vocab"]["words"], header["vocab"]["chars"])
    bundle = ModelBundle(TaggerParams(arrays), config, vocab, tagset)
    return bundle, header.get("provenance", {})
