"""Single-file checkpoints.

Layout: the 8-byte magic, a little-endian u64 header length, a UTF-8 JSON
manifest, then every parameter as contiguous little-endian bytes. The
manifest records the architecture and, per parameter, its shape, dtype and
byte offset into the payload.
"""
import json
import logging
import os
import struct
import tempfile
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import torch

from form_rumor.constants import CHECKPOINT_MAGIC
from form_rumor.exceptions import CheckpointMismatchError
from form_rumor.models.model_dims import ModelDims
from form_rumor.models.train_config import Ablation
from form_rumor.network.form_model import FoRMModel

_header_length = struct.Struct("<Q")


def _little_endian(dtype: np.dtype) -> np.dtype:
    return np.dtype(dtype).newbyteorder("<")


def save_checkpoint(
    model: FoRMModel,
    path: Union[str, Path],
    metadata: Optional[Dict] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    params = {}
    chunks = []
    offset = 0
    for name, tensor in model.state_dict().items():
        array = tensor.detach().cpu().numpy()
        array = array.astype(_little_endian(array.dtype), copy=False)
        raw = array.tobytes(order="C")
        params[name] = {
            "shape": list(array.shape),
            "dtype": array.dtype.name,
            "byte_offset": offset,
        }
        chunks.append(raw)
        offset += len(raw)

    manifest = {
        "architecture": model.architecture(),
        "params": params,
        "metadata": metadata or {},
    }
    header = json.dumps(manifest, sort_keys=True).encode("utf-8")

    with tempfile.NamedTemporaryFile(
        "wb", dir=path.parent, prefix=path.name, suffix=".tmp", delete=False
    ) as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(_header_length.pack(len(header)))
        f.write(header)
        for raw in chunks:
            f.write(raw)
        tmp_name = f.name
    os.replace(tmp_name, path)

    logging.info(f"Checkpoint written | {path} | {len(params)} parameters")
    return path


def read_manifest(path: Union[str, Path]) -> Dict:
    with open(path, "rb") as f:
        manifest, _ = _read_header(f, path)
    return manifest


def _read_header(f, path):
    magic = f.read(len(CHECKPOINT_MAGIC))
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointMismatchError("<header>", f"{path} is not a checkpoint")
    (length,) = _header_length.unpack(f.read(_header_length.size))
    manifest = json.loads(f.read(length).decode("utf-8"))
    return manifest, f.tell()


def model_from_architecture(architecture: Dict) -> FoRMModel:
    return FoRMModel(
        ModelDims(**architecture["dims"]),
        top_k=architecture["top_k"],
        ablation=Ablation(architecture["ablation"]),
        mask_padding=architecture["mask_padding"],
        untie_wz=architecture["untie_wz"],
    )


def load_checkpoint(
    path: Union[str, Path], model: Optional[FoRMModel] = None
) -> FoRMModel:
    """Load parameters into ``model``, or into a model built from the manifest.

    Every parameter of the target model must be present with the same shape.
    """
    path = Path(path)
    with open(path, "rb") as f:
        manifest, payload_start = _read_header(f, path)
        payload = f.read()

    if model is None:
        model = model_from_architecture(manifest["architecture"])

    params = manifest["params"]
    state = {}
    for name, expected in model.state_dict().items():
        if name not in params:
            raise CheckpointMismatchError(name, "missing from checkpoint")
        entry = params[name]
        shape = tuple(entry["shape"])
        if shape != tuple(expected.shape):
            raise CheckpointMismatchError(
                name,
                f"shape {list(shape)} does not match configured "
                f"{list(expected.shape)}",
            )
        dtype = _little_endian(entry["dtype"])
        count = int(np.prod(shape, dtype=np.int64))
        array = np.frombuffer(
            payload, dtype=dtype, count=count, offset=entry["byte_offset"]
        ).reshape(shape)
        state[name] = torch.from_numpy(array.astype(dtype.newbyteorder("="))).to(
            expected.dtype
        )

    unexpected = sorted(set(params) - set(state))
    if unexpected:
        raise CheckpointMismatchError(unexpected[0], "not part of the configured model")

    model.load_state_dict(state)
    logging.debug(f"Checkpoint loaded | {path} | payload offset {payload_start}")
    return model
