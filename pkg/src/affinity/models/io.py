"""Versioned, checksummed model container.

Layout: one magic/version/checksum line, one JSON manifest line, then the
raw little-endian bytes of every array in manifest order.  Writing the same
fitted model twice produces identical bytes, and the round-trip restores
parameters bit-exactly.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from ..errors import ChecksumMismatch, FormatVersionMismatch, IOFailure
from .linear import HingeSGDClassifier, RidgeOvRClassifier
from .mlp import MLPClassifier
from .naive_bayes import GaussianNBClassifier
from .neighbors import KNNClassifier
from .tree import DecisionTreeClassifier
from .voting import VotingEnsembleClassifier

MODEL_MAGIC = b"#affinity-model"
MODEL_VERSION = b"v1"

KIND_TO_CLASS = {
    "ridge": RidgeOvRClassifier,
    "sgd": HingeSGDClassifier,
    "mlp": MLPClassifier,
    "knn": KNNClassifier,
    "tree": DecisionTreeClassifier,
    "gnb": GaussianNBClassifier,
    "ensemble": VotingEnsembleClassifier,
}
CLASS_TO_KIND = {cls: kind for kind, cls in KIND_TO_CLASS.items()}


def _jsonable_params(est) -> dict:
    params = {}
    for key, value in est.get_params(deep=False).items():
        if key == "members":
            continue  # reconstructed structurally
        if isinstance(value, tuple):
            value = list(value)
        params[key] = value
    return params


def _section(est, prefix: str, arrays_out: dict) -> dict:
    kind = CLASS_TO_KIND[type(est)]
    section = {"kind": kind, "params": _jsonable_params(est)}
    if hasattr(est, "_scalars"):
        section["scalars"] = est._scalars()
    for name, arr in est._arrays().items():
        arrays_out[prefix + name] = np.ascontiguousarray(arr)
    return section


def _restore_section(section: dict, prefix: str, arrays: dict):
    cls = KIND_TO_CLASS[section["kind"]]
    params = dict(section["params"])
    if "hidden" in params:
        params["hidden"] = tuple(params["hidden"])
    est = cls(**params)
    own = {
        name[len(prefix):]: arr
        for name, arr in arrays.items()
        if name.startswith(prefix) and "." not in name[len(prefix):]
    }
    if "scalars" in section:
        est._restore(own, section["scalars"])
    else:
        est._restore(own)
    return est


def save_model(est, path, meta: dict | None = None) -> None:
    """Write any fitted toolkit classifier (or ensemble) to a container file.

    ``meta`` lands in the manifest untouched (provenance: seed, input
    checksums); it does not participate in restoring the model.
    """
    arrays: dict[str, np.ndarray] = {}
    if isinstance(est, VotingEnsembleClassifier):
        manifest = {
            "kind": "ensemble",
            "params": _jsonable_params(est),
            "members": [
                {"name": name, **_section(member, f"m{i}.", arrays)}
                for i, (name, member) in enumerate(est.members_)
            ],
        }
    else:
        manifest = _section(est, "", arrays)
    if meta:
        manifest["meta"] = meta
    table = []
    payload = bytearray()
    for name in sorted(arrays):
        arr = arrays[name]
        raw = arr.tobytes()
        table.append({"name": name, "dtype": arr.dtype.str,
                      "shape": list(arr.shape), "nbytes": len(raw)})
        payload.extend(raw)
    manifest["arrays"] = table
    manifest_line = json.dumps(manifest, sort_keys=True, separators=(",", ":"))
    body = manifest_line.encode("utf-8") + b"\n" + bytes(payload)
    digest = hashlib.sha256(body).hexdigest().encode("ascii")
    try:
        with open(path, "wb") as fh:
            fh.write(MODEL_MAGIC + b" " + MODEL_VERSION + b" " + digest + b"\n")
            fh.write(body)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def load_model(path):
    """Read a container file back into a fitted classifier."""
    try:
        with open(path, "rb") as fh:
            head = fh.readline()
            body = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    parts = head.rstrip(b"\n").split(b" ")
    if len(parts) != 3 or parts[0] != MODEL_MAGIC:
        raise FormatVersionMismatch("not a model container")
    if parts[1] != MODEL_VERSION:
        raise FormatVersionMismatch(f"unsupported model version {parts[1]!r}")
    if hashlib.sha256(body).hexdigest().encode("ascii") != parts[2]:
        raise ChecksumMismatch("model checksum does not match its content")
    manifest_raw, _, payload = body.partition(b"\n")
    manifest = json.loads(manifest_raw.decode("utf-8"))
    arrays: dict[str, np.ndarray] = {}
    offset = 0
    for entry in manifest["arrays"]:
        n = entry["nbytes"]
        chunk = payload[offset:offset + n]
        if len(chunk) != n:
            raise ChecksumMismatch("model payload is truncated")
        offset += n
        arrays[entry["name"]] = np.frombuffer(
            chunk, dtype=np.dtype(entry["dtype"])
        ).reshape(entry["shape"]).copy()
    if manifest["kind"] == "ensemble":
        est = VotingEnsembleClassifier(**manifest["params"])
        est.members_ = [
            (m["name"], _restore_section(m, f"m{i}.", arrays))
            for i, m in enumerate(manifest["members"])
        ]
        est.classes_ = np.unique(np.concatenate(
            [member.classes_ for _, member in est.members_]
        ))
        est.n_features_in_ = est.members_[0][1].n_features_in_
        return est
    return _restore_section(manifest, "", arrays)
