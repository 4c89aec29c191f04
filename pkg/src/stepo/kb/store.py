"""Flat embedding store: ``embeddings.meta.json`` + row-major little-endian float32 ``embeddings.bin``."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np


class EmbeddingStore:
    def __init__(self, ids: Sequence[str], vectors) -> None:
        vectors = np.asarray(vectors, dtype="<f4")
        if vectors.ndim != 2 or vectors.shape[0] != len(ids):
            raise ValueError(f"expected {len(ids)} rows, got array of shape {vectors.shape}")
        self.ids = tuple(ids)
        self.vectors = vectors
        self.vectors.setflags(write=False)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    def __getitem__(self, index: int) -> np.ndarray:
        return self.vectors[index]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, EmbeddingStore)
            and self.ids == other.ids
            and self.vectors.shape == other.vectors.shape
            and bool(np.array_equal(self.vectors, other.vectors))
        )

    def __repr__(self) -> str:
        return f"EmbeddingStore(count={len(self)}, dim={self.dim})"

    @classmethod
    def load(cls, directory: str | Path, stem: str = "embeddings") -> "EmbeddingStore":
        directory = Path(directory)
        meta = json.loads((directory / f"{stem}.meta.json").read_text(encoding="utf-8"))
        dim, count, ids = int(meta["dim"]), int(meta["count"]), list(meta["ids"])
        if len(ids) != count:
            raise ValueError(f"{stem}.meta.json: count {count} but {len(ids)} ids")
        raw = np.fromfile(directory / f"{stem}.bin", dtype="<f4")
        if raw.size != count * dim:
            raise ValueError(f"{stem}.bin: expected {count * dim} floats, found {raw.size}")
        return cls(ids, raw.reshape(count, dim))

    def save(self, directory: str | Path, stem: str = "embeddings") -> None:
        directory = Path(directory)
        meta = {"dim": self.dim, "count": len(self), "ids": list(self.ids)}
        (directory / f"{stem}.meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        self.vectors.astype("<f4").tofile(directory / f"{stem}.bin")
