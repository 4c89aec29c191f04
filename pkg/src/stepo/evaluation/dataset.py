"""Outfit dataset ingestion with per-user deterministic train/test splits.

Layout::

    <root>/items.json                   array of garment records
    <root>/users/<user_id>/outfits.json array of {"outfit_id", "item_ids"}
    <root>/embeddings.meta.json + .bin  optional item embeddings
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from stepo.kb.io import entity_to_dict, parse_entity
from stepo.kb.model import GarmentEntity
from stepo.kb.store import EmbeddingStore

log = logging.getLogger(__name__)

FULL_CORPUS_MIN_OUTFITS = 250
DEFAULT_MIN_OUTFITS = 10


class DatasetError(ValueError):
    def __init__(self, message: str, file: str = "", locus: str = "") -> None:
        self.file, self.locus = file, locus
        where = ":".join(x for x in (file, locus) if x)
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True)
class Outfit:
    outfit_id: str
    item_ids: tuple[str, ...]


@dataclass(frozen=True)
class UserSplit:
    user_id: str
    train: tuple[Outfit, ...]
    test: tuple[Outfit, ...]


@dataclass(frozen=True)
class Dataset:
    users: tuple[UserSplit, ...]
    item_pool: tuple[GarmentEntity, ...]
    split_seed: int
    embeddings: EmbeddingStore | None = None

    @property
    def items(self) -> dict[str, GarmentEntity]:
        return {e.id: e for e in self.item_pool}


def is_complete(outfit: Outfit, items: Mapping[str, GarmentEntity]) -> bool:
    """At least two items, at least one top and exactly one bottom."""
    roles = [items[i].role for i in outfit.item_ids]
    return len(roles) >= 2 and roles.count("bottom") == 1 and "top" in roles


def split_outfits(outfits: Sequence[Outfit], ratio: float, seed: int, user_id: str) -> tuple[tuple[Outfit, ...], tuple[Outfit, ...]]:
    order = sorted(outfits, key=lambda o: o.outfit_id)
    random.Random(f"{seed}:{user_id}").shuffle(order)
    n_train = round(ratio * len(order))
    return tuple(order[:n_train]), tuple(order[n_train:])


def _load_json(path: Path, root: Path):
    rel = str(path.relative_to(root))
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DatasetError("file not found", rel) from None
    except json.JSONDecodeError as exc:
        raise DatasetError(f"malformed JSON: {exc.msg}", rel, f"line {exc.lineno}") from None


def read_items(root: Path) -> list[GarmentEntity]:
    raw = _load_json(root / "items.json", root)
    if not isinstance(raw, list):
        raise DatasetError("expected an array of items", "items.json")
    out = []
    for i, rec in enumerate(raw):
        try:
            out.append(parse_entity(rec))
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"malformed item: {exc}", "items.json", f"[{i}]") from None
    return out


def read_outfits(path: Path, root: Path, items: Mapping[str, GarmentEntity]) -> list[Outfit]:
    raw = _load_json(path, root)
    rel = str(path.relative_to(root))
    if not isinstance(raw, list):
        raise DatasetError("expected an array of outfits", rel)
    out = []
    for i, rec in enumerate(raw):
        try:
            outfit = Outfit(str(rec["outfit_id"]), tuple(str(x) for x in rec["item_ids"]))
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"malformed outfit: {exc}", rel, f"[{i}]") from None
        unknown = [x for x in outfit.item_ids if x not in items]
        if unknown:
            raise DatasetError(f"unknown item ids {unknown}", rel, f"[{i}] {outfit.outfit_id}")
        out.append(outfit)
    return out


def ingest_dataset(
    path: str | Path,
    min_outfits: int = DEFAULT_MIN_OUTFITS,
    split_ratio: float = 0.8,
    seed: int = 0,
) -> Dataset:
    """Read, filter (incomplete outfits, small users) and split a dataset directory."""
    if not 0 <= split_ratio <= 1:
        raise ValueError("split_ratio must lie in [0, 1]")
    root = Path(path)
    if not root.is_dir():
        raise DatasetError("dataset directory not found", str(root))
    pool = read_items(root)
    items = {e.id: e for e in pool}
    users = []
    user_dirs = sorted(p for p in (root / "users").glob("*") if p.is_dir()) if (root / "users").is_dir() else []
    for udir in user_dirs:
        outfits = [o for o in read_outfits(udir / "outfits.json", root, items) if is_complete(o, items)]
        if len(outfits) < min_outfits:
            log.info("dropping user %s: %d complete outfits < %d", udir.name, len(outfits), min_outfits)
            continue
        train, test = split_outfits(outfits, split_ratio, seed, udir.name)
        users.append(UserSplit(udir.name, train, test))
    if not users:
        raise DatasetError(f"no user has at least {min_outfits} complete outfits", str(root))
    store = None
    if (root / "embeddings.meta.json").exists():
        store = EmbeddingStore.load(root)
    return Dataset(tuple(users), tuple(pool), seed, store)


def write_dataset(
    path: str | Path,
    items: Iterable[GarmentEntity],
    outfits: Mapping[str, Sequence[Outfit]],
    embeddings: EmbeddingStore | None = None,
) -> None:
    root = Path(path)
    (root / "users").mkdir(parents=True, exist_ok=True)
    records = [entity_to_dict(e) for e in sorted(items, key=lambda e: e.id)]
    (root / "items.json").write_text(json.dumps(records, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    for user_id, user_outfits in sorted(outfits.items()):
        udir = root / "users" / user_id
        udir.mkdir(exist_ok=True)
        recs = [{"outfit_id": o.outfit_id, "item_ids": list(o.item_ids)} for o in user_outfits]
        (udir / "outfits.json").write_text(json.dumps(recs, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    if embeddings is not None:
        embeddings.save(root)
