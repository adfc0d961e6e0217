"""Dataset ingestion, the instance data model, and deterministic shuffle/split.

A dataset is a JSONL file, one record per line:

    {"text": "...", "aspect": "...", "from": 4, "to": 16, "polarity": -1, "id": 0}

``from``/``to`` are half-open character offsets into ``text`` (Unicode scalar
values, not bytes) locating the aspect term. ``polarity`` is one of -1, 0, +1.
``id`` is optional; records without one get their file position. Unknown extra
fields are ignored.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

POLARITIES = (-1, 0, 1)


class DatasetParseError(ValueError):
    """A line of a dataset file is not a well-formed record."""


class DatasetValidationError(ValueError):
    """A record violates an instance invariant (span, aspect match, label)."""


@dataclass(frozen=True)
class Instance:
    """One sentence, the character span of its aspect term, and the gold polarity."""

    id: int
    text: str
    aspect_term: str
    aspect_char_span: tuple[int, int]
    polarity: int

    def __post_init__(self):
        frm, to = self.aspect_char_span
        if self.id < 0:
            raise DatasetValidationError(f"instance {self.id}: id must be non-negative")
        if not (0 <= frm < to <= len(self.text)):
            raise DatasetValidationError(
                f"instance {self.id}: span [{frm},{to}) out of bounds for text of length {len(self.text)}"
            )
        if self.text[frm:to] != self.aspect_term:
            raise DatasetValidationError(
                f"instance {self.id}: text[{frm}:{to}] = {self.text[frm:to]!r} "
                f"does not equal aspect term {self.aspect_term!r}"
            )
        if self.polarity not in POLARITIES:
            raise DatasetValidationError(
                f"instance {self.id}: polarity {self.polarity!r} not in {POLARITIES}"
            )


@dataclass(frozen=True)
class Dataset:
    name: str
    instances: tuple[Instance, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ids = [inst.id for inst in self.instances]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise DatasetValidationError(f"dataset {self.name!r}: duplicate instance id {dup}")

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)


def parse_dataset(path: str | Path, name: str | None = None) -> Dataset:
    """Parse a JSONL dataset file; instances come back in file order."""
    path = Path(path)
    instances = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            instances.append(_parse_record(line, lineno, default_id=len(instances)))
    return Dataset(name=name if name is not None else path.stem, instances=tuple(instances))


def _parse_record(line: str, lineno: int, default_id: int) -> Instance:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetParseError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(record, dict):
        raise DatasetParseError(f"line {lineno}: record must be a JSON object")
    for key, typ in (("text", str), ("aspect", str), ("from", int), ("to", int), ("polarity", int)):
        if key not in record:
            raise DatasetParseError(f"line {lineno}: missing required field {key!r}")
        if not isinstance(record[key], typ) or isinstance(record[key], bool):
            raise DatasetParseError(f"line {lineno}: field {key!r} must be {typ.__name__}")
    inst_id = record.get("id", default_id)
    if not isinstance(inst_id, int) or isinstance(inst_id, bool):
        raise DatasetParseError(f"line {lineno}: field 'id' must be int")
    try:
        return Instance(
            id=inst_id,
            text=record["text"],
            aspect_term=record["aspect"],
            aspect_char_span=(record["from"], record["to"]),
            polarity=record["polarity"],
        )
    except DatasetValidationError as exc:
        raise DatasetValidationError(f"line {lineno}: {exc}") from exc


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    """Serialize a dataset back to JSONL; round-trips through parse_dataset."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for inst in dataset:
            record = {
                "text": inst.text,
                "aspect": inst.aspect_term,
                "from": inst.aspect_char_span[0],
                "to": inst.aspect_char_span[1],
                "polarity": inst.polarity,
                "id": inst.id,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def shuffle_split(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then split off round(test_fraction * n) test instances."""
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n_test = round(test_fraction * n)
    if n_test == 0 or n_test == n:
        raise ValueError(
            f"test_fraction {test_fraction} on {n} instances leaves an empty side "
            f"({n_test} test instances)"
        )
    order = list(range(n))
    random.Random(seed).shuffle(order)
    test = tuple(dataset.instances[i] for i in order[:n_test])
    train = tuple(dataset.instances[i] for i in order[n_test:])
    return (
        Dataset(name=f"{dataset.name}-train", instances=train),
        Dataset(name=f"{dataset.name}-test", instances=test),
    )
