"""Structured binary classification codes.

Each class is defined by a prototype: a contiguous block of ones whose length
is codeword_length / num_classes.  A codeword is built by optionally clearing
a fixed number of the prototype-block ones (perturbation) and scattering a
fixed number of random ones over the positions outside the block (random
fill).  The fill never touches the class's own block, so the block region of
a generated codeword is exactly the perturbed prototype.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .binio import read_container, write_container
from .errors import ConfigError, DataError, GenerationError, UsageError

DISTRIBUTED_TARGET_LENGTH = 50
DISTRIBUTED_TARGET_WEIGHT = 25
DISTRIBUTED_TARGET_MIN_DISTANCE = 10

OUTPUT_CODINGS = ("distributed", "one_hot")

_MAX_CODEWORD_ATTEMPTS = 100
_MAX_TARGET_ATTEMPTS = 1000

DATASET_MAGIC = b"LCDS"
DATASET_VERSION = 1


@dataclass(frozen=True)
class CodeSpec:
    """All generator parameters for one code."""

    codeword_length: int
    num_classes: int
    num_codewords: int
    random_weight: int
    perturbation_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.codeword_length < 1 or self.num_classes < 1 or self.num_codewords < 1:
            raise ConfigError("codeword_length, num_classes and num_codewords must be positive")
        if self.codeword_length % self.num_classes != 0:
            raise ConfigError(
                f"codeword_length {self.codeword_length} is not divisible by "
                f"num_classes {self.num_classes}"
            )
        if self.num_codewords % self.num_classes != 0:
            raise ConfigError(
                f"num_codewords {self.num_codewords} is not divisible by "
                f"num_classes {self.num_classes}"
            )
        if not 0.0 <= self.perturbation_rate <= 1.0:
            raise ConfigError(f"perturbation_rate {self.perturbation_rate} outside [0, 1]")
        if self.random_weight < 0:
            raise ConfigError("random_weight must be non-negative")
        if self.random_weight > self.codeword_length - self.block_length:
            raise ConfigError(
                f"random_weight {self.random_weight} exceeds the non-prototype region "
                f"({self.codeword_length - self.block_length} bits)"
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")

    @property
    def block_length(self) -> int:
        """Length (and weight) of each class's prototype block."""
        return self.codeword_length // self.num_classes

    @property
    def prototype_weight(self) -> int:
        return self.block_length

    @property
    def random_region_length(self) -> int:
        return self.codeword_length - self.block_length

    @property
    def num_flipped(self) -> int:
        """Prototype-block ones cleared per codeword (deterministic count)."""
        return int(round(self.perturbation_rate * self.block_length))

    @property
    def expected_sparseness(self) -> float:
        """Expected fraction of ones in a generated codeword."""
        return (self.prototype_weight - self.num_flipped + self.random_weight) / self.codeword_length

    @property
    def fill_sparseness(self) -> float:
        """Fraction of ones in the random-fill region."""
        return self.random_weight / self.random_region_length

    def to_dict(self) -> dict:
        return {
            "codeword_length": self.codeword_length,
            "num_classes": self.num_classes,
            "num_codewords": self.num_codewords,
            "random_weight": self.random_weight,
            "perturbation_rate": self.perturbation_rate,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CodeSpec":
        return cls(**{k: d[k] for k in (
            "codeword_length", "num_classes", "num_codewords",
            "random_weight", "perturbation_rate", "seed")})


class Codeword(NamedTuple):
    bits: np.ndarray
    class_id: int


class DistanceAudit(NamedTuple):
    within_class_range: tuple[int, int] | None
    between_class_range: tuple[int, int] | None
    overlap: bool


@dataclass
class Dataset:
    """Generated codewords plus everything needed to reproduce them."""

    spec: CodeSpec
    output_coding: str
    codewords: np.ndarray        # (num_codewords, codeword_length) uint8, 0/1
    class_ids: np.ndarray        # (num_codewords,) int64
    class_targets: np.ndarray    # (num_classes, target_length) uint8, 0/1
    generation_log: list = field(default_factory=list)

    def __post_init__(self):
        self.codewords = np.ascontiguousarray(self.codewords, dtype=np.uint8)
        self.class_ids = np.ascontiguousarray(self.class_ids, dtype=np.int64)
        self.class_targets = np.ascontiguousarray(self.class_targets, dtype=np.uint8)

    def __len__(self) -> int:
        return self.codewords.shape[0]

    def __iter__(self) -> Iterator[Codeword]:
        for i in range(len(self)):
            yield self.codeword(i)

    def codeword(self, i: int) -> Codeword:
        return Codeword(self.codewords[i], int(self.class_ids[i]))

    @property
    def target_length(self) -> int:
        return self.class_targets.shape[1]

    def input_matrix(self, dtype=np.float64) -> np.ndarray:
        return self.codewords.astype(dtype)

    def target_matrix(self, dtype=np.float64) -> np.ndarray:
        return self.class_targets[self.class_ids].astype(dtype)

    def save(self, path) -> None:
        save_dataset(self, path)

    @classmethod
    def load(cls, path) -> "Dataset":
        return load_dataset(path)


def make_prototypes(spec: CodeSpec) -> list[np.ndarray]:
    """Class prototypes: prototype k has ones exactly in block k."""
    block = spec.block_length
    protos = []
    for k in range(spec.num_classes):
        p = np.zeros(spec.codeword_length, dtype=np.uint8)
        p[k * block:(k + 1) * block] = 1
        protos.append(p)
    return protos


def perturb_prototype(prototype: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Clear round(rate * weight) of the prototype's ones, chosen uniformly.

    Zeros are never set; only ones are cleared, so the result is always a
    submask of the input.
    """
    if not 0.0 <= rate <= 1.0:
        raise ConfigError(f"perturbation rate {rate} outside [0, 1]")
    prototype = np.asarray(prototype, dtype=np.uint8)
    out = prototype.copy()
    ones = np.flatnonzero(prototype)
    n_flip = int(round(rate * ones.size))
    if n_flip:
        out[rng.choice(ones, size=n_flip, replace=False)] = 0
    return out


def make_random_fill(spec: CodeSpec, rng: np.random.Generator) -> np.ndarray:
    """A random vector over the non-prototype region with exactly random_weight ones."""
    region = spec.random_region_length
    if spec.random_weight > region:
        raise ConfigError(f"random_weight {spec.random_weight} exceeds region length {region}")
    fill = np.zeros(region, dtype=np.uint8)
    if spec.random_weight:
        fill[rng.choice(region, size=spec.random_weight, replace=False)] = 1
    return fill


def hamming(a, b) -> int:
    """Number of positions at which two equal-length binary vectors differ."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise UsageError(f"hamming: incompatible shapes {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def generate_dataset(spec: CodeSpec, output_coding: str = "distributed",
                     rng: np.random.Generator | None = None) -> Dataset:
    """Build the full code: equal class counts, round-robin class order.

    Codeword i belongs to class i mod num_classes.  Duplicates (including a
    codeword equal to its own class prototype) are rejected and regenerated
    with fresh randomness, up to a bounded number of attempts.
    """
    if output_coding not in OUTPUT_CODINGS:
        raise ConfigError(f"unknown output coding {output_coding!r}; expected one of {OUTPUT_CODINGS}")
    if rng is None:
        rng = np.random.default_rng(spec.seed)

    protos = make_prototypes(spec)
    block = spec.block_length
    n = spec.num_codewords

    # Prototypes are excluded from the code, so a draw equal to one counts
    # as a collision.
    seen = {p.tobytes() for p in protos}

    codewords = np.zeros((n, spec.codeword_length), dtype=np.uint8)
    class_ids = np.zeros(n, dtype=np.int64)
    log = []
    for i in range(n):
        c = i % spec.num_classes
        region_positions = np.concatenate(
            [np.arange(0, c * block), np.arange((c + 1) * block, spec.codeword_length)]
        )
        for attempt in range(1, _MAX_CODEWORD_ATTEMPTS + 1):
            word = perturb_prototype(protos[c], spec.perturbation_rate, rng)
            flipped = np.flatnonzero(protos[c] & (1 - word))
            fill = make_random_fill(spec, rng)
            word[region_positions[fill == 1]] = 1
            key = word.tobytes()
            if key not in seen:
                seen.add(key)
                break
        else:
            raise GenerationError(
                f"could not draw a fresh codeword for class {c} after "
                f"{_MAX_CODEWORD_ATTEMPTS} attempts; the spec is too constrained"
            )
        codewords[i] = word
        class_ids[i] = c
        log.append({"flipped_positions": [int(p) for p in flipped], "attempts": attempt})

    if output_coding == "one_hot":
        targets = np.eye(spec.num_classes, dtype=np.uint8)
    else:
        targets = _make_distributed_targets(spec.num_classes, rng)

    return Dataset(spec=spec, output_coding=output_coding, codewords=codewords,
                   class_ids=class_ids, class_targets=targets, generation_log=log)


def _make_distributed_targets(num_classes: int, rng: np.random.Generator) -> np.ndarray:
    """Per-class output codewords: fixed length/weight, rejection-sampled so
    every pair is a comfortable Hamming distance apart."""
    targets = np.zeros((num_classes, DISTRIBUTED_TARGET_LENGTH), dtype=np.uint8)
    for c in range(num_classes):
        for _ in range(_MAX_TARGET_ATTEMPTS):
            t = np.zeros(DISTRIBUTED_TARGET_LENGTH, dtype=np.uint8)
            t[rng.choice(DISTRIBUTED_TARGET_LENGTH, size=DISTRIBUTED_TARGET_WEIGHT,
                         replace=False)] = 1
            if all(hamming(t, targets[p]) >= DISTRIBUTED_TARGET_MIN_DISTANCE
                   for p in range(c)):
                targets[c] = t
                break
        else:
            raise GenerationError(
                f"could not place {num_classes} output codewords at pairwise "
                f"distance >= {DISTRIBUTED_TARGET_MIN_DISTANCE}"
            )
    return targets


def distance_audit(dataset: Dataset) -> DistanceAudit:
    """Min/max Hamming distance over same-class and cross-class pairs.

    overlap is true iff the two observed ranges intersect.
    """
    if len(dataset) == 0:
        raise UsageError("distance_audit: empty dataset")
    x = dataset.codewords.astype(np.float64)
    gram = x @ x.T
    w = x.sum(axis=1)
    dist = np.rint(w[:, None] + w[None, :] - 2.0 * gram).astype(np.int64)
    same = dataset.class_ids[:, None] == dataset.class_ids[None, :]
    iu = np.triu_indices(len(dataset), k=1)
    within = dist[iu][same[iu]]
    between = dist[iu][~same[iu]]
    within_range = (int(within.min()), int(within.max())) if within.size else None
    between_range = (int(between.min()), int(between.max())) if between.size else None
    if within_range is None or between_range is None:
        return DistanceAudit(within_range, between_range, False)
    overlap = within_range[0] <= between_range[1] and between_range[0] <= within_range[1]
    return DistanceAudit(within_range, between_range, overlap)


# ---------------------------------------------------------------------------
# Serialization.  Binary form packs codeword bits little-endian within bytes;
# the JSON form stores explicit 0/1 arrays.

def save_dataset(dataset: Dataset, path) -> None:
    meta = {
        "spec": dataset.spec.to_dict(),
        "output_coding": dataset.output_coding,
        "num_codewords": len(dataset),
        "codeword_length": dataset.spec.codeword_length,
        "target_length": dataset.target_length,
        "generation_log": dataset.generation_log,
        "bit_packing": "little",
    }
    packed = np.packbits(dataset.codewords, axis=1, bitorder="little")
    arrays = {
        "codewords_packed": packed,
        "class_ids": dataset.class_ids.astype(np.int64),
        "class_targets": dataset.class_targets,
    }
    write_container(path, DATASET_MAGIC, DATASET_VERSION, meta, arrays)


def load_dataset(path) -> Dataset:
    version, meta, arrays = read_container(path, DATASET_MAGIC)
    if version != DATASET_VERSION:
        raise DataError(f"unsupported dataset format version {version}")
    length = meta["codeword_length"]
    codewords = np.unpackbits(arrays["codewords_packed"], axis=1,
                              bitorder="little", count=length)
    return Dataset(
        spec=CodeSpec.from_dict(meta["spec"]),
        output_coding=meta["output_coding"],
        codewords=codewords,
        class_ids=arrays["class_ids"],
        class_targets=arrays["class_targets"],
        generation_log=meta.get("generation_log", []),
    )


def dataset_to_json(dataset: Dataset) -> str:
    return json.dumps({
        "format_version": DATASET_VERSION,
        "spec": dataset.spec.to_dict(),
        "output_coding": dataset.output_coding,
        "codewords": dataset.codewords.tolist(),
        "class_ids": dataset.class_ids.tolist(),
        "class_targets": dataset.class_targets.tolist(),
        "generation_log": dataset.generation_log,
    })


def dataset_from_json(text: str) -> Dataset:
    try:
        d = json.loads(text)
        return Dataset(
            spec=CodeSpec.from_dict(d["spec"]),
            output_coding=d["output_coding"],
            codewords=np.asarray(d["codewords"], dtype=np.uint8),
            class_ids=np.asarray(d["class_ids"], dtype=np.int64),
            class_targets=np.asarray(d["class_targets"], dtype=np.uint8),
            generation_log=d.get("generation_log", []),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"malformed dataset JSON: {exc}") from exc


def with_seed(spec: CodeSpec, seed: int) -> CodeSpec:
    return replace(spec, seed=seed)
