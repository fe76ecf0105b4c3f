"""Mixed categorical/ordinal search spaces and the genotype/phenotype mapping.

A genotype is a fixed-length vector of real-coded level indices; decoding
rounds each component to the nearest integer (ties round up), clamps it into
the gene's index range, and looks up the concrete level value.  Continuous
box spaces reuse the same operator machinery without any rounding and exist
to validate optimizer dynamics on standard benchmark functions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SpaceError

Genotype = tuple[float, ...]
LevelValue = str | int | float
Phenotype = dict[str, LevelValue]

SPACE_DOC_VERSION = 1
VGG_TEMPLATE = "vgg16-fixed-pool"

# Convolution layers per block in the fixed VGG-style template; together with
# the three fully connected layers (two searchable widths plus the output
# head) the rendered network has 16 weight layers.
CONV_BLOCKS = (2, 2, 3, 3, 3)
FC_SLOTS = 2


@dataclass(frozen=True)
class GeneSpec:
    """One searchable hyperparameter: an ordered set of admissible levels."""

    name: str
    kind: str  # "categorical" | "ordinal"
    levels: tuple[LevelValue, ...]
    scope: str = ""

    def __post_init__(self):
        if self.kind not in ("categorical", "ordinal"):
            raise SpaceError(f"gene {self.name!r}: unknown kind {self.kind!r}")
        if not self.levels:
            raise SpaceError(f"gene {self.name!r}: empty level set")
        if len(set(self.levels)) != len(self.levels):
            raise SpaceError(f"gene {self.name!r}: duplicate levels")
        if self.kind == "categorical":
            if not all(isinstance(v, str) for v in self.levels):
                raise SpaceError(f"gene {self.name!r}: categorical levels must be strings")
        else:
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in self.levels):
                raise SpaceError(f"gene {self.name!r}: ordinal levels must be numbers")
            if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
                raise SpaceError(f"gene {self.name!r}: ordinal levels must be strictly increasing")
        if not self.scope:
            object.__setattr__(self, "scope", self.name)

    @property
    def num_levels(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class SpaceSpec:
    """An ordered collection of genes plus the layer template they configure."""

    genes: tuple[GeneSpec, ...]
    template: str = VGG_TEMPLATE

    def __post_init__(self):
        if not self.genes:
            raise SpaceError("space has no genes")
        names = [g.name for g in self.genes]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SpaceError(f"duplicate gene names: {', '.join(dupes)}")

    @property
    def dimension(self) -> int:
        return len(self.genes)

    def gene(self, name: str) -> GeneSpec:
        for g in self.genes:
            if g.name == name:
                return g
        raise SpaceError(f"unknown gene {name!r}")

    def names(self) -> list[str]:
        return [g.name for g in self.genes]

    def upper_indices(self) -> np.ndarray:
        """Highest admissible index per gene (len(levels) - 1)."""
        return np.array([g.num_levels - 1 for g in self.genes], dtype=float)

    def sample(self, rng: np.random.Generator) -> Genotype:
        """Genotype with each component uniform over its integer index range."""
        return tuple(float(rng.integers(0, g.num_levels)) for g in self.genes)

    def sample_component(self, j: int, rng: np.random.Generator) -> float:
        return float(rng.integers(0, self.genes[j].num_levels))

    def repair(self, values) -> Genotype:
        return repair(tuple(values), self)

    def decode(self, genotype: Genotype) -> Phenotype:
        return decode(genotype, self)

    def num_combinations(self) -> int:
        return math.prod(g.num_levels for g in self.genes)

    def all_phenotypes(self):
        """Iterate every phenotype in the space (use only on small spaces)."""
        import itertools

        for combo in itertools.product(*(g.levels for g in self.genes)):
            yield dict(zip(self.names(), combo))


@dataclass(frozen=True)
class BoxSpace:
    """Continuous search box; genotypes are plain real vectors."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or not self.lower:
            raise SpaceError("box bounds must be equal-length and non-empty")
        for lo, hi in zip(self.lower, self.upper):
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
                raise SpaceError(f"invalid box interval [{lo}, {hi}]")

    @classmethod
    def cube(cls, dimension: int, lo: float = -5.12, hi: float = 5.12) -> "BoxSpace":
        return cls((lo,) * dimension, (hi,) * dimension)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def sample(self, rng: np.random.Generator) -> Genotype:
        return tuple(float(rng.uniform(lo, hi)) for lo, hi in zip(self.lower, self.upper))

    def sample_component(self, j: int, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.lower[j], self.upper[j]))

    def repair(self, values) -> Genotype:
        values = tuple(float(v) for v in values)
        if len(values) != self.dimension:
            raise ValueError(f"genotype has dimension {len(values)}, box has {self.dimension}")
        _reject_nonfinite(values)
        return tuple(min(max(v, lo), hi) for v, lo, hi in zip(values, self.lower, self.upper))

    def decode(self, genotype: Genotype) -> tuple[float, ...]:
        """Continuous spaces evaluate the genotype itself."""
        return self.repair(genotype)


def _reject_nonfinite(values) -> None:
    for j, v in enumerate(values):
        if not math.isfinite(v):
            raise ValueError(f"non-finite component {v!r} at dimension {j}; operator bug upstream")


def _check_dimension(genotype, space: SpaceSpec) -> tuple[float, ...]:
    values = tuple(float(v) for v in genotype)
    if len(values) != space.dimension:
        raise ValueError(f"genotype has dimension {len(values)}, space has {space.dimension}")
    return values


def repair(genotype: Genotype, space: SpaceSpec) -> Genotype:
    """Clamp every component into [0, levels-1]; in-range values pass through."""
    values = _check_dimension(genotype, space)
    _reject_nonfinite(values)
    return tuple(min(max(v, 0.0), float(g.num_levels - 1)) for v, g in zip(values, space.genes))


def decode(genotype: Genotype, space: SpaceSpec) -> Phenotype:
    """Round half-up to the nearest index, clamp, and map to level values."""
    values = _check_dimension(genotype, space)
    _reject_nonfinite(values)
    assignments: Phenotype = {}
    for v, gene in zip(values, space.genes):
        idx = int(math.floor(v + 0.5))
        idx = min(max(idx, 0), gene.num_levels - 1)
        assignments[gene.name] = gene.levels[idx]
    return assignments


def encode(phenotype: Phenotype, space: SpaceSpec) -> Genotype:
    """Exact integer index of each assigned level, as a real-coded vector."""
    unknown = set(phenotype) - set(space.names())
    if unknown:
        raise SpaceError(f"unknown genes in phenotype: {', '.join(sorted(unknown))}")
    values = []
    for gene in space.genes:
        if gene.name not in phenotype:
            raise SpaceError(f"phenotype missing gene {gene.name!r}")
        value = phenotype[gene.name]
        try:
            values.append(float(gene.levels.index(value)))
        except ValueError:
            raise SpaceError(f"gene {gene.name!r}: {value!r} is not an admissible level") from None
    return tuple(values)


def default_space() -> SpaceSpec:
    """The built-in space: per-block filter size/count, global activation,
    optimizer and dropout, and per-FC-layer widths (15 genes)."""
    filter_sizes = ("3x3", "5x5")
    filter_counts = (16, 32, 64, 128, 256, 512)
    genes: list[GeneSpec] = []
    for b in range(1, len(CONV_BLOCKS) + 1):
        genes.append(GeneSpec(f"conv_block_{b}.filter_size", "categorical", filter_sizes))
        genes.append(GeneSpec(f"conv_block_{b}.num_filters", "ordinal", filter_counts))
    genes.append(GeneSpec("global.activation", "categorical", ("ReLU", "SELU", "ELU")))
    genes.append(GeneSpec("global.optimizer", "categorical", ("SGD", "Adam", "Adagrad", "Adamax")))
    genes.append(GeneSpec("global.dropout", "ordinal", (0.1, 0.2, 0.3, 0.4, 0.5)))
    for i in range(1, FC_SLOTS + 1):
        genes.append(GeneSpec(f"fc_{i}.neurons", "ordinal", (128, 256, 512)))
    return SpaceSpec(genes=tuple(genes), template=VGG_TEMPLATE)


def space_document(space: SpaceSpec) -> dict:
    return {
        "version": SPACE_DOC_VERSION,
        "template": space.template,
        "genes": [
            {"name": g.name, "kind": g.kind, "levels": list(g.levels), "scope": g.scope}
            for g in space.genes
        ],
    }


def dump_space(space: SpaceSpec) -> str:
    return json.dumps(space_document(space), indent=2) + "\n"


def load_space(text: str) -> SpaceSpec:
    """Parse a space document (see ``dump_space`` for the format)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpaceError(f"space document is not valid JSON: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise SpaceError("space document must be a JSON object")
    version = doc.get("version")
    if version != SPACE_DOC_VERSION:
        raise SpaceError(f"unsupported space document version {version!r} (expected {SPACE_DOC_VERSION})")
    raw_genes = doc.get("genes")
    if not isinstance(raw_genes, list) or not raw_genes:
        raise SpaceError("space document needs a non-empty 'genes' list")
    genes = []
    for pos, raw in enumerate(raw_genes):
        if not isinstance(raw, dict):
            raise SpaceError(f"genes[{pos}]: expected an object")
        for key in ("name", "kind", "levels"):
            if key not in raw:
                raise SpaceError(f"genes[{pos}]: missing field {key!r}")
        levels = raw["levels"]
        if not isinstance(levels, list):
            raise SpaceError(f"genes[{pos}] ({raw['name']!r}): 'levels' must be a list")
        genes.append(
            GeneSpec(
                name=str(raw["name"]),
                kind=str(raw["kind"]),
                levels=tuple(levels),
                scope=str(raw.get("scope", "")),
            )
        )
    return SpaceSpec(genes=tuple(genes), template=str(doc.get("template", VGG_TEMPLATE)))


def _slot_value(phenotype: Phenotype, slot: str, key: str):
    """Look up a template slot, falling back to a space-wide gene.

    Lets coarse layouts (one filter-size gene shared by all blocks) drive the
    same template as the per-block default layout.
    """
    for name in (f"{slot}.{key}", f"global.{key}"):
        if name in phenotype:
            return phenotype[name]
    raise SpaceError(f"phenotype has no gene for template slot {slot}.{key}")


def render_layers(phenotype: Phenotype, num_classes: int = 8) -> list[dict]:
    """Concrete layer list for the fixed VGG-style template.

    Pooling is not searchable: every block ends in a fixed 2x2/stride-2 max
    pool.  Weight layers (conv + dense) total 16.
    """
    activation = _slot_value(phenotype, "global", "activation")
    dropout = _slot_value(phenotype, "global", "dropout")
    layers: list[dict] = []
    for b, n_convs in enumerate(CONV_BLOCKS, start=1):
        slot = f"conv_block_{b}"
        kernel = _slot_value(phenotype, slot, "filter_size")
        filters = _slot_value(phenotype, slot, "num_filters")
        for _ in range(n_convs):
            layers.append({"type": "conv", "filters": filters, "kernel": kernel, "activation": activation})
        layers.append({"type": "maxpool", "pool": "2x2", "stride": 2})
    layers.append({"type": "flatten"})
    for i in range(1, FC_SLOTS + 1):
        units = _slot_value(phenotype, f"fc_{i}", "neurons")
        layers.append({"type": "dense", "units": units, "activation": activation})
        layers.append({"type": "dropout", "rate": dropout})
    layers.append({"type": "dense", "units": num_classes, "activation": "softmax"})
    return layers
