import json
import math

import numpy as np
import pytest

from evoline.errors import SpaceError
from evoline.hyperspace import (
    BoxSpace,
    GeneSpec,
    SpaceSpec,
    decode,
    default_space,
    dump_space,
    encode,
    load_space,
    render_layers,
    repair,
)


class TestGeneSpec:
    def test_rejects_empty_levels(self):
        with pytest.raises(SpaceError, match="empty level set"):
            GeneSpec("g", "categorical", ())

    def test_rejects_duplicate_levels(self):
        with pytest.raises(SpaceError, match="duplicate"):
            GeneSpec("g", "categorical", ("x", "x"))

    def test_rejects_unknown_kind(self):
        with pytest.raises(SpaceError, match="unknown kind"):
            GeneSpec("g", "integer", ("x",))

    def test_categorical_levels_must_be_strings(self):
        with pytest.raises(SpaceError, match="strings"):
            GeneSpec("g", "categorical", (1, 2))

    def test_ordinal_levels_must_be_numbers(self):
        with pytest.raises(SpaceError, match="numbers"):
            GeneSpec("g", "ordinal", ("1", "2"))

    def test_ordinal_levels_must_increase(self):
        with pytest.raises(SpaceError, match="strictly increasing"):
            GeneSpec("g", "ordinal", (2, 1))

    def test_scope_defaults_to_name(self):
        assert GeneSpec("g", "ordinal", (1, 2)).scope == "g"


class TestDefaultSpace:
    def test_dimension_is_15(self):
        assert default_space().dimension == 15

    def test_activation_levels(self):
        assert default_space().gene("global.activation").levels == ("ReLU", "SELU", "ELU")

    def test_optimizer_levels(self):
        assert default_space().gene("global.optimizer").levels == ("SGD", "Adam", "Adagrad", "Adamax")

    def test_ordinal_genes_strictly_increasing(self):
        for gene in default_space().genes:
            if gene.kind == "ordinal":
                assert all(a < b for a, b in zip(gene.levels, gene.levels[1:]))

    def test_duplicate_gene_names_rejected(self):
        gene = GeneSpec("g", "ordinal", (1, 2))
        with pytest.raises(SpaceError, match="duplicate gene names"):
            SpaceSpec((gene, gene))


class TestDecode:
    def test_rounds_to_nearest_index(self, toy_space):
        # component 2.6 over the 4-level gene -> index 3 -> 4th level
        assert decode((0.0, 0.0, 2.6), toy_space)["c"] == 40

    def test_clamps_below_range(self, toy_space):
        assert decode((0.0, -1.7, 0.0), toy_space)["b"] == 1

    def test_half_ties_round_up(self, toy_space):
        assert decode((0.0, 0.5, 2.5), toy_space) == {"a": "a1", "b": 2, "c": 40}

    def test_small_perturbations_do_not_change_decoding(self, toy_space):
        rng = np.random.default_rng(5)
        for _ in range(200):
            base = toy_space.sample(rng)
            eps = rng.uniform(-0.49, 0.49, size=3)
            assert decode(base, toy_space) == decode(tuple(np.array(base) + eps), toy_space)

    def test_rejects_nan(self, toy_space):
        with pytest.raises(ValueError, match="non-finite"):
            decode((float("nan"), 0.0, 0.0), toy_space)
        with pytest.raises(ValueError, match="non-finite"):
            decode((0.0, float("inf"), 0.0), toy_space)

    def test_dimension_mismatch(self, toy_space):
        with pytest.raises(ValueError, match="dimension"):
            decode((0.0, 0.0), toy_space)


class TestEncode:
    def test_first_levels_give_zero_vector(self, toy_space):
        assert encode({"a": "a1", "b": 1, "c": 10}, toy_space) == (0.0, 0.0, 0.0)

    def test_activation_elu_is_index_two(self):
        space = default_space()
        phenotype = decode((0.0,) * 15, space)
        phenotype["global.activation"] = "ELU"
        assert encode(phenotype, space)[space.names().index("global.activation")] == 2.0

    def test_unknown_gene_rejected(self, toy_space):
        with pytest.raises(SpaceError, match="unknown genes"):
            encode({"a": "a1", "b": 1, "c": 10, "zz": 1}, toy_space)

    def test_missing_gene_rejected(self, toy_space):
        with pytest.raises(SpaceError, match="missing gene"):
            encode({"a": "a1", "b": 1}, toy_space)

    def test_off_menu_value_rejected(self, toy_space):
        with pytest.raises(SpaceError, match="admissible"):
            encode({"a": "a1", "b": 1, "c": 11}, toy_space)


class TestRoundTrip:
    def test_exhaustive_on_toy_space(self, toy_space):
        count = 0
        for phenotype in toy_space.all_phenotypes():
            assert decode(encode(phenotype, toy_space), toy_space) == phenotype
            count += 1
        assert count == 24

    def test_random_phenotypes_on_default_space(self):
        space = default_space()
        rng = np.random.default_rng(123)
        for _ in range(1000):
            phenotype = decode(space.sample(rng), space)
            assert decode(encode(phenotype, space), space) == phenotype


class TestRepair:
    def test_in_range_unchanged(self, toy_space):
        g = (1.0, 0.5, 2.9)
        assert repair(g, toy_space) == g

    def test_clamps_to_max_index(self):
        space = SpaceSpec((GeneSpec("n", "ordinal", (1, 2, 3, 4, 5, 6)),), template="custom")
        assert repair((7.2,), space) == (5.0,)

    def test_idempotent_on_random_vectors(self, toy_space):
        rng = np.random.default_rng(9)
        for _ in range(300):
            g = tuple(rng.uniform(-10, 10, size=3))
            once = repair(g, toy_space)
            assert repair(once, toy_space) == once

    def test_clamp_moves_only_to_boundary(self, toy_space):
        assert repair((-3.0, 5.0, 1.5), toy_space) == (0.0, 2.0, 1.5)

    def test_rejects_nan(self, toy_space):
        with pytest.raises(ValueError, match="non-finite"):
            repair((float("nan"), 0.0, 0.0), toy_space)


class TestSpaceDocument:
    def test_single_gene_document(self):
        doc = json.dumps({
            "version": 1,
            "template": "custom",
            "genes": [{"name": "g", "kind": "categorical", "levels": ["x", "y", "z"]}],
        })
        space = load_space(doc)
        assert space.dimension == 1
        assert space.gene("g").levels == ("x", "y", "z")
        assert space.gene("g").scope == "g"

    def test_duplicate_gene_error(self):
        doc = json.dumps({
            "version": 1,
            "genes": [
                {"name": "g", "kind": "ordinal", "levels": [1, 2]},
                {"name": "g", "kind": "ordinal", "levels": [1, 2]},
            ],
        })
        with pytest.raises(SpaceError, match="duplicate gene names"):
            load_space(doc)

    def test_empty_levels_error(self):
        doc = json.dumps({"version": 1, "genes": [{"name": "g", "kind": "ordinal", "levels": []}]})
        with pytest.raises(SpaceError, match="empty level set"):
            load_space(doc)

    def test_parse_error_reports_line(self):
        with pytest.raises(SpaceError, match="line"):
            load_space('{"version": 1,\n "genes": [}')

    def test_version_checked(self):
        with pytest.raises(SpaceError, match="version"):
            load_space(json.dumps({"version": 2, "genes": [
                {"name": "g", "kind": "ordinal", "levels": [1]}]}))

    def test_missing_field_reported_with_position(self):
        doc = json.dumps({"version": 1, "genes": [{"name": "g", "kind": "ordinal"}]})
        with pytest.raises(SpaceError, match=r"genes\[0\].*levels"):
            load_space(doc)

    def test_default_space_round_trips(self):
        space = default_space()
        assert load_space(dump_space(space)) == space

    def test_six_gene_layout_is_expressible(self):
        doc = json.dumps({
            "version": 1,
            "template": "vgg16-fixed-pool",
            "genes": [
                {"name": "global.filter_size", "kind": "categorical", "levels": ["3x3", "5x5"]},
                {"name": "global.num_filters", "kind": "ordinal", "levels": [16, 32, 64, 128, 256, 512]},
                {"name": "global.activation", "kind": "categorical", "levels": ["ReLU", "SELU", "ELU"]},
                {"name": "global.optimizer", "kind": "categorical", "levels": ["SGD", "Adam", "Adagrad", "Adamax"]},
                {"name": "global.dropout", "kind": "ordinal", "levels": [0.1, 0.2, 0.3, 0.4, 0.5]},
                {"name": "global.neurons", "kind": "ordinal", "levels": [128, 256, 512]},
            ],
        })
        space = load_space(doc)
        assert space.dimension == 6
        phenotype = decode((0.0,) * 6, space)
        layers = render_layers(phenotype)
        assert sum(1 for l in layers if l["type"] in ("conv", "dense")) == 16


class TestRenderLayers:
    def test_sixteen_weight_layers(self):
        space = default_space()
        phenotype = decode((1.0,) * 15, space)
        layers = render_layers(phenotype)
        assert sum(1 for l in layers if l["type"] in ("conv", "dense")) == 16

    def test_pooling_is_fixed(self):
        phenotype = decode((0.0,) * 15, default_space())
        pools = [l for l in render_layers(phenotype) if l["type"] == "maxpool"]
        assert len(pools) == 5
        assert all(p["pool"] == "2x2" and p["stride"] == 2 for p in pools)

    def test_activation_applied_everywhere(self):
        space = default_space()
        phenotype = decode((0.0,) * 15, space)
        phenotype["global.activation"] = "ELU"
        convs = [l for l in render_layers(phenotype) if l["type"] == "conv"]
        assert all(c["activation"] == "ELU" for c in convs)

    def test_unresolvable_slot_is_an_error(self, toy_space):
        phenotype = decode((0.0, 0.0, 0.0), toy_space)
        with pytest.raises(SpaceError, match="template slot"):
            render_layers(phenotype)


class TestBoxSpace:
    def test_cube_bounds(self):
        box = BoxSpace.cube(3)
        assert box.dimension == 3
        assert box.lower == (-5.12,) * 3 and box.upper == (5.12,) * 3

    def test_sample_within_bounds(self):
        box = BoxSpace.cube(5, -2.0, 3.0)
        rng = np.random.default_rng(0)
        for _ in range(100):
            g = box.sample(rng)
            assert all(-2.0 <= v <= 3.0 for v in g)

    def test_repair_clamps(self):
        box = BoxSpace.cube(2, -1.0, 1.0)
        assert box.repair((-4.0, 0.25)) == (-1.0, 0.25)

    def test_decode_is_identity_after_clamp(self):
        box = BoxSpace.cube(2, -1.0, 1.0)
        assert box.decode((0.5, -0.5)) == (0.5, -0.5)

    def test_invalid_interval_rejected(self):
        with pytest.raises(SpaceError, match="interval"):
            BoxSpace((0.0,), (0.0,))
        with pytest.raises(SpaceError, match="interval"):
            BoxSpace((math.inf,), (1.0,))
