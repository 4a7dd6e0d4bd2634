"""Genome sampling, mutation, crossover, hashing and the on-disk format."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphoplast.genome import (
    ACROBOT_PLASTICITY_BOUNDS,
    CARTPOLE_PLASTICITY_BOUNDS,
    GENE_NAMES,
    MORPHOGEN_GENE_BOUNDS,
    N_DEVELOPMENTAL_GENES,
    N_MORPHOGENS,
    PlasticityParams,
    crossover,
    flat_gene_names,
    genome_hash,
    mutate,
    read_genome_file,
    sample_random,
    with_plasticity_genes,
    write_genome_file,
)


def test_gene_counts():
    assert N_DEVELOPMENTAL_GENES == 54
    assert len(GENE_NAMES) == 18
    assert sample_random(1).n_genes == 54
    assert sample_random(1, with_plasticity=True).n_genes == 56


def test_flat_gene_names_match_counts():
    assert len(flat_gene_names(False)) == 54
    assert len(flat_gene_names(True)) == 56
    assert flat_gene_names(True)[-2:] == ["eta", "lambda"]


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=25, deadline=None)
def test_sampled_genomes_within_bounds(seed):
    g = sample_random(seed, with_plasticity=True)
    g.validate()
    for m in g.morphogens:
        for name in GENE_NAMES:
            lo, hi = MORPHOGEN_GENE_BOUNDS[name]
            assert lo <= getattr(m, name) <= hi
    lo, hi = CARTPOLE_PLASTICITY_BOUNDS.eta
    assert lo <= g.plasticity.eta <= hi


def test_sample_random_is_deterministic():
    assert sample_random(99).flat_values() == sample_random(99).flat_values()
    assert sample_random(99).flat_values() != sample_random(100).flat_values()


def test_plasticity_bounds_per_benchmark():
    assert CARTPOLE_PLASTICITY_BOUNDS.eta == (-0.5, 0.5)
    assert ACROBOT_PLASTICITY_BOUNDS.eta == (-0.1, 0.1)
    g = sample_random(5, with_plasticity=True, plasticity_bounds=ACROBOT_PLASTICITY_BOUNDS)
    assert -0.1 <= g.plasticity.eta <= 0.1


def test_mutate_deterministic_and_clamped():
    g = sample_random(7, with_plasticity=True)
    m1 = mutate(g, 1.0, rng_seed=3)
    m2 = mutate(g, 1.0, rng_seed=3)
    assert m1.flat_values() == m2.flat_values()
    assert m1.flat_values() != g.flat_values()
    m1.validate()  # clamping keeps every gene inside its range


def test_mutate_rate_zero_is_identity():
    g = sample_random(11)
    assert mutate(g, 0.0, rng_seed=1).flat_values() == g.flat_values()


def test_mutate_rejects_bad_rate():
    with pytest.raises(ValueError):
        mutate(sample_random(0), 1.5, rng_seed=0)


def test_crossover_genes_come_from_parents():
    a, b = sample_random(1), sample_random(2)
    child = crossover(a, b, rng_seed=4)
    for i in range(N_MORPHOGENS):
        for name in GENE_NAMES:
            v = getattr(child.morphogens[i], name)
            assert v in (getattr(a.morphogens[i], name), getattr(b.morphogens[i], name))


def test_crossover_shape_mismatch_rejected():
    plain = sample_random(1)
    plastic = sample_random(2, with_plasticity=True)
    with pytest.raises(ValueError, match="54 vs 56"):
        crossover(plain, plastic, rng_seed=0)


def test_genome_hash_bit_exact():
    g = sample_random(21)
    assert genome_hash(g) == genome_hash(sample_random(21))
    nudged = mutate(g, 1.0, rng_seed=9)
    assert genome_hash(nudged) != genome_hash(g)


def test_with_plasticity_genes_extends():
    g = sample_random(3)
    gp = with_plasticity_genes(g, PlasticityParams(eta=-0.01, decay=0.01))
    assert gp.n_genes == 56
    assert gp.morphogens == g.morphogens
    assert gp.plasticity.eta == -0.01


def test_dict_round_trip():
    g = sample_random(13, with_plasticity=True)
    assert type(g).from_dict(g.to_dict()).flat_values() == g.flat_values()


def test_genome_file_round_trip(tmp_path):
    genomes = [sample_random(k) for k in range(5)]
    path = tmp_path / "pool.genomes"
    write_genome_file(path, genomes)
    back = read_genome_file(path)
    assert len(back) == 5
    for orig, rt in zip(genomes, back):
        assert rt.flat_values() == orig.flat_values()  # repr() round-trips doubles


def test_genome_file_rejects_mixed_shapes(tmp_path):
    genomes = [sample_random(0), sample_random(1, with_plasticity=True)]
    with pytest.raises(ValueError):
        write_genome_file(tmp_path / "bad.genomes", genomes)


def test_genome_file_rejects_missing_header(tmp_path):
    path = tmp_path / "headerless.genomes"
    path.write_text("0.1,0.2\n")
    with pytest.raises(ValueError, match="header"):
        read_genome_file(path)
