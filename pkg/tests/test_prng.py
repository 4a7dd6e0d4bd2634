"""Counter-based PRNG: frozen reference vectors and distribution bounds."""

import numpy as np
import pytest

from morphoplast import prng

# Published splitmix64 output stream for seed 0 (first four values).
SEED0_STREAM = (
    0xE220A8397B1DCDAF,
    0x6E789E6AA1B965F4,
    0x06C45D188009454F,
    0xF88BB8A8724C81EC,
)


def test_splitmix64_reference_vectors():
    for index, expected in enumerate(SEED0_STREAM):
        assert prng.splitmix64(0, index) == expected


def test_splitmix64_seed_sensitivity():
    outs = {prng.splitmix64(seed, 0) for seed in range(64)}
    assert len(outs) == 64


def test_unit_uniform_range():
    vals = [prng.unit_uniform(seed, i) for seed in range(8) for i in range(64)]
    assert all(0.0 <= v < 1.0 for v in vals)


def test_uniform_scales_to_bounds():
    vals = np.array([prng.uniform(3, i, -0.05, 0.05) for i in range(10_000)])
    assert vals.min() >= -0.05
    assert vals.max() < 0.05
    # Uniform on a symmetric interval: mean near zero.
    assert abs(vals.mean()) < 2e-3


def test_uniforms_matches_scalar_path():
    batch = prng.uniforms(7, 11, 0.0, 1.0)
    singles = [prng.uniform(7, i, 0.0, 1.0) for i in range(11)]
    np.testing.assert_array_equal(batch, singles)


@pytest.mark.parametrize("seed", [0, 1, 42, 2**63])
def test_determinism_across_calls(seed):
    a = [prng.splitmix64(seed, i) for i in range(16)]
    b = [prng.splitmix64(seed, i) for i in range(16)]
    assert a == b
