import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_mem.core import (DOMAIN_DP, DOMAIN_RESTART, DPConfig, EmptyTable, ErrorPrior, KernelConfig,
                             NonFinite, ObservedDataset, RaggedRows, derive_substream, mix64,
                             substream_key, validate_dataset)
from robust_mem.synthetic import simulate

# pinned after the first implementation; changing the hash breaks reproducibility
GOLDEN_FIRST_UNIFORM_42_3_7 = 0.10126944941474303
GOLDEN_KEY_42_3_7 = 14313996979632888681


def test_smallest_table():
    ds = validate_dataset([[0, 0], [1, 1], [2, 2]])
    assert ds.n == 3 and ds.d_x == 1
    np.testing.assert_array_equal(ds.y, [0, 1, 2])


def test_nan_reported_with_position():
    rows = [[0, 0], [1, 1], [2, np.nan]]
    with pytest.raises(NonFinite) as ei:
        validate_dataset(rows)
    assert (ei.value.row, ei.value.col) == (2, 1)


def test_empty_and_ragged():
    with pytest.raises(EmptyTable):
        validate_dataset([])
    with pytest.raises(EmptyTable):
        validate_dataset([[1.0], [2.0]])
    with pytest.raises(RaggedRows) as ei:
        validate_dataset([[1, 2], [3, 4, 5]])
    assert ei.value.row == 1


def test_linear_generator_shape():
    ds, _ = simulate("linear", seed=0)
    ds2 = validate_dataset(ds.table())
    assert (ds2.n, ds2.d_x) == (800, 1)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)), min_size=1, max_size=20))
def test_validate_idempotent(rows):
    ds = validate_dataset(rows)
    assert validate_dataset(ds) == ds
    assert validate_dataset(ds.table()) == ds


def test_dataset_is_read_only():
    ds = validate_dataset([[0, 1], [2, 3]])
    with pytest.raises(ValueError):
        ds.w[0, 0] = 5.0


def test_substream_determinism_and_separation():
    a = derive_substream(42, 0, 0).random(10)
    b = derive_substream(42, 0, 0).random(10)
    c = derive_substream(42, 0, 1).random(10)
    np.testing.assert_array_equal(a, b)
    assert not np.any(a == c)


def test_substream_golden():
    assert substream_key(42, 3, 7) == GOLDEN_KEY_42_3_7
    assert derive_substream(42, 3, 7).random() == GOLDEN_FIRST_UNIFORM_42_3_7


def test_domains_separate_streams():
    a = derive_substream(1, 2, 3, DOMAIN_DP).random(5)
    b = derive_substream(1, 2, 3, DOMAIN_RESTART).random(5)
    assert not np.array_equal(a, b)


def test_mix64_known_value():
    # first output of SplitMix64 seeded at 0
    assert mix64(0) == 0xE220A8397B1DCDAF


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**63), st.integers(0, 10**6), st.integers(0, 10**6))
def test_keys_distinct_for_neighbouring_indices(seed, j, i):
    k = substream_key(seed, j, i)
    assert k != substream_key(seed, j, i + 1)
    assert k != substream_key(seed, j + 1, i)
    assert k != substream_key(seed + 1, j, i)


def test_config_validation():
    with pytest.raises(ValueError):
        DPConfig(c=-1)
    DPConfig(c=0)
    with pytest.raises(ValueError):
        KernelConfig(l_x=0)
    with pytest.raises(ValueError):
        ErrorPrior("student_t", (1.0,))
    with pytest.raises(ValueError):
        ErrorPrior("gaussian", (0.0,))
    assert ErrorPrior("gaussian", (1.0, 0.0)).scale == (1.0, 0.0)
    assert list(ErrorPrior("gaussian", 2.0).scale_for(3)) == [2.0, 2.0, 2.0]
