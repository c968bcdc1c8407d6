import numpy as np
import pytest

from krodtwin.errors import ConfigError, RankDeficiencyError
from krodtwin.krod import KoopmanTriplet, fix_signs, krod_offline, reconstruct, split_snapshots
from krodtwin.metrics import mac_matrix, mae
from krodtwin.seeding import derive_seed


@pytest.fixture(scope="module")
def exp1_pair(snapshots):
    return split_snapshots(snapshots("exp1"))


def geometric(lam=0.9, n=20, steps=12, seed=0):
    u0 = np.random.default_rng(seed).standard_normal(n)
    return u0, np.column_stack([lam**i * u0 for i in range(steps + 1)])


def test_split_snapshots():
    V = np.arange(6.0).reshape(2, 3)
    V0, V1 = split_snapshots(V)
    np.testing.assert_array_equal(V0, V[:, :2])
    np.testing.assert_array_equal(V1, V[:, 1:])
    with pytest.raises(ConfigError):
        split_snapshots(np.ones((4, 1)))


def test_split_preset_shape(exp1_pair):
    V0, V1 = exp1_pair
    assert V0.shape == V1.shape == (101, 300)


def test_geometric_dynamics_recovered():
    lam = 0.9
    u0, V = geometric(lam)
    V0, V1 = split_snapshots(V)
    t = krod_offline(V0, V1, 2, seed=4, on_rank_deficient="truncate")
    phi1 = t.modes[:, 0]
    ref = u0 / np.linalg.norm(u0)
    assert min(np.linalg.norm(phi1 - ref), np.linalg.norm(phi1 + ref)) <= 1e-8
    a1 = t.amplitudes[0]
    np.testing.assert_allclose(a1 / a1[0], lam ** np.arange(V0.shape[1]), rtol=0, atol=1e-8)
    assert t.eigvals[1] <= 1e-10 * t.eigvals[0]


def test_sigma_guard_refuses_unsupported_rank():
    _, V = geometric()
    V0, V1 = split_snapshots(V)
    with pytest.raises(RankDeficiencyError, match="lower the rank"):
        krod_offline(V0, V1, 2, seed=4)


@pytest.mark.parametrize("k", [2, 5, 8])
def test_low_rank_data_reconstructed_exactly(k):
    rng = np.random.default_rng(k)
    V = rng.standard_normal((30, 3)) @ rng.standard_normal((3, 26))
    V0, V1 = split_snapshots(V)
    t = krod_offline(V0, V1, max(k, 3), seed=1, on_rank_deficient="truncate")
    err = np.linalg.norm(V0 - t.modes @ t.modes.T @ V0)
    assert err <= 1e-8 * np.linalg.norm(V0)
    assert np.linalg.norm(reconstruct(t) - V0) <= 1e-8 * np.linalg.norm(V0)


def test_exp1_rank10_orthogonality_and_mae(exp1_pair):
    V0, V1 = exp1_pair
    for seed in (0, 1, 2**64 - 1):
        t = krod_offline(V0, V1, 10, seed)
        assert np.linalg.norm(t.modes.T @ t.modes - np.eye(10)) <= 1e-10
        assert np.max(np.abs(mac_matrix(t.modes) - np.eye(10))) <= 1e-8
        assert mae(V0, reconstruct(t)) <= 1e-4


def test_projection_identity(exp1_pair):
    V0, V1 = exp1_pair
    t = krod_offline(V0, V1, 15, 3)
    assert np.max(np.abs(reconstruct(t) - t.modes @ t.modes.T @ V0)) <= 1e-12


def test_error_non_increasing_in_rank(exp1_pair):
    V0, V1 = exp1_pair
    errs = [np.linalg.norm(V0 - reconstruct(krod_offline(V0, V1, k, derive_seed(0, "krod", k),
                                                          on_rank_deficient="truncate")))
            for k in (5, 10, 20, 40)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_gram_spectrum_and_ordering(exp1_pair):
    V0, V1 = exp1_pair
    t = krod_offline(V0, V1, 20, 9)
    assert np.all(t.eigvals >= 0)
    assert np.all(np.diff(t.eigvals) <= 0)
    idx = np.argmax(np.abs(t.modes), axis=0)
    assert np.all(t.modes[idx, np.arange(t.k)] > 0)


def test_bitwise_deterministic(exp1_pair):
    V0, V1 = exp1_pair
    a, b = krod_offline(V0, V1, 12, 77), krod_offline(V0, V1, 12, 77)
    assert np.array_equal(a.modes, b.modes) and np.array_equal(a.amplitudes, b.amplitudes)
    assert np.array_equal(a.eigvals, b.eigvals)


def test_amplitudes_from_v1_variant(exp1_pair):
    V0, V1 = exp1_pair
    t = krod_offline(V0, V1, 10, 0, amplitudes_from="V1")
    np.testing.assert_allclose(t.amplitudes, t.modes.T @ V1, rtol=0, atol=1e-12)


def test_zero_amplitudes_give_zero_field():
    Phi = np.eye(5)[:, :2]
    t = KoopmanTriplet(Phi, Phi.T @ np.zeros((5, 4)), 2, np.zeros(2), 0)
    assert not reconstruct(t).any()


def test_fix_signs():
    Phi = np.array([[0.1, -0.2], [-0.9, 0.8]])
    out = fix_signs(Phi)
    np.testing.assert_array_equal(out, [[-0.1, -0.2], [0.9, 0.8]])


def test_argument_checks(exp1_pair):
    V0, V1 = exp1_pair
    with pytest.raises(ConfigError):
        krod_offline(V0, V1[:, :-1], 5, 0)
    with pytest.raises(ConfigError):
        krod_offline(V0, V1, 1, 0)
    with pytest.raises(ConfigError):
        krod_offline(V0, V1, 5, 0, on_rank_deficient="ignore")
