import numpy as np
import pytest

from conftest import read_json
from krodtwin.errors import ConfigError
from krodtwin.krod import KoopmanTriplet, krod_offline, split_snapshots
from krodtwin.nlarx import NlarxOrders
from krodtwin.seeding import derive_seed
from krodtwin.twin import (
    build_twin,
    fold_boundaries,
    initial_coefficients,
    simulate_coefficients,
    twin_predict,
    twofold_validate,
)


def toy_twin(n=120, seed=0):
    """Two orthonormal modes with damped-oscillation amplitudes from a known linear recursion."""
    rng = np.random.default_rng(seed)
    Phi = np.linalg.qr(rng.standard_normal((15, 2)))[0]
    t = np.arange(n)
    A = np.vstack([0.97**t * np.cos(0.2 * t), 0.95**t])
    trip = KoopmanTriplet(Phi, A, 2, np.array([2.0, 1.0]), seed)
    return build_twin(trip, Phi @ A[:, 0], dt=0.1, seed=seed, orders_grid=[NlarxOrders(2, 2, 1)], max_iter=300)


def test_initial_coefficients_examples():
    Phi = np.linalg.qr(np.random.default_rng(1).standard_normal((8, 3)))[0]
    np.testing.assert_allclose(initial_coefficients(Phi[:, 0], Phi), [1, 0, 0], atol=1e-14)
    w = np.random.default_rng(2).standard_normal(8)
    w -= Phi @ (Phi.T @ w)
    np.testing.assert_allclose(initial_coefficients(w, Phi), 0, atol=1e-14)
    with pytest.raises(ConfigError):
        initial_coefficients(np.ones(7), Phi)


def test_initial_coefficients_match_first_amplitude_column(snapshots):
    s = snapshots("exp1")
    V0, V1 = split_snapshots(s)
    t = krod_offline(V0, V1, 25, derive_seed(0, "krod", 25))
    np.testing.assert_allclose(initial_coefficients(s.values[:, 0], t.modes), t.amplitudes[:, 0], rtol=0, atol=1e-12)


def test_fold_boundaries():
    assert fold_boundaries(300) == (200, 100)
    assert fold_boundaries(9) == (6, 3)
    with pytest.raises(ConfigError):
        fold_boundaries(8)


def test_perfect_surrogate_validates_in_both_folds():
    twin = toy_twin()
    rep = twofold_validate(twin, twin.triplet.amplitudes, seed=4)
    assert [f.n_train for f in rep.folds] == [80, 40]
    for f in rep.folds:
        assert np.all(f.fit_one_step >= 99.0)
        assert f.residuals.shape == twin.triplet.amplitudes.shape
    rows = list(rep.rows())
    assert len(rows) == 2 * 2 * 2
    assert {r[2] for r in rows} == {"one_step", "free_run"}


def test_twin_a0_recomputable():
    twin = toy_twin()
    np.testing.assert_allclose(twin.a0, twin.triplet.modes.T @ twin.u0, rtol=0, atol=1e-12)
    assert twin.n_dtm == 2


def test_predict_is_modes_times_simulated_coefficients():
    twin = toy_twin()
    times = twin.t0 + twin.dt * np.arange(120)
    for mode in ("one_step", "free_run"):
        U = twin_predict(twin, times, mode)
        ref = twin.triplet.modes @ simulate_coefficients(twin, 120, mode)
        assert np.max(np.abs(U - ref)) <= 1e-10


def test_predict_subset_of_times_and_extrapolation():
    twin = toy_twin()
    U = twin_predict(twin, [0.0, 0.5, 13.0])
    assert U.shape == (15, 3)
    assert np.isfinite(U).all()


def test_predict_time_checks():
    twin = toy_twin()
    with pytest.raises(ConfigError):
        twin_predict(twin, [-0.1])
    with pytest.raises(ConfigError):
        twin_predict(twin, [0.05])


def test_validate_checks_row_count():
    twin = toy_twin()
    with pytest.raises(ConfigError):
        twofold_validate(twin, twin.triplet.amplitudes[:1])


def test_exp3_full_grid_online_mae(preset_run):
    """Free-run twin over the whole snapshot grid, including the extrapolated last third."""
    status, _, out = preset_run("exp3")
    assert status == 0
    assert read_json(out / "eval_online.json")["mae"] <= 1e-3
