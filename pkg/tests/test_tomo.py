import numpy as np
import pytest

from lophoton import jones, tomo
from lophoton.linalg import kron

from conftest import random_density_matrix


def exact_records(rho, n=1_000_000):
    """Counts equal to n times the exact outcome probabilities."""
    return [
        tomo.MeasurementRecord(s[0], s[1], n * tomo.setting_probabilities(rho, s))
        for s in tomo.SETTINGS
    ]


def test_projectors_zz_setting():
    pis = tomo.projectors_for_setting(("Z", "Z"))
    for k, pi in enumerate(pis):
        expected = np.zeros((4, 4))
        expected[k, k] = 1.0
        assert np.allclose(pi, expected, atol=1e-14)


def test_projector_completeness_all_settings():
    for s in tomo.SETTINGS:
        total = sum(tomo.projectors_for_setting(s))
        assert np.max(np.abs(total - np.eye(4))) < 1e-12


def test_xy_projector_hh_element():
    pis = tomo.projectors_for_setting(("X", "Y"))  # first outcome pair is (D, R)
    assert pis[0][0, 0] == pytest.approx(0.25, abs=1e-14)


def test_simulate_counts_pure_and_mixed():
    rng_seed = 99
    hh = np.zeros((4, 4), dtype=complex)
    hh[0, 0] = 1.0
    recs = {(r.basis1, r.basis2): r for r in tomo.simulate_counts(hh, 10_000, rng_seed)}
    zz = recs[("Z", "Z")]
    assert zz.counts[0] == 10_000 and zz.counts[1:].sum() == 0

    singlet = tomo.psi_minus()
    zz = {(r.basis1, r.basis2): r for r in tomo.simulate_counts(singlet, 100_000, rng_seed)}[("Z", "Z")]
    assert zz.counts[0] == 0 and zz.counts[3] == 0
    assert abs(zz.counts[1] - 50_000) < 5 * np.sqrt(25_000)

    mixed = tomo.maximally_mixed()
    for rec in tomo.simulate_counts(mixed, 100_000, rng_seed):
        assert np.all(np.abs(rec.counts - 25_000) < 5 * np.sqrt(25_000))


def test_linear_inversion_exact_inputs():
    singlet = tomo.psi_minus()
    assert np.max(np.abs(tomo.linear_inversion(exact_records(singlet)) - singlet)) < 1e-10
    mixed = tomo.maximally_mixed()
    assert np.max(np.abs(tomo.linear_inversion(exact_records(mixed)) - mixed)) < 1e-10


def test_linear_inversion_always_hermitian_unit_trace(rng):
    for _ in range(20):
        counts = rng.integers(0, 200, size=(9, 4)).astype(float) + 1.0
        records = [
            tomo.MeasurementRecord(s[0], s[1], counts[i]) for i, s in enumerate(tomo.SETTINGS)
        ]
        rho = tomo.linear_inversion(records)
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)


def test_linear_inversion_missing_setting():
    records = exact_records(tomo.maximally_mixed())[:-1]
    with pytest.raises(tomo.MissingSetting):
        tomo.linear_inversion(records)
    with pytest.raises(tomo.MissingSetting):
        tomo.mle_reconstruct(records)


def test_linear_inversion_rejects_zero_total_setting():
    records = exact_records(tomo.maximally_mixed())
    dead = tomo.MeasurementRecord("Z", "Z", np.zeros(4))
    with pytest.raises(tomo.MissingSetting):
        tomo.linear_inversion([dead] + records[1:])


def test_mle_round_trip_singlet():
    records = tomo.simulate_counts(tomo.psi_minus(), 1_000_000, seed=7)
    res = tomo.mle_reconstruct(records)
    assert res.converged
    assert tomo.fidelity(res.rho, tomo.psi_minus()) >= 0.999


def test_mle_round_trip_maximally_mixed():
    records = tomo.simulate_counts(tomo.maximally_mixed(), 1_000_000, seed=8)
    res = tomo.mle_reconstruct(records)
    w = np.linalg.eigvalsh(res.rho)
    assert np.all(np.abs(w - 0.25) < 0.01)


def test_mle_exact_probabilities_reach_entropy_bound():
    rho = tomo.werner(0.7)
    records = exact_records(rho, n=1000)
    res = tomo.mle_reconstruct(records)
    bound = 0.0
    for rec in records:
        p = rec.counts / rec.counts.sum()
        nz = p > 0
        bound += float(np.sum(rec.counts[nz] * np.log(p[nz])))
    assert res.log_likelihood == pytest.approx(bound, abs=1e-6 * abs(bound))


def test_mle_beats_projected_initializer(rng):
    for trial in range(10):
        counts = rng.integers(0, 50, size=(9, 4)).astype(float)
        counts[counts.sum(axis=1) == 0, 0] = 1.0
        records = [
            tomo.MeasurementRecord(s[0], s[1], counts[i]) for i, s in enumerate(tomo.SETTINGS)
        ]
        res = tomo.mle_reconstruct(records)
        rho0 = tomo.project_to_physical(tomo.linear_inversion(records), floor=1e-12)
        assert res.log_likelihood >= tomo.log_likelihood(rho0, records) - 1e-9


def test_mle_output_always_physical(rng):
    for _ in range(10):
        counts = rng.integers(0, 30, size=(9, 4)).astype(float) + 0.0
        counts[counts.sum(axis=1) == 0, 0] = 1.0
        records = [
            tomo.MeasurementRecord(s[0], s[1], counts[i]) for i, s in enumerate(tomo.SETTINGS)
        ]
        rho = tomo.mle_reconstruct(records).rho
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_mle_iteration_cap_flags_not_converged():
    records = tomo.simulate_counts(tomo.werner(0.8), 10_000, seed=5)
    res = tomo.mle_reconstruct(records, max_iter=1)
    assert not res.converged
    assert np.trace(res.rho).real == pytest.approx(1.0, abs=1e-10)


def test_mle_deterministic():
    records = tomo.simulate_counts(tomo.werner(0.6), 50_000, seed=3)
    a = tomo.mle_reconstruct(records)
    b = tomo.mle_reconstruct(records)
    assert np.array_equal(a.rho, b.rho)


def test_fidelity_values(rng):
    singlet = tomo.psi_minus()
    assert tomo.fidelity(singlet, singlet) == pytest.approx(1.0, abs=1e-12)
    assert tomo.fidelity(tomo.maximally_mixed(), singlet) == pytest.approx(0.25, abs=1e-12)
    for p in (0.0, 0.5, 1.0):
        assert tomo.fidelity(tomo.werner(p), singlet) == pytest.approx(
            (3 * p + 1) / 4, abs=1e-10
        )
    # pure-target shortcut agrees with the full formula
    for _ in range(5):
        rho = random_density_matrix(rng, 4)
        direct = float(np.real(np.trace(singlet @ rho)))
        assert tomo.fidelity(rho, singlet) == pytest.approx(direct, abs=1e-10)


def test_concurrence_values():
    assert tomo.concurrence(tomo.psi_minus()) == pytest.approx(1.0, abs=1e-12)
    product = kron(np.diag([1.0, 0.0]), np.diag([0.3, 0.7]))
    assert tomo.concurrence(product) == pytest.approx(0.0, abs=1e-12)
    for p in (1 / 3, 2 / 3, 1.0):
        assert tomo.concurrence(tomo.werner(p)) == pytest.approx(
            max(0.0, (3 * p - 1) / 2), abs=1e-10
        )


def test_entropies_values():
    assert tomo.entropies(tomo.psi_minus()) == pytest.approx((0.0, 1.0), abs=1e-10)
    assert tomo.entropies(tomo.maximally_mixed()) == pytest.approx((2.0, 1.0), abs=1e-12)
    w = np.array([0.925, 0.025, 0.025, 0.025])
    expected = float(-np.sum(w * np.log2(w)))
    full, _ = tomo.entropies(tomo.werner(0.9))
    assert full == pytest.approx(expected, abs=1e-10)


def test_metric_local_unitary_invariance(rng):
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, _ = np.linalg.qr(g)
    u = kron(q, q)
    rho = tomo.werner(0.8)
    target = tomo.psi_minus()
    rho_u = u @ rho @ u.conj().T
    target_u = u @ target @ u.conj().T
    assert tomo.concurrence(rho_u) == pytest.approx(tomo.concurrence(rho), abs=1e-10)
    assert tomo.fidelity(rho_u, target_u) == pytest.approx(
        tomo.fidelity(rho, target), abs=1e-10
    )


def test_hofmann_bounds():
    assert tomo.hofmann_bounds(0.902, 0.874) == (0.776, 0.874)
    assert tomo.hofmann_bounds(1.0, 1.0) == (1.0, 1.0)
    assert tomo.hofmann_bounds(0.5, 0.5) == (0.0, 0.5)
    lo, hi = tomo.hofmann_bounds(0.3, 0.9)
    assert lo <= hi
    with pytest.raises(ValueError):
        tomo.hofmann_bounds(1.2, 0.5)


def test_monte_carlo_metrics_spread():
    records = tomo.simulate_counts(tomo.psi_minus(), 1_000_000, seed=21)
    mc = tomo.monte_carlo_metrics(records, tomo.psi_minus(), 200, seed=22)
    assert mc.fidelity_to_target.std < 0.002
    assert mc.fidelity_to_target.mean > 0.999
    # resampled spread stabilizes as the number of resamples grows
    mc2 = tomo.monte_carlo_metrics(records, tomo.psi_minus(), 400, seed=22)
    assert mc2.fidelity_to_target.std < 0.002


def test_monte_carlo_rounded_exact_input_has_tiny_spread():
    records = [
        tomo.MeasurementRecord(r.basis1, r.basis2, np.round(r.counts))
        for r in exact_records(tomo.werner(0.9), n=1_000_000)
    ]
    mc = tomo.monte_carlo_metrics(records, tomo.psi_minus(), 100, seed=4)
    for name in ("fidelity_to_target", "concurrence", "purity"):
        assert getattr(mc, name).std < 2e-3


def test_monte_carlo_threads_do_not_change_results():
    records = tomo.simulate_counts(tomo.werner(0.85), 20_000, seed=31)
    seq = tomo.monte_carlo_metrics(records, tomo.psi_minus(), 100, seed=32, threads=1)
    par = tomo.monte_carlo_metrics(records, tomo.psi_minus(), 100, seed=32, threads=4)
    assert seq == par


def test_monte_carlo_requires_enough_resamples():
    records = tomo.simulate_counts(tomo.werner(0.9), 1000, seed=1)
    with pytest.raises(ValueError):
        tomo.monte_carlo_metrics(records, tomo.psi_minus(), 10, seed=1)


def test_records_csv_round_trip(tmp_path):
    records = tomo.simulate_counts(tomo.werner(0.7), 5000, seed=13)
    path = tmp_path / "records.csv"
    tomo.records_to_csv(path, records)
    back = {(r.basis1, r.basis2): r for r in tomo.records_from_csv(path)}
    assert len(back) == 9
    for rec in records:
        assert np.array_equal(back[(rec.basis1, rec.basis2)].counts, rec.counts)


def test_records_csv_rejects_inconsistent_outcomes(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("basis1,basis2,outcome1,outcome2,counts\nZ,Z,D,H,10\n")
    with pytest.raises(ValueError):
        tomo.records_from_csv(path)
