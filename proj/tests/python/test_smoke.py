"""Smoke tests for the python bindings: every exported surface gets one
deterministic exercise. Statistical behaviour is covered by the C++ suites."""

import pytest

import nhbt

HBAR_EV_S = 6.582119569e-16


def test_closed_form_anchors():
    assert nhbt.pair_correlation(0.0, 2.53e-9) == 0.5
    assert nhbt.pair_correlation(0.0, 2.53e-9, nhbt.SpinMode.same_spin) == 0.0
    assert nhbt.dip_depth(19e-9, 0.33e-6) == pytest.approx(
        19e-9 / (2 * 0.33e-6), rel=1e-12
    )
    assert nhbt.coherence_time_from_energy_spread(0.13e-6) == pytest.approx(
        2.53e-9, rel=0.02
    )
    assert nhbt.noise_to_signal(0.33e-6, 2.5e-9, 1000.0, 1000.0, 4e4) == pytest.approx(
        2.2978250586152114, rel=1e-12
    )


def test_expected_profile_minimum():
    p = nhbt.DipModelParams()
    p.n_inf = 993.7
    p.tau_d_s = 0.33e-6
    p.tau_c_s = 19e-9
    p.x0_mm = 1.93
    assert nhbt.expected_profile(0.0, p) == pytest.approx(965.1, abs=0.5)
    assert nhbt.expected_profile(0.0, p, nhbt.ProfileForm.exact) == pytest.approx(
        965.1, abs=0.5
    )


def test_counter_matches_oracle():
    beam = nhbt.BeamParams()
    beam.rate_hz = 500.0
    times = nhbt.generate_source_times(
        beam, 20.0, 7, nhbt.GeneratorMode.independent
    )
    assert len(times) > 0
    shifted = [t + 1e-4 for t in times]
    assert nhbt.count_coincidences(times, shifted, 5e-4) == nhbt.brute_force_count(
        times, shifted, 5e-4
    )


def test_generator_precondition():
    beam = nhbt.BeamParams()
    beam.rate_hz = 5000.0
    beam.coherence_time_s = 1e-4
    beam.energy_spread_ev = HBAR_EV_S / (2 * 1e-4)
    with pytest.raises(nhbt.PreconditionError):
        nhbt.generate_source_times(beam, 1.0, 1, nhbt.GeneratorMode.spin_resolved)


def _scan_setup():
    beam = nhbt.BeamParams()
    beam.rate_hz = 25.0
    beam.speed_m_s = 1.0
    beam.coherence_time_s = 1e-3
    beam.energy_spread_ev = HBAR_EV_S / (2 * 1e-3)
    app = nhbt.ApparatusParams()
    app.transmission = 0.5
    app.response_time_s = 2e-3
    app.half_window_s = 2e-3
    scan = nhbt.ScanConfig()
    scan.positions_mm = [-6.0 + 1.5 * i for i in range(9)]
    scan.x0_true_mm = 0.5
    scan.dwell_s = 60.0
    scan.seed = 21
    scan.mode = nhbt.GeneratorMode.net_thinning
    return scan, beam, app


def test_simulate_scan_is_deterministic():
    scan, beam, app = _scan_setup()
    rows1 = nhbt.simulate_scan(scan, beam, app)
    rows2 = nhbt.simulate_scan(scan, beam, app)
    assert len(rows1) == 9
    key = lambda rows: [(r.x_mm, r.n_c, r.n_t, r.n_d, r.duration_s) for r in rows]
    assert key(rows1) == key(rows2)
    assert all(r.duration_s == 60.0 for r in rows1)
    assert all(r.n_t > 0 and r.n_d > 0 for r in rows1)


def test_scan_file_roundtrip(tmp_path):
    scan, beam, app = _scan_setup()
    rows = nhbt.simulate_scan(scan, beam, app)
    path = tmp_path / "scan.csv"
    nhbt.write_scan_file(str(path), rows)
    back = nhbt.read_scan_file(str(path))
    key = lambda rs: [(r.x_mm, r.n_c, r.n_t, r.n_d, r.duration_s) for r in rs]
    assert key(back) == key(rows)
    with pytest.raises(nhbt.FormatError):
        (tmp_path / "bad.csv").write_text("not,a,scan\n")
        nhbt.read_scan_file(str(tmp_path / "bad.csv"))


def test_event_file_roundtrip(tmp_path):
    path = tmp_path / "events.nevt"
    nhbt.write_event_file(str(path), [0.5e-3, 2e-3], [1e-3])
    transmitted, reflected = nhbt.read_event_file(str(path))
    assert transmitted == [0.5e-3, 2e-3]
    assert reflected == [1e-3]


def test_noiseless_fit_roundtrip():
    truth = nhbt.DipModelParams()
    truth.n_inf = 500.0
    truth.tau_d_s = 2e-3
    truth.tau_c_s = 1e-3
    truth.x0_mm = 1.2
    speed = 1.0
    x = [truth.x0_mm + 0.4 * (i - 20) for i in range(41)]
    counts = [
        nhbt.expected_profile((xi - truth.x0_mm) * 1e-3 / speed, truth) for xi in x
    ]
    fit = nhbt.fit_dip(x, counts, speed)
    assert fit.converged
    assert fit.params.n_inf == pytest.approx(truth.n_inf, rel=1e-5)
    assert fit.params.tau_d_s == pytest.approx(truth.tau_d_s, rel=1e-5)
    assert fit.params.tau_c_s == pytest.approx(truth.tau_c_s, rel=1e-5)
    assert fit.params.x0_mm == pytest.approx(truth.x0_mm, abs=1e-5)
    assert fit.chi2_reduced < 1e-6


def test_drift_correct_identity():
    rows = []
    for i in range(10):
        row = nhbt.ScanRow()
        row.x_mm = float(i)
        row.n_c = 1000
        row.n_t = 50000
        row.n_d = 70000
        row.duration_s = 5.0
        rows.append(row)
    corrected = nhbt.drift_correct(rows)
    assert all(c.valid and not c.clamped for c in corrected)
    assert all(c.value == pytest.approx(1000.0, rel=1e-12) for c in corrected)


def test_selfchecks_pass():
    results = nhbt.run_selfchecks(1)
    assert len(results) == 5
    assert all(r.passed for r in results), [
        (r.name, r.detail) for r in results if not r.passed
    ]
