import math

import pytest

import releaseflow as rf


def test_version():
    assert rf.__version__ == "0.1.0"


def test_fick_series_limits():
    assert rf.fick_series_release(0.01, 0.0) == 0.0
    # Late times: higher modes decay like exp(-9 pi^2 d t) and are negligible.
    lead = 1.0 - 8.0 / math.pi**2 * math.exp(-math.pi**2 * 0.2)
    assert rf.fick_series_release(0.2, 1.0) == pytest.approx(lead, abs=1e-7)


def test_curve_round_trip(tmp_path):
    curve = rf.synthesize_fickian(0.01, 15)
    path = tmp_path / "flat.csv"
    rf.save_curve(path, curve)
    back = rf.load_curve(path)
    assert back.film == rf.FilmType.FLAT
    assert back.times == pytest.approx(curve.times)
    assert back.fractions == pytest.approx(curve.fractions)


def test_bad_curve_raises_with_kind():
    with pytest.raises(rf.ReleaseFlowError) as info:
        rf.ReleaseCurve(rf.FilmType.FLAT, [0.0, 0.5, 0.4], [0.0, 0.1, 0.2])
    assert info.value.kind == "NonMonotoneTime"


def test_fit_recovers_diffusivity():
    curve = rf.synthesize_fickian_at(0.03, rf.canonical_times())
    result = rf.fit(rf.ModelKind.FICK, curve)
    assert result.model.params[0] == pytest.approx(0.03, rel=1e-6)
    assert result.rmse < 1e-8


def test_metrics():
    mae, rmse = rf.metrics([0.0, 0.0], [3.0, 4.0])
    assert mae == pytest.approx(3.5)
    assert rmse == pytest.approx(math.sqrt(12.5))


def test_oracle_matches_series():
    times = [0.1, 0.5, 1.0]
    got = rf.oracle_release(0.01, times)
    for t, r in zip(times, got):
        assert r == pytest.approx(rf.fick_series_release(0.01, t), abs=1e-3)


def test_short_training(tmp_path):
    cfg = rf.PinnConfig()
    cfg.epochs = 20
    cfg.n_collocation = 200
    seen = []
    trained = rf.train(cfg, rf.reference_curve(rf.FilmType.FLAT), lambda e, loss: seen.append(loss))
    assert len(seen) == 20
    assert all(math.isfinite(v) for v in seen)
    assert len(trained.params) == 1761
    release = trained.release([0.0, 0.5, 1.0])
    assert len(release) == 3
    trained.save(tmp_path / "model")
    again = rf.load_trained(tmp_path / "model")
    assert list(again.params) == list(trained.params)


def test_dropout_band_requires_dropout():
    cfg = rf.PinnConfig()
    cfg.epochs = 0
    trained = rf.train(cfg, rf.reference_curve(rf.FilmType.FLAT))
    with pytest.raises(rf.ReleaseFlowError) as info:
        rf.mc_dropout_band(trained, 10)
    assert info.value.kind == "DropoutDisabled"


def test_band_from_samples():
    band = rf.band_from_samples([0.0, 1.0], [[0.0, 1.0], [0.2, 1.0]])
    assert band.mean == pytest.approx([0.1, 1.0])
    assert band.std == pytest.approx([0.1, 0.0])
