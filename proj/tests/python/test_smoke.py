import numpy as np
import pytest

import vantage


def two_disk_phi():
    i, j = np.mgrid[0:64, 0:64]
    free = np.ones((64, 64), dtype=np.uint8)
    for ci, cj in ((22, 28), (44, 36)):
        free[(i - ci) ** 2 + (j - cj) ** 2 <= 49] = 0
    return vantage.signed_distance(free)


def test_empty_map_is_fully_visible():
    phi = vantage.signed_distance(np.ones((16, 16), dtype=np.uint8))
    psi = vantage.visibility(phi, (3, 4))
    assert psi.shape == (16, 16)
    assert (psi > 0).all()


def test_observe_and_gain():
    phi = two_disk_phi()
    psi, boundary, res = vantage.observe(phi, [(32, 6)])
    assert 0.0 < res < 1.0
    assert (boundary >= 0).all() and boundary.max() > 0
    gain = vantage.gain_field(phi, [(32, 6)])
    assert gain[32, 6] == 0.0
    assert gain.max() > 0
    assert (gain[phi <= 0] == 0).all()


def test_episode_reduces_residual():
    phi = two_disk_phi()
    trace = vantage.run_episode(phi, (32, 6), max_steps=8)
    residuals = trace["residuals"]
    assert residuals[0] > residuals[-1]
    assert all(a >= b for a, b in zip(residuals, residuals[1:]))
    assert trace["vantages"][0] == [32, 6]


def test_rfa_round_trip(tmp_path):
    a = np.arange(20, dtype=np.float64).reshape(4, 5) / 8.0
    vantage.write_rfa(a, tmp_path / "a.rfa")
    assert np.array_equal(vantage.read_rfa(tmp_path / "a.rfa"), a)


def test_scene_and_errors():
    mask = vantage.generate_scene("blocks", [32, 32], 5)
    assert mask.dtype == bool and mask.any()
    phi = two_disk_phi()
    with pytest.raises(vantage.VantageError):
        vantage.visibility(phi, (22, 28))
    code, _, err = vantage.cli(["survey", "--bogus"])
    assert code == 2 and err
