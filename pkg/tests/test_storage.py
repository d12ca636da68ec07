import numpy as np
import pytest

from evolab import presets, storage
from evolab.engine import PathConfig, SeedLineage, simulate
from evolab.measures import estimate_measure

OU = presets.ou(1.0, 1.0)
CFG = PathConfig(step_size=5e-3)


def test_ensemble_round_trip(tmp_path):
    ens = simulate(OU, 0.0, 0.5, np.array([0.3]), 2048, CFG, SeedLineage(5, 2, 9))
    path = tmp_path / "ens.bin"
    storage.dump_ensemble(ens, path)
    back = storage.load_ensemble(path)
    assert np.array_equal(back.states, ens.states)
    assert np.array_equal(back.weights, ens.weights)
    assert np.array_equal(back.alive, ens.alive)
    assert back.lineage == ens.lineage
    assert back.start_time == ens.start_time
    assert back.end_time == ens.end_time
    assert np.array_equal(back.start_point, ens.start_point)
    assert back.spec_digest[:16] == ens.spec_digest[:16]


def test_measure_round_trip(tmp_path):
    mu = estimate_measure(OU, 2.0, n=2000, config=CFG, lineage=SeedLineage(8))
    path = tmp_path / "mu.bin"
    storage.dump_measure(mu, path, spec_digest=OU.digest())
    back = storage.load_measure(path)
    assert np.array_equal(back.particles, mu.particles)
    assert back.time_tag == 2.0
    assert back.burn_in == mu.burn_in
    assert back.lineage == mu.lineage


def test_kind_mismatch(tmp_path):
    mu = estimate_measure(OU, 0.0, n=1000, config=CFG, lineage=SeedLineage(8))
    path = tmp_path / "mu.bin"
    storage.dump_measure(mu, path)
    with pytest.raises(ValueError):
        storage.load_ensemble(path)


def test_magic_bytes_guard(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
    with pytest.raises(ValueError):
        storage.load_measure(path)


def test_per_path_start_ensembles_not_dumpable(tmp_path):
    starts = np.linspace(-1, 1, 32)[:, None]
    ens = simulate(OU, 0.0, 0.1, starts, 32, CFG, SeedLineage(1))
    with pytest.raises(ValueError):
        storage.dump_ensemble(ens, tmp_path / "x.bin")


def test_multid_round_trip(tmp_path):
    spec = presets.ou(1.0, 1.0, d=3)
    ens = simulate(spec, 0.0, 0.2, np.array([0.1, -0.2, 0.3]), 512, CFG, SeedLineage(2))
    storage.dump_ensemble(ens, tmp_path / "e3.bin")
    back = storage.load_ensemble(tmp_path / "e3.bin")
    assert back.states.shape == (512, 3)
    assert np.array_equal(back.states, ens.states)
