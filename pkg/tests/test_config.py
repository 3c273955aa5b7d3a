import configparser

import pytest

from overlaprisk.config import RunConfig, load_config, write_coexposure_params


def test_defaults():
    cfg = load_config()
    assert cfg.capital.q == 0.999 and cfg.capital.delta == 4.83 and cfg.capital.gamma == 0.25
    assert cfg.coexposure.alpha == 0.53 and cfg.coexposure.eta == 68.9
    assert cfg.coexposure.stress_factor == 5.0
    assert cfg.simulation.iterations == 100_000 and cfg.simulation.downturn_a == 0.3
    assert cfg.scheme == "auto"


def test_file_values(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("[run]\nscheme = pd\nseed = 9\n[capital]\nrho = 0.12\nb_squared = no\n"
                 "[coexposure]\neta = 0\n[simulation]\ndownturn_a = none\niterations = 1e4\n")
    cfg = load_config(p)
    assert cfg.scheme == "pd" and cfg.seed == 9
    assert cfg.capital.rho == 0.12 and cfg.capital.b_squared is False
    assert cfg.coexposure.eta == 0.0
    assert cfg.simulation.downturn_a is None and cfg.simulation.iterations == 10_000


def test_overrides_win(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("[run]\nscheme = pd\nseed = 9\n")
    cfg = load_config(p, seed=4, scheme="step", threads=3)
    assert (cfg.seed, cfg.scheme, cfg.simulation.threads, cfg.simulation.seed) == (4, "step", 3, 4)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.ini")


def test_bad_scheme():
    with pytest.raises(ValueError):
        RunConfig(scheme="linear")


def test_digest_tracks_content():
    a, b = load_config(), load_config()
    assert a.digest({"x": 1}) == b.digest({"x": 1})
    assert a.digest({"x": 1}) != a.digest({"x": 2})
    assert a.digest() != load_config(seed=1).digest()
    # threads never change results, so they stay out of the hash
    assert a.digest() == load_config(threads=8).digest()


def test_write_params_keeps_backup(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("[run]\nseed = 2\n[coexposure]\nalpha = 0.53\neta = 68.9\n")
    write_coexposure_params(p, 0.4, 12.5)
    assert (tmp_path / "run.ini.bak").read_text().count("68.9") == 1
    cfg = load_config(p)
    assert (cfg.coexposure.alpha, cfg.coexposure.eta, cfg.seed) == (0.4, 12.5, 2)


def test_write_params_new_file(tmp_path):
    p = write_coexposure_params(tmp_path / "new.ini", 0.1, 2.0)
    cp = configparser.ConfigParser()
    cp.read(p)
    assert float(cp["coexposure"]["eta"]) == 2.0
    assert not (tmp_path / "new.ini.bak").exists()
