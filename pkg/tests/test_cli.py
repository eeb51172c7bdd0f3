import csv

import numpy as np
import pytest

from apsm_sic.cli import cli_main
from apsm_sic.si_signal import load_iq

CONFIG = """\
m_pre = 1
m_post = 1
n_train = 300
n_test = 200
realizations = 2
smoothing = 50
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text(CONFIG)
    return p


class TestGen:
    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.iq", tmp_path / "b.iq"
        assert cli_main(["gen", "--out", str(a), "--n", "100000", "--seed", "7"]) == 0
        assert cli_main(["gen", "--out", str(b), "--n", "100000", "--seed", "7"]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert load_iq(a).size == 100000

    def test_rx_out(self, tmp_path, cfg_path):
        tx, rx = tmp_path / "tx.iq", tmp_path / "rx.iq"
        assert cli_main(["gen", "--out", str(tx), "--n", "500", "--config", str(cfg_path),
                         "--rx-out", str(rx)]) == 0
        assert load_iq(rx).size == 500
        assert not np.array_equal(load_iq(tx), load_iq(rx))

    def test_bad_count(self, tmp_path):
        assert cli_main(["gen", "--out", str(tmp_path / "x.iq"), "--n", "0"]) == 2


class TestRun:
    def test_missing_config(self, tmp_path, capsys):
        assert cli_main(["run", "--config", str(tmp_path / "missing.cfg"),
                         "--out", str(tmp_path / "c.csv")]) == 2
        assert "missing.cfg" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert cli_main(["run", "--frobnicate"]) == 2
        assert "usage" in capsys.readouterr().err

    def test_no_command(self):
        assert cli_main([]) == 2

    def test_bad_value(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("mu = 7\n")
        assert cli_main(["run", "--config", str(p), "--out", str(tmp_path / "c.csv")]) == 2

    def test_no_output(self, cfg_path):
        assert cli_main(["run", "--config", str(cfg_path)]) == 2

    def test_runtime_error(self, tmp_path, cfg_path):
        out = tmp_path / "missing_dir" / "c.csv"
        assert cli_main(["run", "--config", str(cfg_path), "--out", str(out)]) == 1

    def test_outputs_and_determinism(self, tmp_path, cfg_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli_main(["run", "--config", str(cfg_path), "--out", str(a), "--seed", "3"]) == 0
        assert cli_main(["run", "--config", str(cfg_path), "--out", str(b), "--seed", "3"]) == 0
        assert a.read_bytes() == b.read_bytes()
        rows = list(csv.reader(a.open()))
        assert rows[0] == ["iteration", "mse_db"]
        assert len(rows) == 301
        summary = list(csv.reader((tmp_path / "a.summary.csv").open()))
        assert summary[0] == ["filter", "kernel", "mu", "q", "eps", "alpha", "test_mse_db",
                              "dict_size"]
        assert summary[1][:2] == ["apsm", "linear"]
        assert "test MSE" in capsys.readouterr().out


class TestSweep:
    def test_q_grid(self, tmp_path, cfg_path):
        out = tmp_path / "sweep"
        assert cli_main(["sweep", "--config", str(cfg_path), "--out", str(out),
                         "--mu", "0.02", "--q", "1,20"]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["apsm_linear_mu0.02_q1.csv", "apsm_linear_mu0.02_q20.csv",
                         "summary.csv"]
        rows = list(csv.reader((out / "summary.csv").open()))
        assert len(rows) == 3
        assert [r[3] for r in rows[1:]] == ["1", "20"]
        assert all(r[2] == "0.02" for r in rows[1:])

    def test_bad_kernel(self, tmp_path, cfg_path):
        assert cli_main(["sweep", "--config", str(cfg_path), "--out", str(tmp_path / "s"),
                         "--kernel", "cubic"]) == 2
