import json
import os
import subprocess
import sys

import pytest

from pertcopula.cli import main


def test_simulate_estimate_test_grid(tmp_path, capsys):
    chain = tmp_path / "chain.csv"
    assert main(["simulate", "--family", "sine", "--params", "0.28,-0.15", "--n", "999", "--seed", "7", "--out", str(chain)]) == 0
    assert len(chain.read_text().splitlines()) == 1001
    capsys.readouterr()
    assert main(["estimate", "--method", "moment", "--family", "sine", "--in", str(chain), "--alpha", "0.05"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["method"] == "moment" and doc["n"] == 999 and len(doc["intervals"]) == 2
    for method in ("mle", "robust_empirical", "robust_model"):
        assert main(["estimate", "--method", method, "--in", str(chain)]) == 0
        assert json.loads(capsys.readouterr().out)["method"] == method
    assert main(["test", "--in", str(chain), "--s", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["reject"] is True
    grid = tmp_path / "grid.csv"
    assert main(["loglik-grid", "--in", str(chain), "--points", "5", "--out", str(grid)]) == 0
    assert grid.read_text().splitlines()[0] == "lambda1,lambda2,loglik"


def test_coverage_from_config(tmp_path):
    out = tmp_path / "cov.csv"
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"family": "legendre", "sample_sizes": [299], "replications": 3, "estimators": ["moment", "mle"], "output_path": str(out)}))
    assert main(["coverage", "--config", str(cfg)]) == 0
    assert out.read_text().startswith("estimator,parameter,n,coverage_count,replications,mean_ci_length,mean_estimate,failures")
    first = out.read_text()
    assert main(["coverage", "--config", str(cfg)]) == 0
    assert out.read_text() == first


def test_errors_give_nonzero_exit(tmp_path, capsys):
    assert main(["simulate", "--family", "sine", "--params", "0.4,0.2", "--n", "9", "--out", str(tmp_path / "x.csv")]) == 1
    assert "exceeds" in capsys.readouterr().err
    assert main(["estimate", "--in", str(tmp_path / "missing.csv"), "--family", "sine"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["estimate", "--method", "bogus", "--in", "x"])
    assert exc.value.code != 0


def test_console_entry_point(tmp_path):
    out = tmp_path / "c.csv"
    env = dict(os.environ)
    r = subprocess.run([sys.executable, "-m", "pertcopula.cli", "simulate", "--family", "legendre", "--n", "20", "--out", str(out)], capture_output=True, text=True, env=env)
    assert r.returncode == 0, r.stderr
    assert len(out.read_text().splitlines()) == 22
