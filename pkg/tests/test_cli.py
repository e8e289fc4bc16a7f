import json
import re

import numpy as np
import pytest

from quasireal import frdn
from quasireal.cli import main
from quasireal.realizations import HiddenQuantumModel


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_frdn_check_pass(capsys, tmp_path):
    path = tmp_path / "out.json"
    code, out, _ = run(capsys, "frdn-check", "--lam", "0.4", "--alpha", "1", "--max-len", "8", "--json", str(path))
    assert code == 0
    rep = json.loads(path.read_text())
    assert rep["schema"] == 1 and rep["passed"] and rep["max_discrepancy"] < 1e-9


def test_frdn_check_bad_lambda(capsys):
    code, _, err = run(capsys, "frdn-check", "--lam", "0.9")
    assert code == 2 and "lambda" in err


def test_frdn_check_parallel_grid_deterministic(capsys):
    args = ["frdn-check", "--lam", "0.2,0.5", "--alpha", "1,2.3", "--max-len", "6", "--json", "-"]
    _, a, _ = run(capsys, *args, "--parallel", "3")
    _, b, _ = run(capsys, *args)
    assert a == b


def test_seventeen_digits(capsys):
    _, out, _ = run(capsys, "frdn-check", "--max-len", "2", "--json", "-")
    assert '"lam": 0.40000000000000002' in out


def test_separation_exp(capsys, tmp_path):
    csv_path = tmp_path / "density.csv"
    code, out, _ = run(capsys, "separation", "--json", "-", "--density-csv", str(csv_path), "--samples", "2000")
    assert code == 0
    rep = json.loads(out)
    assert np.allclose(rep["tau_scaled"], [17.855, 5.959, 1], atol=2e-3)
    assert rep["sandwich"]["cmin_pass"] and rep["sandwich"]["cmax_pass"]
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "x,s,t" and len(lines) > 1000


def test_separation_power(capsys):
    code, out, _ = run(capsys, "separation", "--cone", "power", "--samples", "2000")
    assert code == 0 and "PASS" in out


def test_separation_commensurate_flagged(capsys):
    code, out, _ = run(capsys, "separation", "-a", "2", "--max-len", "4", "--samples", "500")
    assert code == 1 and "commensurate" in out


def test_witness_table(capsys):
    code, out, _ = run(capsys, "witness", "--n-max", "64", "--json", "-")
    assert code == 0
    rep = json.loads(out)
    ex = rep["witness"]["exclusions"]
    assert len(ex) == 64 and ex["13"] and not ex["14"]


def test_witness_noise(capsys):
    code, out, _ = run(capsys, "witness", "-q", "0.9999", "--json", "-")
    rep = json.loads(out)
    assert rep["noise_bound"]["applicable"]


def test_hankel_exp(capsys, tmp_path):
    code, out, _ = run(capsys, "hankel", "--process", "exp", "--basis-len", "4", "--csv", str(tmp_path / "h.csv"))
    assert code == 0 and "rank 3" in out
    assert (tmp_path / "h.csv").exists()


def test_sample_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for p in (a, b):
        assert run(capsys, "sample", "-N", "100000", "--seed", "7", "-o", str(p))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    run(capsys, "sample", "-N", "1000", "--seed", "7", "--format", "binary", "-o", str(tmp_path / "s.bin"))
    assert (tmp_path / "s.bin").read_bytes()[:6] == b"RLSEQ1"


def test_sample_numerical_collapse(capsys, tmp_path):
    h = HiddenQuantumModel.from_kraus([[np.zeros((2, 2))], [np.eye(2) * 1e-6]], rho=np.eye(2) / 2)
    h.save(tmp_path / "h.json")
    code, _, err = run(capsys, "sample", "--model", str(tmp_path / "h.json"), "-N", "5", "-o", str(tmp_path / "x"))
    assert code == 3


def test_validate_model(capsys, tmp_path):
    frdn.build_hqmm(frdn.FrdnParams(0.4, 1.0)).save(tmp_path / "h.json")
    frdn.build_quasi(frdn.FrdnParams(0.4, 1.0)).save(tmp_path / "q.json")
    assert run(capsys, "validate-model", "--path", str(tmp_path / "h.json"))[0] == 0
    assert run(capsys, "validate-model", "--path", str(tmp_path / "q.json"))[0] == 0
    obj = json.loads((tmp_path / "q.json").read_text())
    obj["D"][0] = (-np.array(obj["D"][0])).tolist()
    (tmp_path / "bad.json").write_text(json.dumps(obj))
    assert run(capsys, "validate-model", "--path", str(tmp_path / "bad.json"))[0] == 1
    (tmp_path / "nan.json").write_text((tmp_path / "q.json").read_text().replace("1.0", "NaN", 1))
    assert run(capsys, "validate-model", "--path", str(tmp_path / "nan.json"))[0] == 2


def test_config_precedence_and_describe(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"lambda": 0.3, "alpha": 2.0}))
    code, out, _ = run(capsys, "frdn-check", "--config", str(cfg), "--alpha", "1.5", "--describe")
    assert code == 0
    d = json.loads(out)
    assert d["config"]["lam"] == 0.3 and d["config"]["alpha"] == 1.5


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(capsys, "frdn-check", "--config", str(cfg))[0] == 2


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["hankel", "--help"])
    assert "defaults:" in capsys.readouterr().out


def test_lambda_flag_alias_and_pure_json_stdout(capsys):
    code, out, err = run(capsys, "frdn-check", "--lambda", "0.2", "--max-len", "3", "--json", "-")
    assert code == 0
    assert json.loads(out)["config"]["lam"] == 0.2
    assert "PASS" in err
