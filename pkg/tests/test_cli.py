import csv
import io
import json

import numpy as np
import pytest

from macrodistinct import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def records_json(text):
    return json.loads(text)["records"]


def records_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_distinctness_ghz_sweep(capsys):
    code, out, _ = run(capsys, "distinctness", "--family", "ghz", "--n-qubits", "8", "--sweep", "0.1:10:20:log")
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"config_echo", "records", "summary"}
    recs = doc["records"]
    assert len(recs) == 20
    p = [r["guessing_probability"] for r in recs]
    assert np.all(np.diff(p) <= 1e-12)
    assert doc["summary"]["monotone_nonincreasing"]


def test_distinctness_fock_target(capsys):
    code, out, _ = run(capsys, "distinctness", "--family", "fock-superposition", "--fock-n", "4", "--pg", "0.9", "--sweep", "1:1:1")
    tol = [r for r in records_json(out) if r["kind"] == "noise_tolerance"]
    assert code == 0 and tol[0]["status"] == "ok"
    assert tol[0]["sigma"] == pytest.approx(1.56060829214475813569651590346, rel=1e-5)


def test_distinctness_sigma_zero(capsys):
    code, out, _ = run(capsys, "distinctness", "--family", "ghz", "--sweep", "0:0:1")
    assert code == 0 and records_json(out)[0]["guessing_probability"] == 1


@pytest.mark.parametrize(
    "argv",
    [
        ("fragility", "--sweep", "1:0:4"),
        ("fragility", "--sweep", "0:1:0"),
        ("fragility", "--sweep", "0:1:4:log"),
        ("fragility", "--sweep", "nonsense"),
        ("distinctness", "--family", "ghz", "--observable", "number"),
        ("distinctness", "--observable", "sz"),
        ("distinctness", "--pg", "1.5"),
        ("loss", "--sweep", "0:2:3"),
        ("loss", "--family", "fock-superposition", "--loss-family", "qubit-swap"),
        ("fragility", "--tol", "bogus=1"),
        ("fragility", "--family", "coherent-cat", "--alpha", "3", "--cutoff", "10"),
        ("verify", "--trials", "0"),
        ("verify", "--suite", "nope"),
    ],
)
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["fragility", "--family", "squeezed"])
    assert exc.value.code == 2


def test_fragility_cat_all_satisfied(capsys):
    code, out, _ = run(capsys, "fragility", "--family", "coherent-cat", "--alpha", "2")
    doc = json.loads(out)
    assert code == 0 and doc["summary"]["all_satisfied"] and len(doc["records"]) == 16


def test_loss_tightness_endpoint(capsys):
    code, out, _ = run(capsys, "loss", "--alpha", "2", "--sweep", "0:1:5")
    recs = records_json(out)
    assert code == 0
    assert any(r["eta"] == 1 and r["slack"] < 0.05 for r in recs)


def test_loss_min_sensitivity_record(capsys):
    code, out, _ = run(capsys, "loss", "--alpha", "2", "--sweep", "1:1:1", "--pg", "0.99")
    rec = [r for r in records_json(out) if r["kind"] == "min_sensitivity"][0]
    assert rec["eta"] == pytest.approx(0.201807885045106386899066720251, rel=2e-6)


def test_certify_channels(capsys):
    for channel in ("dephasing", "qubit-swap"):
        fam = ("--family", "ghz", "--n-qubits", "2") if channel == "qubit-swap" else ()
        code, out, _ = run(capsys, "certify", "--channel", channel, "--sweep", "0:1:3", *fam)
        assert code == 0 and json.loads(out)["summary"]["all_satisfied"]


def test_bound_failure_exit_3(capsys):
    # a negative slack tolerance makes the tight identity endpoint fail
    code, out, err = run(capsys, "fragility", "--family", "ghz", "--sweep", "0:0:1", "--slack-tol=-1e-3")
    assert code == 3 and "failed" in err


def test_verify_smoke_and_fault(capsys):
    code, out, err = run(capsys, "verify", "--trials", "1")
    doc = json.loads(out)
    assert code == 0 and doc["summary"]["all_passed"]
    assert {r["suite"] for r in doc["records"]} == set(cli.verify.SUITES)
    assert "passed" in err
    code, out, err = run(capsys, "verify", "--trials", "2", "--suite", "which-path", "--inject-fault", "fidelity-sign")
    assert code == 3 and "which-path:" in err


def test_json_and_csv_encode_same_records(capsys):
    for argv in (
        ("distinctness", "--family", "ghz", "--pg", "0.9", "--sweep", "0.5:2:3"),
        ("loss", "--alpha", "1", "--sweep", "0:1:3", "--pg", "0.8"),
        ("verify", "--trials", "1", "--suite", "helstrom"),
    ):
        _, js, _ = run(capsys, *argv, "--format", "json")
        _, cs, _ = run(capsys, *argv, "--format", "csv")
        jrec, crec = records_json(js), records_csv(cs)
        assert len(jrec) == len(crec)
        for j, c in zip(jrec, crec):
            assert list(j) == list(c)
            for k, v in j.items():
                if v is None:
                    assert c[k] == ""
                elif isinstance(v, bool):
                    assert c[k] == ("true" if v else "false")
                elif isinstance(v, float):
                    assert float(c[k]) == v
                else:
                    assert c[k] == str(v)


def test_output_identical_and_env_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path))
    assert cli.main(["distinctness", "--family", "ghz", "--sweep", "1:2:3"]) == 0
    first = (tmp_path / "distinctness.json").read_bytes()
    assert cli.main(["distinctness", "--family", "ghz", "--sweep", "1:2:3"]) == 0
    assert (tmp_path / "distinctness.json").read_bytes() == first
    target = tmp_path / "sub" / "x.csv"
    assert cli.main(["distinctness", "--sweep", "1:2:2", "--format", "csv", "--out", str(target)]) == 0
    assert target.read_text().startswith("kind,")


def test_dumps_float_format():
    text = cli.dumps({"a": 0.1, "b": float("nan"), "c": [1, True, None, "s"], "d": np.float64(1 / 3)})
    doc = json.loads(text)
    assert "0.10000000000000001" in text and doc["b"] is None
    assert doc["c"] == [1, True, None, "s"] and doc["d"] == 1 / 3


def test_parse_sweep():
    np.testing.assert_allclose(cli.parse_sweep("1:100:3:log"), [1, 10, 100])
    np.testing.assert_allclose(cli.parse_sweep("0:1:3"), [0, 0.5, 1])
    assert list(cli.parse_sweep("2:5:1")) == [2]
