import json

import pandas as pd
import pytest

from conftest import ETA_F1
from hyperreal import cli
from hyperreal.cli import EXIT_FALSE, EXIT_INPUT, EXIT_INTERNAL, EXIT_OK, main
from hyperreal.exceptions import NumericError

F1_SISO = '{"num": [1/15, 2/3, 3/5], "den": [1/9, 2/5, 1]}'
LOWPASS = '{"num": [1], "den": [1, 1]}'
PLANT = '{"num": [1], "den": [2, 3, 1]}'


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_classify_f1(capsys):
    code, report = run(capsys, "classify", "--siso", F1_SISO)
    assert code == EXIT_OK
    assert report["HP"] is True
    assert report["eta_star"] == pytest.approx(ETA_F1, abs=1e-8)


def test_classify_exit_code_follows_required_class(capsys):
    code, report = run(capsys, "classify", "--siso", LOWPASS)
    assert code == EXIT_FALSE
    assert report["SP"] is True
    code, _ = run(capsys, "classify", "--siso", LOWPASS, "--require", "SP")
    assert code == EXIT_OK


def test_eta_with_margin(capsys):
    code, report = run(capsys, "eta", "--siso", F1_SISO, "--eta", "6/5")
    assert code == EXIT_OK
    assert report["margin"] == pytest.approx(6 / 5 - ETA_F1, abs=1e-8)
    code, _ = run(capsys, "eta", "--siso", F1_SISO, "--eta", "11/10")
    assert code == EXIT_FALSE


def test_kyp_verify_diagonal_certificate(capsys, R_f1):
    realization = json.dumps(R_f1.to_dict())
    code, report = run(capsys, "kyp-verify", "--realization", realization, "--H", "[[8, 0], [0, 2]]", "--eta", "17/15")
    assert code == EXIT_OK
    assert report["verdict"] == "CertifiesHPeta"


def test_kyp_verify_from_files(capsys, tmp_path, R_f1):
    realization = tmp_path / "r.json"
    realization.write_text(json.dumps(R_f1.to_dict()))
    H = tmp_path / "h.json"
    H.write_text("[[1, 0], [0, 1]]")
    code, report = run(capsys, "kyp-verify", "--realization", str(realization), "--H", str(H))
    assert code == EXIT_OK
    assert report["verdict"] == "CertifiesHP"


def test_kyp_search_below_sharpest_eta(capsys):
    code, report = run(capsys, "kyp-search", "--siso", F1_SISO, "--eta", "11/10")
    assert code == EXIT_FALSE
    assert report["verdict"] == "NoCertificate"
    assert report["eta_star"] == pytest.approx(ETA_F1, abs=1e-8)


def test_kyp_search_finds_certificate(capsys):
    code, report = run(capsys, "kyp-search", "--siso", F1_SISO, "--eta", "6/5")
    assert code == EXIT_OK
    assert report["verdict"] == "CertifiesHPeta"


@pytest.mark.parametrize(
    "argv",
    [
        ["classify", "--siso", "{not json"],
        ["classify", "--siso", '{"num": [1]}'],
        ["eta", "--siso", F1_SISO, "--eta", "1"],
        ["kyp-verify", "--siso", F1_SISO, "--H", "[1, 2, 3]"],
        ["rlc", "--eta", "5/3"],
        ["classify"],
    ],
)
def test_bad_input_exits_with_two(capsys, argv):
    code, _ = run(capsys, *argv)
    assert code == EXIT_INPUT


def test_missing_required_flag(capsys):
    assert main(["sets-check", "--eta-small", "2", "--eta-large", "3"]) == EXIT_INPUT


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == EXIT_OK


@pytest.mark.parametrize("error", [RuntimeError("boom"), NumericError("eigenvalue solver did not converge")])
def test_internal_failure_is_not_reported_as_bad_input(capsys, monkeypatch, error):
    def broken(args):
        raise error

    monkeypatch.setattr(cli, "cmd_classify", broken)
    code, report = run(capsys, "classify", "--siso", LOWPASS)
    assert code == EXIT_INTERNAL
    assert code != EXIT_INPUT
    assert report is None


def test_cayley_of_matrix(capsys):
    code, report = run(capsys, "cayley", "--matrix", "[[1, 0], [0, 3]]")
    assert code == EXIT_OK
    assert report["cayley"][0][0] == pytest.approx([0.0, 0.0])
    assert report["cayley"][1][1] == pytest.approx([-0.5, 0.0])


def test_cayley_of_siso(capsys):
    code, report = run(capsys, "cayley", "--siso", F1_SISO)
    assert code == EXIT_OK
    assert set(report) == {"siso", "realization"}
    assert report["realization"]["n"] == 2


def test_rlc_synthesis_and_netlist(capsys, tmp_path):
    netlist = tmp_path / "rc.cir"
    code, report = run(capsys, "rlc", "--eta", "5/3", "--a", "1/9", "--netlist", str(netlist))
    assert code == EXIT_OK
    assert report["R"] == pytest.approx(8 / 3)
    assert report["C"] == pytest.approx(27 / 8)
    assert report["Rs"] == pytest.approx(1 / 3)
    assert netlist.read_text().splitlines()[1].startswith("Rs ")


def test_rlc_analysis(capsys):
    code, report = run(capsys, "rlc", "--R", "8/3", "--C", "27/8", "--Rs", "1/3")
    assert code == EXIT_OK
    assert report["eta"] == pytest.approx(5 / 3)
    assert report["a"] == pytest.approx(1 / 9)


def test_circle_transform(capsys):
    code, report = run(capsys, "circle", "--k", "3/5", "--K", "5/3")
    assert code == EXIT_OK
    assert report["eta"] == pytest.approx(ETA_F1)
    assert report["a"] == pytest.approx(3 / 5)


def test_circle_with_plant(capsys):
    code, report = run(capsys, "circle", "--k", "3/5", "--K", "5/3", "--plant", PLANT)
    assert code == EXIT_OK
    assert report["stability"]["criterion_holds"] is True


def test_simulate_writes_csv(capsys, tmp_path):
    csv = tmp_path / "traj.csv"
    code, report = run(
        capsys, "simulate", "--plant", PLANT, "--k", "1/2", "--K", "2", "--seed", "3", "--T", "5", "--dt", "0.01",
        "--csv", str(csv),
    )
    assert code == EXIT_OK
    assert report["trajectory"]["diverged"] is False
    assert list(pd.read_csv(csv).columns) == ["t", "x_1", "x_2", "y", "psi"]


def test_nyquist_files(capsys, tmp_path):
    csv, svg = tmp_path / "nyq.csv", tmp_path / "nyq.svg"
    code, report = run(
        capsys, "nyquist", "--siso", F1_SISO, "--csv", str(csv), "--svg", str(svg), "--eta", "6/5", "--points", "64"
    )
    assert code == EXIT_OK
    assert report["contained"] is True
    frame = pd.read_csv(csv)
    assert list(frame.columns) == ["omega", "re", "im"]
    assert len(frame) == 64
    assert svg.read_text().lstrip().startswith("<?xml")


def test_sets_check(capsys):
    code, report = run(capsys, "sets-check", "--eta-small", "2", "--eta-large", "5", "--samples", "30", "--seed", "1")
    assert code == EXIT_OK
    assert report["failures"] == 0


def test_di_simulate_to_file(capsys, tmp_path):
    out = tmp_path / "di.json"
    code, report = run(
        capsys, "di-simulate", "--eta", "2", "--steps", "20", "--seeds", "3", "--seed", "0", "--out", str(out)
    )
    assert code == EXIT_OK
    assert report is None
    assert json.loads(out.read_text())["violations"] == 0
