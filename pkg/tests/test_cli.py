"""File formats and the command line surface."""
import json

import numpy as np
import pytest

from commoninfo import cli
from commoninfo.csbs import a1_of_a0, bsc_mixture_joint, dsbs_joint
from commoninfo.distfile import (
    aux_from_jsonable,
    format_distfile,
    parse_distfile,
    read_witness,
    write_distfile,
    write_witness,
)
from commoninfo.errors import InconsistentEstimates, ParseError

from util import random_joint, shared_bit_pair

C2_025 = 0.60952605107342066223


def _dsbs_file(tmp_path, a0=0.25):
    path = tmp_path / "dsbs.txt"
    write_distfile(path, dsbs_joint(a0))
    return str(path)


def _witness_file(tmp_path, a1=None):
    path = tmp_path / "witness.json"
    write_witness(path, bsc_mixture_joint(2, a1_of_a0(0.25) if a1 is None
                                          else a1)[1])
    return str(path)


def test_distfile_round_trip_exact():
    rng = np.random.default_rng(0)
    for sizes in [(2, 2), (3, 4), (2, 3, 2)]:
        pmf = random_joint(rng, sizes)
        back = parse_distfile(format_distfile(pmf, comment="generated"))
        assert back.sizes == pmf.sizes
        # 17 significant digits round-trip float64 bitwise
        assert np.array_equal(back.probs, pmf.probs)


def test_distfile_names_and_comments():
    text = ("# source pair\n"
            "dims: 2 2\n"
            "names: A B\n"
            "0.375 0.125\n"
            "# trailing rows\n"
            "0.125 0.375\n")
    pmf = parse_distfile(text)
    assert pmf.spec.names == ("A", "B")
    out = format_distfile(pmf)
    assert "names: A B" in out
    assert np.array_equal(parse_distfile(out).probs, pmf.probs)


@pytest.mark.parametrize("text,frag,line", [
    ("0.5 0.5\n", "dims header first", 1),
    ("dims: 2 2\ndims: 2 2\n0 0 0 1\n", "duplicate dims", 2),
    ("dims: 2\nnames: A\nnames: B\n0.5 0.5\n", "duplicate names", 3),
    ("names: A\ndims: 2\n0.5 0.5\n", "names header before dims", 1),
    ("dims: 2 x\n0.5 0.5\n", "bad dimension", 1),
    ("dims:\n", "empty dims header", 1),
    ("dims: 0 2\n", ">= 1", 1),
    ("dims: 2\nnames: A B\n0.5 0.5\n", "expected 1 names", 2),
    ("dims: 2\n0.5 oops\n", "bad probability token", 2),
    ("dims: 2\n0.5 0.25 0.25\n", "more than 2", 2),
    ("dims: 2 2\n0.5 0.5 0.5\n", "expected 4 probabilities, found 3", 2),
    ("", "missing dims header", 0),
    ("dims: 2\n0.6 0.6\n", "sum", 2),
    ("dims: 2\n-0.5 1.5\n", "< 0", 2),
])
def test_distfile_parse_errors(text, frag, line):
    with pytest.raises(ParseError) as ei:
        parse_distfile(text)
    assert frag in str(ei.value)
    assert ei.value.line == line


def test_witness_json_round_trip(tmp_path):
    _, aux = bsc_mixture_joint(3, 0.11)
    path = tmp_path / "w.json"
    write_witness(path, aux)
    back = read_witness(path)
    assert np.array_equal(back.w_prior, aux.w_prior)
    for a, b in zip(back.channels, aux.channels):
        assert np.array_equal(a, b)
    with pytest.raises(ParseError):
        aux_from_jsonable({"w_prior": [1.0]})
    with pytest.raises(ParseError):
        aux_from_jsonable({"w_prior": [0.7, 0.7], "channels": [[[1.0], [1.0]]]})


def test_cli_exit_codes(tmp_path, capsys):
    dist = _dsbs_file(tmp_path)
    assert cli.main(["measures", dist]) == 0
    capsys.readouterr()

    assert cli.main(["measures", str(tmp_path / "missing.txt")]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("dims: 2 2\n0.5 0.5 0.5\n")
    assert cli.main(["measures", str(bad)]) == 2
    # wrong target arity is an input problem, not a crash
    assert cli.main(["region", dist, "--target", "0.1,0.1"]) == 2

    wit = _witness_file(tmp_path)
    assert cli.main(
        ["sim-gen", "--witness", wit, "--n", "24", "--rate", "0.8"]) == 4
    err = capsys.readouterr().err
    assert "65536" in err  # the computed budget is part of the message

    # argparse rejects unknown choices itself with the input-error code
    with pytest.raises(SystemExit) as ei:
        cli.main(["measures", dist, "--format", "yaml"])
    assert ei.value.code == 2


def test_cli_inconsistency_exit(tmp_path, capsys, monkeypatch):
    dist = _dsbs_file(tmp_path)

    def boom(pmf, cfg):
        raise InconsistentEstimates(0.61, 0.4, 5e-3)

    monkeypatch.setattr(cli, "wyner_ci", boom)
    assert cli.main(["wyner", dist]) == 3
    err = capsys.readouterr().err
    assert "0.61" in err and "0.4" in err


def test_records_byte_identical(tmp_path, capsys):
    dist = _dsbs_file(tmp_path)
    wit = _witness_file(tmp_path)
    runs = [
        ["measures", dist, "--wyner", "--restarts", "2",
         "--format", "records"],
        ["sim-codec", dist, "--witness", wit, "--rates", "0.76,0.76,0.76",
         "--n", "6", "--trials", "50", "--seed", "5", "--format", "records"],
        ["sim-gen", "--witness", wit, "--n", "5", "--rate", "0.8",
         "--codebooks", "4", "--seed", "3", "--estimator", "monte_carlo",
         "--samples", "100", "--format", "records"],
    ]
    for argv in runs:
        assert cli.main(argv) == 0
        first = capsys.readouterr().out
        assert cli.main(argv) == 0
        assert capsys.readouterr().out == first
        rec = json.loads(first)  # strict JSON
        assert rec["version"]
        assert "started" not in rec and "elapsed" not in rec


def test_records_out_file_matches_stdout(tmp_path, capsys):
    dist = _dsbs_file(tmp_path)
    argv = ["measures", dist, "--format", "records"]
    assert cli.main(argv) == 0
    direct = capsys.readouterr().out
    target = tmp_path / "rec.json"
    assert cli.main(argv + ["--out", str(target)]) == 0
    assert target.read_text() == direct


def test_table_format_headers(tmp_path, capsys):
    dist = _dsbs_file(tmp_path)
    assert cli.main(["measures", dist]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# commoninfo measures v")
    assert "# seed 0" in out and "# elapsed" in out
    assert "K\t0" in out


def test_measures_shared_bit_ordering(tmp_path, capsys):
    path = tmp_path / "pair.txt"
    write_distfile(path, shared_bit_pair())
    argv = ["measures", str(path), "--wyner", "--restarts", "4",
            "--format", "records"]
    assert cli.main(argv) == 0
    res = json.loads(capsys.readouterr().out)["result"]
    assert res["k"] == pytest.approx(1.0, abs=1e-9)
    assert res["c"] == pytest.approx(1.0, abs=5e-3)
    assert res["ordering"]["ordered"] is True


def test_wyner_records_payload(tmp_path, capsys):
    dist = _dsbs_file(tmp_path)
    argv = ["wyner", dist, "--restarts", "4", "--format", "records"]
    assert cli.main(argv) == 0
    rec = json.loads(capsys.readouterr().out)
    res = rec["result"]
    assert abs(res["value"] - C2_025) < 1e-3
    assert res["certificate"] == "upper"
    assert abs(res["test_channel_value"] - res["entropy_route_value"]) \
        <= rec["config"]["tol"] + 1e-12
    # the corner describes the returned witness's own coupling
    assert abs(res["corner"]["r0"] - res["value"]) < 1e-3
    prior = np.asarray(res["witness"]["w_prior"], dtype=float)
    assert prior.sum() == pytest.approx(1.0, abs=1e-9)
    assert len(res["witness"]["channels"]) == 2


def test_gamma_verb(tmp_path, capsys):
    dist = _dsbs_file(tmp_path)
    argv = ["gamma", dist, "--restarts", "4", "--format", "records"]
    assert cli.main(argv) == 0
    res = json.loads(capsys.readouterr().out)["result"]
    assert res["certificate"] == "lower"
    assert res["delta1"] == 0.0
    assert abs(res["h_minus_gamma"] - C2_025) < 5e-3


def test_sweep_dominance_and_endpoints(capsys):
    argv = ["csbs-sweep", "--n-list", "2,3", "--a0-grid", "0:0.5:11",
            "--format", "records"]
    assert cli.main(argv) == 0
    rows = json.loads(capsys.readouterr().out)["result"]["rows"]
    two, three = rows[:11], rows[11:]
    for r2, r3 in zip(two, three):
        a0 = r2[1]
        assert r3[1] == a0
        if 0.0 < a0 < 0.5:
            assert r3[3] > r2[3]  # more variables need a richer W
        else:
            assert abs(r3[3] - r2[3]) < 1e-12
    # the half-crossover column kills every common-information notion
    argv = ["csbs-sweep", "--n-list", "2,5", "--a1-grid", "0.5:0.5:1",
            "--format", "records"]
    assert cli.main(argv) == 0
    rows = json.loads(capsys.readouterr().out)["result"]["rows"]
    assert len(rows) == 2
    for r in rows:
        assert r[3] == 0.0 and r[4] == pytest.approx(0.0, abs=1e-12)


def test_region_verb(tmp_path, capsys):
    dist = _dsbs_file(tmp_path)
    wit = _witness_file(tmp_path)
    argv = ["region", dist, "--target", "0.62,0.61,0.61",
            "--witness", wit, "--format", "records"]
    assert cli.main(argv) == 0
    res = json.loads(capsys.readouterr().out)["result"]
    cert = res["certificate"]
    assert cert["achievable"] is True
    assert cert["witness"] == wit
    assert min(cert["slack"]) >= 0.0
    corners = {c["witness"]: c for c in res["corners"]}
    assert corners["constant"]["r0"] == 0.0
    assert corners["copy"]["private"] == [0.0, 0.0]
    assert abs(corners[wit]["r0"] - C2_025) < 1e-12

    argv = ["region", dist, "--target", "0,0,0", "--format", "records"]
    assert cli.main(argv) == 0
    res = json.loads(capsys.readouterr().out)["result"]
    assert res["certificate"]["achievable"] is False
    assert res["sum_rate_slack"] < 0.0


def test_sim_gen_nonfinite_sanitized(tmp_path, capsys):
    # one deterministic codeword cannot cover a spread-out law: KL = +inf,
    # which strict JSON cannot hold as a literal
    wit = tmp_path / "noiseless.json"
    write_witness(wit, bsc_mixture_joint(2, 0.0)[1])
    argv = ["sim-gen", "--witness", str(wit), "--n", "4", "--rate", "0.0",
            "--codebooks", "2", "--format", "records"]
    assert cli.main(argv) == 0
    rec = json.loads(capsys.readouterr().out)
    summ = rec["result"]["summary"]
    assert summ["d_min"] == "inf"
    assert summ["finite_trials"] == 0
