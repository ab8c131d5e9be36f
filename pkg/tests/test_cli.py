import json

import numpy as np
import pytest

from jetcones.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_catalog_list(capsys):
    code, out, _ = run(capsys, "catalog", "list")
    assert code == 0
    payload = json.loads(out)
    keys = {e["key"] for e in payload["entries"]}
    assert {"P", "P~", "Q", "Q~", "branch", "pfold", "sigma", "pucci",
            "lagrangian", "M", "pma", "slag"} <= keys
    assert {"det", "lagrangian-ma", "delta-elliptic", "pucci-garding"} <= keys
    assert payload["count"] >= 14


def test_catalog_describe_and_unknown(capsys):
    code, out, _ = run(capsys, "catalog", "describe", "pucci:1,2")
    assert code == 0
    assert "tr A" in json.loads(out)["describe"]
    code2, _, err = run(capsys, "catalog", "describe", "bogus")
    assert code2 == 2


def test_membership_interior(capsys):
    code, out, _ = run(capsys, "membership", "--key", "P",
                       "--matrix", "[[1,0],[0,1]]")
    assert code == 0
    payload = json.loads(out)
    assert payload["region"] == "Interior"
    assert payload["margin"] == pytest.approx(1.0)


def test_membership_negative_verdict_exit_1(capsys):
    code, out, _ = run(capsys, "membership", "--key", "P",
                       "--matrix", "[[-1,0],[0,1]]")
    assert code == 1
    assert json.loads(out)["region"] == "Exterior"


def test_membership_full_jet(capsys):
    jet = json.dumps({"r": -2.0, "p": [1.0, 0.0], "A": [[1.0, 0.0], [0.0, 1.0]]})
    code, out, _ = run(capsys, "membership", "--key",
                       "M:gamma=1,D=half:e1,R=inf", "--jet", jet)
    assert code == 0


def test_membership_parse_error_exit_2(capsys):
    code, _, err = run(capsys, "membership", "--key", "P", "--matrix", "oops")
    assert code == 2


def test_membership_domain_error_exit_3(capsys):
    code, _, err = run(capsys, "membership", "--key", "lagrangian",
                       "--matrix", "[[1,0,0],[0,1,0],[0,0,1]]")
    assert code == 3


def test_dual_command(capsys):
    code, out, _ = run(capsys, "dual", "--key", "P",
                       "--matrix", "[[-1,0],[0,2]]")
    assert code == 0
    assert json.loads(out)["dual_region"] == "Interior"


def test_garding_command(capsys):
    code, out, _ = run(capsys, "garding", "--op", "det",
                       "--matrix", "[[1,0,0],[0,2,0],[0,0,3]]")
    assert code == 0
    payload = json.loads(out)
    assert np.allclose(payload["eigenvalues"], [1, 2, 3], atol=1e-8)


def test_canonical_command(capsys):
    code, out, _ = run(capsys, "canonical", "--key", "pfold:p=2",
                       "--matrix", "[[1,0,0],[0,2,0],[0,0,3]]")
    assert code == 0
    assert json.loads(out)["canonical"] == pytest.approx(1.5, abs=1e-8)


def test_distance_command(capsys):
    code, out, _ = run(capsys, "distance", "--key", "P",
                       "--matrix", "[[1,0],[0,1]]", "--directions", "32")
    assert code == 0
    assert json.loads(out)["signed_distance"] == pytest.approx(1.0, abs=1e-5)


def test_pseudoconvex_sphere_all_yes(capsys):
    code, out, _ = run(capsys, "pseudoconvex", "--domain",
                       '{"kind": "sphere", "n": 3}', "--key", "P",
                       "--count", "4")
    assert code == 0
    assert out.count("yes") == 4


def test_pseudoconvex_slab_no(capsys):
    code, out, _ = run(capsys, "pseudoconvex", "--domain",
                       '{"kind": "slab", "n": 2}', "--key", "P",
                       "--points", "1.0,0.2")
    assert code == 1
    assert ",no," in out


def test_pseudoconvex_subaffine_shortcut(capsys):
    code, out, _ = run(capsys, "pseudoconvex", "--domain",
                       '{"kind": "sphere", "n": 3}', "--key", "P~",
                       "--count", "3")
    assert code == 0
    assert out.count("yes") == 3


def test_solve_command(tmp_path, capsys):
    config = {
        "operator": "pfold:p=2",
        "level": 0.0,
        "box": [0.0, 1.0],
        "h": 1.0 / 16,
        "tol": 1e-8,
        "max_iter": 50_000,
        "boundary": "x1^2 - x2^2",
        "init": "zero",
    }
    cfg = tmp_path / "solve.json"
    cfg.write_text(json.dumps(config))
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "solve", "--config", str(cfg),
                       "--out-dir", str(out_dir))
    assert code == 0
    header = json.loads((out_dir / "solve.json").read_text())
    assert header["operator"] == "pfold:p=2"
    assert header["residuals"][-1] <= 1e-8
    assert header["iterations"] > 1  # zero init: a real solve happened
    rows = np.loadtxt(out_dir / "solution.csv", delimiter=",", skiprows=1)
    assert rows.shape == (17 * 17, 3)
    exact = rows[:, 0] ** 2 - rows[:, 1] ** 2
    assert np.max(np.abs(rows[:, 2] - exact)) < 1e-6


def test_solve_not_converged_exit_4(tmp_path, capsys):
    config = {
        "operator": "P",
        "level": 1.0,
        "box": [0.0, 1.0],
        "h": 1.0 / 16,
        "tol": 1e-12,
        "max_iter": 3,
        "boundary": "x1^2 + x2^2",
    }
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(config))
    code, _, err = run(capsys, "solve", "--config", str(cfg))
    assert code == 4


def test_check_suites_smoke(capsys):
    code, out, _ = run(capsys, "check", "duality-involution")
    assert code == 0
    assert "PASS" in out and "FAIL" not in out


def test_seed_echoed_in_json(capsys):
    code, out, _ = run(capsys, "--seed", "7", "membership", "--key", "P",
                       "--matrix", "[[1,0],[0,1]]")
    assert json.loads(out)["seed"] == 7


def test_reproducible_output(capsys):
    args = ("--seed", "5", "distance", "--key", "P~",
            "--matrix", "[[0.3,0.1],[0.1,-0.2]]", "--directions", "64")
    _, out1, _ = run(capsys, *args)
    _, out2, _ = run(capsys, *args)
    assert out1 == out2
