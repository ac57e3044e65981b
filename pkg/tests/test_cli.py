import json

import pytest

from pdesym.cli import (
    EXIT_FAIL,
    EXIT_PASS,
    EXIT_USAGE,
    main,
)

HEAT2 = """
vars t x1 x2 ;
deps u ;
order 2 ;
eq u_t = u_{x1 x1} + u_{x2 x2} ;
ufn g(t, x2) ;
constraint g_t = g_{x2 x2} ;
nonvanishing g ;
op Q1 = d/dx2 + (g_{x2}/g)*u * d/du ;
"""


@pytest.fixture
def heat_file(tmp_path):
    path = tmp_path / "heat2.sym"
    path.write_text(HEAT2)
    return str(path)


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------------------
# check-lie / check-qcond.
# ---------------------------------------------------------------------------

def test_check_lie_catalog_pass(capsys):
    code, out, _ = run(capsys, ["check-lie", "--catalog", "lhe:n=1"])
    assert code == EXIT_PASS
    assert "pass" in out


def test_check_lie_negative_op(capsys):
    code, out, _ = run(capsys, ["check-lie", "--catalog", "lhe:n=2", "--op", "x1*d/dx1"])
    assert code == EXIT_FAIL
    assert "residual" in out


def test_check_qcond_catalog_entry(capsys):
    code, out, _ = run(capsys, ["check-qcond", "--catalog", "thm1:Qtilde1:n=2", "--json"])
    assert code == EXIT_PASS
    payload = json.loads(out)
    assert payload["checks"][0]["verdict"] == "pass"


def test_check_qcond_from_file(capsys, heat_file):
    code, out, _ = run(capsys, ["check-qcond", "--input", heat_file])
    assert code == EXIT_PASS


def test_involutive(capsys, heat_file):
    code, _, _ = run(capsys, ["involutive", "--input", heat_file])
    assert code == EXIT_PASS


# ---------------------------------------------------------------------------
# equiv / equiv-mod / reduce / determining.
# ---------------------------------------------------------------------------

def test_equiv_catalog_generators(capsys):
    code, _, _ = run(
        capsys,
        ["equiv", "--catalog", "lhe:n=2", "--family-a", "d1,d2", "--family-b", "d2,d1"],
    )
    assert code == EXIT_PASS
    code, _, _ = run(
        capsys, ["equiv", "--catalog", "lhe:n=2", "--family-a", "d1", "--family-b", "d2"]
    )
    assert code == EXIT_FAIL


def test_equiv_mod_flow(capsys):
    code, _, _ = run(
        capsys,
        [
            "equiv-mod",
            "--catalog",
            "lhe:n=2",
            "--family-a",
            "d1",
            "--family-b",
            "d1",
            "--flow",
            "lhe:n=2:flow=dt",
        ],
    )
    assert code == EXIT_PASS
    code, _, _ = run(
        capsys,
        [
            "equiv-mod",
            "--catalog",
            "lhe:n=2",
            "--family-a",
            "d1",
            "--family-b",
            "d1",
            "--flow",
            "lhe:n=2:flow=J12",
            "--eps",
            "1/3",
        ],
    )
    assert code == EXIT_FAIL


def test_reduce(capsys):
    code, out, _ = run(capsys, ["reduce", "--catalog", "thm1:reduction:class2:n=2"])
    assert code == EXIT_PASS
    code, _, err = run(capsys, ["reduce", "--catalog", "nope"])
    assert code == EXIT_USAGE


def test_determining(capsys, tmp_path):
    path = tmp_path / "det.sym"
    path.write_text(
        "vars t x1 ; deps u ; order 2 ; eq u_t = u_{x1 x1} ;\n"
        "ufn eta(t, x1, u) ; op Q = d/dx1 + eta * d/du ;\n"
    )
    code, out, _ = run(capsys, ["determining", "--input", str(path), "--mode", "qcond"])
    assert code == EXIT_PASS
    assert "eta_t" in out and "eta_{u u}" in out


# ---------------------------------------------------------------------------
# paper-verify / parse-only / usage.
# ---------------------------------------------------------------------------

def test_paper_verify_scope_deterministic(capsys):
    code1, out1, _ = run(capsys, ["paper-verify", "theorem2", "--json"])
    code2, out2, _ = run(capsys, ["paper-verify", "theorem2", "--json"])
    assert code1 == code2 == EXIT_PASS
    assert out1 == out2
    payload = json.loads(out1)
    assert [c["check"] for c in payload["checks"]] == [
        "thm2:lie-algebra",
        "thm2:Qtilde",
        "thm2:reduction",
    ]


def test_paper_verify_seed_env(capsys, monkeypatch):
    monkeypatch.setenv("SYMSEED", "11")
    code, out, _ = run(capsys, ["paper-verify", "theorem3-lie", "--json"])
    assert code == EXIT_PASS
    assert json.loads(out)["seed"] == 11


def test_parse_only(capsys, heat_file, tmp_path):
    code, out, _ = run(capsys, ["parse-only", heat_file, "--json"])
    assert code == EXIT_PASS
    info = json.loads(out)["checks"][0]["witness"]
    assert info["operators"] == ["Q1"]

    bad = tmp_path / "bad.sym"
    bad.write_text("vars t ; deps u ; order 2 ; eq u_t = ) ;")
    code, _, err = run(capsys, ["parse-only", str(bad)])
    assert code == EXIT_USAGE
    assert ":" in err  # line/column diagnostics


def test_usage_errors_exit_three(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == EXIT_USAGE
    capsys.readouterr()
    with pytest.raises(SystemExit) as exc:
        main(["paper-verify", "bogus-scope"])
    assert exc.value.code == EXIT_USAGE
    capsys.readouterr()
