import csv
import io
import json

import pytest

from mifkit.cli import fmt, main
from mifkit.groups import FAMILY, FREE_PAIR


@pytest.fixture
def group_file(tmp_path):
    p = tmp_path / "g.json"
    p.write_text(json.dumps(FREE_PAIR))
    return p


def run(capsys, *argv):
    rc = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return rc, out, err


def test_fmt_is_locale_free():
    assert fmt(0.1) == "0.1"
    assert fmt(True) == "1"
    assert fmt(float("nan")) == "nan"
    assert fmt(None) == ""
    assert fmt((1, 2)) == "1 2"


def test_selftest_quick(capsys):
    rc, out, _ = run(capsys, "selftest", "--quick")
    assert rc == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and all(r["violations"] == "0" for r in rows)


def test_escape_json(capsys, group_file):
    rc, out, _ = run(capsys, "escape", "--group", group_file, "--word", "A x A^-1 x^-1", "--seed", 42)
    assert rc == 0
    doc = json.loads(out)
    assert doc["word"] == "A x A^-1 x^-1"
    assert doc["gamma_length"] >= 1
    assert set(doc) >= {"gamma_word", "k_used", "certificate", "attempts"}


def test_missing_group_file(capsys, tmp_path):
    missing = tmp_path / "nope.json"
    rc, _, err = run(capsys, "escape", "--group", missing, "--word", "x")
    assert rc == 1
    assert "nope.json" in err


def test_domain_errors(capsys):
    assert run(capsys, "escape", "--word", "")[0] == 1
    assert run(capsys, "escape", "--word", "C x")[0] == 1
    assert run(capsys, "zeros", "--poly", "x1", "--p", 4)[0] == 1


def test_capacity_error(capsys):
    rc, _, err = run(capsys, "gap", "--primes", "7", "--cap", 10)
    assert rc == 2
    assert "capacity" in err


def test_bad_seed():
    with pytest.raises(SystemExit):
        main(["escape", "--word", "x", "--seed", "-1"])


def test_zeros_examples(capsys):
    rc, out, _ = run(capsys, "zeros", "--poly", "x1^2-1", "--p", 7, "--t", 1)
    assert rc == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert (row["zeros"], row["dkl_bound"], row["within_bound"]) == ("2", "2.0", "1")


def test_heights_poly(capsys):
    rc, out, _ = run(capsys, "heights", "--poly", "3/2*x1^2", "--vars", "x1")
    assert rc == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["height"]) == 3.0


def test_gap_csv_and_manifest(capsys, tmp_path, group_file):
    out = tmp_path / "gaps.csv"
    rc, _, _ = run(capsys, "gap", "--group", group_file, "--primes", "5:7", "--out", out)
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["p", "group_order", "generating", "lambda2_abs", "gap", "method", "seconds"]
    assert [r["group_order"] for r in rows] == ["120", "336"]
    man = json.loads((tmp_path / "gaps.csv.manifest.json").read_text())
    assert man["subcommand"] == "gap" and man["seed"] == 42
    assert str(group_file) in man["inputs"]


def _strip_timing(text):
    rows = list(csv.reader(io.StringIO(text)))
    if "seconds" in rows[0]:
        j = rows[0].index("seconds")
        rows = [r[:j] + r[j + 1:] for r in rows]
    return rows


@pytest.mark.parametrize(
    "argv",
    [
        ["decay", "--word", "A x A^-1 x^-1", "--kmax", 6, "--trials", 300],
        ["escape", "--word", "A x^2 B x^-1"],
        ["fx", "--n-range", "2,4", "--words", 3, "--oracle-radius", 2],
        ["ssa", "--primes", "5:7"],
        ["gap", "--primes", "5:7"],
    ],
)
def test_reruns_are_byte_identical(capsys, tmp_path, argv):
    a, b = tmp_path / "a.out", tmp_path / "b.out"
    assert run(capsys, *argv, "--out", a)[0] == 0
    assert run(capsys, *argv, "--out", b)[0] == 0
    if argv[0] == "gap":
        # wall-clock seconds is a timing field
        assert _strip_timing(a.read_text()) == _strip_timing(b.read_text())
    else:
        assert a.read_bytes() == b.read_bytes()


def test_family_gap_with_point(capsys, tmp_path):
    g = tmp_path / "fam.json"
    g.write_text(json.dumps(FAMILY))
    rc, out, _ = run(capsys, "gap", "--group", g, "--primes", "5", "--point", "0")
    assert rc == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert (row["group_order"], row["generating"]) == ("5", "0")
