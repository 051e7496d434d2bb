"""Document round trips and the command-line contract (exit codes, reports)."""
import json
import subprocess
import sys

import pytest

from curvjet import documents as docs
from curvjet import rational as rl
from curvjet.cli import main
from curvjet.realization import realize
from curvjet.tensor_core import CurvatureModel, CurvTensor, random_model, standard_form


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    reports = [json.loads(line) for line in out.splitlines() if line.startswith("{")]
    return code, reports, err


def gen(tmp_path, capsys, name, *flags):
    path = tmp_path / name
    assert main(["gen", *flags, "--out", str(path)]) == 0
    capsys.readouterr()
    return path


# -- documents ---------------------------------------------------------------------------

@pytest.mark.parametrize("m,sig,kind", [(3, (1, 2), "plain"), (4, (2, 2), "para"), (8, (4, 4), "hyper-para")])
def test_model_round_trip_is_byte_identical(m, sig, kind):
    M = random_model(m, sig, 2, kind)
    text = docs.dump_model(M, {"seed": 2})
    md = docs.load_model(text)
    assert md.model == M and md.metadata == {"seed": 2}
    assert docs.dump_model(md.model, md.metadata) == text


def test_jet_and_report_round_trip():
    M = random_model(4, (2, 2), 1, "hermitian")
    G = realize(M, 3)
    jd = docs.JetDocument(G.g, G.structure, "hermitian", {"phi": G.g[0, 0]}, {"provenance": "test"})
    text = docs.dump_jet(jd)
    back = docs.load_jet(text)
    assert back.g == G.g and back.structure.J == G.structure.J
    assert docs.dump_jet(back) == text
    rep = docs.make_report("check", "sha256:0", "x.json", {"a": True}, {"requested": 3}, {"tau": "1/2"}, {"t": 0.1})
    assert docs.dump_report(docs.load_report(docs.dump_report(rep))) == docs.dump_report(rep)


def test_rationals_are_exact_strings():
    A = CurvTensor.from_canonical(2, {(0, 1, 0, 1): rl.Q("-7/3")})
    text = docs.dump_model(CurvatureModel(standard_form(0, 2), A))
    assert '"-7/3"' in text and '"1,2,1,2"' in text
    assert docs.load_model(text).model.A[0, 1, 0, 1] == rl.Q("-7/3")


def test_loader_completes_any_representative():
    doc = {"schema": "curvjet/model", "version": 1, "kind": "plain", "dim": 2,
           "eps": [["1", "0"], ["0", "1"]], "A": {"2,1,1,2": "-1"}}
    md = docs.model_from_dict(doc)
    assert md.model.A[0, 1, 0, 1] == 1 and not md.conflicts


@pytest.mark.parametrize("patch,where", [
    ({"eps": [["1", "0"], ["0", "y"]]}, "eps[1][1]"),
    ({"A": {"1,2,3,1": "1"}}, "A['1,2,3,1']"),
    ({"A": {"1,2,1": "1"}}, "A['1,2,1']"),
    ({"kind": "quaternionic"}, "kind"),
    ({"eps": [["1", "0"], ["0", "0"]]}, "eps"),
    ({"version": 9}, "version"),
])
def test_parse_errors_are_located(patch, where):
    doc = {"schema": "curvjet/model", "version": 1, "kind": "plain", "dim": 2,
           "eps": [["1", "0"], ["0", "1"]], "A": {}}
    doc.update(patch)
    with pytest.raises(docs.DocumentError) as info:
        docs.model_from_dict(doc, "f.json")
    assert where in info.value.location


def test_json_syntax_error_has_line_and_column():
    with pytest.raises(docs.DocumentError) as info:
        docs.load_model('{\n  "schema": ,\n}', "f.json")
    assert info.value.location.startswith("f.json:2:")


# -- gen / check ----------------------------------------------------------------------------

def test_gen_is_deterministic(tmp_path, capsys):
    a = gen(tmp_path, capsys, "a.json", "--dim", "2", "--signature", "0,2", "--kind", "plain", "--seed", "7")
    b = gen(tmp_path, capsys, "b.json", "--dim", "2", "--signature", "0,2", "--kind", "plain", "--seed", "7")
    assert a.read_bytes() == b.read_bytes()


def test_gen_para_document_revalidates(tmp_path, capsys):
    p = gen(tmp_path, capsys, "p.json", "--dim", "4", "--signature", "2,2", "--kind", "para", "--seed", "1")
    md = docs.load_model(p.read_text())
    assert md.model.structure.rho == 1 and not md.model.structure_violations()
    code, reps, _ = run(capsys, "check", str(p))
    assert code == 0 and reps[0]["ok"] and reps[0]["verdicts"]["structure_identities"]
    assert reps[0]["input"]["digest"].startswith("sha256:")


def test_gen_rejects_incompatible_flags(tmp_path, capsys):
    code = main(["gen", "--dim", "3", "--signature", "0,3", "--kind", "hermitian", "--out", str(tmp_path / "x")])
    assert code == 2
    assert "even" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        main(["gen", "--dim", "3", "--signature", "zero"])
    assert info.value.code == 2


def test_check_reports_pair_symmetry_clash(tmp_path, capsys):
    doc = {"schema": "curvjet/model", "version": 1, "kind": "plain", "dim": 3,
           "eps": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]],
           "A": {"1,2,1,3": "1", "1,3,1,2": "2"}}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    code, reps, _ = run(capsys, "check", str(p))
    assert code == 1
    rep = reps[0]
    assert not rep["verdicts"]["pair_symmetry"]
    assert any("pair_symmetry" in w for w in rep["diagnostics"]["witnesses"])
    assert rep["diagnostics"]["conflicts"]


def test_check_reports_broken_J(tmp_path, capsys):
    p = gen(tmp_path, capsys, "h.json", "--dim", "4", "--kind", "hermitian", "--seed", "3")
    doc = json.loads(p.read_text())
    doc["J"] = [["1" if i == j else "0" for j in range(4)] for i in range(4)]
    p.write_text(docs.canonical_json(doc))
    code, reps, _ = run(capsys, "check", str(p))
    assert code == 1
    assert not reps[0]["verdicts"]["structure_identities"]
    assert any("J^2" in v for v in reps[0]["diagnostics"]["structure_violations"])


def test_parse_error_exit_code(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text('{"schema": "curvjet/model", ')
    code, reps, err = run(capsys, "check", str(p))
    assert code == 2 and not reps and "broken.json:1:" in err
    code, _, err = run(capsys, "check", str(tmp_path / "missing.json"))
    assert code == 2


# -- realize / solve ----------------------------------------------------------------------------

def test_realize_flat_model_gives_constant_metric(tmp_path, capsys):
    p = tmp_path / "flat.json"
    p.write_text(docs.dump_model(CurvatureModel(standard_form(1, 2), CurvTensor.zero(3))))
    out = tmp_path / "flat.jet.json"
    code, reps, _ = run(capsys, "realize", str(p), "--order", "3", "--out", str(out))
    assert code == 0
    jet = docs.load_jet(out.read_text())
    assert all(s.is_constant() for row in jet.g.g.rows for s in row)
    assert docs.dump_jet(jet) == out.read_text()


def test_realize_random_and_kn_models(tmp_path, capsys):
    p = gen(tmp_path, capsys, "r.json", "--dim", "4", "--signature", "1,3", "--seed", "2")
    code, reps, _ = run(capsys, "realize", str(p), "--order", "4")
    assert code == 0 and reps[0]["verdicts"]["curvature_at_origin"]
    k = gen(tmp_path, capsys, "k.json", "--dim", "4", "--signature", "1,3", "--seed", "2", "--conformally-flat")
    code, reps, _ = run(capsys, "realize", str(k), "--order", "4", "--mode", "conformally-flat")
    assert code == 0 and reps[0]["verdicts"]["weyl_flat"]
    code, reps, err = run(capsys, "realize", str(p), "--order", "4", "--mode", "conformally-flat")
    assert code == 1 and "not conformally flat" in err
    code, _, _ = run(capsys, "realize", str(p), "--order", "1")
    assert code == 2


def test_solve_flat_and_random(tmp_path, capsys):
    flat = tmp_path / "flat.json"
    flat.write_text(docs.dump_model(CurvatureModel(standard_form(0, 3), CurvTensor.zero(3))))
    out = tmp_path / "flat.solved.json"
    code, reps, _ = run(capsys, "solve", str(flat), "--order", "4", "--target", "tau", "--out", str(out))
    assert code == 0 and reps[0]["orders"]["tau_constancy_degree"] == 2
    assert docs.load_jet(out.read_text()).functions["phi"].is_zero()
    r = gen(tmp_path, capsys, "r.json", "--dim", "3", "--seed", "5")
    code, reps, _ = run(capsys, "solve", str(r), "--order", "5", "--target", "tau")
    assert code == 0 and reps[0]["orders"]["tau_constancy_degree"] >= 3


def test_solve_hermitian_reports_linearization(tmp_path, capsys):
    h = gen(tmp_path, capsys, "h.json", "--dim", "4", "--signature", "0,4", "--kind", "hermitian", "--seed", "1")
    out = tmp_path / "h.solved.json"
    code, reps, _ = run(capsys, "solve", str(h), "--order", "4", "--target", "tau-taustar", "--out", str(out))
    assert code == 0
    rep = reps[0]
    assert rep["verdicts"]["tau_constant"] and rep["verdicts"]["taustar_constant"]
    assert rep["diagnostics"]["linearization"] == [["-4", "-2"], ["0", "-2"]]
    # the written jet can be re-checked and re-solved from disk
    code, reps, _ = run(capsys, "check", str(out))
    assert code == 0
    code, reps, _ = run(capsys, "solve", str(out), "--order", "4", "--target", "tau-taustar")
    assert code == 0


def test_solve_unsupported_target(tmp_path, capsys):
    p = gen(tmp_path, capsys, "p.json", "--dim", "3", "--seed", "1")
    code, _, err = run(capsys, "solve", str(p), "--order", "4", "--target", "tau-taustar")
    assert code == 2 and "needs a hermitian" in err


def test_batch_with_jobs_report_file_and_quiet(tmp_path, capsys):
    files = [str(gen(tmp_path, capsys, f"m{i}.json", "--dim", "3", "--seed", str(i))) for i in range(3)]
    bad = tmp_path / "bad.json"
    bad.write_text("not json")
    report = tmp_path / "reports.jsonl"
    code = main(["check", *files, str(bad), "--jobs", "2", "--quiet", "--report", str(report)])
    out, err = capsys.readouterr()
    assert code == 2 and out == ""
    lines = report.read_text().splitlines()
    assert len(lines) == 3 and all(json.loads(l)["ok"] for l in lines)
    outdir = tmp_path / "jets"
    code = main(["realize", *files, "--order", "3", "--out", str(outdir), "--quiet"])
    assert code == 0 and len(list(outdir.iterdir())) == 3


def test_console_entry_point(tmp_path):
    out = tmp_path / "m.json"
    proc = subprocess.run([sys.executable, "-m", "curvjet.cli", "gen", "--dim", "2", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and out.exists()
