import json
from pathlib import Path

from mfgsim.cli import main

PILOT = str(Path(__file__).resolve().parent.parent / "models" / "pilot.mim")


def test_check_shipped_pilot_clean(capsys):
    assert main(["check", PILOT]) == 0
    captured = capsys.readouterr()
    assert captured.out == "" and captured.err == ""


def test_check_reports_diagnostics(tmp_path, capsys):
    bad = tmp_path / "bad.mim"
    bad.write_text("sortset s { sort A; }\n"
                   "model m in s { entity E : A kind object {"
                   " attr x : A = ref Ghost; } }\n", encoding="utf-8")
    assert main(["check", str(bad)]) == 1
    captured = capsys.readouterr()
    assert "dangling-ref" in captured.err
    assert captured.out == ""


def test_check_parse_error_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.mim"
    bad.write_text("sortset {", encoding="utf-8")
    assert main(["check", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_usage_error_exit_2(capsys):
    assert main(["simulate"]) == 2  # missing required flags
    assert main(["no-such-command"]) == 2


def test_verify_pilot_clean(capsys):
    assert main(["verify", PILOT, "--ontology", "mfg_profile", "--model", "pilot"]) == 0
    assert capsys.readouterr().err == ""


def test_verify_injected_violation(tmp_path, capsys):
    text = Path(PILOT).read_text(encoding="utf-8")
    broken = text.replace("    attr speed : Speed = 1.0 m/s;\n", "", 1)
    f = tmp_path / "broken.mim"
    f.write_text(broken, encoding="utf-8")
    assert main(["verify", str(f), "--ontology", "mfg_profile", "--model", "pilot"]) == 1
    err = capsys.readouterr().err
    assert "missing speed" in err


def test_lattice_dot_and_text(capsys):
    assert main(["lattice", PILOT, "--model", "transfer_detailed", "--out", "dot"]) == 0
    assert capsys.readouterr().out.startswith("digraph")
    assert main(["lattice", PILOT, "--model", "transfer_detailed", "--out", "text"]) == 0
    assert "concept 0:" in capsys.readouterr().out


def test_abstract_and_view_write_parseable_output(tmp_path, capsys):
    out = tmp_path / "up.mim"
    assert main(["abstract", PILOT, "--map", "track_up", "--model",
                 "transfer_detailed", "--out", str(out)]) == 0
    assert main(["check", str(out)]) == 0
    projected = tmp_path / "cost.mim"
    assert main(["view", PILOT, "--sortset", "cost_view", "--model", "pilot",
                 "--out", str(projected)]) == 0
    text = projected.read_text(encoding="utf-8")
    assert "model pilot in cost_view" in text


def test_refine_applies_expansion(tmp_path, capsys):
    out = tmp_path / "down.mim"
    assert main(["refine", PILOT, "--map", "duration_down", "--expansion",
                 "route_segments", "--model", "transfer_abstract",
                 "--out", str(out)]) == 0
    text = out.read_text(encoding="utf-8")
    assert "seg_home_cross" in text


def test_coordinate_pass_and_fail(tmp_path, capsys):
    assert main(["coordinate", PILOT, PILOT, "--mapping", "transfer_modes"]) == 0
    err = capsys.readouterr().err
    assert "unmapped-detailed-entity" in err  # warnings only
    text = Path(PILOT).read_text(encoding="utf-8")
    broken = text.replace(
        "  pair HomeStation1.dispatch <- NodeHome.dispatch identity;\n", "", 1)
    f = tmp_path / "broken.mim"
    f.write_text(broken, encoding="utf-8")
    assert main(["coordinate", str(f), str(f), "--mapping", "transfer_modes"]) == 1
    assert "abstract entity uncovered: HomeStation1" in capsys.readouterr().err


def test_estimate_output(capsys):
    assert main(["estimate", PILOT, "--scenario", "base"]) == 0
    out = capsys.readouterr().out
    assert "required_agvs,1" in out
    assert "pair,MachLine1->Assembly1" in out


def test_simulate_writes_report_and_trace(tmp_path, capsys):
    report = tmp_path / "r.csv"
    trace = tmp_path / "t.jsonl"
    code = main(["simulate", PILOT, "--scenario", "base_detailed", "--seed", "42",
                 "--horizon", "8h", "--report", str(report), "--trace", str(trace)])
    assert code == 0
    lines = report.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "metric,entity,value,unit"
    assert any(line.startswith("conservation_residual,total,0") for line in lines)
    events = [json.loads(x) for x in trace.read_text(encoding="utf-8").splitlines()]
    assert all(set(e) == {"t_us", "ev", "who", "res"} for e in events)


def test_simulate_same_argv_byte_identical(tmp_path):
    paths = []
    for name in ("a", "b"):
        report = tmp_path / f"{name}.csv"
        trace = tmp_path / f"{name}.jsonl"
        assert main(["simulate", PILOT, "--scenario", "varied", "--seed", "7",
                     "--report", str(report), "--trace", str(trace)]) == 0
        paths.append((report.read_bytes(), trace.read_bytes()))
    assert paths[0] == paths[1]


def test_simulate_seed_fanout(tmp_path):
    report = tmp_path / "r.csv"
    assert main(["simulate", PILOT, "--scenario", "varied", "--seeds", "1..3",
                 "--report", str(report)]) == 0
    for seed in (1, 2, 3):
        assert (tmp_path / f"r.seed{seed}.csv").exists()


def test_simulate_bad_duration_usage_error(capsys):
    assert main(["simulate", PILOT, "--scenario", "base", "--horizon", "8hours"]) == 2


def test_compare_table(capsys):
    assert main(["compare", PILOT, "--scenario", "base", "--seed", "42"]) == 0
    out = capsys.readouterr().out
    assert "throughput_per_hour" in out
    assert "OVER" not in out


def test_lib_roundtrip(tmp_path, capsys, monkeypatch):
    root = tmp_path / "libroot"
    assert main(["lib", "add", PILOT, "--root", str(root), "--kind", "model",
                 "--name", "pilot"]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("model,pilot,1,")
    assert main(["lib", "list", "--root", str(root)]) == 0
    assert "model,pilot,1" in capsys.readouterr().out
    out_file = tmp_path / "fetched.mim"
    assert main(["lib", "get", "--root", str(root), "--kind", "model",
                 "--name", "pilot", "--out", str(out_file)]) == 0
    assert out_file.read_text(encoding="utf-8") == Path(PILOT).read_text(encoding="utf-8")
    # env fallback for --root
    monkeypatch.setenv("MFGSIM_LIB_ROOT", str(root))
    assert main(["lib", "list"]) == 0
    assert "model,pilot" in capsys.readouterr().out


def test_lib_missing_item_exit_1(tmp_path, capsys):
    assert main(["lib", "get", "--root", str(tmp_path), "--kind", "model",
                 "--name", "ghost"]) == 1
    assert "error" in capsys.readouterr().err


def test_internal_errors_do_not_leak_tracebacks(tmp_path, capsys):
    missing = tmp_path / "missing.mim"
    assert main(["check", str(missing)]) == 1
    assert "cannot read file" in capsys.readouterr().err
