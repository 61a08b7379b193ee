import json
from pathlib import Path

import pytest

from demosim.cli import (
    EXIT_INVARIANT,
    EXIT_OK,
    EXIT_VALIDATION,
    main,
    run_scenario,
    summary_file,
    sweep,
)
from demosim.scenarios import fig5a_angled, get_scenario
from demosim.trace import TraceError, read_trace, write_trace


def short(name="fig5a_angled", duration=4.0):
    sc = get_scenario(name)
    sc.duration = duration
    return sc


class TestRun:
    def test_same_seed_byte_identical_traces(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        run_scenario(short(), 3, a)
        run_scenario(short(), 3, b)
        assert a.read_bytes() == b.read_bytes()

    def test_summary_written_next_to_trace(self, tmp_path):
        out = tmp_path / "t.jsonl"
        summary = run_scenario(short(), 0, out)
        on_disk = json.loads(summary_file(out).read_text())
        assert on_disk == summary

    def test_cli_run_exit_ok(self, tmp_path, capsys):
        out = tmp_path / "t.jsonl"
        rc = main(["run", "fig5a_angled", "--duration", "2", "--out", str(out)])
        assert rc == EXIT_OK
        assert out.exists()
        printed = json.loads(capsys.readouterr().out)
        assert printed["scenario"] == "fig5a_angled"

    def test_cli_run_unknown_scenario(self, tmp_path, capsys):
        rc = main(["run", "no-such-scenario", "--out", str(tmp_path / "x.jsonl")])
        assert rc == EXIT_VALIDATION
        assert "error" in capsys.readouterr().err

    def test_cli_run_bad_toml(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("[scenario\n")
        rc = main(["run", str(bad), "--out", str(tmp_path / "x.jsonl")])
        assert rc == EXIT_VALIDATION


class TestReplay:
    def test_replay_matches_run_summary(self, tmp_path, capsys):
        out = tmp_path / "t.jsonl"
        summary = run_scenario(short(), 1, out)
        rc = main(["replay", str(out)])
        assert rc == EXIT_OK
        assert json.loads(capsys.readouterr().out) == summary

    def test_replay_regenerates_deleted_summary(self, tmp_path, capsys):
        out = tmp_path / "t.jsonl"
        summary = run_scenario(short(), 1, out)
        summary_file(out).unlink()
        rc = main(["replay", str(out)])
        assert rc == EXIT_OK
        assert json.loads(summary_file(out).read_text()) == summary

    def test_replay_detects_tampered_summary(self, tmp_path, capsys):
        out = tmp_path / "t.jsonl"
        run_scenario(short(), 1, out)
        doc = json.loads(summary_file(out).read_text())
        doc["tracking_uptime"] = 0.123
        summary_file(out).write_text(json.dumps(doc))
        rc = main(["replay", str(out)])
        assert rc == EXIT_INVARIANT

    def test_truncated_log_names_last_valid_tick(self, tmp_path, capsys):
        out = tmp_path / "t.jsonl"
        run_scenario(short(duration=1.0), 0, out)
        lines = out.read_text().splitlines()
        # chop the final row mid-object
        lines[-1] = lines[-1][: len(lines[-1]) // 2]
        out.write_text("\n".join(lines) + "\n")
        rc = main(["replay", str(out)])
        assert rc == EXIT_VALIDATION
        err = capsys.readouterr().err
        assert "corrupt line" in err and "last valid tick t=0.98" in err

    def test_missing_file(self, tmp_path, capsys):
        rc = main(["replay", str(tmp_path / "nope.jsonl")])
        assert rc == EXIT_VALIDATION

    def test_read_rejects_headerless_file(self, tmp_path):
        p = tmp_path / "x.jsonl"
        p.write_text('{"time": 0.02}\n')
        with pytest.raises(TraceError, match="header"):
            read_trace(p)

    def test_write_read_round_trip(self, tmp_path):
        p = tmp_path / "x.jsonl"
        header = {"scenario": "s", "seed": 0, "tick": 0.02}
        rows = [{"time": 0.02, "mode": "idle"}]
        write_trace(p, header, rows)
        h, r = read_trace(p)
        assert h["scenario"] == "s" and r == rows


class TestSweep:
    def test_single_point_sweep_matches_single_run(self, tmp_path):
        sc = short()
        table = sweep(sc, 0, [100.0], [100.0], [2.0], [0.5], [0.3], out_dir=tmp_path)
        assert len(table) == 1
        single = run_scenario(short(), 0, tmp_path / "single.jsonl")
        assert table[0]["tracking_uptime"] == single["tracking_uptime"]
        assert table[0]["mean_phi1"] == single["mean_objectives"]["phi1"]

    def test_zero_centering_weight_degrades_centering(self, tmp_path):
        sc = short(duration=8.0)
        table = sweep(sc, 0, [100.0], [100.0, 0.0], [2.0], [0.5], [0.3], out_dir=tmp_path)
        with_w2 = next(r for r in table if r["w2"] == 100.0)
        without = next(r for r in table if r["w2"] == 0.0)
        assert without["mean_phi2"] > with_w2["mean_phi2"]

    def test_cli_sweep_prints_table(self, tmp_path, capsys):
        rc = main(
            [
                "sweep", "fig5a_angled", "--duration", "2",
                "--w1", "100", "--w2", "100", "--w3", "2", "--w4", "0.5", "--d", "0.3",
                "--out", str(tmp_path),
            ]
        )
        assert rc == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].split("\t")[:2] == ["w1", "w2"]
        assert len(lines) == 2


class TestList:
    def test_lists_all_builtins(self, capsys):
        rc = main(["list-scenarios"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        for name in (
            "fig5a_angled",
            "fig5b_endeffector",
            "fig5c_topface",
            "fig5d_present_reorient",
            "rolling",
            "press_fit",
        ):
            assert name in out
