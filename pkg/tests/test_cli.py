"""CLI surface: run, sweep, inclusion, audit."""

import json

import pytest

from sparsedag.cli import _parse_bandwidth, _parse_samples, main


@pytest.fixture
def config_path(tmp_path):
    cfg = {"variant": "baseline", "n": 4, "rounds": 6, "seed": 3,
           "rb_mode": "ideal", "timeout_ms": 1300.0, "log_events": True}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_parse_bandwidth_tokens():
    assert _parse_bandwidth("unlimited") == 0
    assert _parse_bandwidth("5MB") == 5_000_000
    assert _parse_bandwidth("1.5gb") == 1_500_000_000
    assert _parse_bandwidth("750kb") == 750_000
    assert _parse_bandwidth("1234") == 1234


def test_parse_samples_tokens():
    assert _parse_samples("35,70,baseline") == [35, 70, "baseline"]


def test_run_command(tmp_path, config_path, capsys):
    out = tmp_path / "results.csv"
    log = tmp_path / "events.ndjson"
    rc = main(["run", "--config", str(config_path), "--out", str(out),
               "--eventlog", str(log)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("variant,n,f,")
    assert len(lines) == 2
    assert log.stat().st_size > 0
    assert "audit_ok=True" in capsys.readouterr().out


def test_run_seed_override_changes_output(tmp_path, config_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["run", "--config", str(config_path), "--out", str(out1)])
    main(["run", "--config", str(config_path), "--seed", "99",
          "--out", str(out2)])
    assert out1.read_text() != out2.read_text()


def test_sweep_command(tmp_path, config_path):
    outdir = tmp_path / "sweepdir"
    rc = main(["sweep", "--config", str(config_path), "--samples",
               "2,baseline", "--bandwidth", "unlimited", "--out", str(outdir)])
    assert rc == 0
    lines = (outdir / "results.csv").read_text().splitlines()
    assert len(lines) == 3


def test_inclusion_command(tmp_path, capsys):
    out = tmp_path / "incl.csv"
    rc = main(["inclusion", "--n", "100", "--sample", "10", "--rounds", "30",
               "--seed", "4", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "latency_rounds,count"
    assert len(lines) > 1


def test_egress_model_command(tmp_path):
    out = tmp_path / "egress.csv"
    rc = main(["egress-model", "--n", "2000", "--lambda", "128",
               "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "variant,scheme,n,lambda,egress_bytes_per_round"
    assert len(lines) == 7
    rows = {tuple(line.split(",")[:2]): int(line.split(",")[-1])
            for line in lines[1:]}
    assert abs(rows[("baseline", "threshold")] - 171e6) / 171e6 < 0.2
    assert abs(rows[("sparse", "threshold")] - 17e6) / 17e6 < 0.2


def test_audit_command_on_clean_run(tmp_path, config_path, capsys):
    log = tmp_path / "events.ndjson"
    main(["run", "--config", str(config_path), "--out",
          str(tmp_path / "r.csv"), "--eventlog", str(log)])
    capsys.readouterr()
    rc = main(["audit", "--eventlog", str(log), "--delta-ms", "600",
               "--gst-ms", "0"])
    assert rc == 0
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["ok"] is True
    assert verdict["duplicates"] == 0
    assert verdict["delay_bound_violations"] == 0


def test_audit_flags_tampered_log(tmp_path, config_path, capsys):
    log = tmp_path / "events.ndjson"
    main(["run", "--config", str(config_path), "--out",
          str(tmp_path / "r.csv"), "--eventlog", str(log)])
    lines = log.read_text().splitlines()
    dup = None
    for line in lines:
        rec = json.loads(line)
        if rec["kind"] == "r_deliver":
            dup = line
            break
    assert dup is not None
    (tmp_path / "bad.ndjson").write_text("\n".join(lines + [dup]) + "\n")
    rc = main(["audit", "--eventlog", str(tmp_path / "bad.ndjson")])
    assert rc == 1
