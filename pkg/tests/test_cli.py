import json

import pytest

from slp_lab import cli
from slp_lab.dynamics import NumericalError


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_phase_match_table(capsys):
    code, out, _ = run_cli(capsys, "phase-match")
    assert code == 0
    assert "0.34497" in out


def test_phase_match_mirror_json(capsys):
    code, out, _ = run_cli(capsys, "phase-match", "--mirror", "--json")
    data = json.loads(out)
    assert data["primary"]["angle_deg"] == pytest.approx(0.345, abs=5e-3)
    assert data["mirror"]["angle_deg"] == pytest.approx(-data["primary"]["angle_deg"])
    assert data["mirror"]["delta_k"] == pytest.approx(data["primary"]["delta_k"], rel=1e-12)


def test_phase_match_azimuth(capsys):
    _, a, _ = run_cli(capsys, "phase-match", "--json")
    _, b, _ = run_cli(capsys, "phase-match", "--json", "--azimuth", "90deg")
    a, b = json.loads(a)["primary"], json.loads(b)["primary"]
    assert b["azimuth_rad"] == pytest.approx(1.5707963267948966)
    assert b["delta_k_L"] == pytest.approx(a["delta_k_L"], rel=1e-12)


def test_cavity(capsys):
    code, out, _ = run_cli(capsys, "cavity", "--json")
    r = json.loads(out)
    assert code == 0
    assert r["q_factor"] == pytest.approx(2.9e9, rel=0.02)


def test_scenarios_listing(capsys):
    code, out, _ = run_cli(capsys, "scenarios")
    assert code == 0
    for name in ("fig3-eit", "fig3-slp", "fig4-sweep", "slow-light"):
        assert name in out


def test_format_command(capsys, tmp_path):
    f = tmp_path / "x.seq"
    f.write_text("at 2us set FWC 1  # comment\nat 1us probe ch=1 fwhm=2us amp=1\n")
    code, out, _ = run_cli(capsys, "format", str(f))
    assert code == 0
    assert out.splitlines()[1].startswith("at 1us probe")


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--scenario", "nope"],
        ["run"],
        ["phase-match", "--azimuth", "90 furlongs"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    assert cli.main(argv) == 2


def test_config_errors_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.params"
    bad.write_text("od = 60\nwhatever = 3\n")
    code, _, err = run_cli(capsys, "phase-match", "--params", str(bad))
    assert code == 2 and "line 2" in err
    seq = tmp_path / "bad.seq"
    seq.write_text("duration 5us\nat 1us probe ch=1 fwhm=2us\n")
    code, _, err = run_cli(capsys, "run", "--sequence", str(seq), "--out", str(tmp_path))
    assert code == 2 and "line 2" in err
    code, _, _ = run_cli(capsys, "run", "--sequence", str(tmp_path / "missing.seq"), "--out", str(tmp_path))
    assert code == 2


def test_unstable_grid_is_config_error(capsys, tmp_path):
    code, _, err = run_cli(capsys, "run", "--scenario", "fig3-eit", "--grid.dt", "50ns", "--out", str(tmp_path))
    assert code == 2 and "stability" in err


def test_numerical_failure_exit_1(capsys, tmp_path, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("non-finite spin at t = 1e-6 s")

    monkeypatch.setattr(cli, "run_timeline", boom)
    code, _, err = run_cli(capsys, "run", "--scenario", "fig3-eit", "--out", str(tmp_path))
    assert code == 1 and "numerical" in err


def test_run_writes_outputs_deterministically(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--scenario", "fig3-eit", "--out", str(a)]) == 0
    assert cli.main(["run", "--scenario", "fig3-eit", "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["fig3-eit.csv", "fig3-eit.json", "fig3-eit_report.json", "fig3-eit_waveforms.png"]
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n
    header = (a / "fig3-eit.csv").read_text().splitlines()[0]
    assert header == "t_us,ch,end,intensity"
    side = json.loads((a / "fig3-eit.json").read_text())
    assert {"parameters", "grid", "ledger", "sequence"} <= side.keys()
    report = json.loads((a / "fig3-eit_report.json").read_text())
    assert report["channels"]["1"]["retrieval_efficiency"] > 0


def test_out_dir_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SLP_LAB_OUT", str(tmp_path / "env"))
    code, out, _ = run_cli(capsys, "run", "--scenario", "slow-light", "--no-plots", "--json")
    assert code == 0
    assert (tmp_path / "env" / "slow-light.csv").exists()
    assert not (tmp_path / "env" / "slow-light_waveforms.png").exists()
    assert json.loads(out)["scenario"] == "slow-light"


def test_grid_refinement_via_cli(capsys, tmp_path):
    run_cli(capsys, "run", "--scenario", "fig3-slp", "--no-plots", "--out", str(tmp_path / "c"))
    run_cli(capsys, "run", "--scenario", "fig3-slp", "--no-plots", "--out", str(tmp_path / "f"),
            "--grid.nz", "512", "--grid.dt", "0.5ns")
    coarse = json.loads((tmp_path / "c" / "fig3-slp_report.json").read_text())["channels"]
    fine = json.loads((tmp_path / "f" / "fig3-slp_report.json").read_text())["channels"]
    for ch in coarse:
        for key in ("leak_efficiency", "release_efficiency", "trapped_emission_efficiency"):
            assert fine[ch][key] == pytest.approx(coarse[ch][key], rel=0.01)


def test_sweep_run_produces_fit_and_decay_plot(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "run", "--scenario", "fig4-sweep", "--out", str(tmp_path), "--json")
    assert code == 0
    report = json.loads(out)
    assert len(report["members"]) == 7
    assert set(report["fits"]) == {"1", "2"}
    assert report["cavity"]["q_factor"] > 0
    assert (tmp_path / "fig4-sweep_decay.png").exists()
    assert (tmp_path / "fig4-sweep_trap0.80us.csv").exists()
