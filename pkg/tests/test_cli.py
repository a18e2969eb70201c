import json
from pathlib import Path

import pytest

from spinmap import fileio
from spinmap.cli import main

DATA = Path(__file__).parent / "data"
FIXTURE = DATA / "couplings_fixture.csv"


def run(args):
    return main([str(a) for a in args])


class TestExitCodes:
    def test_missing_input_is_usage_error(self, tmp_path, capsys):
        rc = run(["place", "--couplings", tmp_path / "nope.csv", "--out", tmp_path / "s.json"])
        assert rc == 2
        assert "nope.csv" in capsys.readouterr().err

    def test_usage_error_on_unknown_command(self):
        assert run(["frobnicate"]) == 2

    def test_domain_error_is_json_on_stderr(self, tmp_path, capsys):
        bad = tmp_path / "c.csv"
        fileio.write_couplings_csv(
            bad,
            [
                __import__("spinmap.placement", fromlist=["CouplingMeasurement"]).CouplingMeasurement(
                    "Si1", "Si2", 500.0, 0.2
                )
            ],
        )
        rc = run(
            ["place", "--couplings", bad, "--lattice-radius", "12",
             "--out", tmp_path / "s.json"]
        )
        assert rc == 1
        err = json.loads(capsys.readouterr().err)
        assert "error" in err and "message" in err


class TestLatticeCommand:
    def test_csv_output(self, tmp_path):
        out = tmp_path / "lat.csv"
        assert run(["lattice", "--radius", "5", "--out", out]) == 0
        assert out.exists()
        assert (tmp_path / "lat.csv.manifest.json").exists()

    def test_json_output(self, tmp_path):
        out = tmp_path / "lat.json"
        assert run(["lattice", "--radius", "5", "--format", "json", "--out", out]) == 0
        data = json.loads(out.read_text())
        assert len(data["sites"]) == 47


class TestPlaceRefineSmoke:
    def test_place_on_shipped_fixture(self, tmp_path):
        out = tmp_path / "solutions.json"
        rc = run(
            ["place", "--couplings", FIXTURE, "--override", "Si1:Si2=3.0", "--out", out]
        )
        assert rc == 0
        data = json.loads(out.read_text())
        assert data["n_solutions"] >= 1
        assert data["branch_history"][-1] == data["n_solutions"]

    def test_refine_on_place_output(self, tmp_path):
        sols = tmp_path / "solutions.json"
        refined = tmp_path / "refined.json"
        assert run(["place", "--couplings", FIXTURE, "--out", sols]) == 0
        assert run(["refine", "--solution", sols, "--couplings", FIXTURE, "--out", refined]) == 0
        data = json.loads(refined.read_text())
        assert data["residual_hz2"] >= 0
        assert data["displacement_max_A"] < 3.08


class TestExportGraph:
    def test_edge_count_monotone_in_cutoff(self, tmp_path):
        counts = {}
        for cutoff in (1.0, 2.0):
            out = tmp_path / f"g{cutoff}.json"
            assert run(
                ["export-graph", "--couplings", FIXTURE, "--cutoff", cutoff, "--out", out]
            ) == 0
            counts[cutoff] = len(json.loads(out.read_text())["edges"])
        assert counts[1.0] >= counts[2.0]

    def test_node_metadata(self, tmp_path):
        out = tmp_path / "g.json"
        dot = tmp_path / "g.dot"
        assert run(
            ["export-graph", "--couplings", FIXTURE, "--out", out, "--dot", dot]
        ) == 0
        nodes = json.loads(out.read_text())["nodes"]
        assert len(nodes) == 25
        assert sum(1 for n in nodes if n["species"] == "Si") == 22
        assert sum(1 for n in nodes if n["species"] == "C") == 3
        assert dot.exists()


class TestSynthAndTelegraph:
    def test_trace_roundtrip_through_analysis(self, tmp_path):
        trace = tmp_path / "trace.csv"
        result = tmp_path / "telegraph.json"
        assert run(
            ["synth", "telegraph", "--rates", "0.18,0.85", "--seed", "3", "--out", trace]
        ) == 0
        assert run(["telegraph", "--trace", trace, "--out", result]) == 0
        data = json.loads(result.read_text())
        assert abs(data["rate_bright_to_dark_hz"] - 0.18) <= 3 * data["rate_bright_to_dark_err"]
        assert abs(data["rate_dark_to_bright_hz"] - 0.85) <= 3 * data["rate_dark_to_bright_err"]

    def test_synth_cluster_then_couplings(self, tmp_path):
        truth = tmp_path / "truth.json"
        coupl = tmp_path / "couplings.csv"
        assert run(["synth", "cluster", "--seed", "2", "--out", truth]) == 0
        assert run(
            ["synth", "couplings", "--truth", truth, "--seed", "2", "--out", coupl]
        ) == 0
        meas = fileio.read_couplings(coupl)
        assert len(meas) > 50


class TestDdrfCalc:
    def test_json_mode(self, capsys):
        rc = run(
            ["ddrf-calc", "--omega0", "1.60e6", "--omega1", "1.63e6",
             "--omega-rf", "1.60e6", "--tau", "20e-6", "--rabi", "500",
             "--pulses", "16", "--json"]
        )
        assert rc == 0
        data = json.loads(capsys.readouterr().out)
        assert set(data) >= {"phase_update_rad", "effective_rabi_hz", "rotation_angle_rad"}


class TestCalibrateCommand:
    def test_full_calibration_run(self, tmp_path):
        from spinmap.spinphys import SI29, FieldConfig, HyperfineTensor, nuclear_transition_frequency

        def pair(azz, aperp, b_true):
            f = FieldConfig(b_true)
            hf = HyperfineTensor.from_perp(azz, aperp)
            return (
                nuclear_transition_frequency(f, SI29, hf, 1.5),
                nuclear_transition_frequency(f, SI29, hf, -1.5),
            )

        fp5, fm5 = pair(-150e3, 700.0, 1960.9 - 1.47)
        fp14, fm14 = pair(210e3, 400.0, 1960.9 - 1.59)
        freqs = tmp_path / "freqs.json"
        freqs.write_text(json.dumps({
            "field_gauss": 1960.9,
            "spins": {
                "Si5": {"f_plus": fp5, "f_minus": fm5},
                "Si14": {"f_plus": fp14, "f_minus": fm14},
            },
        }))
        dft = tmp_path / "dft.csv"
        dft.write_text(
            "label,A_zz_Hz,A_perp_Hz\nSi5,-150000.0,700.0\nSi14,210000.0,400.0\n"
        )
        out = tmp_path / "calib.json"
        assert run(["calibrate", "--freqs", freqs, "--dft", dft, "--out", out]) == 0
        data = json.loads(out.read_text())
        assert data["g_factor"] == pytest.approx(-2.0012, abs=1e-4)
        assert data["delta_b_gauss"] == pytest.approx(-1.53, abs=0.02)


class TestConstantsAndConfig:
    def test_constants_json(self, capsys):
        assert run(["constants"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["gamma_si29_Hz_per_T"] == -8.465e6
        assert data["g_electron_default"] == -2.0028

    def test_config_file_sets_defaults_and_flags_win(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("[place]\ntolerance = 0.9\n")
        out = tmp_path / "s.json"
        assert run(["--config", cfg, "place", "--couplings", FIXTURE, "--out", out]) == 0
        manifest = json.loads((tmp_path / "s.json.manifest.json").read_text())
        assert manifest["config"]["tolerance"] == 0.9
        assert run(
            ["--config", cfg, "place", "--couplings", FIXTURE, "--tolerance", "0.6",
             "--out", out]
        ) == 0
        manifest = json.loads((tmp_path / "s.json.manifest.json").read_text())
        assert manifest["config"]["tolerance"] == 0.6

    def test_unknown_config_section_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("[bogus]\nx = 1\n")
        rc = run(["--config", cfg, "constants"])
        assert rc == 2  # invalid config is a usage error

    def test_malformed_config_is_usage_error(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("tolerance 0.6\n")
        assert run(["--config", cfg, "constants"]) == 2

    def test_gamma_override_changes_placement(self, tmp_path, capsys):
        from spinmap import spinphys

        orig = (spinphys.SI29, spinphys.C13)
        out = tmp_path / "s.json"
        try:
            rc = run(
                ["--gamma-si29=-8.4e6", "place", "--couplings", FIXTURE, "--out", out]
            )
            assert rc == 1  # couplings become inconsistent with the lattice
            err = json.loads(capsys.readouterr().err)
            assert err["error"] == "infeasible"
        finally:
            spinphys.SI29, spinphys.C13 = orig


class TestReproduce:
    def test_two_runs_byte_identical(self, tmp_path):
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        assert run(["reproduce", "--seed", "1", "--workdir", d1]) == 0
        assert run(["reproduce", "--seed", "1", "--workdir", d2]) == 0
        files = sorted(p.name for p in d1.iterdir())
        assert files == sorted(p.name for p in d2.iterdir())
        for name in files:
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()

    def test_report_contents(self, tmp_path):
        d = tmp_path / "r"
        assert run(["reproduce", "--seed", "1", "--workdir", d]) == 0
        report = json.loads((d / "report.json").read_text())
        assert report["recovered_truth"] is True
        assert report["unique"] is True
        assert report["branch_history"][-1] == 1
