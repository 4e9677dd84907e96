"""End-to-end command-line behavior, determinism, and exit codes."""

import json
from pathlib import Path

import pytest

from bidirmr.cli import main

FIXTURES = Path(__file__).parent / "fixtures"
EXPOSURE = str(FIXTURES / "exposure_50.tsv")
OUTCOME = str(FIXTURES / "outcome_50.tsv")
EXPOSURE_EMPTY = str(FIXTURES / "exposure_empty.tsv")
OUTCOME_EMPTY = str(FIXTURES / "outcome_empty.tsv")


def run_test_cmd(tmp_path, name, *extra):
    out = tmp_path / name
    code = main(
        ["test", "--exposure", EXPOSURE, "--outcome", OUTCOME,
         "--seed", "7", "--out", str(out), *extra]
    )
    assert code == 0
    return out


class TestTestCommand:
    def test_json_output_structure(self, tmp_path):
        out = run_test_cmd(tmp_path, "r.json")
        payload = json.loads(out.read_text())
        assert payload["schema_version"] == 1
        assert payload["n_snps"] == 50
        assert {row["direction"] for row in payload["results"]} == {"dy", "yd"}
        for row in payload["results"]:
            assert row["reject"] == (row["empty_set_reject"] or row["p_value"] <= row["alpha"])

    def test_byte_identical_across_runs(self, tmp_path):
        out1 = run_test_cmd(tmp_path, "a.json", "--estimator", "median")
        out2 = run_test_cmd(tmp_path, "b.json", "--estimator", "median")
        assert out1.read_bytes() == out2.read_bytes()

    def test_empty_focused_set_rejects_with_flag(self, tmp_path):
        out = tmp_path / "empty.json"
        code = main(
            ["test", "--exposure", EXPOSURE_EMPTY, "--outcome", OUTCOME_EMPTY,
             "--seed", "7", "--direction", "dy", "--out", str(out)]
        )
        assert code == 0
        row = json.loads(out.read_text())["results"][0]
        assert row["reject"] is True
        assert row["empty_set_reject"] is True
        assert row["p_value"] == 0.0
        assert row["estimate"] is None

    def test_joint_direction_emits_three_rows(self, tmp_path):
        out = run_test_cmd(tmp_path, "joint.tsv", "--direction", "joint", "--format", "tsv")
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 4  # header + dy + yd + joint
        assert lines[3].startswith("joint\tjoint")

    def test_benchmark_estimators_run(self, tmp_path):
        for estimator in ("overall-ivw", "mr-median", "mr-egger"):
            out = run_test_cmd(tmp_path, f"{estimator}.json", "--estimator", estimator)
            payload = json.loads(out.read_text())
            assert payload["params"]["estimator"] == estimator
            assert len(payload["results"]) == 2

    def test_allele_mode_runs(self, tmp_path):
        out = run_test_cmd(tmp_path, "allele.json", "--mode", "allele")
        assert json.loads(out.read_text())["n_snps"] == 50

    def test_emit_snps_and_density(self, tmp_path):
        snps = tmp_path / "snps.tsv"
        dens = tmp_path / "dens.tsv"
        run_test_cmd(
            tmp_path, "r.json", "--emit-snps", str(snps), "--emit-density", str(dens)
        )
        snp_lines = snps.read_text().strip().split("\n")
        assert len(snp_lines) == 51
        assert snp_lines[0].split("\t")[:2] == ["id", "beta_d"]
        dens_lines = dens.read_text().strip().split("\n")
        assert dens_lines[0] == "direction\tid\tratio\tweight\tcontribution"
        assert len(dens_lines) > 1

    def test_density_rejected_for_median(self, tmp_path):
        code = main(
            ["test", "--exposure", EXPOSURE, "--outcome", OUTCOME, "--seed", "1",
             "--estimator", "median", "--emit-density", str(tmp_path / "d.tsv")]
        )
        assert code == 2

    def test_missing_file_is_input_error(self, tmp_path):
        code = main(
            ["test", "--exposure", str(tmp_path / "nope.tsv"), "--outcome", OUTCOME,
             "--seed", "1"]
        )
        assert code == 2

    def test_generated_seed_printed_when_absent(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code = main(["test", "--exposure", EXPOSURE, "--outcome", OUTCOME, "--out", str(out)])
        assert code == 0
        assert "seed:" in capsys.readouterr().err


class TestTruncnormCommand:
    def test_values(self, capsys):
        assert main(["truncnorm", "--a", "-1.5", "--b", "1.5", "--mu", "0"]) == 0
        payload = json.loads(capsys.readouterr().out)
        row = payload["results"][0]
        assert row["mean"] == pytest.approx(0.0, abs=1e-12)
        assert row["variance"] == pytest.approx(0.551524415762, abs=1e-9)

    def test_degenerate_window_exit_code(self, capsys):
        assert main(["truncnorm", "--a", "38", "--b", "39"]) == 3

    def test_invalid_bounds_exit_code(self, capsys):
        assert main(["truncnorm", "--a", "2", "--b", "-2"]) == 2


class TestDiagnoseCommand:
    def test_json_input(self, tmp_path, capsys):
        payload = {
            "beta_dy": 0.0,
            "beta_yd": 0.2,
            "pi_d": [1.0, 0.0],
            "pi_y": [0.0, 1.0],
            "se_d": [0.1, 0.1],
            "se_y": [0.1, 0.1],
        }
        path = tmp_path / "truth.json"
        path.write_text(json.dumps(payload))
        assert main(["diagnose", "--input", str(path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["counts"] == {"null": 0, "valid_dy": 1, "valid_yd": 1, "pleiotropic": 0}
        dy_row = out["results"][0]
        assert dy_row["direction"] == "dy"
        assert dy_row["valid_rule"] is False

    def test_tsv_input_with_beta_flags(self, tmp_path, capsys):
        path = tmp_path / "truth.tsv"
        path.write_text("pi_d\tpi_y\tse_d\tse_y\n1.0\t0.0\t0.1\t0.1\n0.0\t1.0\t0.1\t0.1\n")
        assert main(["diagnose", "--input", str(path), "--beta-dy", "0", "--beta-yd", "0"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["results"][0]["valid_rule"] is True


class TestSimulateCommand:
    def test_small_synthetic_run(self, tmp_path):
        out = tmp_path / "sim.json"
        code = main(
            ["simulate", "--synthetic", "40", "--reps", "5", "--methods",
             "focused_ivw,overall_ivw", "--seed", "3", "--out", str(out)]
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["params"]["p"] == 40
        assert len(payload["results"]) == 4  # 2 methods x 2 directions
        assert abs(sum(payload["mean_rho"]) - 1.0) < 1e-9

    def test_deterministic_given_seed(self, tmp_path):
        args = ["simulate", "--synthetic", "40", "--reps", "5", "--seed", "3"]
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert main([*args, "--out", str(out1)]) == 0
        assert main([*args, "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_grid_tsv(self, tmp_path):
        out = tmp_path / "grid.tsv"
        code = main(
            ["simulate", "--synthetic", "40", "--reps", "3", "--seed", "5",
             "--grid", "0:0,0.3:0", "--format", "tsv", "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("beta_dy\tbeta_yd\tmethod\tdirection")
        assert len(lines) == 1 + 2 * 2  # two cells x one method x two directions

    def test_seed_file_source(self, tmp_path):
        seed_path = tmp_path / "seed.tsv"
        rows = ["alpha_d\talpha_y\tse_d\tse_y"]
        rows += [f"{0.1 + 0.01 * j}\t{0.2 - 0.01 * j}\t0.05\t0.05" for j in range(12)]
        seed_path.write_text("\n".join(rows) + "\n")
        out = tmp_path / "sim.json"
        code = main(
            ["simulate", "--seed-file", str(seed_path), "--reps", "3", "--seed", "2",
             "--out", str(out)]
        )
        assert code == 0
        assert json.loads(out.read_text())["params"]["p"] == 12

    def test_unknown_method_is_input_error(self, tmp_path):
        code = main(
            ["simulate", "--synthetic", "40", "--reps", "2", "--seed", "1",
             "--methods", "psychic"]
        )
        assert code == 2
