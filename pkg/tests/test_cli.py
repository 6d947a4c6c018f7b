"""Command-line interface: outputs, file round trips, exit codes."""

import subprocess
import sys

from sparsegt.cli import main
from sparsegt.core import parse
from sparsegt.designs import hypergrid_design


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out.splitlines(), captured.err


class TestDesignCommand:
    def test_summary_line(self, capsys):
        code, out, _ = run(capsys, "design", "--family", "hypergrid", "--n", "9", "--gamma", "2")
        assert code == 0
        assert out[0] == "# cmd: sparsegt design --family hypergrid --n 9 --gamma 2"
        assert out[1] == "hypergrid 6 9 18 3 2"

    def test_file_round_trip(self, capsys, tmp_path):
        path = tmp_path / "grid.design"
        code, _, _ = run(
            capsys,
            "design", "--family", "hypergrid", "--n", "9", "--gamma", "2",
            "--out", str(path),
        )
        assert code == 0
        text = path.read_text()
        assert text.startswith("# cmd: sparsegt design")
        assert "# family=hypergrid seed=0" in text
        assert parse(text) == hypergrid_design(9, 2)

    def test_random_family_is_seeded(self, capsys, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for path in (a, b):
            run(
                capsys,
                "design", "--family", "random-gamma", "--n", "50", "--d", "2",
                "--gamma", "2", "--epsilon", "0.2", "--seed", "9",
                "--out", str(path),
            )
        assert parse(a.read_text()) == parse(b.read_text())

    def test_missing_flag_is_usage_error(self, capsys):
        code, _, err = run(capsys, "design", "--family", "hypergrid", "--n", "9")
        assert code == 1
        assert "requires --gamma" in err

    def test_unknown_family_rejected_by_parser(self, capsys):
        code, _, _ = run(capsys, "design", "--family", "mystery", "--n", "9")
        assert code == 1


class TestSimulateCommand:
    def test_clean_run_emits_csv(self, capsys):
        code, out, _ = run(
            capsys,
            "simulate", "--family", "hypergrid", "--n", "9", "--gamma", "2",
            "--d", "1", "--trials", "200", "--seed", "5",
        )
        assert code == 0
        assert out[1].startswith("design_tag,")
        fields = out[2].split(",")
        assert fields[0] == "hypergrid"
        assert fields[7] == "200"
        assert fields[8] == "0"  # singletons always decode

    def test_target_met_and_exceeded(self, capsys):
        base = [
            "simulate", "--family", "hypergrid", "--n", "9", "--gamma", "2",
            "--d", "2", "--decoder", "coma", "--trials", "400", "--seed", "5",
        ]
        code_ok, _, _ = run(capsys, *base, "--target-epsilon", "0.9")
        assert code_ok == 0
        code_bad, out, _ = run(capsys, *base, "--target-epsilon", "0.1")
        assert code_bad == 2
        assert any(line.startswith("# target exceeded:") for line in out)

    def test_noise_without_repetition_refused(self, capsys):
        code, _, err = run(
            capsys,
            "simulate", "--family", "permuted-rho", "--n", "60", "--d", "2",
            "--rho", "6", "--zeta", "0.5", "--sigma", "0.1", "--trials", "10",
        )
        assert code == 1
        assert "repeated design" in err

    def test_noisy_run_with_k(self, capsys):
        code, out, _ = run(
            capsys,
            "simulate", "--family", "permuted-rho", "--n", "60", "--d", "2",
            "--rho", "6", "--zeta", "0.5", "--sigma", "0.1", "--k", "21",
            "--trials", "100", "--seed", "7",
        )
        assert code == 0
        fields = out[2].split(",")
        assert fields[0] == "repeated"
        assert float(fields[5]) == 0.1

    def test_simulate_from_design_file(self, capsys, tmp_path):
        path = tmp_path / "grid.design"
        run(
            capsys,
            "design", "--family", "hypergrid", "--n", "9", "--gamma", "2",
            "--out", str(path),
        )
        code, out, _ = run(
            capsys,
            "simulate", "--design", str(path), "--d", "1", "--trials", "50",
        )
        assert code == 0
        assert out[2].split(",")[8] == "0"

    def test_out_appends_csv(self, capsys, tmp_path):
        log = tmp_path / "runs.csv"
        args = [
            "simulate", "--family", "hypergrid", "--n", "9", "--gamma", "2",
            "--d", "1", "--trials", "20", "--out", str(log),
        ]
        run(capsys, *args)
        run(capsys, *args)
        lines = log.read_text().splitlines()
        assert len(lines) == 6  # echo + header + row, twice
        assert lines[0].startswith("# cmd:")

    def test_needs_design_or_family(self, capsys):
        code, _, err = run(capsys, "simulate", "--d", "1")
        assert code == 1
        assert "--design or --family" in err


class TestBoundsCommand:
    def test_gamma_lower_bound_text(self, capsys):
        code, out, _ = run(
            capsys,
            "bounds", "--theorem", "1", "--n", "1000000", "--d", "1",
            "--gamma", "2", "--epsilon", "0.01",
        )
        assert code == 0
        assert "name=gamma-lower-bound" in out
        assert "value=1415.89" in out
        assert "integer_value=1416" in out

    def test_rho_lower_bound_text(self, capsys):
        code, out, _ = run(
            capsys,
            "bounds", "--theorem", "4", "--n", "10000", "--d", "10",
            "--rho", "100", "--epsilon", "0.01",
        )
        assert code == 0
        assert "value=282" in out

    def test_upper_bound_families(self, capsys):
        code, out, _ = run(
            capsys,
            "bounds", "--theorem", "2", "--n", "10000", "--d", "5",
            "--gamma", "3", "--epsilon", "0.1",
        )
        assert code == 0
        assert "integer_value=1893" in out
        code, out, _ = run(
            capsys,
            "bounds", "--theorem", "5", "--n", "10000", "--d", "10",
            "--rho", "100", "--zeta", "0.5",
        )
        assert "integer_value=600" in out
        code, out, _ = run(
            capsys,
            "bounds", "--theorem", "7", "--n", "1000", "--d", "10",
            "--rho", "50", "--zeta", "0.5", "--sigma", "0.1",
        )
        assert "integer_value=19500" in out

    def test_noisy_floor(self, capsys):
        code, out, _ = run(
            capsys,
            "bounds", "--theorem", "noisy", "--d", "2", "--gamma", "2",
            "--sigma", "0.2",
        )
        assert code == 0
        assert "value=0.125" in out
        assert "floor=0.111111" in out

    def test_csv_output(self, capsys):
        code, out, _ = run(
            capsys,
            "bounds", "--theorem", "4", "--n", "10000", "--d", "10",
            "--rho", "100", "--epsilon", "0.01", "--csv",
        )
        assert code == 0
        assert out[1] == "name,value,integer_value,floor,assumptions"
        assert out[2].startswith("rho-lower-bound,282,282,,")

    def test_missing_flags(self, capsys):
        code, _, err = run(capsys, "bounds", "--theorem", "1", "--n", "100")
        assert code == 1
        assert "requires" in err


class TestOracleCommand:
    def test_fig1_pairs(self, capsys):
        code, out, _ = run(capsys, "oracle", "--design", "fig1", "--d", "2")
        assert code == 0
        assert "exact_error=1/1=1" in out
        confusable = [line for line in out if line.startswith("# confusable:")]
        assert len(confusable) == 9
        assert any("{0,4} (1-based {1,5}) == {1,3} (1-based {2,4})" in line for line in confusable)

    def test_fig1_singletons(self, capsys):
        code, out, _ = run(capsys, "oracle", "--design", "fig1", "--d", "1")
        assert code == 0
        assert "exact_error=0/1=0" in out
        assert not any(line.startswith("# confusable:") for line in out)

    def test_target_epsilon_exit_code(self, capsys):
        code, _, _ = run(
            capsys, "oracle", "--design", "fig1", "--d", "2", "--target-epsilon", "0.5"
        )
        assert code == 2

    def test_noisy_oracle_reports_floor(self, capsys, tmp_path):
        path = tmp_path / "small.design"
        run(
            capsys,
            "design", "--family", "hypergrid", "--n", "8", "--gamma", "2",
            "--out", str(path),
        )
        code, out, _ = run(
            capsys, "oracle", "--design", str(path), "--d", "1", "--sigma", "0.2"
        )
        assert code == 0
        assert any(line.startswith("map_error=") for line in out)
        assert any("floor_check=holds" in line for line in out)

    def test_resource_cap_exit_code(self, capsys):
        code, _, err = run(
            capsys, "oracle", "--design", "fig1", "--d", "4", "--cap", "10"
        )
        assert code == 3
        assert "resource cap" in err

    def test_missing_design_file(self, capsys):
        code, _, err = run(capsys, "oracle", "--design", "/no/such/file", "--d", "1")
        assert code == 1
        assert "error:" in err


class TestEntryPoint:
    def test_console_script(self):
        proc = subprocess.run(
            [sys.executable, "-m", "sparsegt.cli", "design", "--family",
             "hypergrid", "--n", "9", "--gamma", "2"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "hypergrid 6 9 18 3 2" in proc.stdout
