"""Command-line interface: subcommands, exit codes, determinism."""

import json

import numpy as np
import pytest

from dcpse import PointCloud, lame_from_young_poisson, write_field_csv
from dcpse.cli import main
from conftest import jittered_cloud


def run(args):
    return main(args)


def make_csv(path, cloud, fields):
    write_field_csv(path, cloud, fields)
    return str(path)


@pytest.fixture
def quad_csv(tmp_path):
    cloud = jittered_cloud(2, 9, seed=21)
    x, y = cloud.coords[:, 0], cloud.coords[:, 1]
    return make_csv(tmp_path / "in.csv", cloud, {"f": x**2 + 3.0 * y}), cloud


class TestDerive:
    def test_first_partial_of_quadratic(self, tmp_path, quad_csv, capsys):
        path, cloud = quad_csv
        out = tmp_path / "out.csv"
        code = run(
            ["derive", "--input", path, "--field", "f", "--alpha", "1,0",
             "--output", str(out)]
        )
        assert code == 0
        captured = capsys.readouterr()
        assert "f_dx" in captured.out
        assert "moment_residual" in captured.err
        from dcpse import read_points_csv

        back_cloud, fields = read_points_csv(out)
        assert "f_dx" in fields
        assert "f" in fields  # original columns are preserved
        want = 2.0 * back_cloud.coords[:, 0]
        assert np.max(np.abs(fields["f_dx"] - want)) < 1e-8

    def test_second_partial_suffix(self, tmp_path, quad_csv):
        path, _ = quad_csv
        out = tmp_path / "out.csv"
        assert run(
            ["derive", "--input", path, "--field", "f", "--alpha", "0,2",
             "--output", str(out)]
        ) == 0
        from dcpse import read_points_csv

        _, fields = read_points_csv(out)
        assert "f_dyy" in fields
        assert np.max(np.abs(fields["f_dyy"])) < 1e-7

    def test_missing_field_is_usage_error(self, tmp_path, quad_csv, capsys):
        path, _ = quad_csv
        code = run(
            ["derive", "--input", path, "--field", "nope", "--alpha", "1,0",
             "--output", str(tmp_path / "o.csv")]
        )
        assert code == 2
        assert "nope" in capsys.readouterr().err

    def test_bad_alpha_is_usage_error(self, tmp_path, quad_csv):
        path, _ = quad_csv
        assert run(
            ["derive", "--input", path, "--field", "f", "--alpha", "a,b",
             "--output", str(tmp_path / "o.csv")]
        ) == 2

    def test_alpha_dimension_mismatch(self, tmp_path, quad_csv):
        path, _ = quad_csv
        assert run(
            ["derive", "--input", path, "--field", "f", "--alpha", "1,0,0",
             "--output", str(tmp_path / "o.csv")]
        ) == 2

    def test_missing_input_file(self, tmp_path):
        assert run(
            ["derive", "--input", str(tmp_path / "absent.csv"), "--field", "f",
             "--alpha", "1,0", "--output", str(tmp_path / "o.csv")]
        ) == 2

    def test_degenerate_cloud_is_numerical_error(self, tmp_path, capsys):
        # all nodes on one line: the 2-d moment systems are singular
        t = np.linspace(0.0, 1.0, 25)
        cloud = PointCloud(np.column_stack([t, 2.0 * t]))
        path = make_csv(tmp_path / "line.csv", cloud, {"f": t})
        code = run(
            ["derive", "--input", path, "--field", "f", "--alpha", "0,1",
             "--output", str(tmp_path / "o.csv")]
        )
        assert code == 1
        assert "failure" in capsys.readouterr().err


class TestRecover:
    def test_linear_displacement_constant_stress(self, tmp_path):
        cloud = jittered_cloud(2, 9, seed=22)
        x, y = cloud.coords[:, 0], cloud.coords[:, 1]
        a = 1e-3
        fields = {"ux": a * x, "uy": -0.25 * a * y}
        path = make_csv(tmp_path / "disp.csv", cloud, fields)
        out = tmp_path / "rec.csv"
        code = run(
            ["recover", "--input", path, "--young", "200e9", "--poisson", "0.3",
             "--output", str(out)]
        )
        assert code == 0
        from dcpse import read_points_csv

        _, got = read_points_csv(out)
        for col in ("sxx", "sxy", "syy", "vm", "p1", "p2", "exx"):
            assert col in got
        lam, mu = lame_from_young_poisson(200e9, 0.3)
        tr = a - 0.25 * a
        want_sxx = 2 * mu * a + lam * tr
        assert np.allclose(got["sxx"], want_sxx, rtol=1e-6)
        assert np.allclose(got["sxy"], 0.0, atol=want_sxx * 1e-8)

    def test_missing_displacement_column(self, tmp_path, capsys):
        cloud = jittered_cloud(2, 5, seed=1)
        path = make_csv(tmp_path / "d.csv", cloud, {"ux": np.zeros(cloud.n)})
        code = run(
            ["recover", "--input", path, "--young", "1", "--poisson", "0.3",
             "--output", str(tmp_path / "o.csv")]
        )
        assert code == 2
        assert "uy" in capsys.readouterr().err

    def test_invalid_poisson(self, tmp_path):
        cloud = jittered_cloud(2, 5, seed=1)
        path = make_csv(
            tmp_path / "d.csv",
            cloud,
            {"ux": np.zeros(cloud.n), "uy": np.zeros(cloud.n)},
        )
        assert run(
            ["recover", "--input", path, "--young", "1", "--poisson", "0.5",
             "--output", str(tmp_path / "o.csv")]
        ) == 2

    def test_1d_cloud_rejected(self, tmp_path):
        cloud = PointCloud(np.linspace(0, 1, 10)[:, None])
        path = make_csv(tmp_path / "d.csv", cloud, {"ux": np.zeros(10)})
        assert run(
            ["recover", "--input", path, "--young", "1", "--poisson", "0.3",
             "--output", str(tmp_path / "o.csv")]
        ) == 2


class TestBenchmark:
    def test_single_level_to_stdout(self, capsys):
        code = run(["benchmark", "--problem", "franke", "--level", "0"])
        assert code == 0
        captured = capsys.readouterr()
        doc = json.loads(captured.out)
        assert doc["problem"] == "franke"
        assert len(doc["levels"]) == 1
        assert doc["levels"][0]["nodes"] == 81
        assert "nrmse" in doc["levels"][0]
        assert "level=0" in captured.err

    def test_report_file_and_error_decreases(self, tmp_path, capsys):
        p0 = tmp_path / "l0.json"
        p2 = tmp_path / "l2.json"
        assert run(["benchmark", "--problem", "plate", "--level", "0",
                    "--report", str(p0)]) == 0
        assert run(["benchmark", "--problem", "plate", "--level", "2",
                    "--report", str(p2)]) == 0
        from dcpse import read_report

        e0 = read_report(p0)["levels"][0]["nrmse"]["sxx"]
        e2 = read_report(p2)["levels"][0]["nrmse"]["sxx"]
        assert np.isfinite(e2)
        assert e2 < e0

    def test_unknown_problem(self):
        assert run(["benchmark", "--problem", "beam", "--level", "0"]) == 2

    def test_bad_kind(self):
        assert run(["benchmark", "--problem", "franke", "--level", "0",
                    "--kind", "chaotic"]) == 2


class TestConvergence:
    def test_count_shorthand_runs_levels_from_zero(self, tmp_path, capsys):
        out = tmp_path / "rep.json"
        code = run(["convergence", "--problem", "franke", "--levels", "3",
                    "--report", str(out)])
        assert code == 0
        captured = capsys.readouterr()
        assert "slope" in captured.out
        from dcpse import read_report

        doc = read_report(out)
        assert [e["level"] for e in doc["levels"]] == [0, 1, 2]
        assert set(doc["slopes"]) == {"du_dx", "du_dy"}
        assert doc["slopes"]["du_dx"] > 1.0

    def test_explicit_level_list(self, capsys):
        code = run(["convergence", "--problem", "franke", "--levels", "0,1,2"])
        assert code == 0
        assert "slope" in capsys.readouterr().out

    def test_fewer_than_three_levels_rejected(self, capsys):
        assert run(["convergence", "--problem", "franke", "--levels", "0,1"]) == 2
        assert "three" in capsys.readouterr().err

    def test_malformed_levels(self):
        assert run(["convergence", "--problem", "franke", "--levels", "a,b"]) == 2

    def test_exclude_coarsest_flag(self, tmp_path):
        out = tmp_path / "rep.json"
        assert run(["convergence", "--problem", "franke", "--levels", "0,1,2",
                    "--exclude-coarsest", "--report", str(out)]) == 0
        from dcpse import read_report

        assert read_report(out)["fit_levels"] == [1, 2]


class TestDeterminism:
    def test_repeated_invocations_byte_identical(self, tmp_path, capsys):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        args = ["benchmark", "--problem", "franke", "--level", "1",
                "--kind", "jittered", "--seed", "4", "--report"]
        assert run(args + [str(p1)]) == 0
        assert run(args + [str(p2)]) == 0
        assert p1.read_bytes() == p2.read_bytes()

    def test_thread_env_override(self, tmp_path, monkeypatch, capsys):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        args = ["benchmark", "--problem", "franke", "--level", "1", "--report"]
        monkeypatch.setenv("DCPSE_THREADS", "1")
        assert run(args + [str(p1)]) == 0
        monkeypatch.setenv("DCPSE_THREADS", "4")
        assert run(args + [str(p2)]) == 0
        assert p1.read_bytes() == p2.read_bytes()

    def test_derive_outputs_byte_identical(self, tmp_path, quad_csv, capsys):
        path, _ = quad_csv
        o1, o2 = tmp_path / "o1.csv", tmp_path / "o2.csv"
        base = ["derive", "--input", path, "--field", "f", "--alpha", "1,1"]
        assert run(base + ["--output", str(o1)]) == 0
        assert run(base + ["--output", str(o2), "--threads", "3"]) == 0
        assert o1.read_bytes() == o2.read_bytes()
