"""Tests for the benchmark command line, its output files and the check suites."""
import csv
import io
import json

from bench_cli.api import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, EXIT_VERIFICATION, main, parse_invocation
from bench_cli.output import RESULT_COLUMNS, flagged_points, render_value, write_table
from bench_cli.scale import ScaleBenchmark, ScalePoint
from bench_cli.verify import VerificationSuite
from simkit.monte_carlo import ResultRecord

SMALL_BENCH = ["--trials", "2", "--snr", "10:20:10", "--algos", "omapfg,omp,lse,slse"]


def _split(text):
    header = [line for line in text.splitlines() if line.startswith("# ")]
    rows = list(csv.reader(line for line in text.splitlines() if not line.startswith("#")))
    return header, rows


class TestRenderValue:
    """Cell formatting."""

    def test_floats_keep_seventeen_digits(self):
        assert render_value(0.1) == "0.10000000000000001"
        assert float(render_value(1.0 / 3.0)) == 1.0 / 3.0

    def test_special_values(self):
        assert render_value(float("nan")) == "nan"
        assert render_value(True) == "true"
        assert render_value(False) == "false"
        assert render_value(7) == "7"


class TestWriteTable:
    """CSV and JSON result documents."""

    def _record(self, **changes):
        values = dict(algorithm="lse", snr_db=10.0, mse=0.5, nmse=0.1, crb_s=0.2, crb_us=0.4,
                      mean_iterations=0.0, failures=0, wall_time_s=0.0, trials=10)
        values.update(changes)
        return ResultRecord(**values)

    def test_csv_layout(self):
        stream = io.StringIO()
        write_table(stream, "csv", {"command": "bench", "config": {"M": 30}}, RESULT_COLUMNS, [self._record()])
        header, rows = _split(stream.getvalue())
        assert header == ["# command: bench", '# config: {"M":30}']
        assert rows[0] == list(RESULT_COLUMNS)
        assert rows[1] == ["lse", "10", "0.5", "0.10000000000000001", "0.20000000000000001",
                           "0.40000000000000002", "0", "0", "0"]

    def test_json_layout(self):
        stream = io.StringIO()
        write_table(stream, "json", {"command": "bench"}, RESULT_COLUMNS, [self._record()],
                    extras={"timing_summary": {"lse": 0.0}})
        document = json.loads(stream.getvalue())
        assert document["header"] == {"command": "bench"}
        assert document["records"][0]["algorithm"] == "lse"
        assert document["records"][0]["failures"] == 0
        assert document["timing_summary"] == {"lse": 0.0}

    def test_flagged_points(self):
        records = [self._record(), self._record(algorithm="omp", snr_db=20.0, flagged=True)]
        assert flagged_points(records) == ["omp@20"]


class TestInvocation:
    """Flag parsing."""

    def test_overrides_are_collected(self):
        invocation = parse_invocation(["bench", "--M", "20", "--max-iter", "7", "--no-timing", "-v"])
        assert invocation.overrides == {"M": "20", "max_iter": "7", "timing": False}
        assert invocation.verbosity == 1
        config = invocation.load_config()
        assert config.M == 20 and config.max_iter == 7 and config.timing is False

    def test_flags_override_config_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# sweep\nM = 24\ntrials = 3\n", encoding="utf-8")
        config = parse_invocation(["bench", "--config", str(path), "--trials", "5"]).load_config()
        assert config.M == 24
        assert config.trials == 5


class TestMain:
    """Exit codes and files written by each subcommand."""

    def test_bench_writes_results(self, tmp_path):
        out = tmp_path / "results.csv"
        assert main(["bench", "--out", str(out), "--no-timing", "--seed", "5"] + SMALL_BENCH) == EXIT_OK
        header, rows = _split(out.read_text(encoding="utf-8"))
        assert "# command: bench" in header
        assert "# seed: 5" in header
        assert "# flagged: none" in header
        assert any(line.startswith("# snr_definition: ") for line in header)
        assert rows[0] == list(RESULT_COLUMNS)
        assert [(row[0], row[1]) for row in rows[1:]] == [
            ("omapfg", "10"), ("omp", "10"), ("lse", "10"), ("slse", "10"),
            ("omapfg", "20"), ("omp", "20"), ("lse", "20"), ("slse", "20"),
        ]
        assert all(row[-1] == "0" for row in rows[1:])

    def test_reruns_without_timing_are_byte_identical(self, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["bench", "--out", str(first), "--no-timing"] + SMALL_BENCH) == EXIT_OK
        assert main(["bench", "--out", str(second), "--no-timing"] + SMALL_BENCH) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_json_bench(self, tmp_path):
        out = tmp_path / "results.json"
        assert main(["bench", "--format", "json", "--out", str(out)] + SMALL_BENCH) == EXIT_OK
        document = json.loads(out.read_text(encoding="utf-8"))
        assert len(document["records"]) == 8
        assert set(document["timing_summary"]) == {"omapfg", "omp", "lse", "slse"}
        assert document["header"]["config"]["trials"] == 2

    def test_bench_to_stdout(self, capsys):
        assert main(["bench", "--trials", "1", "--snr", "10", "--algos", "lse", "--no-timing"]) == EXIT_OK
        header, rows = _split(capsys.readouterr().out)
        assert rows[1][0] == "lse"

    def test_invalid_override_is_a_config_error(self, tmp_path):
        assert main(["bench", "--K", "40", "--out", str(tmp_path / "x.csv")]) == EXIT_CONFIG

    def test_unknown_config_key_is_a_config_error(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("window = 4\n", encoding="utf-8")
        assert main(["bench", "--config", str(path), "--out", str(tmp_path / "x.csv")]) == EXIT_CONFIG

    def test_missing_config_file_is_a_config_error(self, tmp_path):
        assert main(["bench", "--config", str(tmp_path / "absent.cfg")]) == EXIT_CONFIG

    def test_unwritable_output_is_a_runtime_error(self, tmp_path):
        out = tmp_path / "missing" / "results.csv"
        assert main(["bench", "--out", str(out), "--trials", "1", "--snr", "10", "--algos", "lse"]) == EXIT_RUNTIME

    def test_verify_passes(self, tmp_path):
        out = tmp_path / "verify.csv"
        assert main(["verify", "--out", str(out)]) == EXIT_OK
        _, rows = _split(out.read_text(encoding="utf-8"))
        assert rows[0] == ["check", "passed", "detail"]
        assert all(row[1] == "true" for row in rows[1:])

    def test_injected_off_band_entry_fails_verification(self, tmp_path):
        out = tmp_path / "verify.csv"
        assert main(["verify", "--inject-offband", "--out", str(out)]) == EXIT_VERIFICATION
        _, rows = _split(out.read_text(encoding="utf-8"))
        failed = [row[0] for row in rows[1:] if row[1] == "false"]
        assert failed == ["bandedness"]

    def test_demo(self, tmp_path):
        out = tmp_path / "demo.csv"
        assert main(["demo", "--snr", "20", "--out", str(out)]) == EXIT_OK
        header, rows = _split(out.read_text(encoding="utf-8"))
        assert [row[0] for row in rows[1:]] == ["truth", "omapfg", "omp", "lse", "slse"]
        assert any(line.startswith("# crb_s: ") for line in header)


class TestVerificationSuite:
    """Individual property checks."""

    def test_all_checks_pass(self):
        results = VerificationSuite(seed=3, instances=20).run()
        assert [r.check for r in results if not r.passed] == []

    def test_injection_only_breaks_bandedness(self):
        results = VerificationSuite(seed=3, instances=20, inject_offband=True).run()
        assert [r.check for r in results if not r.passed] == ["bandedness"]

    def test_instances_are_generated_once_per_salt(self):
        suite = VerificationSuite(seed=3, instances=5, inject_offband=True)
        first = suite._instances(3)
        assert suite._instances(3) is first
        assert suite._instances(4) is not first
        suite.run()
        assert suite._instances(3) is first
        for instance in first:
            instance.q.validate()


class TestScaleBenchmark:
    """Operation counts and scaling criteria."""

    def test_measured_operation_counts(self):
        benchmark = ScaleBenchmark(runs=1, fixed_M=16, memory_sweep=(8, 16), length_sweep=(2, 3))
        points = benchmark.run()
        assert [(p.section, p.M, p.L, p.operations) for p in points] == [
            ("memory", 8, 4, 128), ("memory", 16, 4, 256), ("length", 16, 2, 64), ("length", 16, 3, 128),
        ]
        assert [p.states for p in points] == [8, 8, 2, 4]

    def test_criteria_hold_for_linear_points(self):
        points = [
            ScalePoint("memory", 64, 4, 8, 1024, 1.0e-3),
            ScalePoint("memory", 128, 4, 8, 2048, 2.1e-3),
            ScalePoint("length", 128, 2, 2, 512, 1.0e-3),
            ScalePoint("length", 128, 3, 4, 1024, 2.0e-3),
        ]
        assert ScaleBenchmark().failures(points) == []

    def test_slow_doubling_is_reported(self):
        points = [
            ScalePoint("memory", 64, 4, 8, 1024, 1.0e-3),
            ScalePoint("memory", 128, 4, 8, 2048, 3.0e-3),
        ]
        problems = ScaleBenchmark().failures(points)
        assert len(problems) == 1
        assert "time ratio" in problems[0]

    def test_wrong_operation_count_is_reported(self):
        points = [ScalePoint("memory", 64, 4, 8, 1000, 1.0e-3)]
        assert "expected 1024" in ScaleBenchmark().failures(points)[0]
