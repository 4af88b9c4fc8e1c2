import json
import tempfile
from io import StringIO
from pathlib import Path

from app.experiments.io import read_json
from app.simgen.models import C_GRID
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from test.utils import silence_logger

SMALL_CONFIG = {
    "m": 20,
    "l": 100,
    "M": 300,
    "forest": {"n_trees": 5, "min_leaf": 5},
}


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.config = self.write_config(SMALL_CONFIG)

    def tearDown(self):
        self.tmp.cleanup()

    def write_config(self, data, name="config.json") -> Path:
        path = self.dir / name
        path.write_text(json.dumps(data))
        return path

    def write_fixture(self, kind="planted"):
        call_command(
            "make_clickstream_fixture",
            str(self.dir / "data"),
            "--kind",
            kind,
            "--n-train",
            "400",
            "--n-test",
            "200",
            stdout=StringIO(),
        )
        return (
            self.dir / "data" / f"{kind}_train.csv",
            self.dir / "data" / f"{kind}_test.csv",
        )

    def call(self, name, *args, config=None) -> str:
        out = StringIO()
        call_command(
            name,
            *[str(arg) for arg in args],
            "--config",
            str(config or self.config),
            "--out-dir",
            str(self.dir / "out"),
            "--jobs",
            "1",
            stdout=out,
        )
        return out.getvalue()

    def assertExitCode(self, code, message, name, *args, **kwargs):
        with self.assertRaisesMessage(CommandError, message) as cm:
            self.call(name, *args, **kwargs)
        self.assertEqual(cm.exception.returncode, code)


class TestMakeClickstreamFixture(CommandTestCase):
    def test_writes_both_files(self):
        out = StringIO()
        call_command(
            "make_clickstream_fixture",
            str(self.dir),
            "--kind",
            "null",
            "--n-train",
            "50",
            "--n-test",
            "20",
            stdout=out,
        )
        self.assertIn(f"train: {self.dir / 'null_train.csv'}", out.getvalue())
        lines = (self.dir / "null_test.csv").read_text().splitlines()
        self.assertEqual(lines[0], "y,a,x1,x2,x3,x4")
        self.assertEqual(len(lines), 21)


class TestSubtleTest(CommandTestCase):
    def test_writes_report(self):
        train, _ = self.write_fixture()
        out = self.call("subtle_test", train)
        self.assertIn("report:", out)
        report = read_json(self.dir / "out" / "test_report.json")
        self.assertEqual(report["config"]["M"], 300)
        self.assertEqual(report["engine"], "subtle")
        self.assertIn(report["verdict"], ("reject", "accept_at_failure_time"))
        self.assertTrue((self.dir / "out" / "test_batches.csv").exists())

    def test_msprt_engine(self):
        train, _ = self.write_fixture()
        self.call("subtle_test", train, "--engine", "msprt")
        report = read_json(self.dir / "out" / "test_report.json")
        self.assertEqual(report["engine"], "msprt")

    def test_omitted_intensity_runs_the_grid(self):
        out = self.call(
            "subtle_simulate", "I", "--engine", "msprt", "--reps", "1"
        )
        self.assertEqual(out.count("report:"), len(C_GRID))

    @silence_logger("app.errors.handlers")
    def test_malformed_row(self):
        path = self.dir / "bad.csv"
        path.write_text("y,a,x1\n1,0,0\n0,1,0\nq,1,0\n")
        self.assertExitCode(1, "row 3", "subtle_test", path)

    @silence_logger("app.errors.handlers")
    def test_missing_and_empty_files(self):
        self.assertExitCode(1, "", "subtle_test", self.dir / "missing.csv")
        empty = self.dir / "empty.csv"
        empty.write_text("")
        self.assertExitCode(1, "is empty", "subtle_test", empty)

    @silence_logger("app.errors.handlers")
    def test_fixed_engine_needs_k(self):
        train, _ = self.write_fixture()
        self.assertExitCode(
            1, "fixed_k", "subtle_test", train, "--engine", "fixed"
        )

    @silence_logger("app.errors.handlers")
    def test_unknown_config_key(self):
        config = self.write_config({"gamma": 1}, name="bad.json")
        self.assertExitCode(
            1,
            "unknown configuration keys: gamma",
            "subtle_test",
            self.dir / "unused.csv",
            config=config,
        )

    @silence_logger("app.errors.handlers")
    def test_too_short_stream(self):
        path = self.dir / "short.csv"
        path.write_text("y,a,x1\n" + "1,0,0\n0,1,1\n" * 10)
        self.assertExitCode(1, "needs l=100", "subtle_test", path)


class TestSubtleAaTest(CommandTestCase):
    def test_same_seed_same_report(self):
        train, _ = self.write_fixture("single_arm")
        report = self.dir / "out" / "aa_5_report.json"
        self.call("subtle_aa_test", train, "--seed", "5")
        first = report.read_text()
        self.call("subtle_aa_test", train, "--seed", "5")
        self.assertEqual(report.read_text(), first)
        self.assertEqual(json.loads(first)["config"]["seed"], 5)


class TestSubtlePermute(CommandTestCase):
    def test_reports_fraction(self):
        train, _ = self.write_fixture("null")
        out = self.call("subtle_permute", train, "--reps", "2", "--seed", "1")
        self.assertIn("of 2 permutations rejected", out)
        report = read_json(self.dir / "out" / "permutation_report.json")
        self.assertEqual(len(report["rejections"]), 2)


class TestSubtleEvaluate(CommandTestCase):
    def test_reports_both_effects(self):
        train, test = self.write_fixture()
        out = self.call("subtle_evaluate", train, test)
        self.assertIn("subgroup: ", out)
        self.assertIn("overall effect", out)
        report = read_json(self.dir / "out" / "evaluation_report.json")
        self.assertEqual(
            set(report["evaluation"]),
            {
                "overall_effect",
                "subgroup_effect",
                "subgroup_size",
                "ipw_all_control",
                "ipw_estimated_rule",
                "rule_text",
            },
        )


class TestSubtleSimulate(CommandTestCase):
    def test_one_report_per_tau2(self):
        out = self.call(
            "subtle_simulate",
            "I",
            "0",
            "--engine",
            "msprt",
            "--reps",
            "2",
            "--tau2",
            "0.5,1",
        )
        self.assertEqual(out.count("report:"), 2)
        report = read_json(
            self.dir / "out" / "model-I_c-0_noise-0_tau2-1_msprt.json"
        )
        self.assertEqual(report["n_reps"], 2)
        self.assertEqual(report["engine"], "msprt")

    @silence_logger("app.errors.handlers")
    def test_invalid_model(self):
        with self.assertRaises(CommandError):
            self.call("subtle_simulate", "VI", "0")
