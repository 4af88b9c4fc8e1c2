from pathlib import Path

from app.core.config import Profile, TestConfig
from app.errors.handlers import command_errors
from app.simgen.runner import Engine
from django.conf import settings
from django.core.management.base import BaseCommand


def int_list(value: str) -> list[int]:
    return [int(item) for item in value.split(",") if item.strip()]


def float_list(value: str) -> list[float]:
    return [float(item) for item in value.split(",") if item.strip()]


class ExperimentCommand(BaseCommand):
    """Shared flags and error handling of the experiment commands.

    Subclasses implement `run(cfg, options)`; domain errors become
    CommandError with exit code 1 (input) or 2 (numeric or internal)."""

    profile = Profile.DATA
    default_reps = 1

    def add_arguments(self, parser):
        parser.add_argument(
            "--config", help="JSON file with test constants", default=None
        )
        parser.add_argument(
            "--seed", type=int, default=None, help="master seed"
        )
        parser.add_argument("--reps", type=int, default=self.default_reps)
        parser.add_argument(
            "--engine",
            choices=[str(engine) for engine in Engine],
            default=str(Engine.SUBTLE),
        )
        parser.add_argument(
            "--out-dir", default=None, help="where artifacts are written"
        )
        parser.add_argument(
            "--jobs", type=int, default=None, help="joblib worker count"
        )
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def load_config(self, options) -> TestConfig:
        cfg = TestConfig.from_file(options["config"], self.profile)
        if options["seed"] is not None:
            cfg = cfg.with_seed(options["seed"])
        return cfg

    def out_dir(self, options) -> Path:
        return Path(options["out_dir"] or settings.SUBTLE_OUT_DIR)

    def handle(self, *args, **options):
        with command_errors():
            self.run(self.load_config(options), options)

    def run(self, cfg: TestConfig, options):
        raise NotImplementedError
