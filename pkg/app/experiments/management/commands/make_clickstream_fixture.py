from app.errors.handlers import command_errors
from app.experiments.fixtures import (
    FIXTURE_SEED,
    FixtureKind,
    write_clickstream_fixture,
)
from django.core.management.base import BaseCommand


class Command(BaseCommand):
    help = "Writes the synthetic clickstream train and test CSV files"

    def add_arguments(self, parser):
        parser.add_argument("out_dir")
        parser.add_argument(
            "--kind",
            choices=[str(kind) for kind in FixtureKind],
            default=str(FixtureKind.PLANTED),
        )
        parser.add_argument("--n-train", type=int, default=30000)
        parser.add_argument("--n-test", type=int, default=20000)
        parser.add_argument("--seed", type=int, default=FIXTURE_SEED)

    def handle(self, *args, **options):
        with command_errors():
            files = write_clickstream_fixture(
                options["out_dir"],
                kind=options["kind"],
                n_train=options["n_train"],
                n_test=options["n_test"],
                seed=options["seed"],
            )
        self.stdout.write(f"train: {files.train}")
        self.stdout.write(f"test: {files.test}")
