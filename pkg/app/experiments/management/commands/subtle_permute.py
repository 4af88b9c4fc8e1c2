from app.experiments.management.base import ExperimentCommand
from app.experiments.workflows import run_permutations


class Command(ExperimentCommand):
    help = (
        "Reruns the sequential test on outcome-permuted copies of a CSV file "
        "and reports the rejection fraction"
    )
    default_reps = 200

    def add_command_arguments(self, parser):
        parser.add_argument("input_csv")

    def run(self, cfg, options):
        seed = options["seed"] if options["seed"] is not None else cfg.seed
        report, path = run_permutations(
            options["input_csv"],
            cfg,
            options["reps"],
            seed,
            self.out_dir(options),
            n_jobs=options["jobs"],
        )
        self.stdout.write(
            f"{sum(report.rejections)} of {report.n_perm} permutations "
            f"rejected ({report.rejection_fraction:.3f})"
        )
        self.stdout.write(f"report: {path}")
