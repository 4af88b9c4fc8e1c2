from app.experiments.management.base import ExperimentCommand
from app.experiments.workflows import run_evaluation


class Command(ExperimentCommand):
    help = (
        "Fits the subgroup on a training CSV and compares its treatment "
        "effect with the overall one on a test CSV"
    )

    def add_command_arguments(self, parser):
        parser.add_argument("train_csv")
        parser.add_argument("test_csv")

    def run(self, cfg, options):
        block, path = run_evaluation(
            options["train_csv"],
            options["test_csv"],
            cfg,
            self.out_dir(options),
            n_jobs=options["jobs"],
        )
        subgroup = (
            "undefined"
            if block.subgroup_effect is None
            else f"{block.subgroup_effect:.4f}"
        )
        self.stdout.write(f"subgroup: {block.rule_text}")
        self.stdout.write(
            f"overall effect {block.overall_effect:.4f}, "
            f"subgroup effect {subgroup}"
        )
        self.stdout.write(
            f"IPW value all-control {block.ipw_all_control:.4f}, "
            f"estimated rule {block.ipw_estimated_rule:.4f}"
        )
        self.stdout.write(f"report: {path}")
