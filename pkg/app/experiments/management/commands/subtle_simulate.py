from app.core.config import Profile
from app.experiments.management.base import (
    ExperimentCommand,
    float_list,
    int_list,
)
from app.experiments.workflows import run_simulation
from app.simgen.models import C_GRID, SimModelId


class Command(ExperimentCommand):
    help = (
        "Estimates rejection rate and stopping times of one simulation model "
        "over replicated streams"
    )
    profile = Profile.SIMULATION
    default_reps = 200

    def add_command_arguments(self, parser):
        parser.add_argument(
            "model", choices=[str(model) for model in SimModelId]
        )
        parser.add_argument(
            "c",
            type=float,
            nargs="?",
            default=None,
            help="effect intensity; omit to run the standard grid",
        )
        parser.add_argument(
            "--tau2",
            type=float_list,
            default=[],
            help="comma-separated mixture variances, one cell each",
        )
        parser.add_argument(
            "--noise-triples",
            type=int_list,
            default=[0],
            help="comma-separated noise triple counts, one cell each",
        )
        parser.add_argument("--fixed-k", type=int, default=None)
        parser.add_argument(
            "--fixed-reference",
            action="store_true",
            help="add the fixed-horizon sample size matching the power",
        )

    def run(self, cfg, options):
        seed = options["seed"] if options["seed"] is not None else cfg.seed
        intensities = C_GRID if options["c"] is None else (options["c"],)
        paths = []
        for c in intensities:
            paths += run_simulation(
                options["model"],
                c,
                cfg,
                options["reps"],
                options["engine"],
                self.out_dir(options),
                master_seed=seed,
                n_jobs=options["jobs"],
                tau2_values=options["tau2"],
                noise_triples=options["noise_triples"],
                fixed_k=options["fixed_k"],
                with_reference=options["fixed_reference"],
            )
        for path in paths:
            self.stdout.write(f"report: {path}")
