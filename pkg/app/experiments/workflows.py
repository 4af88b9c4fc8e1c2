"""The command workflows: single test runs, A/A and permutation checks,
hold-out evaluation of the identified subgroup, and simulation cells."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from app.aipw.contrast import ipw_value
from app.baselines.fixed_horizon import run_fixed_horizon
from app.core.config import TestConfig
from app.core.exceptions import NumericalError, ValidationError
from app.core.models import ObservationFrame, StreamSchema
from app.lib.parallel import parallel_map
from app.lib.seeding import make_rng
from app.nuisance.models import estimate_propensity, estimate_theta
from app.sequential.engine import is_finite_log, run_stream
from app.sequential.subgroup import extract_subgroup
from app.simgen.models import SimModel
from app.simgen.runner import (
    Engine,
    fixed_horizon_reference,
    matching_power,
    run_msprt_stream,
    run_replications,
    stopping_histogram,
)

from . import io

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvaluationBlock:
    """Hold-out comparison of the identified subgroup with everyone.

    `subgroup_effect` is None when no test row falls in the subgroup or the
    subgroup misses an arm."""

    overall_effect: float
    subgroup_effect: float | None
    subgroup_size: int
    ipw_all_control: float
    ipw_estimated_rule: float
    rule_text: str

    def as_dict(self) -> dict:
        return {
            "overall_effect": self.overall_effect,
            "subgroup_effect": self.subgroup_effect,
            "subgroup_size": self.subgroup_size,
            "ipw_all_control": self.ipw_all_control,
            "ipw_estimated_rule": self.ipw_estimated_rule,
            "rule_text": self.rule_text,
        }


@dataclass(frozen=True)
class RunReport:
    config: dict
    engine: str
    verdict: str
    stop_sample_size: int
    k_stop: int
    stream_exhausted: bool = False
    max_lambda: float | None = None
    batch_log_path: str | None = None
    rule_text: str | None = None
    rule_tree: dict | None = None
    fraction_beneficial: float | None = None
    discarded_rows: int = 0
    evaluation: EvaluationBlock | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        data = {
            "config": self.config,
            "engine": self.engine,
            "verdict": self.verdict,
            "stop_sample_size": self.stop_sample_size,
            "k_stop": self.k_stop,
            "stream_exhausted": self.stream_exhausted,
            "max_lambda": self.max_lambda,
            "batch_log": self.batch_log_path,
            "rule_text": self.rule_text,
            "rule_tree": self.rule_tree,
            "fraction_beneficial": self.fraction_beneficial,
            "discarded_rows": self.discarded_rows,
            **self.extra,
        }
        if self.evaluation is not None:
            data["evaluation"] = self.evaluation.as_dict()
        return data


def run_frame(
    frame: ObservationFrame,
    schema: StreamSchema,
    cfg: TestConfig,
    out_dir: str | Path,
    engine: Engine | str = Engine.SUBTLE,
    fixed_k: int | None = None,
    n_jobs: int | None = 1,
    name: str = "test",
) -> tuple[RunReport, Path]:
    """Streams `frame` in row order through one engine and writes
    `<name>_report.json` (and `<name>_batches.csv` for SUBTLE)."""
    engine = Engine(engine)
    out_dir = Path(out_dir)
    if engine == Engine.SUBTLE:
        result = run_stream(frame, cfg, schema, n_jobs=n_jobs)
        if not is_finite_log(result.per_batch_log):
            raise NumericalError("batch log holds a non-finite value")
        log_path = io.write_batch_log(
            out_dir / f"{name}_batches.csv", result.per_batch_log
        )
        subgroup = result.subgroup
        report = RunReport(
            config=cfg.as_dict(),
            engine=str(engine),
            verdict=str(result.verdict.decision),
            stop_sample_size=result.verdict.stop_sample_size,
            k_stop=result.verdict.k_stop,
            stream_exhausted=result.stream_exhausted,
            max_lambda=result.state.max_lambda,
            batch_log_path=str(log_path),
            rule_text=subgroup.rule_text if subgroup else None,
            rule_tree=subgroup.as_dict()["rule_tree"] if subgroup else None,
            fraction_beneficial=(
                subgroup.fraction_beneficial if subgroup else None
            ),
            discarded_rows=result.discarded_rows,
        )
    elif engine == Engine.MSPRT:
        verdict, max_lambda = run_msprt_stream(frame, cfg)
        report = RunReport(
            config=cfg.as_dict(),
            engine=str(engine),
            verdict=str(verdict.decision),
            stop_sample_size=verdict.stop_sample_size,
            k_stop=verdict.k_stop,
            max_lambda=max_lambda,
        )
    else:
        if fixed_k is None or fixed_k < 1:
            raise ValidationError("the fixed-horizon engine needs fixed_k >= 1")
        verdict = run_fixed_horizon(frame, cfg, fixed_k)
        report = RunReport(
            config=cfg.as_dict(),
            engine=str(engine),
            verdict=str(verdict.decision),
            stop_sample_size=verdict.stop_sample_size,
            k_stop=verdict.k_stop,
            extra={"fixed_k": fixed_k},
        )
    path = io.write_json(out_dir / f"{name}_report.json", report.as_dict())
    logger.info(f"{engine} verdict {report.verdict}, report at {path}")
    return report, path


def run_test(
    input_csv: str | Path,
    cfg: TestConfig,
    out_dir: str | Path,
    engine: Engine | str = Engine.SUBTLE,
    fixed_k: int | None = None,
    n_jobs: int | None = 1,
) -> tuple[RunReport, Path]:
    frame, schema = io.read_stream_csv(input_csv, cfg.link)
    return run_frame(
        frame, schema, cfg, out_dir, engine, fixed_k, n_jobs, name="test"
    )


def fake_treatments(n: int, seed: int) -> np.ndarray:
    return make_rng(seed, 0).binomial(1, 0.5, n)


def run_aa_test(
    input_csv: str | Path,
    cfg: TestConfig,
    seed: int,
    out_dir: str | Path,
    n_jobs: int | None = 1,
) -> tuple[RunReport, Path]:
    """Runs the test with the treatment column replaced by Ber(0.5) draws."""
    frame, schema = io.read_stream_csv(
        input_csv, cfg.link, require_treatment=False
    )
    frame = frame.with_treatments(fake_treatments(frame.n, seed))
    return run_frame(
        frame, schema, cfg, out_dir, n_jobs=n_jobs, name=f"aa_{seed}"
    )


def permuted_outcomes(frame: ObservationFrame, seed: int, index: int):
    """Shuffles y only; treatments and covariates keep their rows."""
    order = make_rng(seed, index).permutation(frame.n)
    return frame.with_outcomes(frame.y[order])


@dataclass(frozen=True)
class _PermutationTask:
    frame: ObservationFrame
    cfg: TestConfig
    seed: int
    index: int


def _run_permutation(task: _PermutationTask) -> bool:
    frame = permuted_outcomes(task.frame, task.seed, task.index)
    result = run_stream(frame, task.cfg, n_jobs=1, with_subgroup=False)
    return result.verdict.rejected


@dataclass(frozen=True)
class PermutationReport:
    n_perm: int
    seed: int
    rejections: tuple[bool, ...]
    config: dict

    @property
    def rejection_fraction(self) -> float:
        return sum(self.rejections) / self.n_perm

    @property
    def rejection_se(self) -> float:
        rate = self.rejection_fraction
        return math.sqrt(rate * (1.0 - rate) / self.n_perm)

    def as_dict(self) -> dict:
        return {
            "n_perm": self.n_perm,
            "seed": self.seed,
            "rejections": list(self.rejections),
            "rejection_fraction": self.rejection_fraction,
            "rejection_se": self.rejection_se,
            "config": self.config,
        }


def run_permutations(
    input_csv: str | Path,
    cfg: TestConfig,
    n_perm: int,
    seed: int,
    out_dir: str | Path,
    n_jobs: int | None = None,
) -> tuple[PermutationReport, Path]:
    """Estimates the false-positive rate by rerunning the full test on
    outcome-permuted copies of the data."""
    if n_perm < 1:
        raise ValidationError("n_perm must be at least 1")
    frame, _ = io.read_stream_csv(input_csv, cfg.link)
    tasks = [_PermutationTask(frame, cfg, seed, i) for i in range(n_perm)]
    rejections = parallel_map(_run_permutation, tasks, n_jobs=n_jobs)
    report = PermutationReport(
        n_perm=n_perm,
        seed=seed,
        rejections=tuple(bool(r) for r in rejections),
        config=cfg.as_dict(),
    )
    path = io.write_json(
        Path(out_dir) / "permutation_report.json", report.as_dict()
    )
    logger.info(
        f"{sum(report.rejections)} of {n_perm} permutations rejected, "
        f"report at {path}"
    )
    return report, path


def arm_difference(frame: ObservationFrame) -> float | None:
    """mean(y | a=1) - mean(y | a=0); None when an arm is empty."""
    n_control, n_treated = frame.arm_counts()
    if n_control == 0 or n_treated == 0:
        return None
    return float(frame.arm(1).y.mean() - frame.arm(0).y.mean())


def evaluate_subgroup(
    train: ObservationFrame,
    test: ObservationFrame,
    cfg: TestConfig,
    names=None,
    n_jobs: int | None = 1,
) -> EvaluationBlock:
    """Fits theta_hat on `train` and compares, on `test`, the treatment effect
    inside {theta_hat > 0} with the overall one, plus the IPW values of
    treating nobody and of the estimated rule."""
    subgroup = extract_subgroup(train, cfg, names=names, n_jobs=n_jobs)
    model = subgroup.theta_model
    inside = estimate_theta(model, test.X) > 0
    overall = arm_difference(test)
    if overall is None:
        raise ValidationError("the evaluation data must contain both arms")
    p_hat = estimate_propensity(test.a)

    def estimated_rule(X):
        return (estimate_theta(model, X) > 0).astype(np.int64)

    def all_control(X):
        return np.zeros(X.shape[0], dtype=np.int64)

    return EvaluationBlock(
        overall_effect=overall,
        subgroup_effect=arm_difference(test.take(inside)),
        subgroup_size=int(inside.sum()),
        ipw_all_control=ipw_value(test, all_control, p_hat),
        ipw_estimated_rule=ipw_value(test, estimated_rule, p_hat),
        rule_text=subgroup.rule_text,
    )


def run_evaluation(
    train_csv: str | Path,
    test_csv: str | Path,
    cfg: TestConfig,
    out_dir: str | Path,
    n_jobs: int | None = 1,
) -> tuple[EvaluationBlock, Path]:
    train, train_schema = io.read_stream_csv(train_csv, cfg.link)
    test, test_schema = io.read_stream_csv(test_csv, cfg.link)
    if train_schema.covariate_names != test_schema.covariate_names:
        raise ValidationError("train and test files have different covariates")
    block = evaluate_subgroup(
        train, test, cfg, names=train_schema.covariate_names, n_jobs=n_jobs
    )
    path = io.write_json(
        Path(out_dir) / "evaluation_report.json",
        {"config": cfg.as_dict(), "evaluation": block.as_dict()},
    )
    return block, path


def cell_name(model: SimModel, tau2: float, engine: Engine) -> str:
    return (
        f"model-{model.id}_c-{model.c:g}_noise-{model.n_noise // 3}"
        f"_tau2-{tau2:g}_{engine}"
    )


def run_simulation_cell(
    model: SimModel,
    cfg: TestConfig,
    n_reps: int,
    engine: Engine | str,
    out_dir: str | Path,
    master_seed: int = 0,
    n_jobs: int | None = None,
    fixed_k: int | None = None,
    with_reference: bool = False,
) -> Path:
    """One simulation cell: report JSON, replicate rows CSV and the
    stopping-time histogram CSV."""
    engine = Engine(engine)
    report = run_replications(
        model, cfg, n_reps, engine, n_jobs, master_seed, fixed_k
    )
    out_dir = Path(out_dir)
    name = cell_name(model, cfg.tau2, engine)
    io.write_replicate_rows(out_dir / f"{name}_replicates.csv", report.rows)
    io.write_histogram(
        out_dir / f"{name}_stopping.csv", stopping_histogram(report.stop_sizes)
    )
    extra = {}
    if with_reference:
        reference = fixed_horizon_reference(
            model,
            cfg,
            matching_power(report),
            n_jobs=n_jobs,
            master_seed=master_seed,
        )
        extra["fixed_horizon"] = reference.as_dict()
    report = replace(report, extra=extra)
    return io.write_json(out_dir / f"{name}.json", report.to_dict())


def run_simulation(
    model_id: str,
    c: float,
    cfg: TestConfig,
    n_reps: int,
    engine: Engine | str,
    out_dir: str | Path,
    master_seed: int = 0,
    n_jobs: int | None = None,
    tau2_values=(),
    noise_triples=(0,),
    fixed_k: int | None = None,
    with_reference: bool = False,
) -> list[Path]:
    """Runs one cell per (noise level, tau2) combination."""
    paths = []
    for triples in noise_triples:
        model = SimModel.create(model_id, c, noise_triples=triples)
        for tau2 in tau2_values or (cfg.tau2,):
            paths.append(
                run_simulation_cell(
                    model,
                    replace(cfg, tau2=tau2),
                    n_reps,
                    engine,
                    out_dir,
                    master_seed=master_seed,
                    n_jobs=n_jobs,
                    fixed_k=fixed_k,
                    with_reference=with_reference,
                )
            )
    return paths
