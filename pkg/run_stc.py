"""Self-triggered control reproduction driver.

    python run_stc.py certify  --config=configs/example1.py --out=out/example1
    python run_stc.py simulate --config=configs/example2.py --bank=out/example2/bank.json
    python run_stc.py bench    --config=configs/example2.py --out=out/example2
    python run_stc.py surface  --config=configs/example1.py
"""

import os
from typing import Optional

import numpy as np
from absl import app, flags, logging
from ml_collections import config_flags
from tensorboardX import SummaryWriter

import common
import experiments
import trajectory_utils
from certificates.bank import CertificateBank, load_bank, save_bank
from certificates.embeddings import get_embedding_builder
from certificates.verification import verify_bank
from dynamics.systems import get_system
from evaluation import all_passed, summarize
from mati import mati_surface

FLAGS = flags.FLAGS

flags.DEFINE_string("out", "./out", "Output directory.")
flags.DEFINE_string("bank", None, "Certificate bank JSON (written by certify).")
flags.DEFINE_integer("seed", 0, "Seed of the Monte-Carlo certificate verification.")
flags.DEFINE_float("dt", None, "Integration step; default min(1e-3, t_min / 50).")
flags.DEFINE_string("logdir", None, "Tensorboard logging dir.")
flags.DEFINE_boolean("tune_p", False, "Search a 2x2 P before certification.")
flags.DEFINE_boolean("progress", True, "Show tqdm progress bars.")
config_flags.DEFINE_config_file(
    "config",
    "configs/example1.py",
    "File path to the experiment configuration.",
    lock_config=False,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_CHECK_FAILED = 3
EXIT_OUT_OF_REGION = 4


def _bank_path(out: str, bank: Optional[str]) -> str:
    return bank or os.path.join(out, "bank.json")


def _load_or_build(config, out: str, bank: Optional[str], progress: bool) -> CertificateBank:
    path = _bank_path(out, bank)
    if os.path.exists(path):
        logging.info("loading certificate bank from %s", path)
        return load_bank(path)
    if bank is not None:
        raise common.BankMismatchError(f"no certificate bank at {bank}")
    logging.info("no bank at %s, synthesizing one", path)
    return experiments.build_bank(config, progress)


def _writer(logdir: Optional[str]):
    if logdir is None:
        return None
    return SummaryWriter(logdir, write_to_disk=True)


def cmd_certify(
    config,
    out: str,
    bank: Optional[str] = None,
    seed: int = 0,
    tune_p: bool = False,
    progress: bool = False,
) -> int:
    if tune_p:
        experiments.tune_p(config)
    certificate = experiments.build_bank(config, progress)
    path = _bank_path(out, bank)
    save_bank(certificate, path)
    print(trajectory_utils.certify_table(certificate, config.delta), end="")
    logging.info("wrote %d level(s) to %s", len(certificate.levels), path)

    if config.verify_samples > 0:
        report = verify_bank(
            certificate,
            get_embedding_builder(config),
            get_system(config),
            config.verify_samples,
            seed=seed,
        )
        logging.info(
            "pointwise verification: %d samples, worst margins %.3g / %.3g",
            report.n_samples,
            report.worst_w_est,
            report.worst_v_desc,
        )
        if not report.passed:
            return EXIT_CHECK_FAILED
    return EXIT_OK


def _write_run(trajectory, reports, directory: str, stride: int):
    summary = summarize(trajectory, reports)
    trajectory_utils.write_trajectory_csv(
        trajectory, os.path.join(directory, "trajectory.csv"), stride
    )
    trajectory_utils.write_json(summary, os.path.join(directory, "summary.json"))
    return summary


def cmd_simulate(
    config,
    out: str,
    bank: Optional[str] = None,
    dt: Optional[float] = None,
    writer=None,
    progress: bool = False,
) -> int:
    certificate = _load_or_build(config, out, bank, progress)
    trajectory = experiments.run_mechanism(
        config, certificate, config.mechanism, dt=dt, writer=writer, progress=progress
    )
    reports = experiments.run_checks(trajectory, certificate, config)
    summary = _write_run(trajectory, reports, out, config.csv_stride)
    logging.info(
        "%s: %d events, intervals in [%.4g, %.4g]",
        config.mechanism,
        summary["num_events"],
        summary["min_interval"],
        summary["max_interval"],
    )
    return EXIT_OK if all_passed(reports) else EXIT_CHECK_FAILED


def cmd_bench(
    config,
    out: str,
    bank: Optional[str] = None,
    dt: Optional[float] = None,
    writer=None,
    progress: bool = False,
) -> int:
    mechanisms = tuple(config.bench_mechanisms)
    rows, passed = [], True
    if mechanisms or config.baseline != "none":
        certificate = _load_or_build(config, out, bank, progress)
        results = experiments.run_suite(
            config, certificate, mechanisms, dt=dt, writer=writer, progress=progress
        )
        for label, (trajectory, reports) in results.items():
            summary = _write_run(
                trajectory, reports, os.path.join(out, label), config.csv_stride
            )
            rows.append(trajectory_utils.bench_row(label, summary))
            passed = passed and all_passed(reports)

    text = trajectory_utils.bench_text(rows, config.system)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "bench.csv"), "w") as f:
        f.write(trajectory_utils.bench_csv(rows, config.system))
    with open(os.path.join(out, "bench.txt"), "w") as f:
        f.write(text)
    print(text, end="")
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_surface(config, out: str) -> int:
    gammas = np.geomspace(*config.surface_gammas[:2], int(config.surface_gammas[2]))
    lambdas = np.geomspace(*config.surface_lambdas[:2], int(config.surface_lambdas[2]))
    table = mati_surface(gammas, lambdas)
    trajectory_utils.write_surface_csv(
        gammas, lambdas, table, os.path.join(out, "surface.csv")
    )
    return EXIT_OK


def run_command(command: str, config, **kwargs) -> int:
    """Runs one subcommand and maps package errors to exit codes."""
    try:
        if command == "certify":
            return cmd_certify(
                config,
                kwargs["out"],
                kwargs.get("bank"),
                kwargs.get("seed", 0),
                kwargs.get("tune_p", False),
                kwargs.get("progress", False),
            )
        elif command == "simulate":
            return cmd_simulate(
                config,
                kwargs["out"],
                kwargs.get("bank"),
                kwargs.get("dt"),
                kwargs.get("writer"),
                kwargs.get("progress", False),
            )
        elif command == "bench":
            return cmd_bench(
                config,
                kwargs["out"],
                kwargs.get("bank"),
                kwargs.get("dt"),
                kwargs.get("writer"),
                kwargs.get("progress", False),
            )
        elif command == "surface":
            return cmd_surface(config, kwargs["out"])
        raise app.UsageError(f"unknown command {command!r}")
    except (common.DomainError, common.BankMismatchError) as err:
        logging.error("%s", err)
        return EXIT_USAGE
    except common.InfeasibleCertificateError as err:
        logging.error("%s", err)
        return EXIT_INFEASIBLE
    except common.OutOfRegionError as err:
        logging.error("%s", err)
        return EXIT_OUT_OF_REGION
    except common.NonFiniteStateError as err:
        logging.error("%s", err)
        return EXIT_CHECK_FAILED


def main(argv):
    if len(argv) != 2:
        raise app.UsageError("expected one command: certify | simulate | bench | surface")
    writer = _writer(FLAGS.logdir)
    try:
        return run_command(
            argv[1],
            FLAGS.config,
            out=FLAGS.out,
            bank=FLAGS.bank,
            seed=FLAGS.seed,
            dt=FLAGS.dt,
            tune_p=FLAGS.tune_p,
            writer=writer,
            progress=FLAGS.progress,
        )
    finally:
        if writer is not None:
            writer.close()


if __name__ == "__main__":
    app.run(main)
