import logging
import os
import sys
from datetime import datetime

from dotenv import load_dotenv

from src.commands.fit import FitService
from src.commands.postprocess import PostprocessService
from src.commands.simulate import SimulateService, StudyService
from src.commands.validate import ValidateService
from src.config.cliargs import CLIArgs
from src.config.runtime_config import RuntimeConfig
from src.models.errors import SpecError, exit_code_for
from src.sampler.progress import PROGRESS_LOGGER
from src.utils.commandline import CommandLine

load_dotenv()

logger = logging.getLogger()  # root logger


def configure_logging(runtime: RuntimeConfig):
    logging.getLogger('sklearn').setLevel(logging.WARNING)

    os.makedirs(runtime.log_dir, exist_ok=True)

    current_date = datetime.now().strftime('%Y-%m-%d')
    log_filename = os.path.join(runtime.log_dir, f"{current_date}-sampler.log")

    log_format = '%(asctime)s %(name)s: %(message)s'
    date_format = '%Y-%m-%d %H:%M:%S'

    level = logging.DEBUG if CLIArgs.verbose else logging.INFO
    logger.setLevel(level)
    logging.basicConfig(level=level, format=log_format, datefmt=date_format)

    # Progress lines: console through the root handler, plus a dated file
    progress_logger = logging.getLogger(PROGRESS_LOGGER)
    progress_logger.setLevel(logging.INFO)
    file_handler = logging.FileHandler(log_filename, mode='a')
    file_handler.setLevel(logging.INFO)
    file_handler.setFormatter(logging.Formatter('%(asctime)s %(message)s', datefmt=date_format))
    progress_logger.addHandler(file_handler)


def run(args, runtime: RuntimeConfig) -> dict:
    show_progress = bool(CLIArgs.progress)
    if args.command == "fit":
        overrides = {"iterations": args.iterations, "burn_in": args.burn_in, "seed": args.seed, "C": args.C}
        return FitService(runtime, show_progress).execute(
            args.output, config_path=args.config, overrides=overrides, data_path=args.data,
            export_csv=args.export_csv, resume=args.resume)
    if args.command == "postprocess":
        overrides = {"subset_size": args.subset_size, "level": args.level}
        return PostprocessService(runtime, show_progress).execute(
            args.output, config_path=args.config, overrides=overrides, chain_dir=args.chain,
            reference=args.reference, k=args.k, pdf=args.pdf)
    if args.command == "simulate":
        return SimulateService(runtime, show_progress).execute(
            args.output, config_path=args.config, seed=args.seed)
    if args.command == "study":
        overrides = {"iterations": args.iterations, "burn_in": args.burn_in, "seed": args.seed, "C": args.C}
        return StudyService(runtime, show_progress).execute(
            args.output, config_path=args.config, overrides=overrides, n_reps=args.n_reps, C=args.C)
    return ValidateService(runtime, show_progress).execute(
        args.output, iterations=args.iterations, burn_in=args.burn_in, seed=args.seed)


def main(argv=None) -> int:
    try:
        args = CommandLine.read_command_line(argv)
    except SpecError as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)
    CLIArgs.update_from_args(args)
    runtime = RuntimeConfig()
    configure_logging(runtime)
    result = run(args, runtime)
    if result.get("error"):
        logger.error(f"{args.command} failed: {result['error']}")
    else:
        for name, path in result.get("paths", {}).items():
            logger.info(f"{name}: {path}")
    return result["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
