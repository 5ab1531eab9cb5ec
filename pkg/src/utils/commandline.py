import argparse

from src.models.errors import SpecError


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as ``SpecError`` (exit code 1)."""

    def error(self, message):
        raise SpecError(f"{self.prog}: {message}")


class CommandLine:
    @staticmethod
    def _optional_int(string):
        return None if string == "None" else int(string)

    @staticmethod
    def _str2bool(string):
        str2val = {"true": True, "false": False}
        if string and string.lower() in str2val:
            return str2val[string.lower()]
        else:
            raise ValueError(
                f"Expected one of {set(str2val.keys())}, got {string}")

    @staticmethod
    def _optional_float(string):
        return None if string == "None" else float(string)

    @classmethod
    def update_from_args(cls, args):
        for key, value in vars(args).items():
            if hasattr(cls, key):
                setattr(cls, key, value)

    @staticmethod
    def build_parser():
        parser = _Parser(
            prog="profile-lmm",
            formatter_class=argparse.ArgumentDefaultsHelpFormatter
        )

        parser.add_argument(
            "--verbose",
            type=CommandLine._str2bool,
            default=False,
            help="Enable verbose logging"
        )
        parser.add_argument(
            "--progress",
            type=CommandLine._str2bool,
            default=True,
            help="Draw a progress bar while chains run"
        )

        subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

        fit = subparsers.add_parser("fit", help="Run the Gibbs sampler on a CSV dataset")
        fit.add_argument("--config", type=str, required=True, help="Configuration file")
        fit.add_argument("--data", type=str, required=True, help="Data CSV file")
        fit.add_argument("--output", type=str, required=True, help="Output directory")
        fit.add_argument("--iterations", type=CommandLine._optional_int, default=None)
        fit.add_argument("--burn-in", dest="burn_in", type=CommandLine._optional_int, default=None)
        fit.add_argument("--seed", type=CommandLine._optional_int, default=None)
        fit.add_argument("--C", dest="C", type=CommandLine._optional_int, default=None,
                         help="Truncation level (maximum number of clusters)")
        fit.add_argument("--export-csv", dest="export_csv", type=CommandLine._str2bool, default=False,
                         help="Also write CSV copies of traces, beta and allocations")
        fit.add_argument("--resume", type=CommandLine._optional_int, default=None,
                         help="Continue the chain in the output directory for this many iterations")

        post = subparsers.add_parser("postprocess", help="Summarize a stored chain")
        post.add_argument("--config", type=str, default=None, help="Configuration file")
        post.add_argument("--chain", type=str, required=True, help="Chain directory")
        post.add_argument("--output", type=str, required=True, help="Output directory")
        post.add_argument("--subset-size", dest="subset_size", type=CommandLine._optional_int, default=None)
        post.add_argument("--level", type=CommandLine._optional_float, default=None,
                          help="Credible level of the contrast table")
        post.add_argument("--reference", type=CommandLine._optional_int, default=None,
                          help="Reference cluster (1-based) of the contrasts")
        post.add_argument("--k", type=CommandLine._optional_int, default=None,
                          help="Fixed number of representative clusters")
        post.add_argument("--pdf", type=CommandLine._str2bool, default=None, help="Also write a PDF summary")

        simulate = subparsers.add_parser("simulate", help="Write a synthetic dataset and its ground truth")
        simulate.add_argument("--config", type=str, default=None, help="Configuration file")
        simulate.add_argument("--output", type=str, required=True, help="Output directory")
        simulate.add_argument("--seed", type=CommandLine._optional_int, default=None)

        study = subparsers.add_parser("study", help="Run the replication study")
        study.add_argument("--config", type=str, default=None, help="Configuration file")
        study.add_argument("--output", type=str, required=True, help="Output directory")
        study.add_argument("--n-reps", dest="n_reps", type=CommandLine._optional_int, default=None)
        study.add_argument("--iterations", type=CommandLine._optional_int, default=None)
        study.add_argument("--burn-in", dest="burn_in", type=CommandLine._optional_int, default=None)
        study.add_argument("--seed", type=CommandLine._optional_int, default=None)
        study.add_argument("--C", dest="C", type=CommandLine._optional_int, default=None)

        validate = subparsers.add_parser("validate", help="Run the sampler-correctness suite")
        validate.add_argument("--output", type=str, required=True, help="Output directory")
        validate.add_argument("--iterations", type=CommandLine._optional_int, default=None,
                              help="Coupled draws per simulator")
        validate.add_argument("--burn-in", dest="burn_in", type=CommandLine._optional_int, default=None)
        validate.add_argument("--seed", type=CommandLine._optional_int, default=None)

        return parser

    @staticmethod
    def read_command_line(argv=None):
        return CommandLine.build_parser().parse_args(argv)
