"""
Base command service.

Runs one subcommand, writes its run log and, on failure, a structured
``error.json`` record; the exit code follows the error category.
"""

import json
import logging
from abc import ABC, abstractmethod
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

from ..config.config_parser import ProfileConfig, load_config, with_overrides
from ..config.runtime_config import RuntimeConfig
from ..models.errors import exit_code_for
from ..models.run_log import RunLog
from ..postprocess.report_writer import ReportWriter

ERROR_FILE = "error.json"
RUN_LOG_FILE = "run_log.json"


class CommandService(ABC):
    """
    Abstract base class for subcommand services.
    """

    name = "command"

    def __init__(self, runtime: Optional[RuntimeConfig] = None, show_progress: bool = False):
        self.runtime = runtime or RuntimeConfig()
        self.show_progress = show_progress
        self.logger = logging.getLogger(self.__class__.__name__)
        self.report_writer = ReportWriter()

    @abstractmethod
    def _run(self, output_dir: Path, **kwargs) -> Dict[str, Any]:
        """Do the work; return a result dict with 'paths', 'metrics' and 'seed'."""

    def execute(self, output_dir: Path, **kwargs) -> Dict[str, Any]:
        """
        Run the command and record the outcome in ``output_dir``.

        Args:
            output_dir: Directory receiving the artifacts, run log and error record
            config_path: Optional configuration file, parsed inside the run so that
                configuration errors are recorded like any other failure
            overrides: Optional CLI overrides applied to the parsed configuration

        Returns:
            Result dictionary with ``exit_code`` (0 on success) and, on failure, ``error``
        """
        output_dir = Path(output_dir)
        start_time = datetime.now()
        config_path = kwargs.pop("config_path", None)
        overrides = kwargs.pop("overrides", None)
        try:
            if config_path is not None or overrides:
                config = load_config(Path(config_path)) if config_path is not None else ProfileConfig.default()
                kwargs["config"] = with_overrides(config, **(overrides or {}))
            output_dir.mkdir(parents=True, exist_ok=True)
            self.logger.info(f"Starting {self.name} into {output_dir}")
            result = self._run(output_dir, **kwargs)
            log = RunLog.create_log(self.name, start_time, seed=result.get("seed"),
                                    metrics=result.get("metrics"), settings=result.get("settings"))
            self.report_writer.write_log(log, output_dir / RUN_LOG_FILE)
            result["exit_code"] = 0
            self.logger.info(f"{self.name} completed in {log.runtime:.1f}s")
            return result
        except Exception as e:
            exit_code = exit_code_for(e)
            error_msg = f"{self.name} failed: {e}"
            self.logger.error(error_msg)
            if exit_code == 1 and not isinstance(e, ValueError):
                self.logger.debug("Unexpected failure", exc_info=True)
            record = {"command": self.name, "error_type": type(e).__name__, "message": str(e),
                      "exit_code": exit_code, "timestamp": start_time.isoformat()}
            try:
                output_dir.mkdir(parents=True, exist_ok=True)
                with open(output_dir / ERROR_FILE, "w", encoding="utf-8") as f:
                    json.dump(record, f, indent=2, ensure_ascii=False)
                log = RunLog.create_log(self.name, start_time, errors=[str(e)])
                self.report_writer.write_log(log, output_dir / RUN_LOG_FILE)
            except OSError as write_error:
                self.logger.error(f"Could not write error record: {write_error}")
            return {"paths": {}, "error": str(e), "exit_code": exit_code}
