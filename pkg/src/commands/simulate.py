"""
Simulate and study commands.
"""

from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, Optional

from ..config.config_parser import ProfileConfig, emit_config
from ..io.csv_ingest import write_dataset_csv
from ..simulation.scenario import generate_scenario, scenario_spec, write_truth
from ..simulation.study import PROFILE, StudySettings, run_replication_study
from .base import CommandService

DATA_FILE = "data.csv"
FIT_CONFIG_FILE = "fit.cfg"
DEFAULT_C = 30


class SimulateService(CommandService):
    name = "simulate"

    def _run(self, output_dir: Path, config: Optional[ProfileConfig] = None,
             seed: Optional[int] = None) -> Dict[str, Any]:
        config = config or ProfileConfig.default()
        scenario = config.scenario if seed is None else replace(config.scenario, seed=seed)
        data, truth = generate_scenario(scenario)
        paths: Dict[str, Any] = {"data": str(write_dataset_csv(data, output_dir / DATA_FILE))}
        paths.update({name: str(path) for name, path in write_truth(truth, scenario, output_dir).items()})

        # configuration that fits the simulated file as written
        C = config.spec.C if config.spec is not None else DEFAULT_C
        fit_config = replace(config, spec=scenario_spec(scenario, C=C), scenario=scenario)
        fit_path = output_dir / FIT_CONFIG_FILE
        fit_path.write_text(emit_config(fit_config), encoding="utf-8")
        paths["fit_config"] = str(fit_path)
        return {"paths": paths, "seed": scenario.seed,
                "metrics": {"n": float(data.n), "m": float(data.m)},
                "settings": scenario.as_dict()}


class StudyService(CommandService):
    name = "study"

    def _run(self, output_dir: Path, config: Optional[ProfileConfig] = None,
             n_reps: Optional[int] = None, C: Optional[int] = None) -> Dict[str, Any]:
        config = config or ProfileConfig.default()
        n_reps = n_reps if n_reps is not None else config.study.n_reps
        if C is None:
            C = config.spec.C if config.spec is not None else DEFAULT_C
        settings = StudySettings(
            C=C,
            subset_size=config.study.subset_size, k_max=config.postprocess.k_max,
            max_exact=self.runtime.max_exact_pam, with_benchmarks=config.study.with_benchmarks,
            workers=self.runtime.workers,
        )
        report = run_replication_study(config.scenario, n_reps, config.run, config.hyper, settings)
        rows_path = output_dir / "study_rows.csv"
        summary_path = output_dir / "study_summary.csv"
        report.rows.to_csv(rows_path, index=False)
        report.summary.to_csv(summary_path, index=False)
        profile = report.summary[report.summary["method"] == PROFILE].set_index("metric")["median"]
        metrics = {f"median_{metric}": float(value) for metric, value in profile.items()}
        return {"paths": {"rows": str(rows_path), "summary": str(summary_path)}, "metrics": metrics,
                "seed": config.scenario.seed, "settings": report.settings}
