"""
Fit command: ingest the data, run the chain(s), persist draws and diagnostics.
"""

import json
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, Optional

from ..config.config_parser import ProfileConfig, emit_config
from ..io.csv_ingest import ingest_csv
from ..models.errors import SpecError
from ..sampler.diagnostics import diagnostics
from ..sampler.gibbs import resume_chain, run_chain
from ..sampler.job_manager import pooled_zeta_agreement, run_chains
from ..sampler.progress import ProgressReporter
from .base import CommandService

CHAIN_DIR = "chain"
EFFECTIVE_CONFIG = "effective_config.cfg"


def chain_directory(output_dir: Path, chain_id: int = 0, n_chains: int = 1) -> Path:
    return Path(output_dir) / (CHAIN_DIR if n_chains == 1 else f"{CHAIN_DIR}_{chain_id + 1}")


class FitService(CommandService):
    name = "fit"

    def _progress(self, total: int, label: str) -> ProgressReporter:
        return ProgressReporter(total, every=self.runtime.progress_every, show_bar=self.show_progress, label=label)

    def _run(self, output_dir: Path, config: ProfileConfig = None, data_path: Optional[Path] = None,
             export_csv: bool = False, resume: Optional[int] = None) -> Dict[str, Any]:
        if config is None or config.spec is None:
            raise SpecError("fit needs a configuration with a [model] section")
        if data_path is None:
            raise SpecError("fit needs a data file (--data)")
        spec, hyper, run = config.spec, config.hyper, config.run
        data = ingest_csv(Path(data_path), spec)

        if resume is not None:
            chain_dir = chain_directory(output_dir)
            chain = resume_chain(chain_dir, resume, data, progress=self._progress(resume, "resume"))
            chains = [chain]
        elif run.n_chains == 1:
            chains = [run_chain(data, spec, hyper, run, progress=self._progress(run.iterations, "chain 1"))]
        else:
            chains = run_chains(data, spec, hyper, run, max_workers=self.runtime.workers,
                                progress_factory=lambda k: self._progress(run.iterations, f"chain {k + 1}"))

        paths: Dict[str, Any] = {}
        reports = []
        for chain_id, chain in enumerate(chains):
            chain_dir = chain_directory(output_dir, chain_id, len(chains))
            chain.save(chain_dir, export_csv=export_csv)
            paths[f"chain_{chain_id + 1}"] = str(chain_dir)
            reports.append(diagnostics(chain))

        payload: Dict[str, Any] = {"chains": [report.as_dict() for report in reports]}
        if len(chains) > 1:
            payload["zeta_agreement"] = pooled_zeta_agreement(chains).as_dict()
        diagnostics_path = output_dir / "diagnostics.json"
        with open(diagnostics_path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2)
        tables_path = output_dir / "diagnostics.txt"
        tables_path.write_text("\n\n".join(f"chain {k + 1}\n{report.table()}" for k, report in enumerate(reports))
                               + "\n", encoding="utf-8")
        config_path = output_dir / EFFECTIVE_CONFIG
        effective = config if resume is None else replace(
            config, run=replace(run, iterations=chains[0].meta.iterations_done))
        config_path.write_text(emit_config(effective), encoding="utf-8")
        paths.update({"diagnostics": str(diagnostics_path), "diagnostics_table": str(tables_path),
                      "effective_config": str(config_path)})

        first = reports[0]
        metrics = {"kept_draws": float(len(chains[0])), "final_nclus": float(first.final_nclus),
                   "ess_zeta": first["zeta"].ess, "ess_sigma2": first["sigma2"].ess}
        return {"paths": paths, "metrics": metrics, "seed": run.seed,
                "settings": {"n": data.n, "m": data.m, "C": spec.C, "iterations": run.iterations,
                             "burn_in": run.burn_in, "thin": run.thin, "n_chains": len(chains)}}
