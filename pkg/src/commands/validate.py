"""
Validate command: getting-it-right suite with its negative control.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional

from ..models.errors import ValidationFailure
from ..models.model_spec import RunConfig
from ..sampler.validation import validation_suite
from .base import CommandService

DEFAULT_DRAWS = 20000
DEFAULT_BURN_IN = 1000


class ValidateService(CommandService):
    name = "validate"

    def _run(self, output_dir: Path, iterations: Optional[int] = None, burn_in: Optional[int] = None,
             seed: Optional[int] = None, n_obs: int = 30, m: int = 10) -> Dict[str, Any]:
        runcfg = RunConfig(iterations=iterations or DEFAULT_DRAWS,
                           burn_in=DEFAULT_BURN_IN if burn_in is None else burn_in,
                           seed=seed if seed is not None else RunConfig().seed)
        suite = validation_suite(runcfg, n_obs_small=n_obs, m=m)
        report_path = output_dir / "validation.json"
        with open(report_path, "w", encoding="utf-8") as f:
            json.dump(suite.as_dict(), f, indent=2)
        lines = [f"{'statistic':<24}{'prior':>12}{'gibbs':>12}{'z':>8}"]
        for s in suite.reference.statistics:
            lines.append(f"{s.name:<24}{s.prior_mean:>12.4f}{s.gibbs_mean:>12.4f}{s.z:>8.2f}")
        lines.append(f"negative control max |z| = {suite.negative_control.max_abs_z:.2f}")
        (output_dir / "validation.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        if not suite.passed:
            raise ValidationFailure(
                f"sampler validation failed (reference max |z| = {suite.reference.max_abs_z:.2f}, "
                f"negative control max |z| = {suite.negative_control.max_abs_z:.2f})")
        return {"paths": {"report": str(report_path)}, "seed": runcfg.seed,
                "metrics": {"max_abs_z": suite.reference.max_abs_z,
                            "negative_control_max_abs_z": suite.negative_control.max_abs_z},
                "settings": {"draws": runcfg.iterations, "burn_in": runcfg.burn_in, "n_obs": n_obs, "m": m}}
