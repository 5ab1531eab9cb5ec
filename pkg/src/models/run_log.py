"""
Run log model for tracking command executions.

Records when a command started, how long it ran, the seed and effective
settings it used, summary metrics, and any errors encountered.
"""

from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional


@dataclass
class RunLog:
    """
    Log entry for one fit / postprocess / simulate / study / validate run.
    """
    command: str
    timestamp: str  # ISO datetime string when the run started
    runtime: float  # Total runtime in seconds
    seed: Optional[int]
    metrics: Dict[str, float]
    errors: List[str]
    settings: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def create_log(cls, command: str, start_time: datetime, seed: Optional[int] = None,
                   metrics: Optional[Dict[str, float]] = None,
                   errors: Optional[List[str]] = None,
                   settings: Optional[Dict[str, Any]] = None) -> 'RunLog':
        """
        Create a new run log entry.

        Args:
            command: Subcommand name
            start_time: When the run began
            seed: Master seed of the run, if any
            metrics: Optional summary metrics
            errors: Optional list of error messages
            settings: Optional effective settings

        Returns:
            New RunLog instance
        """
        runtime = (datetime.now() - start_time).total_seconds()

        return cls(
            command=command,
            timestamp=start_time.isoformat(),
            runtime=runtime,
            seed=seed,
            metrics=metrics or {},
            errors=errors or [],
            settings=settings or {},
        )

    @property
    def was_successful(self) -> bool:
        """Check if the run completed without errors."""
        return len(self.errors) == 0

    def as_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["runtime_seconds"] = data.pop("runtime")
        data["successful"] = self.was_successful
        return data
