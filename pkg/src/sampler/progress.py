"""
Progress reporting for running chains.

Lines go to the dedicated ``progress`` logger; an optional tqdm bar is drawn
on stdout for interactive runs.
"""

import logging
import sys
from typing import Optional

from tqdm import tqdm

from ..models.parameter_state import ParameterState

PROGRESS_LOGGER = "progress"


class ProgressReporter:
    """Reports iteration, non-empty cluster count and zeta every ``every`` iterations."""

    def __init__(self, total: int, every: int = 100, show_bar: bool = False, label: str = "chain"):
        self.logger = logging.getLogger(PROGRESS_LOGGER)
        self.every = max(int(every), 1)
        self.label = label
        self.bar: Optional[tqdm] = tqdm(total=total, file=sys.stdout, desc=label, leave=False) if show_bar else None

    def update(self, iteration: int, state: ParameterState) -> None:
        if self.bar is not None:
            self.bar.update(1)
            if iteration % self.every == 0:
                self.bar.set_postfix(nclus=state.n_nonempty, zeta=f"{state.zeta:.3f}")
        if iteration % self.every == 0:
            self.logger.info(f"{self.label}: iter={iteration}, nclus={state.n_nonempty}, zeta={state.zeta:.4f}")

    def close(self) -> None:
        if self.bar is not None:
            self.bar.close()
            self.bar = None


class SilentProgress(ProgressReporter):
    """No-op reporter for library and test use."""

    def __init__(self):
        super().__init__(total=0, every=1, show_bar=False)

    def update(self, iteration: int, state: ParameterState) -> None:
        return None
