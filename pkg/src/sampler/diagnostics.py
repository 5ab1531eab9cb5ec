"""
Convergence diagnostics for scalar traces.

Effective sample size uses Geyer's initial positive sequence estimator on
FFT autocorrelations.
"""

from dataclasses import asdict, dataclass
from typing import Dict, List

import numpy as np

from ..models.errors import DataError
from .chain_store import ChainStore


@dataclass
class TraceSummary:
    name: str
    length: int
    mean: float
    sd: float
    lag1_autocorr: float
    ess: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass
class DiagnosticsReport:
    traces: List[TraceSummary]
    final_nclus: int
    nclus_mode: int

    def __getitem__(self, name: str) -> TraceSummary:
        for summary in self.traces:
            if summary.name == name:
                return summary
        raise KeyError(name)

    def as_dict(self) -> Dict[str, object]:
        return {
            "traces": {summary.name: summary.as_dict() for summary in self.traces},
            "final_nclus": self.final_nclus,
            "nclus_mode": self.nclus_mode,
        }

    def table(self) -> str:
        lines = [f"{'trace':<10}{'mean':>12}{'sd':>12}{'lag1':>10}{'ess':>10}"]
        for s in self.traces:
            lines.append(f"{s.name:<10}{s.mean:>12.4f}{s.sd:>12.4f}{s.lag1_autocorr:>10.3f}{s.ess:>10.1f}")
        return "\n".join(lines)


def autocorrelation(trace: np.ndarray) -> np.ndarray:
    """Normalised autocorrelation at all lags (lag 0 = 1); zeros for a constant trace."""
    x = np.asarray(trace, dtype=float)
    n = x.size
    centered = x - x.mean()
    variance = float(np.dot(centered, centered))
    if n == 0 or variance == 0.0:
        return np.zeros(n) if n == 0 else np.concatenate(([1.0], np.zeros(n - 1)))
    size = 1 << int(np.ceil(np.log2(2 * n)))
    spectrum = np.fft.rfft(centered, size)
    acov = np.fft.irfft(spectrum * np.conjugate(spectrum), size)[:n]
    return acov / variance


def effective_sample_size(trace: np.ndarray) -> float:
    """
    Geyer initial positive sequence ESS.

    A constant trace reports its length.
    """
    x = np.asarray(trace, dtype=float)
    n = x.size
    if n < 2 or np.ptp(x) == 0:
        return float(n)
    rho = autocorrelation(x)
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    tau = max(tau, 1.0 / n)
    return float(n / tau)


def summarize_trace(name: str, trace: np.ndarray) -> TraceSummary:
    x = np.asarray(trace, dtype=float)
    constant = x.size < 2 or np.ptp(x) == 0
    return TraceSummary(
        name=name, length=int(x.size), mean=float(np.mean(x)),
        sd=float(np.std(x, ddof=1)) if x.size > 1 else 0.0,
        lag1_autocorr=0.0 if constant else float(autocorrelation(x)[1]),
        ess=effective_sample_size(x),
    )


def diagnostics(chain: ChainStore) -> DiagnosticsReport:
    """
    Summaries of the zeta, cluster-count, sigma2 (and log-likelihood) traces.

    Raises:
        DataError: If the chain holds no kept draws
    """
    if chain.is_empty:
        raise DataError("cannot report diagnostics for a chain with no kept draws")
    traces = chain.traces
    summaries = [summarize_trace(name, np.asarray(values)) for name, values in traces.items()]
    nclus = np.asarray(traces["nclus"], dtype=np.int64)
    return DiagnosticsReport(traces=summaries, final_nclus=int(nclus[-1]),
                             nclus_mode=int(np.argmax(np.bincount(nclus))))
