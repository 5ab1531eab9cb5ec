"""
Full sampler state: one draw of every model parameter.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List

import numpy as np


def stick_breaking(sticks: np.ndarray) -> np.ndarray:
    """Mixture weights pi_c = V_c * prod_{l<c} (1 - V_l); with V_C = 1 they sum to one."""
    sticks = np.asarray(sticks, dtype=float)
    remaining = np.concatenate(([1.0], np.cumprod(1.0 - sticks[:-1])))
    return sticks * remaining


def uniform_sticks(C: int) -> np.ndarray:
    """Sticks V_c = 1 / (C - c + 1) giving uniform weights 1/C."""
    return 1.0 / (C - np.arange(C))


@dataclass
class ParameterState:
    """
    One draw of {beta, sigma2, gamma, W^Int, eta, W^Re, theta^u, Z, V, zeta}.

    Cluster and observation indices are 0-based.
    """
    beta: np.ndarray            # (p_fe,)
    sigma2: float
    gamma: np.ndarray           # (C, p_int)
    wint: np.ndarray            # (p_int, p_int)
    eta: np.ndarray             # (m, p_re)
    wre: np.ndarray             # (p_re, p_re)
    mu: np.ndarray              # (C, q)
    sigma_u: np.ndarray         # (C, q, q)
    phi: List[np.ndarray]       # per categorical covariate: (C, K_j)
    alloc: np.ndarray           # (n,) in 0..C-1
    sticks: np.ndarray          # (C,), sticks[-1] == 1
    zeta: float

    @property
    def C(self) -> int:
        return int(self.sticks.size)

    @property
    def weights(self) -> np.ndarray:
        return stick_breaking(self.sticks)

    def cluster_counts(self) -> np.ndarray:
        return np.bincount(self.alloc, minlength=self.C)

    @property
    def n_nonempty(self) -> int:
        return int(np.count_nonzero(self.cluster_counts()))

    def copy(self) -> "ParameterState":
        return ParameterState(
            beta=self.beta.copy(), sigma2=float(self.sigma2), gamma=self.gamma.copy(),
            wint=self.wint.copy(), eta=self.eta.copy(), wre=self.wre.copy(),
            mu=self.mu.copy(), sigma_u=self.sigma_u.copy(), phi=[p.copy() for p in self.phi],
            alloc=self.alloc.copy(), sticks=self.sticks.copy(), zeta=float(self.zeta),
        )

    def to_arrays(self) -> Dict[str, np.ndarray]:
        arrays = {
            "beta": self.beta, "sigma2": np.array(self.sigma2), "gamma": self.gamma,
            "wint": self.wint, "eta": self.eta, "wre": self.wre, "mu": self.mu,
            "sigma_u": self.sigma_u, "alloc": self.alloc, "sticks": self.sticks,
            "zeta": np.array(self.zeta), "n_phi": np.array(len(self.phi)),
        }
        for index, phi in enumerate(self.phi):
            arrays[f"phi_{index}"] = phi
        return arrays

    @classmethod
    def from_arrays(cls, arrays) -> "ParameterState":
        n_phi = int(arrays["n_phi"])
        return cls(
            beta=np.array(arrays["beta"], dtype=float), sigma2=float(arrays["sigma2"]),
            gamma=np.array(arrays["gamma"], dtype=float), wint=np.array(arrays["wint"], dtype=float),
            eta=np.array(arrays["eta"], dtype=float), wre=np.array(arrays["wre"], dtype=float),
            mu=np.array(arrays["mu"], dtype=float), sigma_u=np.array(arrays["sigma_u"], dtype=float),
            phi=[np.array(arrays[f"phi_{k}"], dtype=float) for k in range(n_phi)],
            alloc=np.array(arrays["alloc"], dtype=np.int64), sticks=np.array(arrays["sticks"], dtype=float),
            zeta=float(arrays["zeta"]),
        )

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            np.savez(f, **self.to_arrays())
        return path

    @classmethod
    def load(cls, path: Path) -> "ParameterState":
        with np.load(Path(path)) as arrays:
            return cls.from_arrays({key: arrays[key] for key in arrays.files})
