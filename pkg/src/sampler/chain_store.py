"""
Chain storage: kept draws, scalar traces and their on-disk layout.

A chain directory holds ``meta.json``, one ``.npy`` file per parameter block
and trace (little-endian ``<f8`` / ``<i8``), ``last_state.npz`` for resuming
and optional CSV exports under ``csv/``.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

import numpy as np
import pandas as pd

from ..models.errors import DataError
from ..models.parameter_state import ParameterState

FORMAT_VERSION = 1
META_FILE = "meta.json"
LAST_STATE_FILE = "last_state.npz"

DRAW_FIELDS = ("beta", "sigma2", "gamma", "eta", "wre", "wint",
               "theta_mu", "theta_sigma", "theta_phi", "sticks", "alloc")
TRACE_FIELDS = ("trace_zeta", "trace_nclus", "trace_sigma2", "trace_loglik")
INTEGER_FIELDS = ("alloc", "trace_nclus")


@dataclass
class ChainMeta:
    """Chain metadata persisted as ``meta.json``."""
    seed: int
    chain_id: int
    spec_hash: str
    burn_in: int
    thin: int
    C: int
    n: int
    m: int
    fe_cols: List[str]
    re_cols: List[str]
    int_cols: List[str]
    u_cont_names: List[str]
    u_cat_names: List[str]
    n_categories: List[int]
    record_loglik: bool = False
    iterations_done: int = 0
    kept: int = 0
    standardizer: Dict[str, Any] = field(default_factory=dict)
    spec: Dict[str, Any] = field(default_factory=dict)
    hyper: Dict[str, Any] = field(default_factory=dict)
    rng_state: Optional[Dict[str, Any]] = None
    version: int = FORMAT_VERSION

    @property
    def q(self) -> int:
        return len(self.u_cont_names)

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ChainMeta":
        version = payload.get("version")
        if version != FORMAT_VERSION:
            raise DataError(f"unsupported chain format version {version} (expected {FORMAT_VERSION})")
        known = set(cls.__dataclass_fields__)
        return cls(**{key: value for key, value in payload.items() if key in known})


def _state_record(state: ParameterState) -> Dict[str, np.ndarray]:
    phi = np.concatenate(state.phi, axis=1) if state.phi else np.zeros((state.C, 0))
    return {
        "beta": state.beta, "sigma2": np.float64(state.sigma2), "gamma": state.gamma,
        "eta": state.eta, "wre": state.wre, "wint": state.wint,
        "theta_mu": state.mu, "theta_sigma": state.sigma_u, "theta_phi": phi,
        "sticks": state.sticks, "alloc": state.alloc,
    }


class ChainStore:
    """
    Kept draws of one chain plus its scalar traces.

    Draws appended in memory are merged with any arrays loaded from disk
    (memory-mapped) when read through :meth:`array`.
    """

    def __init__(self, meta: ChainMeta):
        self.meta = meta
        self.logger = logging.getLogger(self.__class__.__name__)
        self._loaded: Dict[str, np.ndarray] = {}
        self._pending: Dict[str, List[np.ndarray]] = {name: [] for name in (*DRAW_FIELDS, *TRACE_FIELDS)}
        self._cache: Dict[str, np.ndarray] = {}
        self.last_state: Optional[ParameterState] = None

    def __len__(self) -> int:
        return self.meta.kept

    @property
    def is_empty(self) -> bool:
        return self.meta.kept == 0

    def append(self, state: ParameterState, loglik: Optional[float] = None) -> None:
        """Record one kept draw and its trace values."""
        for name, value in _state_record(state).items():
            self._pending[name].append(np.array(value, copy=True))
        self._pending["trace_zeta"].append(np.float64(state.zeta))
        self._pending["trace_nclus"].append(np.int64(state.n_nonempty))
        self._pending["trace_sigma2"].append(np.float64(state.sigma2))
        if self.meta.record_loglik:
            self._pending["trace_loglik"].append(np.float64(np.nan if loglik is None else loglik))
        self.meta.kept += 1
        self._cache.clear()

    def array(self, name: str) -> np.ndarray:
        """Stacked draws of one block or trace, leading axis = kept draws."""
        if name not in self._pending:
            raise KeyError(name)
        if name in self._cache:
            return self._cache[name]
        parts = []
        if name in self._loaded:
            parts.append(self._loaded[name])
        if self._pending[name]:
            parts.append(np.stack(self._pending[name]))
        if not parts:
            result = np.zeros((0,), dtype=np.int64 if name in INTEGER_FIELDS else float)
        elif len(parts) == 1:
            result = parts[0]
        else:
            result = np.concatenate(parts, axis=0)
        self._cache[name] = result
        return result

    @property
    def traces(self) -> Dict[str, np.ndarray]:
        names = TRACE_FIELDS if self.meta.record_loglik else TRACE_FIELDS[:-1]
        return {name.replace("trace_", ""): self.array(name) for name in names}

    def iter_alloc(self, chunk_size: int = 256) -> Iterator[np.ndarray]:
        """Yield allocation draws in chunks of at most ``chunk_size`` rows."""
        alloc = self.array("alloc")
        for start in range(0, alloc.shape[0], chunk_size):
            yield np.asarray(alloc[start:start + chunk_size])

    def save(self, directory: Path, last_state: Optional[ParameterState] = None,
             export_csv: bool = False) -> Path:
        """
        Persist the chain directory.

        Files are written to a temporary name then moved into place, so a
        chain that was loaded memory-mapped from the same directory stays valid.

        Args:
            directory: Chain directory (created if needed)
            last_state: Final state of the run, written for resuming
            export_csv: Also write traces, beta and allocations as CSV

        Returns:
            The chain directory
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        arrays = {name: self.array(name) for name in (*DRAW_FIELDS, *TRACE_FIELDS)}
        for name, values in arrays.items():
            dtype = "<i8" if name in INTEGER_FIELDS else "<f8"
            self._atomic_save(directory / f"{name}.npy", np.ascontiguousarray(values, dtype=dtype))
        last_state = self.last_state if last_state is None else last_state
        if last_state is not None:
            tmp = directory / f"{LAST_STATE_FILE}.tmp"
            last_state.save(tmp)
            os.replace(tmp, directory / LAST_STATE_FILE)
        with open(directory / META_FILE, "w", encoding="utf-8") as f:
            json.dump(self.meta.as_dict(), f, indent=2, sort_keys=True)
        if export_csv:
            self.export_csv(directory / "csv")
        self.logger.info(f"Saved chain with {self.meta.kept} kept draws to {directory}")
        return directory

    @staticmethod
    def _atomic_save(path: Path, values: np.ndarray) -> None:
        tmp = path.with_suffix(".npy.tmp")
        with open(tmp, "wb") as f:
            np.save(f, values)
        os.replace(tmp, path)

    def export_csv(self, directory: Path) -> None:
        """Audit copies: traces, beta draws and 1-based allocations."""
        directory.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(self.traces).to_csv(directory / "traces.csv", index_label="draw")
        pd.DataFrame(self.array("beta"), columns=self.meta.fe_cols).to_csv(directory / "beta.csv", index_label="draw")
        alloc = np.asarray(self.array("alloc")) + 1
        pd.DataFrame(alloc, columns=[f"obs{i + 1}" for i in range(alloc.shape[1])]).to_csv(
            directory / "alloc.csv", index_label="draw")

    @classmethod
    def load(cls, directory: Path, mmap: bool = True) -> "ChainStore":
        """
        Read a chain directory.

        Raises:
            DataError: If the directory, metadata or an array file is missing or inconsistent
        """
        directory = Path(directory)
        meta_path = directory / META_FILE
        if not meta_path.exists():
            raise DataError(f"no chain found at {directory} (missing {META_FILE})")
        with open(meta_path, "r", encoding="utf-8") as f:
            meta = ChainMeta.from_dict(json.load(f))
        store = cls(meta)
        for name in (*DRAW_FIELDS, *TRACE_FIELDS):
            path = directory / f"{name}.npy"
            if not path.exists():
                raise DataError(f"chain file {path.name} is missing from {directory}")
            values = np.load(path, mmap_mode="r" if mmap else None)
            if name != "trace_loglik" or meta.record_loglik:
                if values.shape[0] != meta.kept:
                    raise DataError(f"{path.name} holds {values.shape[0]} draws, metadata says {meta.kept}")
            store._loaded[name] = values
        return store

    @classmethod
    def from_arrays(cls, meta: ChainMeta, arrays: Dict[str, np.ndarray]) -> "ChainStore":
        """
        Chain over already stacked draws (leading axis = kept draws).

        Missing traces are derived: cluster counts from ``alloc``, sigma2 from
        the ``sigma2`` draws and zeta as NaN.

        Raises:
            DataError: If a draw block is missing or the draw counts disagree
        """
        missing = [name for name in DRAW_FIELDS if name not in arrays]
        if missing:
            raise DataError(f"cannot build a chain without {', '.join(missing)}")
        store = cls(meta)
        alloc = np.asarray(arrays["alloc"], dtype=np.int64)
        kept = alloc.shape[0]
        derived = {
            "trace_nclus": np.array([np.unique(row).size for row in alloc], dtype=np.int64),
            "trace_sigma2": np.asarray(arrays["sigma2"], dtype=float),
            "trace_zeta": np.full(kept, np.nan),
            "trace_loglik": np.full(kept if meta.record_loglik else 0, np.nan),
        }
        for name in (*DRAW_FIELDS, *TRACE_FIELDS):
            values = np.asarray(arrays[name] if name in arrays else derived[name])
            if name != "trace_loglik" and values.shape[0] != kept:
                raise DataError(f"'{name}' holds {values.shape[0]} draws, 'alloc' holds {kept}")
            store._loaded[name] = values
        meta.kept = kept
        return store

    @staticmethod
    def load_last_state(directory: Path) -> ParameterState:
        path = Path(directory) / LAST_STATE_FILE
        if not path.exists():
            raise DataError(f"cannot resume: {path} is missing")
        return ParameterState.load(path)
