"""
Artifact validators for the profile-LMM test-suite.
Each validator returns a list of problems (empty when the artifact is valid).
"""
import json
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from ..sampler.chain_store import DRAW_FIELDS, META_FILE, TRACE_FIELDS

CHAIN_META_FIELDS = ["seed", "chain_id", "spec_hash", "burn_in", "thin", "C", "n", "m", "fe_cols",
                     "re_cols", "int_cols", "kept", "version"]


def validate_chain_directory(directory: Path) -> List[str]:
    """
    Validate a chain directory: metadata fields, every array file and draw counts.

    Returns:
        List of validation errors (empty if valid)
    """
    errors = []
    directory = Path(directory)
    meta_path = directory / META_FILE
    if not meta_path.exists():
        return [f"Missing {META_FILE}"]
    with open(meta_path, "r", encoding="utf-8") as f:
        meta = json.load(f)
    for field in CHAIN_META_FIELDS:
        if field not in meta:
            errors.append(f"Missing metadata field: {field}")
    if errors:
        return errors

    kept = meta["kept"]
    for name in (*DRAW_FIELDS, *TRACE_FIELDS):
        path = directory / f"{name}.npy"
        if not path.exists():
            errors.append(f"Missing chain file: {path.name}")
            continue
        values = np.load(path, mmap_mode="r")
        if name == "trace_loglik" and not meta.get("record_loglik"):
            continue
        if values.shape[0] != kept:
            errors.append(f"{path.name} holds {values.shape[0]} draws, expected {kept}")

    alloc_path = directory / "alloc.npy"
    if alloc_path.exists() and kept:
        alloc = np.load(alloc_path)
        if alloc.shape[1] != meta["n"]:
            errors.append(f"alloc has {alloc.shape[1]} observations, expected {meta['n']}")
        if alloc.min() < 0 or alloc.max() >= meta["C"]:
            errors.append("alloc holds labels outside 0..C-1")
    return errors


def validate_summary_report(summary: Dict[str, Any]) -> List[str]:
    """
    Validate a postprocess ``summary.json`` structure.

    Returns:
        List of validation errors (empty if valid)
    """
    errors = []
    for field in ["metadata", "clustering", "clusters", "fixed_effects", "contrasts"]:
        if field not in summary:
            errors.append(f"Missing required field: {field}")
    if errors:
        return errors

    clustering = summary["clustering"]
    for field in ["k", "sizes", "medoids", "k_rule"]:
        if field not in clustering:
            errors.append(f"Missing clustering field: {field}")
    if "sizes" in clustering and sum(clustering["sizes"]) != summary["metadata"].get("subset_size"):
        errors.append("Cluster sizes do not sum to the subset size")

    for name, block in summary["clusters"].items():
        for cluster in block.get("clusters", []):
            if cluster.get("missing"):
                continue
            mean, lower, upper = cluster.get("mean"), cluster.get("lower"), cluster.get("upper")
            if mean is None:
                errors.append(f"{name} cluster {cluster.get('cluster')} has no mean")
                continue
            if lower is not None and any(not lo <= mu <= up for lo, mu, up in zip(lower, mean, upper)):
                errors.append(f"{name} cluster {cluster.get('cluster')} interval does not contain its mean")

    for row in summary["fixed_effects"]:
        for field in ["name", "mean", "lower", "upper"]:
            if field not in row:
                errors.append(f"Fixed effect row missing field: {field}")
    if "reference" not in summary["contrasts"]:
        errors.append("Contrasts missing reference cluster")
    return errors


def validate_error_record(record: Dict[str, Any]) -> List[str]:
    """Validate an ``error.json`` record written by a failing command."""
    errors = []
    for field in ["command", "error_type", "message", "exit_code"]:
        if field not in record:
            errors.append(f"Missing required field: {field}")
    if record.get("exit_code") not in (1, 2, 3):
        errors.append(f"Unexpected exit code: {record.get('exit_code')}")
    return errors
