"""
Report writer for post-processing results.

Formats and saves the representative clustering, cluster summaries,
fixed effects and contrasts as a JSON report, CSV data files for external
plotting and plain-text tables.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from ..models.run_log import RunLog
from .pam import RepresentativeClustering
from .summary import ClusterSummary, ContrastRow, ParameterEstimate

FORMAT_VERSION = "1.0"
SUMMARY_FILE = "summary.json"
LABELS_FILE = "labels.csv"
TABLES_FILE = "tables.txt"


@dataclass
class PosteriorReport:
    """Everything the postprocess command reports for one chain."""
    clustering: RepresentativeClustering
    summaries: Dict[str, ClusterSummary]
    fixed_effects: List[ParameterEstimate]
    contrasts: List[ContrastRow]
    reference: int                              # 0-based reference cluster of the contrasts
    settings: Dict[str, Any] = field(default_factory=dict)
    diagnostics: Optional[Dict[str, Any]] = None
    zones: Optional[Dict[str, np.ndarray]] = None


def _interval(estimate) -> str:
    if estimate.lower is None:
        return ""
    return f"[{estimate.lower:.4f}, {estimate.upper:.4f}]"


class ReportWriter:
    """
    Writes post-processing reports to an output directory.
    """

    def __init__(self):
        """Initialize the report writer."""
        self.logger = logging.getLogger(self.__class__.__name__)

    def write_report(self, report: PosteriorReport, output_dir: Path) -> Dict[str, Path]:
        """
        Write the JSON summary, labels, tables and plot-ready data files.

        Args:
            report: Post-processing results
            output_dir: Directory to write into (created if needed)

        Returns:
            Mapping of artifact name to written path

        Raises:
            IOError: If writing fails
            ValueError: If report validation fails
        """
        output_dir = Path(output_dir)
        try:
            self.logger.info(f"Writing post-processing report to: {output_dir}")
            output_dir.mkdir(parents=True, exist_ok=True)

            data = self._build_summary_data(report)
            self._validate_summary_data(data)

            paths = {"summary": output_dir / SUMMARY_FILE}
            with open(paths["summary"], "w", encoding="utf-8") as f:
                json.dump(data, f, indent=2, ensure_ascii=False)

            paths["labels"] = self.write_labels(report.clustering, output_dir / LABELS_FILE)
            paths["tables"] = output_dir / TABLES_FILE
            paths["tables"].write_text(self.format_tables(report), encoding="utf-8")
            paths.update(self._write_plot_data(report, output_dir))

            self.logger.info(f"Successfully wrote report with {report.clustering.k} clusters")
            return paths

        except ValueError:
            raise
        except Exception as e:
            error_msg = f"Failed to write report to {output_dir}: {e}"
            self.logger.error(error_msg)
            raise IOError(error_msg) from e

    def _build_summary_data(self, report: PosteriorReport) -> Dict[str, Any]:
        """
        Build the machine-readable summary structure (labels 1-based).
        """
        data = {
            "metadata": {
                "format_version": FORMAT_VERSION,
                "subset_size": int(len(report.clustering.subset_ids)),
                "dissimilarity": "1 - S",
            },
            "clustering": report.clustering.as_dict(),
            "clusters": {name: summary.as_dict() for name, summary in report.summaries.items()},
            "fixed_effects": [row.as_dict() for row in report.fixed_effects],
            "contrasts": {
                "reference": report.reference + 1,
                "rows": [row.as_dict() for row in report.contrasts],
            },
            "settings": report.settings,
        }
        if report.diagnostics is not None:
            data["diagnostics"] = report.diagnostics
        return data

    def _validate_summary_data(self, data: Dict[str, Any]) -> None:
        """
        Validate the summary structure.

        Raises:
            ValueError: If validation fails
        """
        for key in ("metadata", "clustering", "clusters", "fixed_effects", "contrasts"):
            if key not in data:
                raise ValueError(f"Missing required key: {key}")

        clustering = data["clustering"]
        if sum(clustering["sizes"]) != data["metadata"]["subset_size"]:
            raise ValueError("Cluster sizes do not sum to the subset size")

        for name, summary in data["clusters"].items():
            for cluster in summary["clusters"]:
                if cluster["lower"] is None or cluster["mean"] is None:
                    continue
                for lower, mean, upper in zip(cluster["lower"], cluster["mean"], cluster["upper"]):
                    if not lower <= mean <= upper:
                        raise ValueError(f"Interval of cluster {cluster['cluster']} ({name}) does not contain its mean")

    def write_labels(self, clustering: RepresentativeClustering, output_path: Path) -> Path:
        """Write Z* as CSV with 1-based observation rows and cluster labels."""
        frame = pd.DataFrame({"row": clustering.subset_ids + 1, "cluster": clustering.labels + 1})
        frame.to_csv(output_path, index=False)
        return output_path

    @staticmethod
    def read_labels(path: Path) -> tuple:
        """Read a labels CSV back into 0-based (subset_ids, labels)."""
        frame = pd.read_csv(path)
        return frame["row"].to_numpy(dtype=np.int64) - 1, frame["cluster"].to_numpy(dtype=np.int64) - 1

    def format_tables(self, report: PosteriorReport) -> str:
        """
        Plain-text tables of the clustering, cluster effects, fixed effects and contrasts.
        """
        sections = []
        clustering = report.clustering
        lines = [f"Representative clustering: k={clustering.k} ({clustering.method}, {clustering.k_rule})",
                 f"{'cluster':<10}{'size':>8}{'medoid':>10}"]
        for c in range(clustering.k):
            lines.append(f"{c + 1:<10}{int(clustering.sizes[c]):>8}{int(clustering.medoids[c]) + 1:>10}")
        sections.append("\n".join(lines))

        for name, summary in report.summaries.items():
            lines = [f"Cluster parameter '{name}' (level {summary.level:g})",
                     f"{'cluster':<10}{'column':<16}{'mean':>12}  interval"]
            for cluster in summary.clusters:
                if cluster.missing:
                    lines.append(f"{cluster.label + 1:<10}{'(empty)':<16}")
                    continue
                flag = " excluded" if cluster.excluded else ""
                for j, column in enumerate(summary.columns):
                    interval = "" if cluster.lower is None else f"[{cluster.lower[j]:.4f}, {cluster.upper[j]:.4f}]"
                    lines.append(f"{cluster.label + 1:<10}{column:<16}{cluster.mean[j]:>12.4f}  {interval}{flag}")
            sections.append("\n".join(lines))

        lines = ["Fixed effects", f"{'parameter':<28}{'mean':>12}  interval"]
        for row in report.fixed_effects:
            lines.append(f"{row.name:<28}{row.mean:>12.4f}  {_interval(row)}")
        sections.append("\n".join(lines))

        lines = [f"Contrasts against cluster {report.reference + 1}",
                 f"{'cluster':<10}{'column':<16}{'mean':>12}  interval"]
        for row in report.contrasts:
            lines.append(f"{row.cluster + 1:<10}{row.column:<16}{row.mean:>12.4f}  {_interval(row)}")
        sections.append("\n".join(lines))
        return "\n\n".join(sections) + "\n"

    def _write_plot_data(self, report: PosteriorReport, output_dir: Path) -> Dict[str, Path]:
        """CSV files for external plotting."""
        paths = {}
        rows = []
        for name, summary in report.summaries.items():
            for cluster in summary.clusters:
                if cluster.missing:
                    continue
                for j, column in enumerate(summary.columns):
                    rows.append({
                        "parameter": name, "cluster": cluster.label + 1, "size": cluster.size,
                        "excluded": cluster.excluded, "column": column, "mean": cluster.mean[j],
                        "lower": None if cluster.lower is None else cluster.lower[j],
                        "upper": None if cluster.upper is None else cluster.upper[j],
                    })
        paths["cluster_params"] = output_dir / "cluster_params.csv"
        pd.DataFrame(rows, columns=["parameter", "cluster", "size", "excluded", "column",
                                    "mean", "lower", "upper"]).to_csv(paths["cluster_params"], index=False)

        paths["fixed_effects"] = output_dir / "fixed_effects.csv"
        pd.DataFrame([row.as_dict() for row in report.fixed_effects],
                     columns=["name", "mean", "lower", "upper"]).to_csv(paths["fixed_effects"], index=False)

        paths["contrasts"] = output_dir / "contrasts.csv"
        pd.DataFrame([row.as_dict() for row in report.contrasts],
                     columns=["cluster", "reference", "column", "mean", "lower", "upper"]).to_csv(
            paths["contrasts"], index=False)

        if report.zones is not None:
            paths["zones"] = output_dir / "predictive_zones.csv"
            pd.DataFrame({"x": report.zones["x"], "y": report.zones["y"],
                          "cluster": report.zones["cluster"] + 1}).to_csv(paths["zones"], index=False)
        return paths

    def write_log(self, log: RunLog, output_path: Path) -> Path:
        """
        Write a run log to a JSON file.

        Returns:
            Path to the written file
        """
        try:
            output_path.parent.mkdir(parents=True, exist_ok=True)
            with open(output_path, "w", encoding="utf-8") as f:
                json.dump(log.as_dict(), f, indent=2, ensure_ascii=False)
            self.logger.info(f"Successfully wrote run log to {output_path}")
            return output_path
        except Exception as e:
            error_msg = f"Failed to write log to {output_path}: {e}"
            self.logger.error(error_msg)
            raise IOError(error_msg) from e
