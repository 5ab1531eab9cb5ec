"""
Postprocess command: similarity matrix, representative clustering, pooled
cluster summaries, fixed effects, contrasts and reports.
"""

import math
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from ..config.config_parser import PostprocessConfig, ProfileConfig
from ..models.errors import SpecError
from ..postprocess.pam import representative_clustering
from ..postprocess.pdf_report import pdf_report
from ..postprocess.report_writer import PosteriorReport
from ..postprocess.similarity import build_similarity, default_subset
from ..postprocess.summary import (
    AssignmentProfile,
    aggregate_cluster_params,
    allocation_weights,
    apply_min_size,
    cluster_effect_contrasts,
    fixed_effect_summary,
    predictive_zone_grid,
)
from ..sampler.chain_store import ChainStore
from ..sampler.diagnostics import diagnostics
from ..stochastics.rng import RngStream
from .base import CommandService

SIMILARITY_FILE = "similarity.npz"
SUBSET_STREAM = 101
PAM_STREAM = 102


class PostprocessService(CommandService):
    name = "postprocess"

    def _run(self, output_dir: Path, config: Optional[ProfileConfig] = None, chain_dir: Optional[Path] = None,
             reference: Optional[int] = None, k: Optional[int] = None, pdf: Optional[bool] = None) -> Dict[str, Any]:
        if chain_dir is None:
            raise SpecError("postprocess needs a chain directory (--chain)")
        settings: PostprocessConfig = config.postprocess if config is not None else PostprocessConfig()
        seed = config.run.seed if config is not None else 0
        chain = ChainStore.load(Path(chain_dir))
        meta = chain.meta

        subset = default_subset(meta.n, settings.subset_size, RngStream(seed, stream_id=SUBSET_STREAM))
        similarity = build_similarity(chain, subset, workers=self.runtime.workers, max_draws=settings.max_draws)
        paths: Dict[str, Any] = {"similarity": str(similarity.save(output_dir / SIMILARITY_FILE))}

        clustering = representative_clustering(
            similarity.dissimilarity(), subset, k_max=settings.k_max, k=k if k is not None else settings.k,
            max_exact=self.runtime.max_exact_pam, allow_sampled=settings.allow_sampled_pam,
            rng=RngStream(seed, stream_id=PAM_STREAM))

        weights = allocation_weights(chain, subset, clustering.labels, clustering.k)
        parameters = ["effect", "gamma"]
        if meta.u_cont_names:
            parameters += ["mu", "sigma"]
        if meta.u_cat_names:
            parameters.append("phi")
        min_size = math.ceil(settings.min_size_fraction * subset.size)
        summaries = {}
        for which in parameters:
            summary = aggregate_cluster_params(chain, subset, clustering.labels, which,
                                               level=settings.cluster_level, k=clustering.k, weights=weights)
            summaries[which] = apply_min_size(summary, min_size)

        reference = (reference if reference is not None else settings.reference) - 1
        contrasts = cluster_effect_contrasts(summaries["effect"], reference, level=settings.contrast_level)
        fixed_effects = fixed_effect_summary(chain, level=settings.fixed_level)

        zones = None
        if settings.zones and len(meta.u_cont_names) >= 2 and summaries["mu"].reported():
            profile = AssignmentProfile.from_summaries(summaries["mu"], summaries["sigma"], summaries.get("phi"),
                                                       meta.n_categories)
            spread = 3.0 * np.sqrt(np.stack([np.diag(s) for s in profile.sigma]))
            zones = predictive_zone_grid(profile, (profile.mu - spread).min(axis=0),
                                         (profile.mu + spread).max(axis=0))

        report = PosteriorReport(
            clustering=clustering, summaries=summaries, fixed_effects=fixed_effects, contrasts=contrasts,
            reference=reference, diagnostics=diagnostics(chain).as_dict(), zones=zones,
            settings={
                "chain": str(chain_dir), "subset_size": int(subset.size), "draws_used": similarity.n_draws,
                "k_max": settings.k_max, "cluster_level": settings.cluster_level,
                "fixed_level": settings.fixed_level, "contrast_level": settings.contrast_level,
                "min_size": min_size, "dissimilarity": settings.dissimilarity,
            },
        )
        paths.update({name: str(path) for name, path in self.report_writer.write_report(report, output_dir).items()})
        if pdf if pdf is not None else settings.pdf:
            paths["pdf"] = str(pdf_report(report, output_dir / "summary.pdf"))

        metrics = {"k": float(clustering.k), "excluded": float(len(summaries["effect"].excluded)),
                   "draws_used": float(similarity.n_draws)}
        return {"paths": paths, "metrics": metrics, "seed": seed, "settings": report.settings}
