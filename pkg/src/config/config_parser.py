"""
Strict parser for the ``key = value`` configuration format.

Grammar::

    # comment
    [section]
    key = value

Sections are ``[model] [priors] [run] [postprocess] [scenario]``. Lists are
comma-separated; matrices are a scalar (multiple of the identity) or rows
separated by ``;``. Unknown sections or keys, malformed values and
constraint violations raise ``SpecError`` naming the line.
"""

import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from ..models.errors import SpecError
from ..models.model_spec import Hyperparameters, ModelSpec, RunConfig
from ..simulation.scenario import ScenarioConfig

logger = logging.getLogger(__name__)

Parser = Callable[[str], Any]
Check = Optional[Callable[[Any], Optional[str]]]


def _int(text: str) -> int:
    return int(text)


def _float(text: str) -> float:
    value = float(text)
    if not np.isfinite(value):
        raise ValueError(f"expected a finite number, got {text}")
    return value


def _bool(text: str) -> bool:
    mapping = {"true": True, "false": False}
    if text.lower() not in mapping:
        raise ValueError(f"expected true or false, got {text}")
    return mapping[text.lower()]


def _str(text: str) -> str:
    if not text:
        raise ValueError("expected a non-empty value")
    return text


def _names(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(_float(item) for item in _names(text))


def _ints(text: str) -> Tuple[int, ...]:
    return tuple(int(item) for item in _names(text))


def _optional_int(text: str) -> Optional[int]:
    return None if text.lower() == "none" else int(text)


def _pair(text: str) -> Tuple[float, float]:
    values = _floats(text)
    if len(values) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {text}")
    return values


def _matrix(text: str):
    rows = [row for row in text.split(";") if row.strip()]
    if len(rows) == 1 and "," not in rows[0]:
        return _float(rows[0])
    matrix = np.array([_floats(row) for row in rows])
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got {len(rows)} rows")
    return matrix


def _at_least(bound):
    return lambda value: None if value >= bound else f"must be >= {bound}"


def _positive(value):
    return None if value > 0 else "must be positive"


def _level(value):
    return None if 0.0 <= value < 1.0 else "must lie in [0, 1)"


@dataclass
class PostprocessConfig:
    subset_size: Optional[int] = 10000
    max_draws: Optional[int] = 8000
    k_max: int = 30
    k: Optional[int] = None
    cluster_level: float = 0.95
    fixed_level: float = 0.95
    contrast_level: float = 0.90
    reference: int = 1              # 1-based reference cluster of the contrasts
    min_size_fraction: float = 0.01
    dissimilarity: str = "1-S"
    allow_sampled_pam: bool = False
    pdf: bool = False
    zones: bool = True


@dataclass
class StudyConfig:
    n_reps: int = 25
    with_benchmarks: bool = True
    subset_size: Optional[int] = 2000


@dataclass
class ProfileConfig:
    """Everything one configuration file declares; ``spec`` is None without a [model] section."""
    spec: Optional[ModelSpec]
    hyper: Hyperparameters
    run: RunConfig
    postprocess: PostprocessConfig = field(default_factory=PostprocessConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    study: StudyConfig = field(default_factory=StudyConfig)

    @classmethod
    def default(cls) -> "ProfileConfig":
        return cls(spec=None, hyper=Hyperparameters(), run=RunConfig())


# section -> key -> (target, attribute, parser, check)
SCHEMA: Dict[str, Dict[str, Tuple[str, str, Parser, Check]]] = {
    "model": {
        "outcome": ("spec", "outcome", _str, None),
        "x_cols": ("spec", "x_cols", _names, None),
        "u_cont_cols": ("spec", "u_cont_cols", _names, None),
        "u_cat_cols": ("spec", "u_cat_cols", _names, None),
        "fe_cols": ("spec", "fe_cols", _names, None),
        "re_cols": ("spec", "re_cols", _names, None),
        "int_cols": ("spec", "int_cols", _names, None),
        "C": ("spec", "C", _int, _at_least(2)),
        "standardize": ("spec", "standardize", _bool, None),
        "spline_basis": ("spec", "spline_basis", _int, _at_least(0)),
        "spline_degree": ("spec", "spline_degree", _int, _at_least(0)),
        "spline_domain": ("spec", "spline_domain", _pair, None),
    },
    "priors": {
        "lambda": ("hyper", "lam", _float, _positive),
        "a_sigma": ("hyper", "a_sigma", _float, _positive),
        "b_sigma": ("hyper", "b_sigma", _float, _positive),
        "psi_re": ("hyper", "psi_re", _matrix, None),
        "nu_re": ("hyper", "nu_re", _float, _positive),
        "psi_int": ("hyper", "psi_int", _matrix, None),
        "nu_int": ("hyper", "nu_int", _float, _positive),
        "lambda0": ("hyper", "lambda0", _float, _positive),
        "nu0": ("hyper", "nu0", _float, _positive),
        "phi0": ("hyper", "phi0", _matrix, None),
        "alpha_dir": ("hyper", "alpha_dir", _float, _positive),
        "a_zeta": ("hyper", "a_zeta", _float, _positive),
        "b_zeta": ("hyper", "b_zeta", _float, _positive),
    },
    "run": {
        "iterations": ("run", "iterations", _int, _at_least(1)),
        "burn_in": ("run", "burn_in", _int, _at_least(0)),
        "thin": ("run", "thin", _int, _at_least(1)),
        "seed": ("run", "seed", _int, _at_least(0)),
        "n_chains": ("run", "n_chains", _int, _at_least(1)),
        "record_loglik": ("run", "record_loglik", _bool, None),
    },
    "postprocess": {
        "subset_size": ("postprocess", "subset_size", _optional_int, None),
        "max_draws": ("postprocess", "max_draws", _optional_int, None),
        "k_max": ("postprocess", "k_max", _int, _at_least(2)),
        "k": ("postprocess", "k", _optional_int, None),
        "cluster_level": ("postprocess", "cluster_level", _float, _level),
        "fixed_level": ("postprocess", "fixed_level", _float, _level),
        "contrast_level": ("postprocess", "contrast_level", _float, _level),
        "reference": ("postprocess", "reference", _int, _at_least(1)),
        "min_size_fraction": ("postprocess", "min_size_fraction", _float, _level),
        "dissimilarity": ("postprocess", "dissimilarity", _str,
                          lambda value: None if value == "1-S" else "only '1-S' is supported"),
        "allow_sampled_pam": ("postprocess", "allow_sampled_pam", _bool, None),
        "pdf": ("postprocess", "pdf", _bool, None),
        "zones": ("postprocess", "zones", _bool, None),
    },
    "scenario": {
        "m": ("scenario", "m", _int, _at_least(1)),
        "waves": ("scenario", "waves", _int, _at_least(1)),
        "scenario": ("scenario", "scenario", _int, lambda value: None if value in (1, 2) else "must be 1 or 2"),
        "within_sd": ("scenario", "within_sd", _float, _positive),
        "correlation": ("scenario", "correlation", _float,
                        lambda value: None if -1.0 < value < 1.0 else "must lie in (-1, 1)"),
        "sparse_weight": ("scenario", "sparse_weight", _float, _positive),
        "sparse_clusters": ("scenario", "sparse_clusters", _ints, None),
        "intercepts": ("scenario", "intercepts", _floats, None),
        "slopes": ("scenario", "slopes", _floats, None),
        "beta": ("scenario", "beta", _floats, None),
        "beta_seed": ("scenario", "beta_seed", _int, _at_least(0)),
        "wre_scale": ("scenario", "wre_scale", _float, _positive),
        "sigma2": ("scenario", "sigma2", _float, _positive),
        "n_basis": ("scenario", "n_basis", _int, _at_least(1)),
        "spline_degree": ("scenario", "spline_degree", _int, _at_least(0)),
        "seed": ("scenario", "seed", _int, _at_least(0)),
        "n_reps": ("study", "n_reps", _int, _at_least(1)),
        "with_benchmarks": ("study", "with_benchmarks", _bool, None),
        "study_subset_size": ("study", "subset_size", _optional_int, None),
    },
}


def parse_text(text: str, source: str = "<config>") -> ProfileConfig:
    """
    Parse configuration text.

    Raises:
        SpecError: Unknown section/key, malformed value or violated constraint (with line number)
    """
    values: Dict[str, Dict[str, Any]] = {target: {} for target in
                                         ("spec", "hyper", "run", "postprocess", "scenario", "study")}
    lines: Dict[str, int] = {}
    section: Optional[str] = None
    seen = set()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise SpecError(f"unknown section [{section}] in {source}", line=number)
            lines.setdefault(section, number)
            continue
        if "=" not in line:
            raise SpecError(f"expected 'key = value', got '{line}'", line=number)
        if section is None:
            raise SpecError("key outside of a section", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise SpecError(f"unknown key '{key}' in [{section}]", line=number)
        if (section, key) in seen:
            raise SpecError(f"duplicate key '{key}' in [{section}]", line=number)
        seen.add((section, key))
        target, attribute, parser, check = SCHEMA[section][key]
        try:
            parsed = parser(value)
        except ValueError as e:
            raise SpecError(f"invalid value for '{key}': {e}", line=number) from e
        if check is not None and parsed is not None:
            problem = check(parsed)
            if problem:
                raise SpecError(f"'{key}' {problem}, got {value}", line=number)
        values[target][attribute] = parsed
        lines[f"{target}.{attribute}"] = number

    def build(target: str, cls, section: str):
        try:
            return cls(**values[target])
        except SpecError as e:
            culprit = next((lines[f"{target}.{name}"] for name in values[target] if name in str(e)), None)
            raise SpecError(str(e), line=culprit or lines.get(section)) from e

    spec = build("spec", ModelSpec, "model") if "model" in lines else None
    return ProfileConfig(
        spec=spec,
        hyper=build("hyper", Hyperparameters, "priors"),
        run=build("run", RunConfig, "run"),
        postprocess=PostprocessConfig(**values["postprocess"]),
        scenario=build("scenario", ScenarioConfig, "scenario"),
        study=StudyConfig(**values["study"]),
    )


def load_config(path: Path) -> ProfileConfig:
    path = Path(path)
    if not path.is_file():
        raise SpecError(f"configuration file not found: {path}")
    config = parse_text(path.read_text(encoding="utf-8"), source=str(path))
    logger.info(f"Loaded configuration from {path}")
    return config


def parse_config(path: Path) -> Tuple[ModelSpec, Hyperparameters, RunConfig]:
    """
    Model specification, hyperparameters and run settings of a configuration file.

    Raises:
        SpecError: If the file is invalid or has no [model] section
    """
    config = load_config(path)
    if config.spec is None:
        raise SpecError(f"{path} has no [model] section")
    return config.spec, config.hyper, config.run


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(item) for item in value)
    if isinstance(value, np.ndarray):
        return "; ".join(", ".join(repr(float(v)) for v in row) for row in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(config: ProfileConfig) -> str:
    """Effective configuration in the same grammar; parsing the result gives an equal config."""
    objects = {"spec": config.spec, "hyper": config.hyper, "run": config.run,
               "postprocess": config.postprocess, "scenario": config.scenario, "study": config.study}
    out: List[str] = []
    for section, keys in SCHEMA.items():
        entries = []
        for key, (target, attribute, parser, _) in keys.items():
            owner = objects[target]
            if owner is None:
                continue
            value = getattr(owner, attribute)
            if value is None:
                if parser is _optional_int:
                    entries.append(f"{key} = none")
                continue
            entries.append(f"{key} = {_format(value)}")
        if entries:
            out.append(f"[{section}]")
            out.extend(entries)
            out.append("")
    return "\n".join(out)


def with_overrides(config: ProfileConfig, **overrides) -> ProfileConfig:
    """
    Apply CLI overrides (iterations, burn_in, seed, C, subset_size, level); None entries are ignored.

    Raises:
        SpecError: If an override violates a constraint
    """
    overrides = {key: value for key, value in overrides.items() if value is not None}
    run_fields = {f.name for f in fields(RunConfig)}
    run = replace(config.run, **{k: v for k, v in overrides.items() if k in run_fields})
    spec = config.spec
    if "C" in overrides and spec is not None:
        spec = replace(spec, C=overrides["C"])
    postprocess = config.postprocess
    if "subset_size" in overrides:
        postprocess = replace(postprocess, subset_size=overrides["subset_size"])
    if "level" in overrides:
        level = overrides["level"]
        if _level(level):
            raise SpecError(f"credible level must lie in [0, 1), got {level}")
        postprocess = replace(postprocess, contrast_level=level)
    return replace(config, spec=spec, run=run, postprocess=postprocess)
