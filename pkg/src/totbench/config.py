"""Experiment configuration files and output-directory manifests.

Configs are flat key/value text with sections (INI syntax) so experiment
settings diff cleanly and round-trip losslessly. Manifests pin a config hash
and the SHA-256 of every input file, making reruns verifiable.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import sha256_file
from .retrieval import Bm25Params, StrategyKind


@dataclass
class ExperimentConfig:
    corpus_path: str
    requests_path: str
    index_path: str
    output_dir: str
    stemmer: str = "krovetz-light"
    include_titles: bool = True
    params: Bm25Params | None = None  # None means "tuned"
    strategy: StrategyKind = StrategyKind.TITLE_DESCRIPTION
    seed: int = 0
    ks: tuple[int, ...] = (10,)
    min_code_frequency: float = 0.2
    depth: int = 1000
    eval_split: str = "heldout"  # "heldout" or "all"
    use_query_tf: bool = False

    def validate(self) -> None:
        referenced = (
            ("corpus", self.corpus_path),
            ("requests", self.requests_path),
            ("index", self.index_path),
        )
        for label, p in referenced:
            if p and not Path(p).exists():
                raise FileNotFoundError(f"{label} path does not exist: {p}")
        if not -(2**63) <= self.seed < 2**63:
            raise ValueError("seed must fit in 64 bits")
        if self.eval_split not in ("heldout", "all"):
            raise ValueError(f"eval_split must be 'heldout' or 'all', got {self.eval_split!r}")


def save_config(config: ExperimentConfig, path) -> None:
    cp = configparser.ConfigParser()
    cp["paths"] = {
        "corpus": config.corpus_path,
        "requests": config.requests_path,
        "index": config.index_path,
        "output": config.output_dir,
    }
    cp["pipeline"] = {
        "stemmer": config.stemmer,
        "include_titles": str(config.include_titles).lower(),
    }
    cp["retrieval"] = {
        "params": "tuned" if config.params is None else f"{config.params.k1},{config.params.b}",
        "strategy": config.strategy.value,
        "use_query_tf": str(config.use_query_tf).lower(),
    }
    cp["experiment"] = {
        "seed": str(config.seed),
        "ks": ",".join(str(k) for k in config.ks),
        "min_code_frequency": str(config.min_code_frequency),
        "depth": str(config.depth),
        "eval_split": config.eval_split,
    }
    with open(path, "w", encoding="utf-8") as f:
        cp.write(f)


def load_config(path) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise FileNotFoundError(f"config file does not exist: {path}")
    raw_params = cp.get("retrieval", "params", fallback="tuned")
    if raw_params == "tuned":
        params = None
    else:
        k1_str, b_str = raw_params.split(",")
        params = Bm25Params(k1=float(k1_str), b=float(b_str))
    return ExperimentConfig(
        corpus_path=cp.get("paths", "corpus"),
        requests_path=cp.get("paths", "requests"),
        index_path=cp.get("paths", "index"),
        output_dir=cp.get("paths", "output"),
        stemmer=cp.get("pipeline", "stemmer", fallback="krovetz-light"),
        include_titles=cp.getboolean("pipeline", "include_titles", fallback=True),
        params=params,
        strategy=StrategyKind(cp.get("retrieval", "strategy", fallback="both")),
        seed=cp.getint("experiment", "seed", fallback=0),
        ks=tuple(int(k) for k in cp.get("experiment", "ks", fallback="10").split(",")),
        min_code_frequency=cp.getfloat("experiment", "min_code_frequency", fallback=0.2),
        depth=cp.getint("experiment", "depth", fallback=1000),
        eval_split=cp.get("experiment", "eval_split", fallback="heldout"),
        use_query_tf=cp.getboolean("retrieval", "use_query_tf", fallback=False),
    )


@dataclass
class Manifest:
    command: str
    settings: dict
    inputs: dict[str, str] = field(default_factory=dict)  # path -> sha256

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.settings, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def to_json(self) -> str:
        return json.dumps(
            {
                "command": self.command,
                "config_hash": self.config_hash,
                "settings": self.settings,
                "inputs": self.inputs,
            },
            sort_keys=True,
            indent=2,
        )


def write_manifest(out_dir, command: str, settings: dict, input_paths: dict[str, str]) -> Path:
    """Record settings hash and input checksums under the output directory."""
    manifest = Manifest(command=command, settings=settings)
    for label, p in sorted(input_paths.items()):
        manifest.inputs[label] = sha256_file(p)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "manifest.json"
    path.write_text(manifest.to_json() + "\n", encoding="utf-8")
    return path
