"""JSON experiment configuration.

Schema (every section and key is optional; unknown keys are rejected)::

    {
      "system":  {"n_rx": 4, "max_layers": 2, "prbs": 4, "modulations": [2, 4, 6],
                  "dmrs_symbols": [2, 11]},
      "channel": {"kind": "block" | "tdl", "profile": "tdl_a" | "<path.json>",
                  "speed_range": [0, 56] | null, "doppler_range": [0, 325],
                  "delay_spread_range": [1e-8, 3e-7], "carrier_hz": 2.14e9,
                  "subcarrier_spacing_hz": 3e4},
      "model":   {"n_blocks": 4, "filters": 8, "kernel_size": 3, ...},
      "train":   {"batch_size": 8, "iterations": 2000, "lr": 0.001, "lam": 0.01,
                  "snr_range_db": [-4, 16], "randomize_layers": true,
                  "noise_estimate": "estimate" | "genie", "checkpoint_every": 0},
      "eval":    {"checkpoint": "<path.mdxc>", "receivers": ["mdx", "ls_lmmse", ...],
                  "snr_db": [0, 10, 20], "num_tti": 500, "batch_size": 50,
                  "noise_estimate": "estimate",
                  "settings": [{"n_rx": 16, "n_layers": 4, "prbs": 4, "bits_per_symbol": 4}]},
      "flops":   {"bits_per_symbol": 6, "settings": [{"n_rx": 4, "n_tx": 2, "prbs": 273}]},
      "run":     {"seed": 0, "out": "runs/default"}
    }

Relative file paths (profile, checkpoint, ``run.out``) are resolved against the
directory of the config file; an ``--out`` given on the command line is not.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from mdx.channel import load_profile
from mdx.errors import ConfigError
from mdx.evaluate import RECEIVERS, EvalConfig
from mdx.model import ModelConfig
from mdx.sim import ChannelConfig
from mdx.train import TrainConfig

SECTIONS = ("system", "channel", "model", "train", "eval", "flops", "run")
_SYSTEM_KEYS = ("n_rx", "max_layers", "prbs", "modulations", "dmrs_symbols")
_TRAIN_KEYS = ("batch_size", "iterations", "lr", "lam", "snr_range_db", "randomize_layers",
               "noise_estimate", "checkpoint_every")
_EVAL_KEYS = ("checkpoint", "receivers", "snr_db", "num_tti", "batch_size", "noise_estimate",
              "settings")
_SETTING_KEYS = ("n_rx", "n_layers", "prbs", "bits_per_symbol")


def _tuples(d):
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


def _check_keys(section, d, allowed):
    if not isinstance(d, dict):
        raise ConfigError(f"section {section!r} must be an object")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(extra)}")


def _build(cls, section, d):
    _check_keys(section, d, [f.name for f in fields(cls)])
    try:
        return cls(**_tuples(d))
    except TypeError as exc:
        raise ConfigError(f"bad {section!r} section: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    base_dir: Path
    seed: int = 0
    out: str = "runs/default"
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    model: ModelConfig = field(default_factory=ModelConfig)

    def config_hash(self):
        doc = {**self.raw, "run": {**self.raw.get("run", {}), "seed": self.seed}}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]

    def resolve(self, path):
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def system(self):
        return self.raw.get("system", {})

    def train_config(self):
        t = self.raw.get("train", {})
        try:
            return TrainConfig(**_tuples(self.system()), **_tuples(t), seed=self.seed,
                               channel=self.channel, model=self.model)
        except TypeError as exc:
            raise ConfigError(f"bad train/system values: {exc}") from exc

    def eval_configs(self):
        """One :class:`EvalConfig` per eval setting (the system section when none are listed)."""
        e = self.raw.get("eval", {})
        sys_ = self.system()
        base = {
            "n_rx": sys_.get("n_rx", 4),
            "n_layers": sys_.get("max_layers", 2),
            "prbs": sys_.get("prbs", 4),
            "bits_per_symbol": (sys_.get("modulations") or [2])[0],
        }
        settings = e.get("settings") or [{}]
        out = []
        for s in settings:
            _check_keys("eval.settings", s, _SETTING_KEYS)
            out.append(_eval_config(
                **{**base, **s}, snr_db=tuple(e.get("snr_db", (10.0,))),
                n_slots=e.get("num_tti", 500), batch_size=e.get("batch_size", 50),
                noise_estimate=e.get("noise_estimate", "estimate"), seed=self.seed,
                receivers=tuple(e.get("receivers", RECEIVERS)),
                dmrs_symbols=tuple(sys_.get("dmrs_symbols", (2, 11))), channel=self.channel))
        return out

    def checkpoint_path(self):
        ck = self.raw.get("eval", {}).get("checkpoint")
        return None if ck is None else self.resolve(ck)

    def flops_settings(self):
        f = self.raw.get("flops", {})
        _check_keys("flops", f, ("bits_per_symbol", "settings"))
        settings = f.get("settings") or [{"n_rx": 4, "n_tx": 2, "prbs": 273},
                                         {"n_rx": 16, "n_tx": 4, "prbs": 273}]
        for s in settings:
            _check_keys("flops.settings", s, ("n_rx", "n_tx", "prbs"))
        return f.get("bits_per_symbol", 6), settings


def _eval_config(**kw):
    try:
        return EvalConfig(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad eval values: {exc}") from exc


def parse_config(doc, base_dir=".", seed=None, out=None):
    """Validate a config document and build the typed sections."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys("config", doc, SECTIONS)
    _check_keys("system", doc.get("system", {}), _SYSTEM_KEYS)
    _check_keys("train", doc.get("train", {}), _TRAIN_KEYS)
    _check_keys("eval", doc.get("eval", {}), _EVAL_KEYS)
    run = doc.get("run", {})
    _check_keys("run", run, ("seed", "out"))
    base = Path(base_dir)
    ch = dict(doc.get("channel", {}))
    if "profile" in ch and str(ch["profile"]).endswith(".json"):
        p = Path(ch["profile"])
        ch["profile"] = str(p if p.is_absolute() else base / p)
        if not Path(ch["profile"]).is_file():
            raise ConfigError(f"channel profile {ch['profile']} does not exist")
    if ch.get("kind") == "tdl":
        try:
            load_profile(ch.get("profile", "tdl_a"))
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load channel profile: {exc}") from exc
    cfg = ExperimentConfig(
        raw=doc, base_dir=base,
        seed=int(run.get("seed", 0) if seed is None else seed),
        out=str(out if out is not None else base / run.get("out", "runs/default")),
        channel=_build(ChannelConfig, "channel", ch),
        model=_build(ModelConfig, "model", doc.get("model", {})),
    )
    # surface bad train/eval values at load time
    if "train" in doc or "system" in doc:
        cfg.train_config()
    if "eval" in doc:
        cfg.eval_configs()
    return cfg


def load_config(path, seed=None, out=None):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc, path.parent, seed, out)
