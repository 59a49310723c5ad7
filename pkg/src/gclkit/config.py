"""Plain-text run configuration: one `key = value` per line, dotted sections.

Unknown keys are rejected so a typo can't silently fall back to a default.
Values are coerced to the type of the corresponding default.
"""

DEFAULTS = {
    "data.n_speakers": 64,
    "data.utterances_per_speaker": 20,
    "data.feature_dim": 32,
    "data.intra_spread": 0.6,
    "data.inter_spread": 1.0,
    "data.holdout_speakers": 16,
    "data.labeled_speakers": 16,
    "train.mode": "supervised",
    "train.steps": 600,
    "train.lr": 0.05,
    "train.momentum": 0.9,
    "train.batch_slots": 40,
    "train.k_prime": 3,
    "train.unlabeled_fraction": 0.10,
    "train.affinity": "type3",
    "train.kernel": "affine-cosine",
    "train.hidden_dim": 64,
    "train.embedding_dim": 16,
    "train.eval_every": 0,
    "kernel.tau": 0.5,
    "kernel.gamma": 10.0,
    "kernel.beta": -5.0,
    "loss.epsilon": 1e-12,
    "loss.ratio_transform": "negated-ratio",
    "affinity.relaxed_unlabeled": False,
    "augment.noise_sigma": 0.5,
    "augment.gain_low": 0.8,
    "augment.gain_high": 1.2,
    "augment.dropout_rate": 0.1,
    "eval.n_pairs": 400,
}


class ConfigError(ValueError):
    pass


def _coerce(key, raw):
    default = DEFAULTS[key]
    if isinstance(default, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config(text):
    """Parse config text into a full key -> value dict (defaults filled in)."""
    values = dict(DEFAULTS)
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def load_config(path=None):
    if path is None:
        return dict(DEFAULTS)
    with open(path) as fh:
        return parse_config(fh.read())


def format_defaults():
    return "\n".join(f"{k} = {v}" for k, v in DEFAULTS.items())
