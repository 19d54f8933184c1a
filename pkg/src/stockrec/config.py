"""Flat key = value config files for the run and synth commands."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .errors import ValidationError
from .synth import DEFAULT_BETA, DEFAULT_INTERCEPT, SynthConfig

ALL_METHODS = ("equal", "min_variance", "max_sharpe")


def parse_kv(path) -> dict:
    """Parse `key = value` lines; '#' starts a comment; blank lines ignored."""
    out = {}
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _get(kv, key, cast, default):
    if key not in kv:
        return default
    try:
        return cast(kv[key])
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"config key {key!r}: bad value {kv[key]!r}") from exc


def _date(text):
    return date.fromisoformat(text)


@dataclass
class RunConfig:
    fundamentals: Path
    prices: Path
    universe: Path
    start: date | None = None
    end: date | None = None
    in_sample_boundary: date | None = None
    min_train_quarters: int = 16
    max_train_quarters: int = 40
    pick_fraction: float = 0.2
    cost_rate: float = 0.001
    rf: float = 0.015
    methods: tuple = ALL_METHODS
    ub_base: float = 0.05
    initial_value: float = 1_000_000.0
    model_overrides: dict = field(default_factory=dict)
    seed: int = 0

    def validate(self):
        for name in ("pick_fraction", "cost_rate", "rf", "ub_base"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValidationError(f"{name} must be in [0, 1], got {v}")
        if self.pick_fraction == 0:
            raise ValidationError("pick_fraction must be positive")
        if self.min_train_quarters > self.max_train_quarters:
            raise ValidationError(
                f"min_train_quarters {self.min_train_quarters} exceeds "
                f"max_train_quarters {self.max_train_quarters}"
            )
        for m in self.methods:
            if m not in ALL_METHODS:
                raise ValidationError(f"unknown allocation method {m!r}")
        return self


def load_run_config(path, seed_override=None) -> RunConfig:
    kv = parse_kv(path)
    base = Path(path).parent
    data_dir = Path(kv.get("data_dir", "."))
    if not data_dir.is_absolute():
        data_dir = base / data_dir

    overrides = {}
    known_prefixes = ("ols.", "ridge.", "stepwise_aic.", "random_forest.", "gbm.")
    for key, value in kv.items():
        for prefix in known_prefixes:
            if key.startswith(prefix):
                family = prefix[:-1]
                hp = key[len(prefix):]
                overrides.setdefault(family, {})[hp] = _auto_cast(value)

    cfg = RunConfig(
        fundamentals=data_dir / kv.get("fundamentals", "fundamentals.csv"),
        prices=data_dir / kv.get("prices", "prices.csv"),
        universe=data_dir / kv.get("universe", "universe.csv"),
        start=_get(kv, "start", _date, None),
        end=_get(kv, "end", _date, None),
        in_sample_boundary=_get(kv, "in_sample_boundary", _date, None),
        min_train_quarters=_get(kv, "min_train_quarters", int, 16),
        max_train_quarters=_get(kv, "max_train_quarters", int, 40),
        pick_fraction=_get(kv, "pick_fraction", float, 0.2),
        cost_rate=_get(kv, "cost_rate", float, 0.001),
        rf=_get(kv, "rf", float, 0.015),
        methods=tuple(_get(kv, "methods", lambda s: [m.strip() for m in s.split(",")], list(ALL_METHODS))),
        ub_base=_get(kv, "ub_base", float, 0.05),
        initial_value=_get(kv, "initial_value", float, 1_000_000.0),
        model_overrides=overrides,
        seed=_get(kv, "seed", int, 0),
    )
    if seed_override is not None:
        cfg.seed = seed_override
    return cfg.validate()


def _auto_cast(text):
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    if text.lower() in ("none", "null"):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def load_synth_config(path, seed_override=None) -> SynthConfig:
    kv = parse_kv(path)
    beta = dict(DEFAULT_BETA)
    explicit = {k[5:]: float(v) for k, v in kv.items() if k.startswith("beta_") and k != "beta_intercept"}
    if explicit:
        beta = explicit
    cfg = SynthConfig(
        n_sectors=_get(kv, "n_sectors", int, 2),
        stocks_per_sector=_get(kv, "stocks_per_sector", int, 12),
        quarters=_get(kv, "quarters", int, 26),
        beta=beta,
        intercept=_get(kv, "beta_intercept", float, DEFAULT_INTERCEPT),
        noise_sigma=_get(kv, "noise_sigma", float, 0.005),
        price_vol=_get(kv, "price_vol", float, 0.01),
        missing_rate=_get(kv, "missing_rate", float, 0.0),
        start=_get(kv, "start", _date, date(1995, 1, 1)),
        seed=_get(kv, "seed", int, 12345),
    )
    if seed_override is not None:
        cfg.seed = seed_override
    return cfg
