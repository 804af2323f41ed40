"""Experiment configuration: a flat-key `key = value` text format
covering the model parameters, the Monte Carlo settings, and the
Fokker-Planck grid settings.  Unknown keys are errors so typos cannot
silently fall back to defaults."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .fokker_planck import FpConfig
from .ioutil import atomic_write, fmt
from .model import ModelParams, ParameterError, ValueFunctionSpec
from .montecarlo import McConfig

# section name -> (dataclass, key prefix); value_fn keys are lower-cased
# field names (r, l_gain, l_loss), other sections use field names as-is.
_SECTIONS = {
    "model": ModelParams,
    "value_fn": ValueFunctionSpec,
    "mc": McConfig,
    "fp": FpConfig,
}


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    params: ModelParams = field(default_factory=ModelParams)
    mc: McConfig = field(default_factory=McConfig)
    fp: FpConfig = field(default_factory=FpConfig)

    def validate(self):
        self.mc.validate()
        self.fp.validate()
        # ModelParams and ValueFunctionSpec validate on construction.


def _field_key(section: str, name: str) -> str:
    return f"{section}.{name.lower()}"


def known_keys() -> dict[str, tuple[str, str, type]]:
    """key -> (section, field name, field type)."""
    out: dict[str, tuple[str, str, type]] = {"experiment.name": ("", "name", str)}
    for section, cls in _SECTIONS.items():
        for f in dataclasses.fields(cls):
            if section == "model" and f.name == "value_fn":
                continue
            out[_field_key(section, f.name)] = (section, f.name, f.type)
    return out


_KEYS = known_keys()


def _parse_value(key: str, raw: str, ftype) -> object:
    ft = str(ftype)
    try:
        if "int" in ft:
            return int(raw)
        if "float" in ft:
            return float(raw)
    except ValueError as exc:
        raise ParameterError(key, f"cannot parse {raw!r}: {exc}") from None
    return raw


def load_config(path) -> ExperimentConfig:
    """Parse a flat-key config file; every key is validated and unknown
    keys raise ParameterError naming the key."""
    values: dict[str, object] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if not sep:
                raise ParameterError(key or f"line {lineno}",
                                     "expected `key = value`")
            if key not in _KEYS:
                raise ParameterError(key, "unknown configuration key")
            _, fname, ftype = _KEYS[key]
            values[key] = _parse_value(key, raw, ftype)

    def collect(section: str, cls):
        kwargs = {}
        for f in dataclasses.fields(cls):
            key = _field_key(section, f.name)
            if key in values:
                kwargs[f.name] = values[key]
        return kwargs

    vf = ValueFunctionSpec(**collect("value_fn", ValueFunctionSpec))
    model_kwargs = collect("model", ModelParams)
    model_kwargs["value_fn"] = vf
    cfg = ExperimentConfig(
        name=str(values.get("experiment.name", "experiment")),
        params=ModelParams(**model_kwargs),
        mc=McConfig(**collect("mc", McConfig)),
        fp=FpConfig(**collect("fp", FpConfig)),
    )
    cfg.validate()
    return cfg


def save_config(path, cfg: ExperimentConfig) -> None:
    """Write every known key (including defaults) so a saved config is
    self-describing; load -> save -> load is the identity."""
    lines = [f"experiment.name = {cfg.name}"]
    objs = {"model": cfg.params, "value_fn": cfg.params.value_fn,
            "mc": cfg.mc, "fp": cfg.fp}
    for section, obj in objs.items():
        for f in dataclasses.fields(obj):
            if f.name == "value_fn":
                continue
            val = getattr(obj, f.name)
            if isinstance(val, float):
                val = fmt(val)
            lines.append(f"{_field_key(section, f.name)} = {val}")
    atomic_write(path, "\n".join(lines) + "\n")
