"""JSON run-configuration loading, validation, and canonical re-emission."""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import channel as channel_mod
from . import plant as plant_mod
from .errors import ConfigError

_NOISE_KINDS = ("gaussian", "uniform", "two_point")
_FORMATS = ("csv", "png")


@dataclass(eq=False)
class RunConfig:
    params: plant_mod.PlantParams
    model: channel_mod.ChannelModel
    D: int
    x0: float
    horizon: int
    trials: int
    seed: int
    noise_kind: str
    gamma0_dist: list | None
    output_dir: str
    formats: list


def load_config(path):
    try:
        with open(path) as fh:
            document = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return from_document(document)


def _require(doc, key, kind, where):
    if key not in doc:
        raise ConfigError(f"missing {where}.{key}")
    value = doc[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}.{key} must be a number")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}.{key} must be an integer")
        return int(value)
    return value


def from_document(document):
    if not isinstance(document, dict):
        raise ConfigError("config root must be an object")
    for section in ("plant", "channel", "policy", "sim"):
        if section not in document or not isinstance(document[section], dict):
            raise ConfigError(f"missing section: {section}")

    pdoc = document["plant"]
    a = _require(pdoc, "a", float, "plant")
    c = _require(pdoc, "c", float, "plant")
    m_var = _require(pdoc, "M", float, "plant")
    big_b = _require(pdoc, "B", float, "plant")
    has_gain = "L" in pdoc
    has_factor = "abar_factor" in pdoc
    if has_gain == has_factor:
        raise ConfigError("plant must give exactly one of L and abar_factor")
    try:
        if has_gain:
            params = plant_mod.PlantParams.from_gain(
                a, _require(pdoc, "L", float, "plant"), c, m_var, big_b)
        else:
            params = plant_mod.PlantParams.from_abar_factor(
                a, _require(pdoc, "abar_factor", float, "plant"), c, m_var, big_b)
    except ValueError as exc:
        raise ConfigError(f"invalid plant constants: {exc}") from exc

    cdoc = document["channel"]
    layout = cdoc.get("layout", "rows")
    if layout not in ("rows", "columns"):
        raise ConfigError(f"channel.layout must be 'rows' or 'columns', "
                          f"got {layout!r}")
    try:
        p0 = np.array(_require(cdoc, "p0", None, "channel"), dtype=float)
        p1 = np.array(_require(cdoc, "p1", None, "channel"), dtype=float)
        e_vec = np.array(_require(cdoc, "e", None, "channel"), dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"channel arrays are malformed: {exc}") from exc
    if layout == "columns":
        # document lists the matrices column by column
        if p0.ndim == 2:
            p0 = p0.T
        if p1.ndim == 2:
            p1 = p1.T
    model = channel_mod.ChannelModel(p0, p1, e_vec)
    issues = channel_mod.validate(model)
    if issues:
        raise ConfigError("invalid channel: " + "; ".join(issues))

    odoc = document["policy"]
    hold_off = _require(odoc, "D", int, "policy")
    if hold_off < 1:
        raise ConfigError("policy.D must be a positive integer")

    sdoc = document["sim"]
    x0_raw = sdoc.get("x0")
    if isinstance(x0_raw, dict):
        if set(x0_raw.keys()) != {"times_B"}:
            raise ConfigError("sim.x0 object form must be {\"times_B\": factor}")
        factor = x0_raw["times_B"]
        if isinstance(factor, bool) or not isinstance(factor, (int, float)):
            raise ConfigError("sim.x0.times_B must be a number")
        x0 = float(factor) * params.B
    elif isinstance(x0_raw, (int, float)) and not isinstance(x0_raw, bool):
        x0 = float(x0_raw)
    else:
        raise ConfigError("sim.x0 must be a number or {\"times_B\": factor}")
    if not math.isfinite(x0):
        raise ConfigError("sim.x0 must be finite")
    horizon = _require(sdoc, "horizon", int, "sim")
    trials = _require(sdoc, "trials", int, "sim")
    seed = _require(sdoc, "seed", int, "sim")
    if horizon < 1 or trials < 1:
        raise ConfigError("sim.horizon and sim.trials must be at least 1")
    noise_kind = sdoc.get("noise_kind", "gaussian")
    if noise_kind not in _NOISE_KINDS:
        raise ConfigError(f"sim.noise_kind must be one of {_NOISE_KINDS}")
    gamma0_dist = sdoc.get("gamma0_dist")
    if gamma0_dist is not None:
        try:
            dist = np.array(gamma0_dist, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"sim.gamma0_dist is malformed: {exc}") from exc
        if dist.ndim != 1 or dist.shape[0] != model.n:
            raise ConfigError("sim.gamma0_dist length must match the channel")
        if (dist < 0).any() or abs(float(dist.sum()) - 1.0) > 1e-12:
            raise ConfigError("sim.gamma0_dist must be a distribution")
        gamma0_dist = [float(v) for v in dist]

    outdoc = document.get("output", {})
    if not isinstance(outdoc, dict):
        raise ConfigError("output section must be an object")
    output_dir = outdoc.get("directory", "out")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output.directory must be a nonempty string")
    formats = outdoc.get("formats", list(_FORMATS))
    if (not isinstance(formats, list)
            or any(f not in _FORMATS for f in formats)):
        raise ConfigError(f"output.formats entries must be among {_FORMATS}")

    return RunConfig(params=params, model=model, D=hold_off, x0=x0,
                     horizon=horizon, trials=trials, seed=seed,
                     noise_kind=noise_kind, gamma0_dist=gamma0_dist,
                     output_dir=output_dir, formats=list(formats))


def to_document(cfg):
    """Canonical document form: row layout, explicit gain, absolute x0.
    Parsing the result yields an equivalent RunConfig."""
    doc = {
        "plant": {"a": cfg.params.a, "L": cfg.params.L, "c": cfg.params.c,
                  "M": cfg.params.M, "B": cfg.params.B},
        "channel": {"layout": "rows",
                    "p0": [[float(v) for v in row] for row in cfg.model.p0],
                    "p1": [[float(v) for v in row] for row in cfg.model.p1],
                    "e": [float(v) for v in cfg.model.e]},
        "policy": {"D": cfg.D},
        "sim": {"x0": cfg.x0, "horizon": cfg.horizon, "trials": cfg.trials,
                "seed": cfg.seed, "noise_kind": cfg.noise_kind},
        "output": {"directory": cfg.output_dir, "formats": list(cfg.formats)},
    }
    if cfg.gamma0_dist is not None:
        doc["sim"]["gamma0_dist"] = list(cfg.gamma0_dist)
    return doc
