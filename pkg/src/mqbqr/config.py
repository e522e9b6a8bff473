"""JSON run configuration: loading, preset inheritance and validation."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .model import ConverterParams, ModelVariant, Parasitics

SCHEMA = "mqbqr/1"
SCENARIOS = ("simulate", "design", "stress", "bode", "losses", "compare", "train", "closedloop")
OUTPUT_ENV = "MQBQR_OUTPUT_DIR"

PARAM_KEYS = ("L1", "L2", "L3", "L4", "C1", "C2", "Co", "R", "Vpv", "Vbat", "fs", "D")
PARASITIC_KEYS = ("Rds_on", "Vf_diode", "RL_copper", "esr_cap")

_num = (int, float)

# scenario key -> (accepted types, default)
SCENARIO_FIELDS = {
    "simulate": {"steps_per_phase": (int, 64), "duties": (list, None), "x_ref": (list, None)},
    "design": {"Vin": (_num, None), "Vo": (_num, None), "fs": (_num, None), "R": (_num, None),
               "ripple": (dict, None), "pv": (dict, None)},
    "stress": {"D": (_num, None), "Io": (_num, None), "Vo": (_num, None)},
    "bode": {"input": (str, "SourceVoltage"), "f_min": (_num, 0.1), "f_max": (_num, 1e5),
             "n_points": (int, 200)},
    "losses": {"inputs": ((dict, str), "published"), "copper_mode": (str, "linear"),
               "P_out": (_num, 200.0), "P_total_override": (_num, None),
               "from_waveforms": (bool, False)},
    "compare": {"D": (_num, 0.5)},
    "train": {"dataset": (str, "linear"), "epochs": (int, 200), "learning_rate": (_num, None),
              "K": (int, 5), "n_samples": (int, 200), "e_scale": (_num, 1.0),
              "de_scale": (_num, 1.0), "nominal": (_num, None)},
    "closedloop": {"controller": (str, "pid"), "Vref": (_num, 52.0), "horizon": (_num, 2.0),
                   "gains": (dict, None), "profile": (list, []), "stride": (int, 50),
                   "anfis": (dict, None)},
}

RIPPLE_KEYS = ("d_iL1", "d_iL2", "d_iL3", "d_iL4", "d_vC1", "d_vC2", "d_vCo")
PV_KEYS = ("Vmp", "Imp", "Pmax", "Isc", "Voc", "n_points")


class ConfigError(Exception):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.problems))


@dataclass
class RunConfig:
    scenario: str
    params: ConverterParams
    block: dict
    output_dir: Path
    seed: int = 0
    variant: ModelVariant = ModelVariant.RECONCILED
    source: Path | None = None
    raw: dict = field(default_factory=dict)


def preset_names():
    return sorted(p.name[:-5] for p in resources.files("mqbqr.presets").iterdir()
                  if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    path = resources.files("mqbqr.presets") / f"{name}.json"
    if not path.is_file():
        raise FileNotFoundError(name)
    return json.loads(path.read_text())


def preset_path(name: str) -> Path:
    return Path(str(resources.files("mqbqr.presets") / f"{name}.json"))


def _read(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([("<file>", f"cannot read {path}: {exc}")]) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("<file>", f"JSON parse error at line {exc.lineno}, "
                                      f"column {exc.colno}: {exc.msg}")]) from None
    if not isinstance(data, dict):
        raise ConfigError([("<root>", "top level must be a JSON object")])
    return data


def _is(v, types):
    types = types if isinstance(types, tuple) else (types,)
    if isinstance(v, bool) and bool not in types:
        return False
    return isinstance(v, types)


def _check_params(block, problems, prefix="params"):
    if not isinstance(block, dict):
        problems.append((prefix, "must be an object"))
        return
    for k, v in block.items():
        if k == "parasitics":
            if not isinstance(v, dict):
                problems.append((f"{prefix}.parasitics", "must be an object"))
                continue
            for pk, pv in v.items():
                if pk not in PARASITIC_KEYS:
                    problems.append((f"{prefix}.parasitics.{pk}", "unknown field"))
                elif not _is(pv, _num):
                    problems.append((f"{prefix}.parasitics.{pk}", "must be a number"))
        elif k not in PARAM_KEYS:
            problems.append((f"{prefix}.{k}", "unknown field"))
        elif not _is(v, _num):
            problems.append((f"{prefix}.{k}", "must be a number"))


def _check_block(name, block, problems):
    if not isinstance(block, dict):
        problems.append((name, "scenario block must be an object"))
        return
    spec = SCENARIO_FIELDS[name]
    for k, v in block.items():
        if k not in spec:
            problems.append((f"{name}.{k}", "unknown field"))
        elif v is not None and not _is(v, spec[k][0]):
            problems.append((f"{name}.{k}", f"wrong type {type(v).__name__}"))
    if name == "design":
        for k in ("ripple",):
            r = block.get(k)
            if isinstance(r, dict):
                for rk, rv in r.items():
                    if rk not in RIPPLE_KEYS:
                        problems.append((f"design.ripple.{rk}", "unknown field"))
                    elif not _is(rv, _num) or rv <= 0:
                        problems.append((f"design.ripple.{rk}", "ripple target must be > 0"))
        pv = block.get("pv")
        if isinstance(pv, dict):
            for k in pv:
                if k not in PV_KEYS:
                    problems.append((f"design.pv.{k}", "unknown field"))
    if name == "bode" and block.get("input", "SourceVoltage") not in ("SourceVoltage", "SourceCurrent", "Duty"):
        problems.append(("bode.input", "must be SourceVoltage, SourceCurrent or Duty"))
    if name == "bode":
        if _is(block.get("f_min", 0.1), _num) and block.get("f_min", 0.1) <= 0:
            problems.append(("bode.f_min", "must be > 0"))
        if block.get("f_max", 1e5) <= block.get("f_min", 0.1):
            problems.append(("bode.f_max", "must exceed f_min"))
    if name == "losses":
        if block.get("copper_mode", "linear") not in ("linear", "squared"):
            problems.append(("losses.copper_mode", "must be linear or squared"))
        inp = block.get("inputs", "published")
        if isinstance(inp, str) and inp != "published":
            problems.append(("losses.inputs", 'must be "published" or an object'))
    if name == "compare" and _is(block.get("D", 0.5), _num) and not (0 < block.get("D", 0.5) < 1):
        problems.append(("compare.D", "must satisfy 0 < D < 1"))
    if name == "train":
        if block.get("dataset", "linear") not in ("linear", "demo", "pid"):
            problems.append(("train.dataset", "must be linear, demo or pid"))
        if block.get("epochs", 200) < 0:
            problems.append(("train.epochs", "must be >= 0"))
        lr = block.get("learning_rate")
        if lr is not None and _is(lr, _num) and lr <= 0:
            problems.append(("train.learning_rate", "must be > 0"))
    if name == "closedloop":
        if block.get("controller", "pid") not in ("pid", "anfis"):
            problems.append(("closedloop.controller", "must be pid or anfis"))
        if _is(block.get("horizon", 2.0), _num) and block.get("horizon", 2.0) <= 0:
            problems.append(("closedloop.horizon", "must be > 0"))
        for i, st in enumerate(block.get("profile", []) or []):
            if not isinstance(st, dict) or "t" not in st:
                problems.append((f"closedloop.profile[{i}]", "each step needs a time 't'"))
                continue
            for k in st:
                if k != "t" and k not in PARAM_KEYS:
                    problems.append((f"closedloop.profile[{i}].{k}", "unknown parameter"))


def _merge_params(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if k == "parasitics" and isinstance(v, dict):
            par = dict(out.get("parasitics", {}))
            par.update(v)
            out[k] = par
        else:
            out[k] = v
    return out


def parse(data: dict, source: Path | None = None) -> RunConfig:
    """Validate a decoded configuration; raise ConfigError listing every problem."""
    problems = []
    known = {"schema", "preset", "params", "variant", "seed", "output_dir", "description"} | set(SCENARIOS)
    for k in data:
        if k not in known:
            problems.append((k, "unknown top-level field"))
    if data.get("schema") != SCHEMA:
        problems.append(("schema", f'must be "{SCHEMA}", got {data.get("schema")!r}'))

    params_raw = {}
    preset = data.get("preset")
    preset_ok = True
    if preset is not None:
        preset_ok = False
        if not isinstance(preset, str):
            problems.append(("preset", "must be a preset name"))
        elif preset not in preset_names():
            problems.append(("preset", f"unknown preset {preset!r}; available: {', '.join(preset_names())}"))
        else:
            base = load_preset(preset).get("params", {})
            params_raw = _merge_params(params_raw, base)
            preset_ok = True
    if "params" in data:
        _check_params(data["params"], problems)
        if isinstance(data["params"], dict):
            params_raw = _merge_params(params_raw, data["params"])

    missing = [k for k in PARAM_KEYS if k not in params_raw]
    # a broken preset already explains why parameters are absent
    for k in (missing if preset_ok else []):
        problems.append((f"params.{k}", "missing"))

    present = [s for s in SCENARIOS if s in data]
    if len(present) != 1:
        problems.append(("<scenario>", f"exactly one scenario block required, found {len(present)}"
                                       + (f" ({', '.join(present)})" if present else "")))
    else:
        _check_block(present[0], data[present[0]], problems)

    variant = ModelVariant.RECONCILED
    if "variant" in data:
        try:
            variant = ModelVariant(data["variant"])
        except ValueError:
            problems.append(("variant", "must be Reconciled or PaperLiteral"))
    seed = data.get("seed", 0)
    if not _is(seed, int) or seed < 0:
        problems.append(("seed", "must be a non-negative integer"))
    out = data.get("output_dir", "out")
    if not isinstance(out, str) or not out:
        problems.append(("output_dir", "must be a non-empty string"))

    params = None
    if not missing and not any(p.startswith("params") for p, _ in problems):
        par = Parasitics(**params_raw.get("parasitics", {}))
        kwargs = {k: float(params_raw[k]) for k in PARAM_KEYS}
        probe = ConverterParams.__new__(ConverterParams)
        for k, v in kwargs.items():
            object.__setattr__(probe, k, v)
        object.__setattr__(probe, "parasitics", par)
        bad = probe.problems()
        problems.extend((f"params.{p}", m) for p, m in bad)
        if not bad:
            params = ConverterParams(**kwargs, parasitics=par)

    if problems:
        raise ConfigError(problems)

    env = os.environ.get(OUTPUT_ENV)
    out_dir = Path(env) if env else Path(out)
    scen = present[0]
    return RunConfig(scen, params, dict(data[scen]), out_dir, int(seed), variant, source, data)


def load(path) -> RunConfig:
    return parse(_read(path), Path(path))


def validate(path) -> list[tuple[str, str]]:
    """Return the list of problems (empty when the file is valid)."""
    try:
        load(path)
    except ConfigError as exc:
        return exc.problems
    return []
