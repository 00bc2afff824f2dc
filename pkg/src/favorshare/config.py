"""INI run configuration with a documented default for every key.

An empty file yields the default experiment: two operators with one
dedicated carrier each, a six-carrier shared pool, interleaved indoor
deployment, operator A carrying twice B's mean load, 1000 snapshots.

Layout::

    [run]        snapshots, warmup, seed, scenario
    [band]       operators, dedicated_per_operator, pool_size
    [deployment] width_m, depth_m, bs_per_operator, tx_power_dbm, placement
    [radio]      pl0_db, pl_exponent, d_min_m, shadowing_db, bandwidth_hz,
                 noise_psd_dbm_hz, noise_figure_db, se_cap
    [load]       p_stay, initial
    [operator X] lambda_high, lambda_low, w_mean, w_edge, edge_percentile
    [protocol]   cap_s, favor_duration, ask_bootstrap,
                 grant_bootstrap_fraction, rent_favors, alternate_turns
"""

from __future__ import annotations

import configparser
import dataclasses
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from .alloc import FavorType, SharingScenario
from .protocol import ProtocolParams
from .radio import DeploymentParams, EnvConfig, LoadParams, LoadState, Placement, RadioParams
from .sim import RunConfig
from .utility import UtilityWeights


class ConfigError(ValueError):
    pass


def _positive(x):
    return x > 0


def _non_negative(x):
    return x >= 0


def _probability(x):
    return 0 <= x <= 1


def _load_state(text: str) -> LoadState:
    try:
        return LoadState(text.strip().capitalize())
    except ValueError:
        raise ValueError(f"expected High or Low, got {text!r}") from None


def _rent_favors(text: str) -> Tuple[FavorType, ...]:
    names = {"shared": FavorType.RENT_SHARED, "exclusive": FavorType.RENT_EXCLUSIVE}
    out = []
    for part in filter(None, (p.strip().lower() for p in text.split(","))):
        if part not in names:
            raise ValueError(f"unknown rent favor {part!r} (use shared, exclusive)")
        out.append(names[part])
    return tuple(dict.fromkeys(out))


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _operators(text: str) -> Tuple[str, ...]:
    ops = tuple(p.strip() for p in text.split(",") if p.strip())
    if len(ops) != 2 or len(set(ops)) != 2:
        raise ValueError("exactly two distinct operator names are supported")
    return ops


# (section, key) -> (parser, default, check, constraint text)
KeySpec = Tuple[Callable[[str], Any], Any, Optional[Callable[[Any], bool]], str]

KEYS: Dict[str, Dict[str, KeySpec]] = {
    "run": {
        "snapshots": (int, 1000, _non_negative, ">= 0"),
        "warmup": (int, 50, _non_negative, ">= 0"),
        "seed": (int, 0, _non_negative, ">= 0"),
        "scenario": (SharingScenario.parse, SharingScenario.LIMITED_POOL, None, ""),
    },
    "band": {
        "operators": (_operators, ("A", "B"), None, ""),
        "dedicated_per_operator": (int, 1, _non_negative, ">= 0"),
        "pool_size": (int, 6, _non_negative, ">= 0"),
    },
    "deployment": {
        "width_m": (float, 100.0, _positive, "> 0"),
        "depth_m": (float, 50.0, _positive, "> 0"),
        "bs_per_operator": (int, 2, _positive, ">= 1"),
        "tx_power_dbm": (float, 24.0, None, ""),
        "placement": (Placement.parse, Placement.INTERLEAVED, None, ""),
    },
    "radio": {
        "pl0_db": (float, 38.5, None, ""),
        "pl_exponent": (float, 3.0, _positive, "> 0"),
        "d_min_m": (float, 1.0, _positive, "> 0"),
        "shadowing_db": (float, 4.0, _non_negative, ">= 0"),
        "bandwidth_hz": (float, 10e6, _positive, "> 0"),
        "noise_psd_dbm_hz": (float, -174.0, None, ""),
        "noise_figure_db": (float, 9.0, None, ""),
        "se_cap": (float, 7.8, _positive, "> 0"),
    },
    "load": {
        "p_stay": (float, 0.8, _probability, "in [0, 1]"),
        "initial": (_load_state, LoadState.HIGH, None, ""),
    },
    "protocol": {
        "cap_s": (int, 4, _positive, ">= 1"),
        "favor_duration": (int, 1, _positive, ">= 1"),
        "ask_bootstrap": (float, 0.0, _non_negative, ">= 0"),
        "grant_bootstrap_fraction": (float, 0.15, _non_negative, ">= 0"),
        "rent_favors": (_rent_favors, (FavorType.RENT_SHARED, FavorType.RENT_EXCLUSIVE), None, ""),
        "alternate_turns": (_bool, True, None, ""),
    },
}

OPERATOR_KEYS: Dict[str, KeySpec] = {
    "lambda_high": (float, None, _non_negative, ">= 0"),
    "lambda_low": (float, None, _non_negative, ">= 0"),
    "w_mean": (float, 0.5, _probability, "in [0, 1]"),
    "w_edge": (float, 0.5, _probability, "in [0, 1]"),
    "edge_percentile": (float, 5.0, lambda p: 0 < p <= 50, "in (0, 50]"),
}

# mean user counts (High, Low) by operator position: the first operator
# carries twice the load of the second
DEFAULT_LAMBDAS = ((12.0, 1.0), (6.0, 0.5))


def _read(section: str, key: str, raw: Optional[str], spec: KeySpec):
    parse, default, check, constraint = spec
    if raw is None:
        return default
    try:
        value = parse(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None
    if check is not None and not check(value):
        raise ConfigError(f"[{section}] {key} = {raw!r} out of range: must be {constraint}")
    return value


def config_from_parser(cp: configparser.ConfigParser) -> RunConfig:
    values: Dict[str, Dict[str, Any]] = {}
    operator_sections = {}
    for section in cp.sections():
        if section.startswith("operator "):
            operator_sections[section[len("operator "):].strip()] = cp[section]
        elif section not in KEYS:
            raise ConfigError(f"unknown section [{section}]")
    for section, keys in KEYS.items():
        present = cp[section] if cp.has_section(section) else {}
        for key in present:
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
        values[section] = {k: _read(section, k, present.get(k), spec) for k, spec in keys.items()}

    ops = values["band"]["operators"]
    for name in operator_sections:
        if name not in ops:
            raise ConfigError(f"[operator {name}] names an operator not listed in [band] operators")

    lambdas, weights = {}, {}
    for i, op in enumerate(ops):
        sect = operator_sections.get(op, {})
        for key in sect:
            if key not in OPERATOR_KEYS:
                raise ConfigError(f"unknown key {key!r} in [operator {op}]")
        v = {k: _read(f"operator {op}", k, sect.get(k), spec) for k, spec in OPERATOR_KEYS.items()}
        high, low = DEFAULT_LAMBDAS[i]
        lambdas[op] = {LoadState.HIGH: high if v["lambda_high"] is None else v["lambda_high"],
                       LoadState.LOW: low if v["lambda_low"] is None else v["lambda_low"]}
        try:
            weights[op] = UtilityWeights(v["w_mean"], v["w_edge"], v["edge_percentile"])
        except ValueError as exc:
            raise ConfigError(f"[operator {op}] w_mean/w_edge: {exc}") from None

    run, band, dep, radio, load, proto = (values[s] for s in
                                          ("run", "band", "deployment", "radio", "load", "protocol"))
    env = EnvConfig(
        load=LoadParams(lambdas, load["p_stay"], {op: load["initial"] for op in ops}),
        deployment=DeploymentParams(**dep),
        radio=RadioParams(**radio),
    )
    protocol = ProtocolParams(cap_s=proto["cap_s"], favor_duration=proto["favor_duration"],
                              ask_bootstrap=proto["ask_bootstrap"],
                              grant_bootstrap_fraction=proto["grant_bootstrap_fraction"],
                              rent_types=proto["rent_favors"],
                              alternate_turns=proto["alternate_turns"])
    config = RunConfig(env=env, weights=weights, scenario=run["scenario"],
                       dedicated_per_operator=band["dedicated_per_operator"],
                       pool_size=band["pool_size"], protocol=protocol,
                       snapshots=run["snapshots"], warmup=run["warmup"], seed=run["seed"])
    if config.scenario is SharingScenario.MUTUAL_RENTING and not protocol.rent_types:
        raise ConfigError("[protocol] rent_favors: MutualRenting needs at least one rent favor type")
    if config.dedicated_per_operator == 0 and config.pool_size == 0:
        raise ConfigError("[band] pool_size: the band plan has no carriers")
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config


def parse_config_text(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return config_from_parser(cp)


def parse_config(path) -> RunConfig:
    return parse_config_text(Path(path).read_text())


def default_config() -> RunConfig:
    return parse_config_text("")


def with_overrides(config: RunConfig, **changes) -> RunConfig:
    """Copy of ``config`` with top-level fields or deployment placement replaced."""
    placement = changes.pop("placement", None)
    if placement is not None:
        env = dataclasses.replace(config.env, deployment=dataclasses.replace(
            config.env.deployment, placement=placement))
        changes["env"] = env
    return dataclasses.replace(config, **changes)


def symmetric_config(**changes) -> RunConfig:
    """Default experiment with both operators at the second operator's load."""
    base = default_config()
    ops = base.operators
    lam = dict(base.env.load.lambdas)
    lam[ops[0]] = dict(lam[ops[1]])
    env = dataclasses.replace(base.env, load=dataclasses.replace(base.env.load, lambdas=lam))
    return dataclasses.replace(base, env=env, **changes)
