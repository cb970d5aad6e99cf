"""Experiment configuration: YAML (or JSON) documents validated into ``ExperimentConfig``."""
import math
import re
from dataclasses import asdict, dataclass, field
from typing import Optional, Tuple

import yaml

from src.Errors import ConfigError
from src.Nodes import DEFAULT_TAU_MIN, LAYOUTS, EQUISPACED

EXPERIMENTS = ("angles", "spectrum", "leastsq")
FIXED_NH = "fixed-Nh"
FIXED_N = "fixed-N"
MODES = (FIXED_NH, FIXED_N)
RNG_ALGORITHMS = ("PCG64",)

TOP_LEVEL_KEYS = {"experiment", "name", "clusters", "theta", "N", "N_range", "samples", "noise_eps_range",
                  "mode", "Nh", "Nh_range", "Nh_values", "theta_values", "seed", "rng", "tau_min",
                  "complex_noise", "log_path"}
CLUSTER_KEYS = {"center", "h", "h_range", "s", "tau", "layout"}

DEFAULT_FIXED_N = 10_000
DEFAULT_ANGLE_THETA = 1.0


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads exponent floats without a dot, as JSON writes them (1e-10)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"))


@dataclass(frozen=True)
class ClusterEntry:
    s: int
    center: Optional[float] = None
    h: Optional[float] = None
    h_range: Optional[Tuple[float, float]] = None
    tau: Optional[float] = None
    layout: str = EQUISPACED

    @property
    def width_source(self):
        return self.h, self.h_range


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    clusters: Tuple[ClusterEntry, ...]
    name: Optional[str] = None
    mode: str = FIXED_NH
    theta: Optional[float] = None
    N: Optional[int] = None
    N_range: Tuple[int, int] = (100, 5000)
    samples: int = 200
    Nh: Optional[float] = None
    Nh_range: Tuple[float, float] = (1e-3, 1e-1)
    Nh_values: Tuple[float, ...] = (1e-10, 1e-5, 0.1)
    theta_values: Tuple[float, ...] = (0.01, 0.1, 1.0)
    noise_eps_range: Tuple[float, float] = (1e-6, 1e-3)
    seed: int = 0
    rng: str = "PCG64"
    tau_min: float = DEFAULT_TAU_MIN
    complex_noise: bool = False
    log_path: str = "."
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def multiplicities(self):
        return tuple(c.s for c in self.clusters)

    @property
    def s_profile(self):
        return "-".join(str(s) for s in self.multiplicities)

    @property
    def label(self):
        return self.name or f"{self.experiment}-{self.s_profile}"

    @property
    def shared_width(self):
        """The (h, h_range) pair shared by every cluster with at least two nodes."""
        for cluster in self.clusters:
            if cluster.s >= 2:
                return cluster.width_source
        return None, None

    def with_seed(self, seed):
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values["seed"] = _seed(seed, "seed", None)
        return ExperimentConfig(**values)

    def to_dict(self):
        payload = asdict(self)
        payload.pop("lines")
        payload["clusters"] = [{k: v for k, v in c.items() if v is not None} for c in payload["clusters"]]
        return _plain(payload)


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _node_lines(node, prefix=""):
    """Map dotted field paths to 1-based line numbers from a composed YAML tree."""
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            path = f"{prefix}.{key.value}" if prefix else str(key.value)
            lines[path] = key.start_mark.line + 1
            lines.update(_node_lines(value, path))
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            path = f"{prefix}[{i}]"
            lines[path] = item.start_mark.line + 1
            lines.update(_node_lines(item, path))
    return lines


class _Checker:
    def __init__(self, lines):
        self.lines = lines or {}

    def fail(self, message, path):
        probe = path
        line = self.lines.get(probe)
        while line is None and ("." in probe or "[" in probe):
            probe = probe[:max(probe.rfind("."), probe.rfind("["))]
            line = self.lines.get(probe)
        raise ConfigError(message, field=path, line=line)

    def number(self, value, path, positive=False, minimum=None):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            self.fail(f"expected a finite number, got {value!r}", path)
        if positive and value <= 0:
            self.fail(f"expected a positive number, got {value!r}", path)
        if minimum is not None and value < minimum:
            self.fail(f"expected a number >= {minimum}, got {value!r}", path)
        return float(value)

    def integer(self, value, path, minimum=1):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            self.fail(f"expected an integer, got {value!r}", path)
        if value < minimum:
            self.fail(f"expected an integer >= {minimum}, got {value!r}", path)
        return int(value)

    def interval(self, value, path, integer=False):
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            self.fail(f"expected a [low, high] pair, got {value!r}", path)
        if integer:
            low, high = (self.integer(v, f"{path}[{i}]") for i, v in enumerate(value))
        else:
            low, high = (self.number(v, f"{path}[{i}]", positive=True) for i, v in enumerate(value))
        if low > high:
            self.fail(f"range must satisfy low <= high, got {value!r}", path)
        return low, high

    def values(self, value, path):
        if not isinstance(value, (list, tuple)) or not value:
            self.fail(f"expected a non-empty list, got {value!r}", path)
        return tuple(self.number(v, f"{path}[{i}]", positive=True) for i, v in enumerate(value))

    def choice(self, value, path, options):
        if value not in options:
            self.fail(f"expected one of {list(options)}, got {value!r}", path)
        return value

    def unknown(self, mapping, allowed, prefix):
        for key in mapping:
            if key not in allowed:
                path = f"{prefix}.{key}" if prefix else str(key)
                self.fail(f"unknown key '{key}'", path)


def _seed(value, path, checker):
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2 ** 64:
        message = f"seed must be an unsigned 64-bit integer, got {value!r}"
        if checker is None:
            raise ConfigError(message, field=path)
        checker.fail(message, path)
    return int(value)


def _cluster(entry, path, check: _Checker):
    if not isinstance(entry, dict):
        check.fail(f"cluster entries must be mappings, got {entry!r}", path)
    check.unknown(entry, CLUSTER_KEYS, path)
    if "s" not in entry:
        check.fail("cluster entry needs 's'", path)
    values = {"s": check.integer(entry["s"], f"{path}.s")}
    if entry.get("center") is not None:
        values["center"] = check.number(entry["center"], f"{path}.center")
    if entry.get("h") is not None:
        values["h"] = check.number(entry["h"], f"{path}.h", positive=True)
    if entry.get("h_range") is not None:
        values["h_range"] = check.interval(entry["h_range"], f"{path}.h_range")
    if "h" in values and "h_range" in values:
        check.fail("give either 'h' or 'h_range', not both", path)
    if entry.get("tau") is not None:
        tau = check.number(entry["tau"], f"{path}.tau", positive=True)
        if tau > 1:
            check.fail(f"tau must lie in (0, 1], got {tau}", f"{path}.tau")
        values["tau"] = tau
    if "layout" in entry:
        values["layout"] = check.choice(entry["layout"], f"{path}.layout", LAYOUTS)
    return ClusterEntry(**values)


def parse_config(data, lines=None) -> ExperimentConfig:
    check = _Checker(lines)
    if not isinstance(data, dict):
        raise ConfigError(f"configuration must be a mapping, got {type(data).__name__}")
    check.unknown(data, TOP_LEVEL_KEYS, "")

    if "experiment" not in data:
        check.fail("missing key 'experiment'", "experiment")
    values = {"experiment": check.choice(data["experiment"], "experiment", EXPERIMENTS)}

    clusters = data.get("clusters")
    if not isinstance(clusters, list) or not clusters:
        check.fail("'clusters' must be a non-empty list", "clusters")
    values["clusters"] = tuple(_cluster(c, f"clusters[{i}]", check) for i, c in enumerate(clusters))

    if data.get("name") is not None:
        values["name"] = str(data["name"])
    if "mode" in data:
        values["mode"] = check.choice(data["mode"], "mode", MODES)
    if data.get("theta") is not None:
        values["theta"] = check.number(data["theta"], "theta", positive=True)
    if data.get("N") is not None:
        values["N"] = check.integer(data["N"], "N")
    if "N_range" in data:
        values["N_range"] = check.interval(data["N_range"], "N_range", integer=True)
    if "samples" in data:
        values["samples"] = check.integer(data["samples"], "samples")
    if data.get("Nh") is not None:
        values["Nh"] = check.number(data["Nh"], "Nh", positive=True)
    if "Nh_range" in data:
        values["Nh_range"] = check.interval(data["Nh_range"], "Nh_range")
    if "Nh_values" in data:
        values["Nh_values"] = check.values(data["Nh_values"], "Nh_values")
    if "theta_values" in data:
        values["theta_values"] = check.values(data["theta_values"], "theta_values")
    if "noise_eps_range" in data:
        noise = data["noise_eps_range"]
        if isinstance(noise, (list, tuple)) and len(noise) == 2 and all(v == 0 for v in noise):
            check.fail("noise range collapsed to {0}: delta_a would divide by zero", "noise_eps_range")
        values["noise_eps_range"] = check.interval(noise, "noise_eps_range")
    if "seed" in data:
        values["seed"] = _seed(data["seed"], "seed", check)
    if "rng" in data:
        values["rng"] = check.choice(data["rng"], "rng", RNG_ALGORITHMS)
    if "tau_min" in data:
        tau_min = check.number(data["tau_min"], "tau_min", positive=True)
        if tau_min > 1:
            check.fail(f"tau_min must lie in (0, 1], got {tau_min}", "tau_min")
        values["tau_min"] = tau_min
    if "complex_noise" in data:
        if not isinstance(data["complex_noise"], bool):
            check.fail(f"expected true or false, got {data['complex_noise']!r}", "complex_noise")
        values["complex_noise"] = data["complex_noise"]
    if data.get("log_path") is not None:
        values["log_path"] = str(data["log_path"])

    config = ExperimentConfig(lines=dict(lines or {}), **values)
    _check_consistency(config, check)
    return config


def _check_consistency(config: ExperimentConfig, check: _Checker):
    if config.experiment == "angles":
        if len(config.clusters) != 2:
            check.fail(f"angle experiments need exactly two clusters, got {len(config.clusters)}", "clusters")
        if config.mode == FIXED_N and config.N is not None and config.N < max(config.multiplicities) - 1:
            check.fail(f"N = {config.N} is too small for the cluster sizes", "N")
    if config.N_range[0] < max(config.multiplicities):
        check.fail(f"N_range must start at or above the largest cluster size {max(config.multiplicities)}",
                   "N_range")

    widths = {c.width_source for c in config.clusters if c.s >= 2}
    if len(widths) > 1:
        check.fail("clusters with two or more nodes must share the same 'h' or 'h_range'", "clusters")

    centers = [c.center for c in config.clusters]
    if any(c is not None for c in centers) and any(c is None for c in centers):
        check.fail("give a center for every cluster or for none", "clusters")


def load_config(path) -> ExperimentConfig:
    with open(path, "r") as file:
        text = file.read()
    try:
        node = yaml.compose(text, Loader=_Loader)
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigError(f"malformed configuration file {path}: {e}",
                          line=mark.line + 1 if mark is not None else None) from e
    if data is None:
        raise ConfigError(f"configuration file {path} is empty")
    return parse_config(data, _node_lines(node) if node is not None else None)
