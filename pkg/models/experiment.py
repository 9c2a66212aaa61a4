# models/experiment.py
import json
import os
from dataclasses import asdict, dataclass, field

from utils.errors import ConfigurationError

# ---------------- Config ----------------
def default_output_dir():
    return os.getenv("HOLOMOTION_OUTPUT_DIR", "runs")


def parse_value(text):
    """JSON when it parses, the raw string otherwise."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


@dataclass
class ExperimentConfig:
    """One experiment: a scenario name, its parameters, a seed and an output directory."""

    scenario: str
    seed: int = 0
    output_dir: str = field(default_factory=default_output_dir)
    params: dict = field(default_factory=dict)
    source: str = None

    @classmethod
    def from_json(cls, data, source=None):
        if not isinstance(data, dict) or "scenario" not in data:
            raise ConfigurationError(f"config {source or '(inline)'} needs a 'scenario' field")
        params = data.get("params", {})
        if not isinstance(params, dict):
            raise ConfigurationError("'params' must be a JSON object")
        return cls(
            scenario=str(data["scenario"]),
            seed=int(data.get("seed", 0)),
            output_dir=data.get("output_dir") or default_output_dir(),
            params=dict(params),
            source=source,
        )

    @classmethod
    def load(cls, path):
        if not os.path.exists(path):
            raise ConfigurationError(f"config file not found: {path}")
        try:
            with open(path) as f:
                data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_json(data, source=os.path.abspath(path))

    def with_overrides(self, scenario=None, seed=None, output_dir=None, sets=()):
        """Copy with command-line overrides; ``sets`` holds ``key=value`` strings."""
        params = dict(self.params)
        for item in sets:
            key, sep, value = item.partition("=")
            if not sep or not key:
                raise ConfigurationError(f"override {item!r} is not of the form key=value")
            params[key.strip()] = parse_value(value)
        return ExperimentConfig(
            scenario=scenario or self.scenario,
            seed=self.seed if seed is None else int(seed),
            output_dir=output_dir or self.output_dir,
            params=params,
            source=self.source,
        )

    def resolve_files(self):
        """Resolve every ``*_file`` parameter against the config's folder; all must exist."""
        base = os.path.dirname(self.source) if self.source else os.getcwd()
        for key, value in self.params.items():
            if not key.endswith("_file"):
                continue
            path = value if os.path.isabs(value) else os.path.join(base, value)
            if not os.path.exists(path):
                raise ConfigurationError(f"{key} not found: {path}")
            self.params[key] = path
        return self

    def to_json(self):
        data = asdict(self)
        data.pop("source")
        return data


@dataclass(frozen=True)
class Criterion:
    """One acceptance check: a named comparison of a measured value against a threshold."""

    name: str
    passed: bool
    value: float
    threshold: float

    def row(self):
        return (self.name, self.passed, self.value, self.threshold)
