"""Run configuration: strict JSON parsing with stable round trips."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .curve import REDUCTION_TRACE, EllipticCurve, fixture_curve
from .errors import ConfigError
from .lfunc import EvaluationSettings


def _strict(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    return data


@dataclass
class CurveConfig:
    a_invariants: list
    conductor: int
    root_number: int = 1
    bad_primes: dict = field(default_factory=dict)
    label: str = ""

    @classmethod
    def from_dict(cls, data: dict) -> "CurveConfig":
        _strict(cls, data, "curve")
        try:
            a = [int(x) for x in data["a_invariants"]]
            M = int(data["conductor"])
        except KeyError as exc:
            raise ConfigError(f"curve: missing key {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"curve: {exc}") from None
        if len(a) != 5:
            raise ConfigError("curve: a_invariants needs five integers")
        bad = {}
        for p, desc in data.get("bad_primes", {}).items():
            kind = desc.get("type") if isinstance(desc, dict) else desc
            if isinstance(desc, dict) and set(desc) - {"type"}:
                raise ConfigError(f"curve: unknown keys in bad_primes[{p}]")
            if kind not in REDUCTION_TRACE:
                raise ConfigError(f"curve: unknown reduction type {kind!r} for p={p}")
            bad[str(int(p))] = {"type": kind}
        w = int(data.get("root_number", 1))
        if w not in (1, -1):
            raise ConfigError("curve: root_number must be +1 or -1")
        return cls(a, M, w, bad, str(data.get("label", "")))

    def build(self) -> EllipticCurve:
        return EllipticCurve(
            tuple(self.a_invariants),
            self.conductor,
            root_number=self.root_number,
            bad_primes={int(p): v["type"] for p, v in self.bad_primes.items()},
            label=self.label,
        )

    @classmethod
    def from_curve(cls, E: EllipticCurve) -> "CurveConfig":
        bad = {str(p): {"type": k} for p, k in sorted(E.bad_primes.items())}
        return cls(list(E.a_invariants), E.conductor, E.root_number, bad, E.label)


@dataclass
class PrecisionConfig:
    target_abs_error: float = 1e-9
    max_terms: int = 2_000_000
    height_cap: float = 40.0

    def settings(self) -> EvaluationSettings:
        return EvaluationSettings(
            target_abs_error=self.target_abs_error, max_terms=self.max_terms, height_cap=self.height_cap
        )


@dataclass
class ScanConfig:
    d_lo: int = -200
    d_hi: int = 200
    d0: int | None = None
    theta0: float = 1e-3
    theta1: float = 1e-4
    Q: float | None = None
    epsilon: float = 0.5
    first_zero_cap: float = 12.0


@dataclass
class OutputConfig:
    out: str | None = None
    svg: str | None = None


@dataclass
class RunConfig:
    curve: CurveConfig
    precision: PrecisionConfig = field(default_factory=PrecisionConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if isinstance(data, dict) and "a_invariants" in data:
            data = {"curve": data}
        _strict(cls, data, "config")
        if "curve" not in data:
            raise ConfigError("config: missing curve block")
        blocks = {}
        for name, sub in (("precision", PrecisionConfig), ("scan", ScanConfig), ("output", OutputConfig)):
            raw = _strict(sub, data.get(name, {}), name)
            try:
                blocks[name] = sub(**raw)
            except TypeError as exc:
                raise ConfigError(f"{name}: {exc}") from None
        cfg = cls(CurveConfig.from_dict(data["curve"]), **blocks)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        p, s = self.precision, self.scan
        if not p.target_abs_error > 0 or p.max_terms < 1 or p.height_cap <= 0:
            raise ConfigError("precision: values must be positive")
        if s.d_lo > s.d_hi:
            raise ConfigError("scan: d_lo exceeds d_hi")
        if not (0 < s.theta1 and 0 < s.theta0):
            raise ConfigError("scan: thresholds must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)


def load_config(spec: str) -> RunConfig:
    """A path to a JSON file, or the name of a fixture curve ("11a", "37a")."""
    if spec in ("11a", "37a"):
        return RunConfig(CurveConfig.from_curve(fixture_curve(spec)))
    try:
        with open(spec) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {spec}: {exc}") from None
    return RunConfig.loads(text)
