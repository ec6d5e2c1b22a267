"""Experiment manifests: flat TOML with a single ``[params]`` table.

Example::

    name = "fig1_stable"
    engine = "piece"
    policy = "random-useful"
    replicas = 20
    horizon = 1000.0
    sample_dt = 1.0
    rng_seed = 2024
    initial = "empty"
    outputs = "out/fig1_stable"

    [params]
    K = 40
    lambda = [0.6, 0.8]
    mu = 1.0
    Us = 1.0

``lambda`` may be a single number or a list, in which case each value is run
as its own experiment.  ``window`` defaults to ``[0.2 * horizon, horizon]``.
``max_peers`` caps the population of piece and coded runs (a run that
exceeds it fails with a resource error).  ``initial = "one-club"`` needs ``initial_size`` except for the alt-system
engine, where the size defaults to the computed ``N_o``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import tomli
import tomli_w

from .core import ModelParams
from .errors import ContractError
from .policies import POLICIES
from .simulator import DEFAULT_MAX_PEERS

ENGINES = ("piece", "coded", "mu-infinity", "alt-system")
INITIALS = ("empty", "one-club")
OUTPUT_ENV = "P2PSWARM_OUTPUT_DIR"

_TOP = {
    "name",
    "engine",
    "policy",
    "replicas",
    "horizon",
    "sample_dt",
    "rng_seed",
    "initial",
    "initial_size",
    "outputs",
    "window",
    "max_peers",
    "params",
}
_PARAMS = {"K", "lambda", "mu", "Us", "q"}


class ManifestError(ContractError):
    """A manifest field is missing, mistyped or out of range."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ExperimentManifest:
    name: str
    engine: str
    K: int
    lambdas: tuple[float, ...]
    mu: float = 1.0
    Us: float = 1.0
    q: int = 2
    policy: str = "random-useful"
    replicas: int = 1
    horizon: float = 100.0
    sample_dt: float = 1.0
    rng_seed: int = 0
    initial: str = "empty"
    initial_size: int | None = None
    outputs: str = "out"
    window: tuple[float, float] | None = field(default=None)
    max_peers: int = DEFAULT_MAX_PEERS

    def __post_init__(self):
        if not self.name:
            raise ManifestError("name", "must be a non-empty string")
        if self.engine not in ENGINES:
            raise ManifestError("engine", f"must be one of {ENGINES}, got {self.engine!r}")
        if self.policy not in POLICIES:
            raise ManifestError("policy", f"must be one of {tuple(POLICIES)}, got {self.policy!r}")
        if self.replicas < 1:
            raise ManifestError("replicas", f"must be >= 1, got {self.replicas}")
        if not self.horizon > 0:
            raise ManifestError("horizon", f"must be positive, got {self.horizon}")
        if not self.sample_dt > 0:
            raise ManifestError("sample_dt", f"must be positive, got {self.sample_dt}")
        if self.initial not in INITIALS:
            raise ManifestError("initial", f"must be one of {INITIALS}, got {self.initial!r}")
        if self.initial == "one-club" and self.initial_size is None and self.engine != "alt-system":
            raise ManifestError("initial_size", "required for a one-club start")
        if self.max_peers < 1:
            raise ManifestError("max_peers", f"must be >= 1, got {self.max_peers}")
        if self.initial_size is not None and self.initial_size < 0:
            raise ManifestError("initial_size", "must be >= 0")
        if not self.lambdas:
            raise ManifestError("params.lambda", "needs at least one value")
        for lam in self.lambdas:
            self._params(lam)
        if self.engine == "coded" and self.q < 2:
            raise ManifestError("params.q", f"field order must be >= 2, got {self.q}")
        if self.window is not None:
            t0, t1 = self.window
            if not 0 <= t0 < t1 <= self.horizon:
                raise ManifestError("window", f"{list(self.window)} must satisfy 0 <= t0 < t1 <= horizon")
            if (t1 - t0) / self.sample_dt < 9:
                raise ManifestError("window", "must span at least 10 samples")

    def _params(self, lam: float) -> ModelParams:
        try:
            return ModelParams(self.K, lam, self.mu, self.Us)
        except (ValueError, TypeError) as e:
            raise ManifestError("params", str(e)) from None

    def params(self, lam: float | None = None) -> ModelParams:
        return self._params(self.lambdas[0] if lam is None else lam)

    @property
    def effective_window(self) -> tuple[float, float]:
        return self.window if self.window is not None else (0.2 * self.horizon, self.horizon)

    def output_dir(self) -> Path:
        """``outputs``, unless the environment override is set, then ``$P2PSWARM_OUTPUT_DIR/name``."""
        env = os.environ.get(OUTPUT_ENV)
        return Path(env) / self.name if env else Path(self.outputs)

    def with_overrides(self, seed=None, replicas=None, horizon=None, max_peers=None) -> "ExperimentManifest":
        kw = {}
        if max_peers is not None:
            kw["max_peers"] = max_peers
        if seed is not None:
            kw["rng_seed"] = seed
        if replicas is not None:
            kw["replicas"] = replicas
        if horizon is not None:
            kw["horizon"] = horizon
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "engine": self.engine,
            "policy": self.policy,
            "replicas": self.replicas,
            "horizon": float(self.horizon),
            "sample_dt": float(self.sample_dt),
            "rng_seed": self.rng_seed,
            "initial": self.initial,
            "outputs": self.outputs,
        }
        if self.initial_size is not None:
            d["initial_size"] = self.initial_size
        if self.window is not None:
            d["window"] = [float(v) for v in self.window]
        if self.max_peers != DEFAULT_MAX_PEERS:
            d["max_peers"] = self.max_peers
        lam = list(self.lambdas) if len(self.lambdas) > 1 else self.lambdas[0]
        d["params"] = {"K": self.K, "lambda": lam, "mu": float(self.mu), "Us": float(self.Us), "q": self.q}
        return d


def _get(d: dict, key: str, kind, default=None, where: str = ""):
    name = where + key
    if key not in d:
        if default is _REQUIRED:
            raise ManifestError(name, "missing")
        return default
    v = d[key]
    if kind is float and isinstance(v, int) and not isinstance(v, bool):
        v = float(v)
    if not isinstance(v, kind) or isinstance(v, bool) and kind is not bool:
        raise ManifestError(name, f"expected {kind.__name__}, got {type(v).__name__} {v!r}")
    return v


_REQUIRED = object()


def manifest_from_dict(d: dict) -> ExperimentManifest:
    unknown = set(d) - _TOP
    if unknown:
        raise ManifestError(sorted(unknown)[0], "unknown field")
    params = d.get("params")
    if not isinstance(params, dict):
        raise ManifestError("params", "missing [params] table")
    unknown = set(params) - _PARAMS
    if unknown:
        raise ManifestError("params." + sorted(unknown)[0], "unknown field")
    for k, v in d.items():
        if isinstance(v, dict) and k != "params":
            raise ManifestError(k, "nested tables are not allowed")
    lam = params.get("lambda")
    if lam is None:
        raise ManifestError("params.lambda", "missing")
    lams = lam if isinstance(lam, list) else [lam]
    for v in lams:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ManifestError("params.lambda", f"expected a number or list of numbers, got {lam!r}")
    window = d.get("window")
    if window is not None:
        if not (isinstance(window, list) and len(window) == 2 and all(isinstance(v, (int, float)) for v in window)):
            raise ManifestError("window", f"expected [t0, t1], got {window!r}")
        window = (float(window[0]), float(window[1]))
    return ExperimentManifest(
        name=_get(d, "name", str, _REQUIRED),
        engine=_get(d, "engine", str, _REQUIRED),
        K=_get(params, "K", int, _REQUIRED, "params."),
        lambdas=tuple(float(v) for v in lams),
        mu=_get(params, "mu", float, 1.0, "params."),
        Us=_get(params, "Us", float, 1.0, "params."),
        q=_get(params, "q", int, 2, "params."),
        policy=_get(d, "policy", str, "random-useful"),
        replicas=_get(d, "replicas", int, 1),
        horizon=_get(d, "horizon", float, 100.0),
        sample_dt=_get(d, "sample_dt", float, 1.0),
        rng_seed=_get(d, "rng_seed", int, 0),
        initial=_get(d, "initial", str, "empty"),
        initial_size=_get(d, "initial_size", int, None),
        outputs=_get(d, "outputs", str, "out"),
        window=window,
        max_peers=_get(d, "max_peers", int, DEFAULT_MAX_PEERS),
    )


def loads(text: str) -> ExperimentManifest:
    try:
        d = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        raise ManifestError("<file>", f"not valid TOML: {e}") from None
    return manifest_from_dict(d)


def dumps(m: ExperimentManifest) -> str:
    return tomli_w.dumps(m.to_dict())


def load(path: str | Path) -> ExperimentManifest:
    path = Path(path)
    if not path.is_file():
        raise ManifestError("<file>", f"{path} does not exist")
    return loads(path.read_text())


def dump(m: ExperimentManifest, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dumps(m))
    return path
