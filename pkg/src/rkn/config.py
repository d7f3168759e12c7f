"""Run configuration shared by the CLI and the experiment scripts."""

from dataclasses import asdict, dataclass, field, fields
import json
import os
from pathlib import Path

OUTPUT_DIR_ENV = "RKN_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "rkn-output"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str = "relu"  # "relu" (tent target) or "general" (bounded kernel)
    kernel: str = "relu"
    dim: int = 5
    uni: str = "degenerate_zero"
    B_list: list = field(default_factory=lambda: [7.0, 15.0, 31.0, 63.0])
    eps: float = 0.05
    trials: int = 40
    n_grid: int = 1001
    panel_size: int = 4096
    seed: int = 0
    N_cap: int = 2**20
    ridge_lambda: float = 1e-8
    depth_max: int = 3
    provisional_betas: list = field(default_factory=lambda: [1.5, 1.75, 2.0])
    # bounded-kernel construction
    u0: float = 2.0
    u1: float = 3.5
    t_plus: float = 0.0
    weights: list = field(default_factory=lambda: [0.998, 0.0005, 0.0005, 0.0005, 0.0005])
    alpha: float = 1.0
    # verification suite
    verify_trials: int = 400
    out_dir: str | None = None
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.mode not in ("relu", "general"):
            raise ConfigError(f"mode must be 'relu' or 'general', got {self.mode!r}")
        if self.kernel not in ("relu", "logistic"):
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if (self.mode == "relu") != (self.kernel == "relu"):
            raise ConfigError("relu mode uses the relu kernel; general mode needs a bounded kernel")
        if self.uni not in ("degenerate_zero", "standard_gaussian"):
            raise ConfigError(f"unknown uniform component {self.uni!r}")
        if int(self.dim) < 1:
            raise ConfigError("dim must be >= 1")
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        if not self.B_list:
            raise ConfigError("B_list must be nonempty")
        if any(not float(B) > 0 for B in self.B_list):
            raise ConfigError("every B must be positive")
        if int(self.trials) < 2 or int(self.verify_trials) < 2:
            raise ConfigError("trials must be >= 2")
        if int(self.n_grid) < 3 or int(self.panel_size) < 1 or int(self.N_cap) < 1:
            raise ConfigError("n_grid, panel_size and N_cap must be positive")
        if self.ridge_lambda < 0:
            raise ConfigError("ridge_lambda must be nonnegative")
        if len(self.weights) != 5:
            raise ConfigError("weights lists (w_B, w_0, w_half, w_1, w_out)")
        if len(self.provisional_betas) != 3:
            raise ConfigError("provisional_betas lists three values")
        self.B_list = [float(B) for B in self.B_list]

    @property
    def output_dir(self) -> Path:
        return Path(self.out_dir or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data)

    def replace(self, **overrides) -> "RunConfig":
        d = self.to_dict()
        d.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.from_dict(d)
