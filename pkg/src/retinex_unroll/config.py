"""Run configuration (JSON) and the plain-text kernel file format."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .degradation import DegradeSpec
from .enhancement import EnhanceSpec
from .imaging import normalize_kernel
from .priors import DataOperator, OperatorSlots
from .solver import HyperParams

__all__ = [
    "ConfigError",
    "KernelFileError",
    "RunConfig",
    "load_config",
    "read_kernel",
    "write_kernel",
]

KERNEL_SOURCES = ("from_degradation", "file", "parametric")


class ConfigError(ValueError):
    pass


class KernelFileError(ValueError):
    pass


def _build(cls, data, section: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {', '.join(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section!r}: {exc}") from exc


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a degrade or solve run.

    Noise for the i-th input file (sorted by name) is drawn with
    ``seed + i``; the ``degrade`` section therefore carries no seed.
    """

    input: str
    output: str
    degrade: DegradeSpec = field(default_factory=DegradeSpec)
    hyper: HyperParams = field(default_factory=HyperParams)
    operators: OperatorSlots = field(default_factory=OperatorSlots)
    enhance: EnhanceSpec = field(default_factory=EnhanceSpec)
    kernel_source: str = "from_degradation"
    kernel_path: Optional[str] = None
    dump_diagnostics: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.kernel_source not in KERNEL_SOURCES:
            raise ConfigError(f"kernel_source must be one of {KERNEL_SOURCES}")
        if self.kernel_source == "file" and not self.kernel_path:
            raise ConfigError("kernel_source 'file' needs kernel_path")

    def degrade_spec(self, index: int) -> DegradeSpec:
        return replace(self.degrade, seed=self.seed + index)

    def to_dict(self) -> dict:
        degrade = self.degrade.to_dict()
        del degrade["seed"]
        return {
            "input": self.input,
            "output": self.output,
            "degrade": degrade,
            "hyper": self.hyper.to_dict(),
            "operators": self.operators.to_dict(),
            "enhance": self.enhance.to_dict(),
            "kernel_source": self.kernel_source,
            "kernel_path": self.kernel_path,
            "dump_diagnostics": self.dump_diagnostics,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict, base_dir: Optional[Path] = None, check_paths: bool = True) -> RunConfig:
        """Parse a config tree, rejecting unknown keys at every level.

        Relative paths are resolved against ``base_dir``.
        """
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown top-level keys: {', '.join(unknown)}")
        for key in ("input", "output"):
            if key not in data:
                raise ConfigError(f"missing required key {key!r}")

        def resolve(p):
            if p is None:
                return None
            path = Path(p)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return str(path)

        ops = data.get("operators", {})
        if not isinstance(ops, dict):
            raise ConfigError("section 'operators' must be an object")
        slot_names = {f.name for f in dataclasses.fields(OperatorSlots)}
        unknown = sorted(set(ops) - slot_names)
        if unknown:
            raise ConfigError(f"unknown operator slots: {', '.join(unknown)}")
        defaults = OperatorSlots()
        slots = OperatorSlots(
            **{
                name: _build(DataOperator, ops[name], f"operators.{name}") if name in ops else getattr(defaults, name)
                for name in slot_names
            }
        )

        enhance = dict(data.get("enhance", {}))
        if "denoise" in enhance:
            enhance["denoise"] = _build(DataOperator, enhance["denoise"], "enhance.denoise")

        degrade = data.get("degrade", {})
        if isinstance(degrade, dict) and "seed" in degrade:
            raise ConfigError("set the noise seed with the top-level 'seed' key, not inside 'degrade'")

        try:
            cfg = cls(
                input=resolve(data["input"]),
                output=resolve(data["output"]),
                degrade=_build(DegradeSpec, degrade, "degrade"),
                hyper=_build(HyperParams, data.get("hyper", {}), "hyper"),
                operators=slots,
                enhance=_build(EnhanceSpec, enhance, "enhance"),
                kernel_source=data.get("kernel_source", "from_degradation"),
                kernel_path=resolve(data.get("kernel_path")),
                dump_diagnostics=bool(data.get("dump_diagnostics", False)),
                seed=int(data.get("seed", 0)),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        if check_paths:
            if not Path(cfg.input).exists():
                raise ConfigError(f"input path does not exist: {cfg.input}")
            if cfg.kernel_source == "file" and not Path(cfg.kernel_path).exists():
                raise ConfigError(f"kernel file does not exist: {cfg.kernel_path}")
        return cfg


def load_config(path: str | Path, check_paths: bool = True) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(data, base_dir=path.parent, check_paths=check_paths)


def write_kernel(path: str | Path, k: np.ndarray) -> None:
    """Write ``size N`` followed by N rows of N decimals (lossless repr)."""
    lines = [f"size {k.shape[0]}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in k]
    Path(path).write_text("\n".join(lines) + "\n")


def read_kernel(path: str | Path) -> np.ndarray:
    """Parse a kernel file; the taps are renormalized to unit sum."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise KernelFileError(f"cannot read kernel file {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise KernelFileError(f"{path}: empty kernel file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "size" or not head[1].isdigit():
        raise KernelFileError(f"{path}: first line must be 'size N'")
    n = int(head[1])
    if len(lines) != n + 1:
        raise KernelFileError(f"{path}: expected {n} rows, found {len(lines) - 1}")
    try:
        rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
    except ValueError as exc:
        raise KernelFileError(f"{path}: non-numeric tap ({exc})") from exc
    if any(len(r) != n for r in rows):
        raise KernelFileError(f"{path}: every row must have {n} values")
    try:
        return normalize_kernel(np.array(rows))
    except ValueError as exc:
        raise KernelFileError(f"{path}: {exc}") from exc
