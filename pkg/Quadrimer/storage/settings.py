import json
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from base.data_types import GhostPin, RngSeed
from base.errors import FileFormatError
from base.utils import get_worker_count
from dynamics.evolution import IntegratorSettings
from solver.continuation import ContinuationOptions
from solver.newton import NewtonSettings

CONFIG_ECHO_NAME = "config.json"


class Settings:
    """Effective run configuration: defaults, overridden by a JSON config file, overridden by flags."""

    def __init__(self, values: Mapping[str, Any]):
        self._settings = dict(values)

    @staticmethod
    def defaults() -> Dict[str, Any]:
        continuation = ContinuationOptions()
        integrator = IntegratorSettings()
        return {
            "newton_tol": NewtonSettings().tol,
            "newton_max_iterations": NewtonSettings().max_iterations,
            "initial_step": continuation.initial_step,
            "min_step": continuation.min_step,
            "max_step": continuation.max_step,
            "max_steps": continuation.max_steps,
            "rtol": integrator.rtol,
            "atol": integrator.atol,
            "samples_per_unit": integrator.samples_per_unit,
            "blowup_norm": integrator.blowup_norm,
            "rng_seed": 0,
            "sweep_seeds": 32,
            "perturbation": 1e-3,
            "z_max": 2000.0,
            "ghost_pin": GhostPin.MODULUS.value,
            "workers": get_worker_count(),
        }

    @staticmethod
    def load(config_file: Optional[Path], overrides: Optional[Mapping[str, Any]] = None) -> "Settings":
        values = Settings.defaults()
        if config_file is not None:
            try:
                with config_file.open("r") as f:
                    from_file = json.load(f)
            except json.JSONDecodeError as e:
                raise FileFormatError(f"Config file {config_file} is not valid JSON: {e}") from e
            if not isinstance(from_file, dict):
                raise FileFormatError(f"Config file {config_file} must hold a JSON object")
            unknown = sorted(set(from_file) - set(values))
            if unknown:
                raise FileFormatError(f"Unknown config keys in {config_file}: {', '.join(unknown)}")
            values.update(from_file)
        if overrides:
            values.update({key: value for key, value in overrides.items() if value is not None})
        return Settings(values)

    def get(self, key: str, default: Any = None) -> Any:
        return self._settings.get(key, default)

    def as_dict(self) -> Dict[str, Any]:
        return dict(self._settings)

    def newton(self) -> NewtonSettings:
        return NewtonSettings(tol=float(self.get("newton_tol")), max_iterations=int(self.get("newton_max_iterations")))

    def continuation(self) -> ContinuationOptions:
        return ContinuationOptions(
            initial_step=float(self.get("initial_step")),
            min_step=float(self.get("min_step")),
            max_step=float(self.get("max_step")),
            max_steps=int(self.get("max_steps")),
            newton_tol=float(self.get("newton_tol")),
        )

    def integrator(self) -> IntegratorSettings:
        return IntegratorSettings(
            rtol=float(self.get("rtol")),
            atol=float(self.get("atol")),
            samples_per_unit=int(self.get("samples_per_unit")),
            blowup_norm=float(self.get("blowup_norm")),
        )

    def rng_seed(self) -> RngSeed:
        return RngSeed(int(self.get("rng_seed")))

    def ghost_pin(self) -> GhostPin:
        return GhostPin(self.get("ghost_pin"))

    def workers(self) -> int:
        return max(1, int(self.get("workers")))

    def export(self, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        with (out_dir / CONFIG_ECHO_NAME).open("w") as f:
            json.dump(self._settings, f, indent=2, sort_keys=True)
            f.write("\n")
