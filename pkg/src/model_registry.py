from dataclasses import dataclass, field
from typing import Callable, List, Optional

from base_nonlinearity import ModelDomainError
from biofilm_phi import BiofilmPhi
from custom_phi import nondegenerate_phi
from model_system import (
    ConstantDiffusivity,
    ConstantGrowth,
    ModelSystem,
    MonodConsumption,
    MonodGrowth,
    NoReaction,
)
from porous_medium_phi import PowerLawPhi


@dataclass(frozen=True)
class ModelPreset:
    name: str
    defaults: dict
    builder: Callable[[dict], ModelSystem]
    default_gamma: Callable[[dict], float]
    optional_keys: frozenset = field(default_factory=frozenset)

    def allowed_keys(self) -> set:
        return set(self.defaults) | set(self.optional_keys)

    def resolve(self, params: Optional[dict]) -> dict:
        params = dict(params or {})
        for key in params:
            if key not in self.allowed_keys():
                raise KeyError(key)
        resolved = dict(self.defaults)
        resolved.update(params)
        return resolved

    def build(self, params: Optional[dict] = None) -> ModelSystem:
        return self.builder(self.resolve(params))


def _build_pme(p: dict) -> ModelSystem:
    return ModelSystem(
        name="pme",
        phi=PowerLawPhi(p["m"]),
        f=ConstantGrowth(p["beta_reaction"]),
        g=NoReaction(),
        D=ConstantDiffusivity(1.0),
        mu=0,
        f_M=abs(p["beta_reaction"]),
        g_M=0.0,
        has_substrate=False,
    )


def _build_biofilm(p: dict) -> ModelSystem:
    f_M = p.get("f_M")
    if f_M is None:
        f_M = max(p["k3"] - p["k4"], p["k4"])
    g_M = p.get("g_M")
    if g_M is None:
        g_M = p["k1"]
    return ModelSystem(
        name="biofilm",
        phi=BiofilmPhi(p["d1"], p["alpha"], p["beta"]),
        f=MonodGrowth(p["k2"], p["k3"], p["k4"]),
        g=MonodConsumption(p["k1"], p["k2"]),
        D=ConstantDiffusivity(p["d2"]),
        mu=int(p["mu"]),
        f_M=f_M,
        g_M=g_M,
        D_m=p["d2"],
        D_M=p["d2"],
    )


def _build_nondegenerate(p: dict) -> ModelSystem:
    return ModelSystem(
        name="nondegenerate",
        phi=nondegenerate_phi(p["p"]),
        f=ConstantGrowth(p["beta_reaction"]),
        g=NoReaction(),
        D=ConstantDiffusivity(1.0),
        mu=0,
        f_M=abs(p["beta_reaction"]),
        g_M=0.0,
        has_substrate=False,
    )


class ModelRegistry:
    def __init__(self):
        self._registry: dict[str, ModelPreset] = {}

    def register_preset(self, preset: ModelPreset):
        self._registry[preset.name] = preset

    def register_presets(self, presets: List[ModelPreset]):
        for p in presets:
            self.register_preset(p)

    def get_preset(self, name: str) -> ModelPreset:
        if name not in self._registry:
            raise KeyError(name)
        return self._registry[name]

    def get_preset_names(self) -> list[str]:
        return sorted(self._registry)

    def reset_presets(self):
        self._registry = {}
        self.register_presets(default_presets())


def default_presets() -> List[ModelPreset]:
    return [
        ModelPreset(
            name="pme",
            defaults={"m": 4.0, "beta_reaction": 1.0},
            builder=_build_pme,
            default_gamma=lambda p: 1.0 / (p["m"] - 1.0),
        ),
        ModelPreset(
            name="biofilm",
            defaults={
                "k1": 0.4,
                "k2": 0.01,
                "k3": 1.0,
                "k4": 0.42,
                "d1": 1e-6,
                "d2": 1.0,
                "alpha": 4.0,
                "beta": 4.0,
                "mu": 0,
            },
            builder=_build_biofilm,
            default_gamma=lambda p: 1.0 / p["alpha"],
            optional_keys=frozenset({"f_M", "g_M"}),
        ),
        ModelPreset(
            name="nondegenerate",
            defaults={"p": 4.0, "beta_reaction": 0.0},
            builder=_build_nondegenerate,
            default_gamma=lambda p: 1.0,
        ),
    ]


_model_registry_instance: ModelRegistry = ModelRegistry()
_model_registry_instance.register_presets(default_presets())


def get_model_registry() -> ModelRegistry:
    return _model_registry_instance


def build_model(preset: str, params: Optional[dict] = None) -> ModelSystem:
    try:
        return get_model_registry().get_preset(preset).build(params)
    except KeyError as e:
        raise ModelDomainError(f"Unknown model preset or parameter: {e}") from e
