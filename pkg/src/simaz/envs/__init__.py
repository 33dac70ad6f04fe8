from .dubin import DubinConfig, DubinState, DubinTag, dubin_step
from .sda import (SdaConfig, SdaCustody, SdaState, sda_eclipse, sda_los_occluded,
                  sda_step, sda_sun_blinded)
from .toys import (GridPursuit, RandomTreeGame, RepeatedMatrixGame, asym22,
                   make_tabular_toy, matching_pennies, rps)

__all__ = [
    "DubinConfig", "DubinState", "DubinTag", "dubin_step",
    "SdaConfig", "SdaCustody", "SdaState", "sda_eclipse", "sda_los_occluded", "sda_step",
    "sda_sun_blinded",
    "GridPursuit", "RandomTreeGame", "RepeatedMatrixGame", "asym22", "make_tabular_toy",
    "matching_pennies", "rps", "make_env",
]


def make_env(name: str, **params):
    """Build any environment by name; toy names accept the ``rps(2)`` call form."""
    if name == "dubin":
        return DubinTag(DubinConfig(**params))
    if name == "sda":
        return SdaCustody(SdaConfig(**params))
    return make_tabular_toy(name, **params)
