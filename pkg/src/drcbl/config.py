from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

from drcbl.cic import CicConfig
from drcbl.spu import SpuConfig

# (fes_u_max, fes_u_var, fes_l_max, fes_l_var) per problem scale
BUDGETS = {
    "smd-2-3": (2500, 350, 250, 25),
    "smd-10-10": (5000, 750, 500, 50),
    "smd-30-30": (12500, 750, 1000, 50),
    "tp": (5000, 350, 250, 35),
}


def default_budgets(m: int, n: int) -> tuple[int, int, int, int]:
    """Termination budgets for an (m, n) problem, scaled by its larger level."""
    size = max(m, n)
    if size <= 3:
        return BUDGETS["smd-2-3"]
    if size <= 10:
        return BUDGETS["smd-10-10"]
    return BUDGETS["smd-30-30"]


@dataclass(frozen=True)
class RunConfig:
    pop_u: int
    pop_l: int
    fes_u_max: int
    fes_u_var: int
    fes_l_max: int
    fes_l_var: int
    tol_u: float = 1e-6
    tol_l: float = 1e-5
    acc_stop: float = 1e-6
    spu: SpuConfig = field(default_factory=SpuConfig)
    cic: CicConfig = field(default_factory=CicConfig)
    seed: int = 0
    strict_rounds: bool = False
    cooperation: bool = True
    sigma0: float = 0.2

    def __post_init__(self):
        if self.pop_u < 2 or self.pop_l < 2:
            raise ValueError("population sizes must be at least 2")
        if min(self.fes_u_max, self.fes_u_var, self.fes_l_max, self.fes_l_var) <= 0:
            raise ValueError("budgets must be positive")

    @classmethod
    def for_dims(cls, m: int, n: int, **overrides) -> "RunConfig":
        fu, fuv, fl, flv = default_budgets(m, n)
        base = dict(
            pop_u=4 + int(math.floor(math.log(m + n))),
            pop_l=4 + int(math.floor(math.log(n))),
            fes_u_max=fu,
            fes_u_var=fuv,
            fes_l_max=fl,
            fes_l_var=flv,
        )
        return apply_overrides(cls(**base), overrides)


_SPU_KEYS = {"gamma", "epsilon", "w_bs", "w_pf", "w_pt"}
_CIC_KEYS = {"alpha": "alpha", "cic_normalize": "normalize_weights", "cic_min_execs": "min_execs"}


def apply_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    """Apply a flat mapping of RunConfig / SpuConfig / CicConfig keys."""
    run_keys = {f.name for f in dataclasses.fields(RunConfig)} - {"spu", "cic"}
    run, spu, cic = {}, {}, {}
    for key, value in overrides.items():
        if key in _SPU_KEYS:
            spu[key] = value
        elif key in _CIC_KEYS:
            cic[_CIC_KEYS[key]] = value
        elif key in run_keys:
            run[key] = value
        else:
            raise KeyError(f"unknown config key {key!r}")
    if spu:
        run["spu"] = dataclasses.replace(cfg.spu, **spu)
    if cic:
        run["cic"] = dataclasses.replace(cfg.cic, **cic)
    return dataclasses.replace(cfg, **run) if run else cfg


def load_overrides(path) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a flat JSON object")
    return data
