"""Add investable assets (IES, 4-h storage) and the LDES placeholder to a state."""

from __future__ import annotations

import logging

import numpy as np

from .errors import AlreadyExpandedError
from .model import CandidateRules, GeneratorAsset, StorageAsset, SystemSpec

logger = logging.getLogger(__name__)

SDES_SUFFIX = "sdes+cand"
LDES_SUFFIX = "ldes"


def candidate_id(asset_id: str) -> str:
    return f"{asset_id}+cand"


def _cap_weighted(values: list[float], caps: list[float]) -> float:
    caps_a = np.asarray(caps, dtype=float)
    if caps_a.sum() <= 0:
        return float(np.mean(values))
    return float(np.dot(values, caps_a) / caps_a.sum())


def build_candidates(spec: SystemSpec, rules: CandidateRules | None = None) -> SystemSpec:
    """Return a copy of ``spec`` with candidate assets appended.

    * every existing intermittent unit gets a twin candidate sharing its
      profile, capped at ``multiplier x capacity``;
    * one 4-h storage candidate capped at ``sdes_multiplier`` times existing
      battery power (pumped hydro excluded);
    * one LDES entry whose power is imposed later.

    Investment costs come from ``spec.candidate_costs`` (keyed by the
    existing asset id), falling back to ``rules``.
    """
    if spec.expanded:
        raise AlreadyExpandedError(f"{spec.state}: candidates were already added")
    rules = rules or CandidateRules()
    mult = rules.multiplier_for(spec.state)
    gens = list(spec.generators)
    profiles = dict(spec.cf_profiles)
    ies = [g for g in spec.generators if g.is_intermittent and not g.is_candidate]
    if not ies:
        logger.info("%s: no existing intermittent capacity, no IES candidates", spec.state)
    for g in ies:
        cost = spec.candidate_costs.get(g.id)
        if cost is None:
            cost = rules.ies_invest_cost.get(g.technology)
        if cost is None:
            logger.warning("%s: no investment cost for %s, using 0", spec.state, g.id)
            cost = 0.0
        cid = candidate_id(g.id)
        gens.append(GeneratorAsset(
            id=cid,
            balancing_area=g.balancing_area,
            technology=g.technology,
            capacity_mw=0.0,
            variable_cost=g.variable_cost,
            fom_cost=g.fom_cost,
            kind="candidate",
            max_invest_mw=mult * g.capacity_mw,
            invest_cost=float(cost),
            state=g.state,
        ))
        profiles[cid] = spec.cf_profiles[g.id]

    sdes = [s for s in spec.storages if s.kind == "sdes_existing"]
    sdes_power = sum(s.power_mw for s in sdes)
    priced = [s for s in sdes if s.id in spec.candidate_costs]
    if priced:
        sdes_cost = _cap_weighted([spec.candidate_costs[s.id] for s in priced], [s.power_mw for s in priced])
    else:
        sdes_cost = rules.sdes_invest_cost
    sdes_fom = _cap_weighted([s.fom_cost for s in sdes], [s.power_mw for s in sdes]) if sdes else rules.sdes_fom_cost
    if sdes_power == 0:
        logger.info("%s: no existing SDES, storage candidate capped at 0 MW", spec.state)
    storages = list(spec.storages) + [
        StorageAsset(
            id=f"{spec.state}:{SDES_SUFFIX}",
            state=spec.state,
            kind="sdes_candidate",
            duration_h=rules.sdes_duration_h,
            max_invest_mw=rules.sdes_multiplier * sdes_power,
            rte=rules.sdes_rte,
            fom_cost=sdes_fom,
            invest_cost=float(sdes_cost),
        ),
        StorageAsset(
            id=f"{spec.state}:{LDES_SUFFIX}",
            state=spec.state,
            kind="ldes",
            duration_h=rules.ldes_duration_h,
            rte=rules.ldes_rte,
        ),
    ]
    return spec.replace(generators=tuple(gens), storages=tuple(storages), cf_profiles=profiles, expanded=True)


def with_ldes(spec: SystemSpec, duration_h: float | None = None, rte: float | None = None) -> SystemSpec:
    """Override the LDES duration and/or efficiency."""
    if duration_h is None and rte is None:
        return spec
    out = []
    for s in spec.storages:
        if s.kind == "ldes":
            s = StorageAsset(
                id=s.id, state=s.state, kind="ldes",
                duration_h=s.duration_h if duration_h is None else duration_h,
                rte=s.rte if rte is None else rte,
            )
        out.append(s)
    return spec.replace(storages=tuple(out))
