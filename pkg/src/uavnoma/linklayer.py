"""ZF precoding, CE combining, rates, energy accounting and energy efficiency."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import channel as ch
from .params import SystemParams
from .scenario import Scenario

ZF_TOL = 1e-9  # admissible cross-pair residual


@dataclass(frozen=True)
class Precoder:
    columns: np.ndarray  # M x N, unit-norm columns


@dataclass(frozen=True)
class CombinerSet:
    w_cc: np.ndarray   # N complex scalars, |w| = 1
    v_ce: np.ndarray   # M x N unit columns
    w_ce: np.ndarray   # N complex scalars, h_{n,2}^H v_{n,2}


@dataclass(frozen=True)
class LinkState:
    """Effective per-pair gains and everything tied to the UAV position."""

    eff_gain_cc: np.ndarray      # |h_{n,1}^H q_n|^2
    eff_gain_ce: np.ndarray      # |h_{n,2}^H q_n|^2
    precoder: Precoder
    combiners: CombinerSet
    beacon: ch.BeaconLink
    cc_channels: tuple           # ChannelVector per pair
    ce_channels: tuple
    antenna_loads: np.ndarray    # M x N, |[q_n]_iota|^2


@dataclass(frozen=True)
class Allocation:
    p: np.ndarray           # W per pair
    alpha_cc: np.ndarray
    alpha_ce: np.ndarray
    tau: float
    fixed_P_T: float = None  # battery-supplied budget; None = harvested

    def __post_init__(self):
        if np.any(self.p < 0):
            raise ValueError("pair powers must be nonnegative")
        if not np.allclose(self.alpha_cc + self.alpha_ce, 1.0, atol=1e-9):
            raise ValueError("intra-pair coefficients must sum to 1")


@dataclass
class EEReport:
    R_sum: float
    E_sum: float
    EE: float
    rates_cc: list
    rates_ce: list
    energy: dict = field(default_factory=dict)
    feasible: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "R_sum": self.R_sum, "E_sum": self.E_sum, "EE": self.EE,
            "rates_cc": self.rates_cc, "rates_ce": self.rates_ce,
            "energy": self.energy, "feasible": self.feasible,
        }, indent=2, sort_keys=True)


def _null_space_pick(constraints, own):
    """Unit vector in the null space of `constraints` closest to `own`.

    `constraints` is a (k, M) array of row vectors c with c @ q = 0 required;
    the returned q maximizes |own^H q| among null-space unit vectors.
    """
    if constraints.shape[0] == 0:
        q = own
    else:
        ns = scipy.linalg.null_space(constraints)
        if ns.shape[1] == 0:
            raise np.linalg.LinAlgError("empty null space: channels are rank deficient")
        q = ns @ (ns.conj().T @ own)
        if np.linalg.norm(q) < 1e-14:
            # own channel lies in the span of the constraints (near-parallel
            # geometry); any null-space direction is admissible
            q = ns[:, 0]
    nrm = np.linalg.norm(q)
    if nrm < 1e-14:
        raise np.linalg.LinAlgError("own channel is orthogonal to the null space")
    return q / nrm


def zf_precoders(cc_channels, w_cc=None) -> Precoder:
    """Per-pair ZF beams: q_n in the null space of the other CC channels.

    Among admissible directions the projection of the pair's own channel is
    used, which maximizes the own effective gain. For N = 1 the constraint
    is vacuous and the matched filter results.
    """
    N = len(cc_channels)
    M = cc_channels[0].h.shape[0]
    if w_cc is None:
        w_cc = np.ones(N, dtype=complex)
    H = np.stack([w * cv.h for w, cv in zip(w_cc, cc_channels)])  # N x M
    cols = np.empty((M, N), dtype=complex)
    for n in range(N):
        others = np.delete(H, n, axis=0).conj()
        cols[:, n] = _null_space_pick(others, H[n])
    return Precoder(columns=cols)


def ce_combiners(ce_channels, precoder: Precoder) -> CombinerSet:
    """Receive combiners nulling the inter-pair interference at CE users."""
    N = len(ce_channels)
    M = ce_channels[0].h.shape[0]
    # g_{m,2} = h_{m,2} h_{m,2}^H q_m
    G = np.stack([cv.h * (cv.h.conj() @ precoder.columns[:, m])
                  for m, cv in enumerate(ce_channels)])  # N x M
    v = np.empty((M, N), dtype=complex)
    w_ce = np.empty(N, dtype=complex)
    for n in range(N):
        others = np.delete(G, n, axis=0).conj()
        v[:, n] = _null_space_pick(others, ce_channels[n].h)
        w_ce[n] = ce_channels[n].h.conj() @ v[:, n]
    return CombinerSet(w_cc=np.ones(N, dtype=complex), v_ce=v, w_ce=w_ce)


def build_link_state(scenario: Scenario) -> LinkState:
    """Channels, precoders and combiners for the scenario's UAV position."""
    params = scenario.params
    uav = (scenario.uav_xy[0], scenario.uav_xy[1], params.h)
    by_id = {u.id: u for u in scenario.users}
    cc = tuple(ch.user_channel(uav, by_id[p.cc], params) for p in scenario.pairs)
    ce = tuple(ch.user_channel(uav, by_id[p.ce], params) for p in scenario.pairs)
    prec = zf_precoders(cc)
    comb = ce_combiners(ce, prec)
    g1 = np.abs(np.array([cc[n].h.conj() @ prec.columns[:, n]
                          for n in range(params.N)])) ** 2
    g2 = np.abs(np.array([ce[n].h.conj() @ prec.columns[:, n]
                          for n in range(params.N)])) ** 2
    return LinkState(
        eff_gain_cc=g1, eff_gain_ce=g2, precoder=prec, combiners=comb,
        beacon=ch.beacon_link(uav, params), cc_channels=cc, ce_channels=ce,
        antenna_loads=np.abs(prec.columns) ** 2,
    )


# -- SNRs, rates, energy ----------------------------------------------------

def cc_snr(alpha_cc, p, eff_gain_cc):
    return alpha_cc * p * eff_gain_cc


def ce_sinr(alpha_cc, alpha_ce, p, eff_gain_ce):
    return alpha_ce * p * eff_gain_ce / (1.0 + alpha_cc * p * eff_gain_ce)


def pair_rates(link: LinkState, alloc: Allocation, n: int):
    B = 1.0  # bit/s/Hz per unit bandwidth; scaled by params.B in sum_throughput
    g_cc = cc_snr(alloc.alpha_cc[n], alloc.p[n], link.eff_gain_cc[n])
    g_ce = ce_sinr(alloc.alpha_cc[n], alloc.alpha_ce[n], alloc.p[n],
                   link.eff_gain_ce[n])
    return B * np.log2(1.0 + g_cc), B * np.log2(1.0 + g_ce)


def instantaneous_rates(link: LinkState, alloc: Allocation, params: SystemParams):
    """Per-pair (R_cc, R_ce) in bit/s/Hz, without the (T - tau) factor."""
    snr = cc_snr(alloc.alpha_cc, alloc.p, link.eff_gain_cc)
    sinr = ce_sinr(alloc.alpha_cc, alloc.alpha_ce, alloc.p, link.eff_gain_ce)
    return params.B * np.log2(1.0 + snr), params.B * np.log2(1.0 + sinr)


def sum_throughput(link: LinkState, alloc: Allocation, params: SystemParams) -> float:
    r_cc, r_ce = instantaneous_rates(link, alloc, params)
    return float((params.T - alloc.tau) * np.sum(r_cc + r_ce))


def power_budget(alloc: Allocation, params: SystemParams, link_gain: float) -> float:
    if alloc.fixed_P_T is not None:
        return alloc.fixed_P_T
    return ch.harvested_tx_power(alloc.tau, link_gain, params)


def system_energy(alloc: Allocation, params: SystemParams, link_gain: float):
    """Energy per cycle and its breakdown.

    The beacon's radiated energy P_beacon*tau is reported in the breakdown
    but charged into E_sum only when params.include_beacon_energy is set.
    """
    P_T = power_budget(alloc, params, link_gain)
    hover = ch.propulsion_power(0.0, params.rotor)
    breakdown = {
        "beacon": params.M * params.P_a * alloc.tau,
        "uav_tx": P_T * params.T,
        "uav_rf": params.M * params.P_a * params.T,
        "hover": hover * params.T,
        "users": 2 * params.N * params.P_user * params.T,
        "beacon_radiated": params.P_beacon * alloc.tau,
    }
    E_sum = (breakdown["beacon"] + breakdown["uav_tx"] + breakdown["uav_rf"]
             + breakdown["hover"] + breakdown["users"])
    if params.include_beacon_energy:
        E_sum += breakdown["beacon_radiated"]
    return E_sum, breakdown


def constraint_flags(scenario: Scenario, link: LinkState, alloc: Allocation,
                     slack: float = 1e-9) -> dict:
    params = scenario.params
    P_T = power_budget(alloc, params, link.beacon.gain)
    r_cc, r_ce = instantaneous_rates(link, alloc, params)
    loads = link.antenna_loads @ alloc.p
    x_min, x_max, y_min, y_max = params.box
    return {
        "C1": bool(np.sum(alloc.p) <= P_T + slack),
        "C2": bool(0.0 <= alloc.tau < params.T),
        "C3": bool(np.all(r_cc >= params.R_min - slack)),
        "C4": bool(np.all(r_ce >= params.R_min - slack)),
        "C5": bool(x_min - slack <= scenario.uav_xy[0] <= x_max + slack),
        "C6": bool(y_min - slack <= scenario.uav_xy[1] <= y_max + slack),
        "C7": bool(np.allclose(alloc.alpha_cc + alloc.alpha_ce, 1.0, atol=1e-9)),
        "C8": bool(np.all(loads <= params.P_iota + slack)),
    }


def oma_rates(link: LinkState, alloc: Allocation, params: SystemParams):
    """OMA convention: equal orthogonal halves, full pair power per user."""
    r_cc = 0.5 * params.B * np.log2(1.0 + alloc.p * link.eff_gain_cc)
    r_ce = 0.5 * params.B * np.log2(1.0 + alloc.p * link.eff_gain_ce)
    return r_cc, r_ce


def build_report(scenario: Scenario, alloc: Allocation, link: LinkState = None,
                 scheme: str = "noma") -> EEReport:
    """Full throughput/energy/EE report; feasibility violations only flag."""
    params = scenario.params
    if link is None:
        link = build_link_state(scenario)
    if scheme == "noma":
        r_cc, r_ce = instantaneous_rates(link, alloc, params)
    elif scheme == "oma":
        r_cc, r_ce = oma_rates(link, alloc, params)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    R_sum = float((params.T - alloc.tau) * np.sum(r_cc + r_ce))
    E_sum, breakdown = system_energy(alloc, params, link.beacon.gain)
    return EEReport(
        R_sum=R_sum, E_sum=E_sum, EE=R_sum / E_sum,
        rates_cc=list(map(float, r_cc)), rates_ce=list(map(float, r_ce)),
        energy=breakdown, feasible=constraint_flags(scenario, link, alloc),
    )


def system_ee(scenario: Scenario, alloc: Allocation, link: LinkState = None) -> EEReport:
    return build_report(scenario, alloc, link=link, scheme="noma")
