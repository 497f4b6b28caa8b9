"""UAV horizontal position optimization under box constraints.

The ascent direction is the finite-difference gradient of the exact EE
(step controlled by a Richardson self-consistency check); the transcribed
closed-form gradient is kept as a loose secondary reference only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linklayer import Allocation, build_link_state, build_report
from .scenario import Scenario

FD_STEP0 = 1e-3
FD_RTOL = 1e-5
ARMIJO_C = 1e-4
MAX_HALVINGS = 40


@dataclass
class PlacementState:
    xy: tuple
    multipliers: np.ndarray   # gamma_1..gamma_4 >= 0
    ee: float
    iteration: int


@dataclass
class PlacementResult:
    xy: tuple
    ee: float
    converged: bool
    trace: list = field(default_factory=list)  # (omega, x, y, EE, g1..g4)


def ee_of_position(scenario: Scenario, alloc: Allocation, scheme="noma"):
    """EE as a function of the UAV (x, y) with users and allocation frozen.

    Probe positions are clamped to the admissible box so finite-difference
    stencils at the boundary stay valid.
    """
    x_min, x_max, y_min, y_max = scenario.params.box

    def f(x, y):
        moved = scenario.with_uav(np.clip(x, x_min, x_max),
                                  np.clip(y, y_min, y_max))
        link = build_link_state(moved)
        return build_report(moved, alloc, link=link, scheme=scheme).EE
    return f


def _central_diff(f, x, y, step):
    gx = (f(x + step, y) - f(x - step, y)) / (2.0 * step)
    gy = (f(x, y + step, ) - f(x, y - step)) / (2.0 * step)
    return np.array([gx, gy])


def fd_gradient(f, x, y, step0=FD_STEP0, rtol=FD_RTOL, max_halvings=8):
    """Central differences with step halving until two estimates agree."""
    step = step0
    g = _central_diff(f, x, y, step)
    for _ in range(max_halvings):
        g_half = _central_diff(f, x, y, step / 2.0)
        scale = max(np.linalg.norm(g_half), 1e-12)
        if np.linalg.norm(g_half - g) <= rtol * scale:
            return g_half
        g = g_half
        step /= 2.0
    return g


def ee_gradient(scenario: Scenario, alloc: Allocation, scheme="noma"):
    """(dEE/dx0, dEE/dy0) of the exact EE at the scenario's UAV position."""
    f = ee_of_position(scenario, alloc, scheme=scheme)
    return fd_gradient(f, scenario.uav_xy[0], scenario.uav_xy[1])


def ee_gradient_closed_form(scenario: Scenario, alloc: Allocation):
    """Literal transcription of the analytic KKT gradient shorthand.

    The source expression is ambiguous about per-pair summation and mixes
    energy symbols; this evaluator sums over pairs and reads the propulsion
    constants for the P_0/P_1 terms. It is a diagnostic cross-check, not
    the authoritative gradient.
    """
    prm = scenario.params
    link = build_link_state(scenario)
    x0, y0 = scenario.uav_xy
    xb, yb = prm.beacon_xy
    B, T, beta, beta0 = prm.B, prm.T, prm.beta, prm.beta0
    tau = alloc.tau
    R7 = np.sqrt((x0 - xb) ** 2 + (y0 - yb) ** 2 + prm.h ** 2)
    H2 = prm.M ** 2 * beta0  # rank-1 beacon gain before the path-loss factor
    by_id = {u.id: u for u in scenario.users}
    R3 = (tau * (prm.P_beacon + prm.M * prm.P_a)
          + T * (prm.rotor.P0 + prm.rotor.Pi + prm.M * prm.P_a
                 + H2 * prm.P_beacon * prm.xi * tau / ((T - tau) * R7 ** beta))
          + 2 * prm.N * T * prm.P_user)
    R10 = H2 * prm.N * prm.P_beacon * T * beta * prm.xi * tau
    grad = np.zeros(2)
    for n, pair in enumerate(scenario.pairs):
        u1, u2 = by_id[pair.cc], by_id[pair.ce]
        cv1, cv2 = link.cc_channels[n], link.ce_channels[n]
        q = link.precoder.columns[:, n]
        a1 = cv1.h / np.linalg.norm(cv1.h)
        a2 = cv2.h / np.linalg.norm(cv2.h)
        qn1 = abs(a1.conj() @ q) ** 2
        qn2 = abs(a2.conj() @ q) ** 2
        Q1 = prm.M * alloc.alpha_cc[n] * beta * beta0 * alloc.p[n] * qn1
        Q2 = prm.M * alloc.alpha_ce[n] * beta * beta0 * alloc.p[n] * qn2
        R8 = max(cv1.dist, 1.0)
        R9 = max(cv2.dist, 1.0)
        R5 = R9 ** (beta + 1.0)
        R6 = 1.0 + Q1 * qn2 / (qn1 * R9 ** beta)
        R2 = Q2 / (R6 * R9 ** beta) + 1.0
        R4 = Q1 / R8 ** beta + 1.0
        for axis, (u0, ub, p1, p2) in enumerate(
                [(x0, xb, u1.pos[0], u2.pos[0]), (y0, yb, u1.pos[1], u2.pos[1])]):
            R1 = 2.0 * u0 - 2.0 * p2
            term_b = (R10 * (2.0 * u0 - 2.0 * ub)
                      * (B * np.log(R2 * R4) / np.log(2.0))
                      / (2.0 * R7 ** (beta + 2.0) * R3 ** 2))
            inner = (B * (Q2 * R1 / (2.0 * R6 * R5 * R9)
                          - Q1 * Q2 * R1 * qn2
                          / (2.0 * beta * qn1 * R6 ** 2 * R5 * R9 ** (beta + 1.0)))
                     / (np.log(2.0) * R2)
                     + B * Q1 * (2.0 * u0 - 2.0 * p1)
                     / (2.0 * np.log(2.0) * R4 * R8 ** (beta + 2.0)))
            grad[axis] += term_b - (T - tau) * inner / R3
    return grad


def update_multipliers(multipliers, xy, box, steps):
    """Projected subgradient update of the four box multipliers."""
    x0, y0 = xy
    x_min, x_max, y_min, y_max = box
    g = np.asarray(multipliers, float)
    slacks = np.array([x0 - x_min, x_max - x0, y0 - y_min, y_max - y0])
    return np.maximum(g - np.asarray(steps, float) * slacks, 0.0)


def maximize_over_box(f, xy0, box, eps, max_iter, psi=(0.01,) * 4,
                      init_step=5.0) -> PlacementResult:
    """Projected gradient ascent of f over the box, Armijo backtracking."""
    x_min, x_max, y_min, y_max = box

    def clip(z):
        return np.array([np.clip(z[0], x_min, x_max),
                         np.clip(z[1], y_min, y_max)])

    z = clip(np.asarray(xy0, float))
    ee = f(z[0], z[1])
    gammas = np.zeros(4)
    trace = [(0, z[0], z[1], ee, *gammas)]
    converged = False
    g_prev = None
    z_prev = None
    for omega in range(1, max_iter + 1):
        g = fd_gradient(f, z[0], z[1])
        # Barzilai-Borwein step seed tames the zigzag of plain ascent on
        # ill-conditioned ridges; Armijo halving keeps the trace monotone
        step = init_step
        if g_prev is not None:
            s = z - z_prev
            y = g - g_prev
            sy = -(s @ y)    # positive where the objective is locally concave
            if sy > 1e-18:
                step = float(np.clip((s @ s) / sy, 1e-8, 1e4))
        improved = False
        for _ in range(MAX_HALVINGS):
            z_new = clip(z + step * g)
            ee_new = f(z_new[0], z_new[1])
            move = g @ (z_new - z)
            if ee_new >= ee + ARMIJO_C * max(move, 0.0) and ee_new >= ee:
                improved = True
                break
            step *= 0.5
        gammas = update_multipliers(gammas, z, box, psi)
        if not improved:
            trace.append((omega, z[0], z[1], ee, *gammas))
            converged = True
            break
        delta = ee_new - ee
        z_prev, g_prev = z.copy(), g
        z, ee = z_new, ee_new
        trace.append((omega, z[0], z[1], ee, *gammas))
        if delta < eps:
            converged = True
            break
    return PlacementResult(xy=(float(z[0]), float(z[1])), ee=ee,
                           converged=converged, trace=trace)


def run_algorithm3(scenario: Scenario, alloc: Allocation, params=None,
                   scheme="noma", grid_init=0) -> PlacementResult:
    """Optimize the UAV position at fixed allocation.

    grid_init > 1 seeds the ascent from the best point of a grid_init x
    grid_init coarse scan of the box (the EE landscape is multimodal in
    the array-response angles); 0 starts from the current UAV position.
    """
    prm = params or scenario.params
    f = ee_of_position(scenario, alloc, scheme=scheme)
    xy0 = scenario.uav_xy
    if grid_init and grid_init > 1:
        xs = np.linspace(prm.box[0], prm.box[1], int(grid_init))
        ys = np.linspace(prm.box[2], prm.box[3], int(grid_init))
        cands = [(x, y) for x in xs for y in ys] + [tuple(xy0)]
        xy0 = max(cands, key=lambda c: f(c[0], c[1]))
    return maximize_over_box(f, xy0, prm.box, eps=prm.tol.eps_place,
                             max_iter=prm.iters.N_MAX, psi=prm.psi)


def trace_to_csv_rows(result: PlacementResult):
    yield "omega,x0,y0,EE,gamma1,gamma2,gamma3,gamma4"
    for row in result.trace:
        yield ",".join(f"{v:.10g}" if i else str(int(v))
                       for i, v in enumerate(row))
