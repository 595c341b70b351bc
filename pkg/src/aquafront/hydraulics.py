"""Demand-driven steady-state solver (Hazen-Williams, global gradient iteration)."""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import Disconnected, NonphysicalPipe, NotConverged
from .network import PipeNetwork

HW_COEFF = 10.667
HW_EXP = 1.852
RHO = 1000.0
GRAVITY = 9.81
Q_REG = 1e-8  # below this |Q| the link law is linearized

MAX_ITER = 200
HEAD_TOL = 1e-6
MASS_TOL = 1e-6
FLOW_TOL = 1e-9  # largest flow change (m^3/s) in the last iteration
INIT_VELOCITY = 0.3


def hw_resistance(length, roughness, diameter):
    """Resistance ``r`` in ``h = r * sign(Q) * |Q|**1.852`` (SI)."""
    return HW_COEFF * length / (np.power(roughness, HW_EXP) * np.power(diameter, 4.871))


def headloss_hw(q: float, length: float, roughness: float, diameter: float) -> float:
    """Signed Hazen-Williams headloss in metres for flow ``q`` in m^3/s."""
    if length <= 0 or roughness <= 0:
        raise ValueError("length and roughness must be positive")
    if diameter <= 0:
        if q != 0:
            raise NonphysicalPipe(f"flow {q} through a pipe of diameter {diameter}")
        return 0.0
    if q == 0:
        return 0.0
    return float(np.sign(q) * hw_resistance(length, roughness, diameter) * abs(q) ** HW_EXP)


class _Topology:
    """Incidence structure of a network, built once per network object."""

    def __init__(self, net: PipeNetwork):
        nj, nr = len(net.junctions), len(net.reservoirs)
        links = [(p.start, p.end) for p in net.pipes] + [(k.start, k.end) for k in net.pumps]
        self.n_pipes = len(net.pipes)
        self.n_links = len(links)
        self.B = np.zeros((self.n_links, nj))
        self.B0 = np.zeros((self.n_links, nr))
        for k, (a, b) in enumerate(links):
            for node, sign in ((a, 1.0), (b, -1.0)):
                if node in net.junction_index:
                    self.B[k, net.junction_index[node]] = sign
                else:
                    self.B0[k, net.reservoir_index[node]] = sign
        self.BT = self.B.T.copy()
        self.demand = np.array([j.demand for j in net.junctions])
        self.res_head = np.array([r.head for r in net.reservoirs])
        self.fixed_drive = self.B0 @ self.res_head
        self.lengths = net.pipe_lengths
        self.roughness = np.array([p.roughness for p in net.pipes])
        self.pump_power_w = np.array([k.power * 1e3 for k in net.pumps])
        self.pump_coef = self.pump_power_w / (RHO * GRAVITY)


_TOPOLOGY: "weakref.WeakKeyDictionary[PipeNetwork, _Topology]" = weakref.WeakKeyDictionary()


def topology(net: PipeNetwork) -> _Topology:
    topo = _TOPOLOGY.get(net)
    if topo is None:
        topo = _TOPOLOGY[net] = _Topology(net)
    return topo


@dataclass
class HydraulicState:
    """Solved heads and flows. Arrays follow network declaration order."""

    net: PipeNetwork = field(repr=False)
    junction_heads: np.ndarray
    flows: np.ndarray  # pipes first, then pumps
    diameters: np.ndarray
    converged: bool
    iterations: int
    max_mass_residual: float
    max_energy_residual: float = 0.0

    @cached_property
    def node_heads(self) -> dict[str, float]:
        heads = {j.id: float(h) for j, h in zip(self.net.junctions, self.junction_heads)}
        heads.update({r.id: r.head for r in self.net.reservoirs})
        return heads

    @cached_property
    def pipe_flows(self) -> dict[str, float]:
        return {p.id: float(q) for p, q in zip(self.net.pipes, self.flows)}

    @cached_property
    def pump_flows(self) -> dict[str, float]:
        n = len(self.net.pipes)
        return {k.id: float(q) for k, q in zip(self.net.pumps, self.flows[n:])}

    @property
    def reservoir_outflows(self) -> np.ndarray:
        """Net outflow (m^3/s) from each reservoir."""
        return topology(self.net).B0.T @ self.flows


def _link_law(q, r, pump_coef):
    """(phi, dphi/dq) per realized link: pipes (resistance ``r``) then pumps.

    ``phi`` is the head drop from start to end node.
    """
    n_pipes = r.shape[0]
    qp = q[:n_pipes]
    aq = np.abs(qp)
    ap = np.maximum(aq, Q_REG) ** (HW_EXP - 1.0)
    rap = r * ap
    phi = rap * qp
    grad = HW_EXP * rap
    small = aq < Q_REG
    if small.any():
        grad[small] = rap[small]
    if pump_coef.size:
        qk = q[n_pipes:]
        qc = np.maximum(qk, Q_REG)
        gain = pump_coef / qc
        slope = pump_coef / qc**2
        phi = np.concatenate([phi, np.where(qk >= Q_REG, -gain, -gain + slope * (qk - Q_REG))])
        grad = np.concatenate([grad, slope])
    return phi, grad


def solve_steady_state(
    net: PipeNetwork,
    indices: Sequence[int],
    *,
    max_iter: int = MAX_ITER,
    head_tol: float = HEAD_TOL,
    mass_tol: float = MASS_TOL,
    strict: bool = False,
) -> HydraulicState:
    """Solve nodal heads and link flows for the design given by ``indices``.

    Raises :class:`Disconnected` when a junction cannot reach a reservoir over
    realized pipes. An exhausted iteration budget returns a state with
    ``converged=False``, or raises :class:`NotConverged` if ``strict``.
    """
    topo = topology(net)
    diam = net.diameters(indices)
    active = diam > 0
    n_pipes = topo.n_pipes
    nj = len(net.junctions)
    if active.all():
        links = slice(None)
        d_act = diam
        lengths, rough = topo.lengths, topo.roughness
    else:
        lost = net.unreachable_nodes(diam)
        if lost:
            raise Disconnected(lost)
        links = np.concatenate([np.flatnonzero(active), np.arange(n_pipes, topo.n_links)])
        d_act = diam[active]
        lengths, rough = topo.lengths[active], topo.roughness[active]
    B = topo.B[links]
    BT = np.ascontiguousarray(B.T)
    drive = topo.fixed_drive[links]
    demand = topo.demand
    r = hw_resistance(lengths, rough, d_act)
    n_act = r.shape[0]

    q = np.empty(n_act + topo.pump_coef.size)
    q[:n_act] = INIT_VELOCITY * np.pi * d_act**2 / 4.0
    if topo.pump_coef.size:
        q[n_act:] = max(demand.sum() / topo.pump_coef.size, 1e-3)
    h = np.full(nj, topo.res_head.max())

    flows = np.zeros(topo.n_links)
    if nj == 0:
        return HydraulicState(net, h, flows, diam, True, 0, 0.0)

    converged = False
    mass_res = energy_res = np.inf
    it = 0
    phi, grad = _link_law(q, r, topo.pump_coef)
    for it in range(1, max_iter + 1):
        w = 1.0 / grad
        y = phi * w
        lhs = (BT * w) @ B
        rhs = -demand - BT @ (q - y + w * drive)
        h_new = np.linalg.solve(lhs, rhs)
        drop = B @ h_new + drive
        q_new = q - y + w * drop
        dq = float(abs(q_new - q).max())
        q = q_new
        dh = float(abs(h_new - h).max())
        h = h_new
        phi, grad = _link_law(q, r, topo.pump_coef)
        mass_res = float(abs(BT @ q + demand).max())
        energy_res = float(abs(drop - phi).max())
        # absolute tolerances sit below float resolution once |H| ~ 1e7 m
        scale = max(1.0, 1e-9 / head_tol * float(abs(h).max()))
        if dh <= head_tol * scale and dq <= FLOW_TOL * scale and mass_res <= mass_tol and energy_res <= head_tol * scale:
            converged = True
            break

    flows[links] = q
    state = HydraulicState(net, h, flows, diam, converged, it, mass_res, energy_res)
    if strict and not converged:
        raise NotConverged(state)
    return state
