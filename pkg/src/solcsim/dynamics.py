"""Continuous-time relaxation of a clamped netlist to a satisfying corner.

Every gate contributes a penalty: one quarter of the squared distance from
its terminal voltages to the nearest of its four satisfying corners in
{-1,+1}^3.  Node voltages follow the negative gradient of the total
penalty, with each gate's contribution scaled by a memory weight that grows
exponentially while the gate is violated:

    dv_i/dt = - sum_g x_g * dE_g/dv_i        (sum over gates touching i)
    dx_g/dt = gamma * x_g * E_g              (gamma = 1)

Weights of persistently violated gates eventually dominate, which tilts the
landscape and pushes the state out of non-solution traps; at a satisfying
corner every penalty is zero and the state is a fixed point.  Integration
is explicit Euler with voltages clipped to [-V_CAP, V_CAP], weights to
[1, X_CAP], and clamped nodes pinned at exactly +-1 after every step.

The run is considered converged at the first time the worst-case distance
of any gate terminal from the logic levels +-1 drops to epsilon:

    C(t) = max_i min(|v_i - 1|, |v_i + 1|) <= epsilon.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .circuit import Gate, Netlist, instance_from_netlist
from .embedding import (
    DecodedSolution,
    EmbeddingLayout,
    bits_to_int,
    classify_readout,
    int_to_bits,
    verify_identity,
)
from .errors import NonFinite

V_CAP = 1.5
X_CAP = 1.0e4
GAMMA = 1.0


@dataclass(frozen=True)
class SimConfig:
    epsilon: float = 0.01
    t_max: float = 400.0
    dt_initial: float = 0.05
    seed: int = 0
    record_every: int = 10
    record_voltages: bool = False

    def __post_init__(self):
        if self.epsilon <= 0 or self.t_max <= 0 or self.dt_initial <= 0:
            raise ValueError("epsilon, t_max and dt_initial must be positive")


@dataclass
class SimState:
    t: float
    v: np.ndarray  # per-node voltage, dense order (sorted node ids)
    x: np.ndarray  # per-gate memory weight, construction order


@dataclass(frozen=True)
class TraceSample:
    t: float
    c: float
    v: Optional[np.ndarray] = None


@dataclass
class Trace:
    samples: list[TraceSample] = field(default_factory=list)

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    def c_values(self) -> np.ndarray:
        return np.array([s.c for s in self.samples])


@dataclass
class SolveReport:
    converged: bool
    t_c: Optional[float]
    decoded: Optional[DecodedSolution]
    identity_ok: Optional[bool]
    readout_flag: Optional[str]
    steps: int


_CORNERS = {}
for _kind, _fn in (("AND", lambda p, q: p & q), ("OR", lambda p, q: p | q),
                   ("XOR", lambda p, q: p ^ q)):
    _CORNERS[_kind] = np.array(
        [[2 * p - 1, 2 * q - 1, 2 * _fn(p, q) - 1] for p in (0, 1) for q in (0, 1)],
        dtype=float,
    )


class _Compiled:
    """Dense-index arrays derived from a netlist, built once per simulation."""

    def __init__(self, netlist: Netlist):
        self.order = sorted(netlist.nodes)
        self.index = {node: k for k, node in enumerate(self.order)}
        self.num_nodes = len(self.order)
        self.num_gates = len(netlist.gates)
        self.fingerprint = (len(netlist.nodes), len(netlist.gates), len(netlist.clamps))

        self.clamp_idx = np.array(
            [self.index[n] for n in sorted(netlist.clamps)], dtype=np.intp
        )
        self.clamp_val = np.array(
            [float(netlist.clamps[n]) for n in sorted(netlist.clamps)]
        )
        self.floating_idx = np.array(
            [self.index[n] for n in netlist.nodes if n not in netlist.clamps],
            dtype=np.intp,
        )
        self.floating_idx.sort()

        self.by_kind = []
        for kind in ("AND", "OR", "XOR"):
            rows = [
                (g_i, [self.index[t] for t in gate.terminals])
                for g_i, gate in enumerate(netlist.gates)
                if gate.kind == kind
            ]
            if rows:
                g_idx = np.array([r[0] for r in rows], dtype=np.intp)
                t_idx = np.array([r[1] for r in rows], dtype=np.intp)
                self.by_kind.append((g_idx, t_idx, _CORNERS[kind]))

        terminal = set()
        for gate in netlist.gates:
            terminal.update(gate.terminals)
        self.terminal_idx = np.array(
            sorted(self.index[t] for t in terminal), dtype=np.intp
        )


def _compiled(netlist: Netlist) -> _Compiled:
    cache = getattr(netlist, "_sim_compiled", None)
    fingerprint = (len(netlist.nodes), len(netlist.gates), len(netlist.clamps))
    if cache is None or cache.fingerprint != fingerprint:
        cache = _Compiled(netlist)
        netlist._sim_compiled = cache
    return cache


def init_state(netlist: Netlist, config: SimConfig) -> SimState:
    """Clamped nodes at their levels, floating nodes uniform on (-1, 1)."""
    comp = _compiled(netlist)
    rng = np.random.default_rng(config.seed)
    v = np.zeros(comp.num_nodes)
    v[comp.floating_idx] = rng.uniform(-1.0, 1.0, size=len(comp.floating_idx))
    v[comp.clamp_idx] = comp.clamp_val
    x = np.ones(comp.num_gates)
    return SimState(t=0.0, v=v, x=x)


def gate_penalty(gate: Gate, v_triple) -> float:
    """Quarter squared distance from the nearest satisfying corner (0 iff on one)."""
    v = np.asarray(v_triple, dtype=float)
    d2 = ((v[None, :] - _CORNERS[gate.kind]) ** 2).sum(axis=1)
    return 0.25 * float(d2.min())


def gate_gradient(gate: Gate, v_triple) -> np.ndarray:
    """Gradient of gate_penalty w.r.t. the terminal voltages."""
    v = np.asarray(v_triple, dtype=float)
    corners = _CORNERS[gate.kind]
    d2 = ((v[None, :] - corners) ** 2).sum(axis=1)
    return 0.5 * (v - corners[int(d2.argmin())])


def _forces(comp: _Compiled, v: np.ndarray, x: np.ndarray):
    """Weighted gradient accumulated per node, and the per-gate penalties."""
    dv = np.zeros(comp.num_nodes)
    energy = np.zeros(comp.num_gates)
    for g_idx, t_idx, corners in comp.by_kind:
        vt = v[t_idx]  # (m, 3)
        diffs = vt[:, None, :] - corners[None, :, :]
        d2 = np.einsum("mcs,mcs->mc", diffs, diffs)
        nearest = d2.argmin(axis=1)
        rows = np.arange(len(g_idx))
        energy[g_idx] = 0.25 * d2[rows, nearest]
        grad = 0.5 * (vt - corners[nearest])
        weighted = x[g_idx][:, None] * grad
        dv += np.bincount(
            t_idx.ravel(), weights=weighted.ravel(), minlength=comp.num_nodes
        )
    return dv, energy


def step(netlist: Netlist, state: SimState, dt: float) -> SimState:
    """One explicit Euler step of the coupled voltage/memory flow."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    comp = _compiled(netlist)
    dv, energy = _forces(comp, state.v, state.x)
    v = np.clip(state.v - dt * dv, -V_CAP, V_CAP)
    x = np.clip(state.x + dt * GAMMA * state.x * energy, 1.0, X_CAP)
    v[comp.clamp_idx] = comp.clamp_val
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(x))):
        raise NonFinite("non-finite state component; reduce dt")
    return SimState(t=state.t + dt, v=v, x=x)


def convergence_metric(netlist: Netlist, state: SimState) -> float:
    """Worst-case distance of any gate terminal from the logic levels +-1."""
    comp = _compiled(netlist)
    if len(comp.terminal_idx) == 0:
        return 0.0
    vt = state.v[comp.terminal_idx]
    return float(np.maximum(0, np.minimum(np.abs(vt - 1.0), np.abs(vt + 1.0))).max())


def total_penalty(netlist: Netlist, state: SimState) -> float:
    """Sum of all gate penalties (zero exactly at satisfying corner states)."""
    comp = _compiled(netlist)
    _, energy = _forces(comp, state.v, state.x)
    return float(energy.sum())


def decode(state: SimState, netlist: Netlist, layout: EmbeddingLayout) -> DecodedSolution:
    """Threshold voltages at 0 (ties decode to 0) and read the unknown registers."""
    comp = _compiled(netlist)

    def register_int(name: str) -> int:
        return bits_to_int(
            1 if state.v[comp.index[node]] > 0 else 0
            for node in netlist.registers[name]
        )

    b_int = register_int("b")
    b_f = register_int("b_f")
    c_f = register_int("c_f")
    return DecodedSolution(
        b_hat=(b_int << layout.n_b) | b_f,
        b_bits=int_to_bits(b_int, layout.n),
        b_f=b_f,
        c_f=c_f,
    )


def _integrate(netlist: Netlist, config: SimConfig, trace: Trace):
    """Shared integration loop; returns (state, converged, t_c, steps)."""
    comp = _compiled(netlist)
    state = init_state(netlist, config)
    c = convergence_metric(netlist, state)

    def record(s, c_now):
        v_copy = s.v.copy() if config.record_voltages else None
        trace.samples.append(TraceSample(t=s.t, c=c_now, v=v_copy))

    record(state, c)
    if c <= config.epsilon:
        return state, True, state.t, 0

    dt = config.dt_initial
    steps = 0
    while state.t < config.t_max:
        try:
            new_state = step(netlist, state, dt)
        except NonFinite:
            dt *= 0.5
            if dt < 1e-15:
                raise
            continue
        state = new_state
        steps += 1
        dt = min(dt * 1.1, config.dt_initial)
        c = convergence_metric(netlist, state)
        done = c <= config.epsilon
        if done or steps % config.record_every == 0 or state.t >= config.t_max:
            record(state, c)
        if done:
            return state, True, state.t, steps
    return state, False, None, steps


def run(
    netlist: Netlist, layout: EmbeddingLayout, config: SimConfig
) -> tuple[Trace, SolveReport]:
    """Integrate a clamped inversion netlist and cross-check the decoded bits.

    Returns the trace and a report; non-convergence within t_max is reported
    through ``converged=False`` rather than an exception.  On convergence the
    decoded registers are verified against the exact integer identity
    recovered from the netlist clamps; a converged run that fails that check
    would be an engine soundness bug and is surfaced via ``identity_ok``.
    """
    trace = Trace()
    state, converged, t_c, steps = _integrate(netlist, config, trace)
    if not converged:
        return trace, SolveReport(
            converged=False, t_c=None, decoded=None,
            identity_ok=None, readout_flag=None, steps=steps,
        )
    decoded = decode(state, netlist, layout)
    instance = instance_from_netlist(netlist, layout)
    identity_ok = verify_identity(decoded, instance)
    flag = None
    if identity_ok:
        flag = classify_readout(instance, decoded.b_bits_int)
    return trace, SolveReport(
        converged=True, t_c=t_c, decoded=decoded,
        identity_ok=identity_ok, readout_flag=flag, steps=steps,
    )


def trace_to_csv(trace: Trace, netlist: Netlist = None, comments: dict = None) -> str:
    """CSV with header ``t,C`` (plus per-node ``v<id>`` columns when recorded)."""
    lines = []
    if comments:
        for key, value in comments.items():
            lines.append(f"# {key}={value}")
    with_voltages = trace.samples and trace.samples[0].v is not None
    if with_voltages:
        comp = _compiled(netlist)
        header = "t,C," + ",".join(f"v{node}" for node in comp.order)
    else:
        header = "t,C"
    lines.append(header)
    for s in trace.samples:
        row = f"{s.t:.9g},{s.c:.9g}"
        if with_voltages:
            row += "," + ",".join(f"{val:.9g}" for val in s.v)
        lines.append(row)
    return "\n".join(lines) + "\n"


def report_to_json(report: SolveReport) -> str:
    """SolveReport as a JSON document with fields named exactly as the type's."""
    decoded = None
    if report.decoded is not None:
        decoded = {
            "b_hat": report.decoded.b_hat,
            "b_bits": "".join(str(b) for b in report.decoded.b_bits),
            "b_f": report.decoded.b_f,
            "c_f": report.decoded.c_f,
        }
    payload = {
        "converged": report.converged,
        "t_c": report.t_c,
        "decoded": decoded,
        "identity_ok": report.identity_ok,
        "readout_flag": report.readout_flag,
        "steps": report.steps,
    }
    return json.dumps(payload, indent=2)
