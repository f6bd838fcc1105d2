"""Deterministic discrete-event simulator.

Broadcast ticks form a merged Poisson process; each tick triggers one
clock reading, Bernoulli hearing draws on the out-arcs, and delayed
delivery events.  Deliveries are processed one at a time in
(time, insertion order), and every processed delivery advances the
global iteration counter by one.
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from clocksync.clock import read_local_time, sample_delay
from clocksync.streams import substream
from clocksync.sync import MessagePayload, SyncConfig, SyncState
from clocksync.topology import Network

TRACE_FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class InitialSample:
    """Ground-truth record of the first heard message on one link.

    Kept for the analysis layer only (fixed-point residuals need the
    realized initial noise); nodes never see these values.
    """

    t_send: float
    t_recv: float
    tau_sender: float
    tau_receiver: float
    xi_sender: float
    xi_receiver: float
    eta: float
    delta_bar: float


@dataclass
class Trace:
    """One row per processed delivery: iteration, time, participants and
    the full post-update estimate vectors."""

    t: np.ndarray          # (K,) absolute time of each update
    receiver: np.ndarray   # (K,) updating node
    sender: np.ndarray     # (K,) broadcaster
    a_hat: np.ndarray      # (K, n)
    b_hat: np.ndarray      # (K, n)
    c_hat: np.ndarray      # (K, n)
    k: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.k = np.arange(1, len(self.t) + 1)

    def __len__(self) -> int:
        return len(self.t)

    def to_csv(self, path, stride: int = 1) -> None:
        """Write the trace as CSV; optional down-sampling stride."""
        n = self.a_hat.shape[1]
        header = ["k", "t_abs", "receiver", "sender"]
        header += [f"a_hat_{m}" for m in range(n)]
        header += [f"b_hat_{m}" for m in range(n)]
        header += [f"c_hat_{m}" for m in range(n)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in range(0, len(self.t), stride):
                row = [int(self.k[r]), TRACE_FLOAT_FORMAT % self.t[r],
                       int(self.receiver[r]), int(self.sender[r])]
                row += [TRACE_FLOAT_FORMAT % v for v in self.a_hat[r]]
                row += [TRACE_FLOAT_FORMAT % v for v in self.b_hat[r]]
                row += [TRACE_FLOAT_FORMAT % v for v in self.c_hat[r]]
                w.writerow(row)


@dataclass
class SimResult:
    """Everything a run produces: the trace plus per-link bookkeeping."""

    net: Network
    cfg: SyncConfig
    seed: int
    trace: Trace
    nu: np.ndarray
    updates: int
    send_times: dict[tuple[int, int], list[float]]
    initial_samples: dict[tuple[int, int], InitialSample]
    silent_nodes: list[int]
    state: SyncState


def schedule_ticks(net: Network, seed: int) -> Iterator[tuple[float, int]]:
    """Yield (absolute time, broadcaster) for the merged tick process.

    Exponential inter-tick times at the total rate; the broadcaster is
    chosen proportionally to its own rate, which is equivalent to
    independent per-node Poisson processes.
    """
    rng = substream(seed, "ticks")
    mu_c = float(net.rates.sum())
    cum = np.cumsum(net.rates / mu_c)
    cum[-1] = 1.0
    t = 0.0
    while True:
        t += rng.exponential(1.0 / mu_c)
        j = int(np.searchsorted(cum, rng.random(), side="right"))
        yield t, j


def broadcast(
    net: Network,
    j: int,
    t: float,
    hear_rngs: dict,
    delay_rngs: dict,
) -> list[tuple[float, int]]:
    """Hearing and delay draws for one tick; returns (delivery time, receiver)."""
    out = []
    for i in net.out_neighbors(j):
        arc = net.arcs[(j, i)]
        if hear_rngs[(j, i)].random() < arc.p_hear:
            d = sample_delay(arc.delay, delay_rngs[(j, i)])
            out.append((t + d, i))
    return out


def run(
    net: Network,
    cfg: SyncConfig,
    *,
    max_updates: int | None = None,
    horizon: float | None = None,
    seed: int = 0,
) -> SimResult:
    """Run one simulation; bit-identical output for identical inputs.

    ``max_updates`` counts processed deliveries (the global iteration
    number); ``horizon`` is an absolute-time cutoff.  At least one of the
    two must be given.
    """
    if max_updates is None and horizon is None:
        raise ValueError("need max_updates or horizon")
    if horizon is not None and horizon <= 0.0:
        raise ValueError("horizon must be positive")

    state = SyncState(net, cfg)
    read_rngs = [substream(seed, "read", i) for i in range(net.n)]
    hear_rngs = {key: substream(seed, "hear", *key) for key in net.arcs}
    delay_rngs = {key: substream(seed, "jitter", *key) for key in net.arcs}

    ticks = schedule_ticks(net, seed)
    heap: list[tuple[float, int, int, object]] = []
    seq = 0

    def push(time: float, kind: int, data) -> None:
        nonlocal seq
        heapq.heappush(heap, (time, seq, kind, data))
        seq += 1

    t0, j0 = next(ticks)
    push(t0, 0, j0)

    cap = max_updates if max_updates is not None else 1 << 62
    times: list[float] = []
    receivers: list[int] = []
    senders: list[int] = []
    a_rows: list[list[float]] = []
    b_rows: list[list[float]] = []
    c_rows: list[list[float]] = []
    send_times: dict[tuple[int, int], list[float]] = {key: [] for key in net.arcs}
    initials: dict[tuple[int, int], InitialSample] = {}
    heard = [False] * net.n

    k = 0
    while heap and k < cap:
        t, _, kind, data = heapq.heappop(heap)
        if horizon is not None and t > horizon:
            break
        if kind == 0:  # tick of node `data`
            j = data
            tau = read_local_time(net.clocks[j], t, read_rngs[j])
            msg = state.payload(j, tau)
            for t_dlv, i in broadcast(net, j, t, hear_rngs, delay_rngs):
                push(t_dlv, 1, (i, msg, t))
            tn, jn = next(ticks)
            push(tn, 0, jn)
        else:  # delivery
            i, msg, t_send = data
            j = msg.sender
            tau_i = read_local_time(net.clocks[i], t, read_rngs[i])
            rec = state.process_message(i, msg, tau_i)
            k += 1
            heard[i] = True
            send_times[(j, i)].append(t_send)
            if rec.first_message:
                clk_j, clk_i = net.clocks[j], net.clocks[i]
                arc = net.arcs[(j, i)]
                initials[(j, i)] = InitialSample(
                    t_send=t_send, t_recv=t,
                    tau_sender=msg.tau_sent, tau_receiver=tau_i,
                    xi_sender=msg.tau_sent - (clk_j.alpha * t_send + clk_j.beta),
                    xi_receiver=tau_i - (clk_i.alpha * t + clk_i.beta),
                    eta=(t - t_send) - arc.delay.delta_bar,
                    delta_bar=arc.delay.delta_bar)
            times.append(t)
            receivers.append(i)
            senders.append(j)
            a_rows.append([s.a_hat for s in state.est])
            b_rows.append([s.b_hat for s in state.est])
            c_rows.append([s.c_hat for s in state.est])

    trace = Trace(
        t=np.array(times),
        receiver=np.array(receivers, dtype=int),
        sender=np.array(senders, dtype=int),
        a_hat=np.array(a_rows) if a_rows else np.empty((0, net.n)),
        b_hat=np.array(b_rows) if b_rows else np.empty((0, net.n)),
        c_hat=np.array(c_rows) if c_rows else np.empty((0, net.n)),
    )
    silent = [i for i in range(net.n) if not heard[i] and net.in_neighbors(i)]
    return SimResult(
        net=net, cfg=cfg, seed=seed, trace=trace,
        nu=np.array(state.nu), updates=k,
        send_times=send_times, initial_samples=initials,
        silent_nodes=silent, state=state)
