"""Shared fixtures: small hand-built networks used across test modules."""

import numpy as np
import pytest

from clocksync.clock import ClockParams, DelayModel
from clocksync.topology import Arc, Network


def make_line_network(
    alphas=(1.0, 1.02),
    betas=(0.0, 0.1),
    *,
    p_hear=1.0,
    gamma=1.0,
    delta_bar=0.1,
    eta_sigma=0.0,
    xi_sigma=0.0,
    mu=1.0,
    two_way=True,
):
    """Two-node network, arcs 0->1 and (optionally) 1->0."""
    delay = DelayModel(delta_bar, eta_sigma, min(1e-6, delta_bar))
    arc = Arc(gamma, p_hear, delay)
    arcs = {(0, 1): arc}
    if two_way:
        arcs[(1, 0)] = arc
    clocks = [ClockParams(a, b, xi_sigma) for a, b in zip(alphas, betas)]
    return Network(2, arcs, np.full(2, mu), clocks)


@pytest.fixture
def line_net():
    return make_line_network()


@pytest.fixture
def triangle_net():
    """Three-node two-way triangle, uniform weights, no noise."""
    delay = DelayModel(0.1)
    arc = Arc(1.0, 0.9, delay)
    arcs = {}
    for u in range(3):
        for v in range(3):
            if u != v:
                arcs[(u, v)] = arc
    clocks = [ClockParams(1.0 + 0.01 * i, 0.05 * i) for i in range(3)]
    return Network(3, arcs, np.ones(3), clocks)
