"""Convergence diagnostics: spectra, Lyapunov solves, rate bounds,
increment statistics, trace metrics and fixed-point residual checks.

All functions here are pure and operate on immutable traces and matrices;
none of them is needed by the simulator itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from clocksync.engine import SimResult
from clocksync.sync import DriftA, DriftB, DriftC, DriftVariant, OffsetB, anchor_index
from clocksync.topology import (
    Network,
    ProbabilityProfile,
    expected_gamma_d,
    expected_laplacian,
    probability_profile,
)

ZERO_EIG_TOL = 1e-9
LYAPUNOV_RTOL = 1e-8


# ---------------------------------------------------------------------------
# Spectral machinery
# ---------------------------------------------------------------------------

@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    zero_multiplicity: int
    hurwitz_ok: bool
    T: np.ndarray
    B_star: np.ndarray

    @property
    def ok(self) -> bool:
        return self.zero_multiplicity == 1 and self.hurwitz_ok


def build_B_bar(
    net: Network,
    profile: ProbabilityProfile | None = None,
    zeta: float = 0.99,
) -> np.ndarray:
    """Expected scaled update matrix: N_bar^zeta diag(p^-zeta) A Gamma_bar.

    A node that never updates is admissible only if its Laplacian row is
    zero (a reference node); its scaling factor is then immaterial and
    set to one.
    """
    if profile is None:
        profile = probability_profile(net)
    lap = expected_laplacian(net, profile)
    p = profile.p.copy()
    zero_rows = np.all(lap == 0.0, axis=1)
    bad = (p <= 0.0) & ~zero_rows
    if np.any(bad):
        raise ValueError(
            f"nodes {np.flatnonzero(bad).tolist()} have zero update "
            "probability but nonzero update weights")
    p[p <= 0.0] = 1.0
    scale = profile.n_bar ** zeta * p ** (-zeta)
    return (scale * net.alphas())[:, None] * lap


def spectral_check(b_bar: np.ndarray, tol: float = ZERO_EIG_TOL) -> SpectralReport:
    """Eigenvalues of the expected update matrix and the consensus split.

    Builds T = [1 | column-space basis], whose similarity transform
    isolates the (n-1)-dimensional disagreement block B*.
    """
    n = b_bar.shape[0]
    eig = np.linalg.eigvals(b_bar)
    zero_mult = int(np.sum(np.abs(eig) < tol))
    others = eig[np.abs(eig) >= tol]
    hurwitz = bool(np.all(others.real < -tol))

    u, s, _ = np.linalg.svd(b_bar)
    basis = u[:, : n - 1]  # column space has dimension n-1 under (A1)
    T = np.column_stack([np.ones(n), basis])
    b_star = np.linalg.solve(T, b_bar @ T)[1:, 1:]
    return SpectralReport(eigenvalues=eig, zero_multiplicity=zero_mult,
                          hurwitz_ok=hurwitz, T=T, B_star=b_star)


def lyapunov_solve(b_star: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Solve R B* + B*^T R = -Q for symmetric positive definite R.

    Rejects non-Hurwitz input and inputs with nonsymmetric or
    non-positive-definite Q.  Dense Bartels-Stewart solve, adequate for
    the desk scales used here (n <= 100).
    """
    b_star = np.asarray(b_star, dtype=float)
    q = np.asarray(q, dtype=float)
    if b_star.ndim == 0:
        b_star = b_star.reshape(1, 1)
    if q.ndim == 0:
        q = q.reshape(1, 1)
    if not np.allclose(q, q.T) or np.any(np.linalg.eigvalsh(q) <= 0.0):
        raise ValueError("Q must be symmetric positive definite")
    if np.any(np.linalg.eigvals(b_star).real >= 0.0):
        raise ValueError("B* must be Hurwitz")
    r = scipy.linalg.solve_continuous_lyapunov(b_star.T, -q)
    r = 0.5 * (r + r.T)
    resid = np.linalg.norm(r @ b_star + b_star.T @ r + q)
    if resid > LYAPUNOV_RTOL * np.linalg.norm(q):
        raise ArithmeticError("Lyapunov solve residual above tolerance")
    return r


# ---------------------------------------------------------------------------
# Rate bounds
# ---------------------------------------------------------------------------

@dataclass
class RateBound:
    """Sufficient-condition exponents for mean-square consensus decay.

    ``zeta_d_max`` bounds the exponent of the k^{zeta d} scaling under
    which the scaled disagreement still vanishes; ``d_max`` is the same
    bound expressed in d.
    """

    variant: DriftVariant
    zeta_prime: float
    r: float
    q: float
    d_max: float
    zeta: float

    @property
    def zeta_d_max(self) -> float:
        return self.zeta * self.d_max


def _variant_q(variant: DriftVariant, net: Network) -> float:
    mu_c = float(net.rates.sum())
    if isinstance(variant, DriftA):
        mp = max(net.rates[j] * arc.p_hear for (j, _i), arc in net.arcs.items())
        return variant.L / mp
    if isinstance(variant, DriftB):
        return (1.0 - variant.nu) / mu_c
    return 1.0 / mu_c


def rate_bound(
    variant: DriftVariant,
    zeta_prime: float,
    net: Network,
    profile: ProbabilityProfile | None = None,
    q_matrix: np.ndarray | None = None,
) -> RateBound:
    """Largest admissible scaled-disagreement exponent for one variant."""
    if profile is None:
        profile = probability_profile(net)
    zeta = zeta_prime if isinstance(variant, DriftA) else 1.0 + zeta_prime
    report = spectral_check(build_B_bar(net, profile, zeta))
    if not report.ok:
        raise ValueError("expected update matrix fails the spectral check")
    if q_matrix is None:
        q_matrix = np.eye(report.B_star.shape[0])
    r_mat = lyapunov_solve(report.B_star, q_matrix)
    r = float(np.min(np.linalg.eigvalsh(q_matrix))
              / np.max(np.linalg.eigvalsh(r_mat)))
    q = _variant_q(variant, net)

    if zeta_prime < 1.0:
        if isinstance(variant, DriftA):
            zd = zeta_prime - 0.5
        elif isinstance(variant, DriftB):
            zd = 0.5 + zeta_prime
        else:
            zd = zeta_prime
        d_max = zd / zeta
    else:
        if isinstance(variant, DriftA):
            d_max = min(0.5, 2.0 * q * r)
        elif isinstance(variant, DriftB):
            d_max = min(0.75, q * r)
        else:
            d_max = min(0.5, q * r)
    return RateBound(variant=variant, zeta_prime=zeta_prime, r=r, q=q,
                     d_max=d_max, zeta=zeta)


# ---------------------------------------------------------------------------
# Increment statistics
# ---------------------------------------------------------------------------

@dataclass
class IncrementStats:
    mean: float
    var: float
    expected_mean: float
    samples: int


def increment_stats(
    result: SimResult,
    arc: tuple[int, int],
    variant: DriftVariant | None = None,
) -> IncrementStats:
    """Empirical statistics of the absolute-time increments used by the
    drift updates on one arc, with the thinned-Poisson expectation.

    The expected mean of one increment spanning ``l - m`` receptions is
    ``(l - m) / (mu_sender * p_hear)``; for variants with growing
    increments the expectation is averaged over the realized receptions.
    """
    if variant is None:
        variant = result.cfg.drift
    times = result.send_times[arc]
    j = arc[0]
    rate = float(result.net.rates[j]) * result.net.arcs[arc].p_hear
    deltas = []
    spans = []
    for l in range(1, len(times)):
        m = anchor_index(variant, l)
        if m is None:
            continue
        deltas.append(times[l] - times[m])
        spans.append(l - m)
    if not deltas:
        raise ValueError("not enough receptions on this arc")
    deltas = np.array(deltas)
    return IncrementStats(
        mean=float(deltas.mean()),
        var=float(deltas.var()),
        expected_mean=float(np.mean(spans) / rate),
        samples=len(deltas),
    )


# ---------------------------------------------------------------------------
# Trace metrics
# ---------------------------------------------------------------------------

@dataclass
class Metrics:
    """Per-iteration disagreement metrics derived from a trace.

    ``vclock_gap`` is the largest pairwise difference of corrected times
    evaluated at the absolute time of each update.
    """

    k: np.ndarray
    t: np.ndarray
    g_hat: np.ndarray            # (K, n) corrected drifts
    f_hat: np.ndarray            # (K, n) corrected offsets
    drift_spread: np.ndarray
    msd: np.ndarray
    offset_dispersion: np.ndarray
    vclock_gap: np.ndarray

    def to_csv(self, path, stride: int = 1) -> None:
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "t_abs", "drift_spread", "msd",
                        "offset_dispersion", "vclock_gap"])
            for r in range(0, len(self.k), stride):
                w.writerow([int(self.k[r]), "%.17g" % self.t[r],
                            "%.17g" % self.drift_spread[r],
                            "%.17g" % self.msd[r],
                            "%.17g" % self.offset_dispersion[r],
                            "%.17g" % self.vclock_gap[r]])


def metrics(result: SimResult) -> Metrics:
    """Disagreement, dispersion and virtual-clock gap along the trace."""
    net = result.net
    tr = result.trace
    alpha = net.alphas()
    beta = net.betas()
    g = tr.a_hat * alpha
    f = tr.a_hat * beta + tr.b_hat
    vc = g * tr.t[:, None] + f
    return Metrics(
        k=tr.k, t=tr.t, g_hat=g, f_hat=f,
        drift_spread=g.max(axis=1) - g.min(axis=1),
        msd=g.var(axis=1),
        offset_dispersion=f.max(axis=1) - f.min(axis=1),
        vclock_gap=vc.max(axis=1) - vc.min(axis=1),
    )


def scaled_disagreement(m: Metrics, rho: float) -> np.ndarray:
    """Mean square disagreement scaled by k^{2 rho}."""
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    return m.k.astype(float) ** (2.0 * rho) * m.msd


# ---------------------------------------------------------------------------
# Fixed-point residuals
# ---------------------------------------------------------------------------

@dataclass
class FixedPointReport:
    residual: float
    h_star: np.ndarray
    chi_star: float
    converged: bool
    c_con_spread: float | None = None


def _initial_noise_means(result: SimResult, profile: ProbabilityProfile):
    """Weighted means of the logged initial-reception noise per node.

    Weights are the arc update probabilities (gamma * pi), matching the
    expectation that enters the stationarity condition of the offset
    recursion.  Exact when reading noise is absent; with reading noise
    the sender-side initial noise cannot be folded into a per-node value
    and the residual is only approximate.
    """
    net = result.net
    n = net.n
    w_in = np.zeros(n)
    xi0 = np.zeros(n)
    eta0 = np.zeros(n)
    delta0 = np.zeros(n)
    for (j, i), sample in result.initial_samples.items():
        w = net.arcs[(j, i)].gamma * profile.pi_arc[i, j]
        w_in[i] += w
        xi0[i] += w * sample.xi_receiver
        eta0[i] += w * sample.eta
        delta0[i] += w * sample.delta_bar
    nz = w_in > 0.0
    xi0[nz] /= w_in[nz]
    eta0[nz] /= w_in[nz]
    delta0[nz] /= w_in[nz]
    return xi0, eta0, delta0


def _cauchy_converged(series: np.ndarray, scale: float, rel: float = 0.05) -> bool:
    # window = the last decade of k (from K/10 to K); changes are compared
    # against a caller-supplied magnitude so that components which happen
    # to settle near zero do not produce spurious failures
    tail = series[len(series) // 10:]
    if len(tail) < 2:
        return False
    return bool(np.all(np.abs(tail - series[-1]) <= rel * max(scale, 1e-12)))


def consensus_mixing_matrix(
    net: Network,
    profile: ProbabilityProfile,
    sigma: np.ndarray | float,
) -> np.ndarray:
    """Expected convex-combination matrix of the compensation consensus.

    Each update event (sender j, receiver i) mixes c_i with the received
    c_j; averaging over events with their probabilities gives a row
    stochastic matrix whose left Perron vector weights the pooled
    compensation value.
    """
    n = net.n
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (n,))
    c = np.eye(n)
    for (j, i) in net.arcs:
        w = profile.pi_arc[i, j] / profile.n_bar
        c[i, i] -= w * (1.0 - sig[i])
        c[i, j] += w * (1.0 - sig[i])
    return c


def left_fixed_vector(c_bar: np.ndarray) -> np.ndarray:
    """Left eigenvector of a stochastic matrix at eigenvalue 1, sum one."""
    vals, vecs = np.linalg.eig(c_bar.T)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    v = np.real(vecs[:, idx])
    return v / v.sum()


def fixed_point_residual(
    result: SimResult,
    profile: ProbabilityProfile | None = None,
) -> FixedPointReport:
    """Residual of the theoretical fixed-point equation at the final state.

    For the plain compensation recursion the residual is
    ``||[Gamma_bar | Gamma_bar_d] h*|| / ||h*||`` with the corrected
    offsets and compensation parameters shifted by the realized initial
    noise and mean delays.  For the consensus variant, the bordered
    matrix built from the pooled compensation value is used instead, and
    the spread of the final compensation parameters is reported.

    A non-Cauchy tail flags ``converged=False``; the residual is still
    reported.
    """
    net = result.net
    if profile is None:
        profile = probability_profile(net)
    lap = expected_laplacian(net, profile)
    gam_d = expected_gamma_d(net, profile)
    alpha = net.alphas()
    tr = result.trace
    if len(tr) == 0:
        raise ValueError("empty trace")
    g = tr.a_hat * alpha
    f = tr.a_hat * net.betas() + tr.b_hat
    chi = float(g[-1].mean())
    f_star = f[-1]
    c_star = tr.c_hat[-1]
    xi0, eta0, delta0 = _initial_noise_means(result, profile)

    f_scale = float(np.abs(f_star).max())
    c_scale = float(np.abs(c_star).max())
    converged = all(
        _cauchy_converged(f[:, i], f_scale) for i in range(net.n)
    ) and all(
        _cauchy_converged(tr.c_hat[:, i], c_scale) for i in range(net.n))

    h_f = f_star + chi * xi0 / alpha
    if isinstance(result.cfg.offset, OffsetB):
        c_bar = consensus_mixing_matrix(net, profile, result.cfg.offset.sigma)
        phi = left_fixed_vector(c_bar)
        c_con = float(phi @ c_star)
        gd_vec = np.diag(gam_d)
        m1 = np.zeros((net.n + 1, net.n + 1))
        m1[: net.n, : net.n] = lap
        m1[: net.n, net.n] = gd_vec
        m1[net.n, : net.n] = -phi @ lap
        m1[net.n, net.n] = -float(phi @ gd_vec)
        shift = alpha * (eta0 + delta0)
        h = np.concatenate([h_f, [c_con - chi * float(phi @ shift)]])
        resid = float(np.linalg.norm(m1 @ h) / np.linalg.norm(h))
        spread = float(c_star.max() - c_star.min())
        return FixedPointReport(residual=resid, h_star=h, chi_star=chi,
                                converged=converged, c_con_spread=spread)

    h_c = c_star - chi * alpha * (eta0 + delta0)
    h = np.concatenate([h_f, h_c])
    m = np.hstack([lap, gam_d])
    resid = float(np.linalg.norm(m @ h) / np.linalg.norm(h))
    return FixedPointReport(residual=resid, h_star=h, chi_star=chi,
                            converged=converged)


# ---------------------------------------------------------------------------
# Small fitting helpers shared by demos and acceptance checks
# ---------------------------------------------------------------------------

def loglog_slope(k: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log(y) against log(k), ignoring nonpositive y."""
    mask = (y > 0.0) & (k > 0)
    if mask.sum() < 2:
        return 0.0
    return float(np.polyfit(np.log(k[mask]), np.log(y[mask]), 1)[0])


def geometric_decay_fit(k: np.ndarray, y: np.ndarray, floor: float = 1e-13):
    """Fit log(y) = a + b*k on the stretch above ``floor``.

    Returns (rate b, R^2).  Used to verify at-least-geometric decay in
    the noise-free constant-step regime.
    """
    mask = y > floor
    if mask.sum() < 10:
        return 0.0, 0.0
    # stop at the first point that hits the floor: beyond it the series
    # is numerical noise
    stop = int(np.argmax(~mask)) if (~mask).any() else len(y)
    kk = k[:stop].astype(float)
    yy = np.log(y[:stop])
    b, a = np.polyfit(kk, yy, 1)
    pred = a + b * kk
    ss_res = float(np.sum((yy - pred) ** 2))
    ss_tot = float(np.sum((yy - yy.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(b), r2
