"""Entropy pairs, per-snapshot invariant records, and the weak entropy residual."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import BPoly

from . import grid as g
from .grid import Field
from .nonlocal_terms import second_primitive_right_edge

CSV_SCHEMA_VERSION = 1


# ---------------------------------------------------------------- entropy pairs

@dataclass(frozen=True)
class EntropyPair:
    """Convex entropy with its flux q(u) = -int_0^u (xi^2/2) eta'(xi) dxi."""

    name: str
    eta: Callable
    eta_prime: Callable
    eta_second: Callable
    q: Callable


def _sampled_convexity(eta_second, lo: float, hi: float, n: int = 1000) -> None:
    s = np.linspace(lo, hi, n)
    d2 = np.asarray(eta_second(s), dtype=float)
    if np.any(d2 < -1e-12 * max(1.0, float(np.max(np.abs(d2))))):
        raise ValueError("entropy is not convex on the sampled range")


def _flux_by_quadrature(eta_prime, lo: float, hi: float, eta_second=None,
                        node_spacing: float = 0.01) -> Callable:
    """q by adaptive quadrature, tabulated as a piecewise quintic Hermite spline.

    Node values accumulate ``quad`` over consecutive cells outward from 0;
    slopes and curvatures come from the defining relation q' = -(u^2/2) eta'(u).
    """
    if not lo < 0 < hi:
        raise ValueError("flux table range must contain 0")
    n_right = max(2, int(np.ceil(hi / node_spacing)))
    n_left = max(2, int(np.ceil(-lo / node_spacing)))
    right = np.linspace(0.0, hi, n_right + 1)
    left = np.linspace(0.0, lo, n_left + 1)

    def integrand(s):
        return -0.5 * s * s * eta_prime(s)

    def accumulate(nodes):
        vals = np.zeros(nodes.size)
        for i in range(1, nodes.size):
            piece, _ = quad(integrand, nodes[i - 1], nodes[i], epsabs=1e-13, epsrel=1e-12)
            vals[i] = vals[i - 1] + piece
        return vals

    x = np.concatenate([left[::-1], right[1:]])
    y = np.concatenate([accumulate(left)[::-1], accumulate(right)[1:]])
    if eta_second is None:
        h = 1e-6
        eta_second = lambda s: (eta_prime(s + h) - eta_prime(s - h)) / (2 * h)
    d1 = integrand(x)
    d2 = -x * eta_prime(x) - 0.5 * x * x * eta_second(x)
    spline = BPoly.from_derivatives(x, np.column_stack([y, d1, d2]), extrapolate=False)

    def q(u):
        u = np.asarray(u, dtype=float)
        if u.size and (u.min() < lo or u.max() > hi):
            raise ValueError(f"value outside the tabulated flux range [{lo}, {hi}]")
        return spline(u)

    q.table_range = (lo, hi)
    return q


def make_entropy_pair(kind: str, k: float = 0.0, delta: float = 0.1, *,
                      value_range=(-8.0, 8.0), eta=None, eta_prime=None,
                      eta_second=None, q=None) -> EntropyPair:
    """Build an entropy pair.

    kinds: ``quadratic`` ((u-k)^2, closed-form flux), ``kruzkov_smooth``
    (sqrt((u-k)^2 + delta^2), a C-infinity smoothing of |u-k|, flux by
    quadrature), ``custom`` (user callables; flux by quadrature unless given).
    """
    lo, hi = value_range
    if kind == "quadratic":
        return EntropyPair(
            name=f"quadratic(k={k:g})",
            eta=lambda u: (u - k) ** 2,
            eta_prime=lambda u: 2.0 * (u - k),
            eta_second=lambda u: 2.0 * np.ones_like(np.asarray(u, dtype=float)),
            q=lambda u: -(u**4 / 4.0 - k * u**3 / 3.0),
        )
    if kind == "kruzkov_smooth":
        if not delta > 0:
            raise ValueError("delta must be positive")

        def ep(u):
            return (u - k) / np.sqrt((u - k) ** 2 + delta**2)

        def ep2(u):
            return delta**2 / ((u - k) ** 2 + delta**2) ** 1.5

        return EntropyPair(
            name=f"kruzkov_smooth(k={k:g},delta={delta:g})",
            eta=lambda u: np.sqrt((u - k) ** 2 + delta**2),
            eta_prime=ep,
            eta_second=ep2,
            q=_flux_by_quadrature(ep, lo, hi, ep2, node_spacing=min(0.01, delta / 20)),
        )
    if kind == "custom":
        if eta is None or eta_prime is None:
            raise ValueError("custom entropy needs eta and eta_prime")
        if eta_second is None:
            h = 1e-5
            eta_second = lambda u: (eta_prime(np.asarray(u) + h) - eta_prime(np.asarray(u) - h)) / (2 * h)
        _sampled_convexity(eta_second, lo, hi)
        return EntropyPair("custom", eta, eta_prime, eta_second,
                           q if q is not None else _flux_by_quadrature(eta_prime, lo, hi, eta_second))
    raise ValueError(f"unknown entropy kind {kind!r}")


def default_entropy_battery(u_min: float, u_max: float, value_range=None) -> list[EntropyPair]:
    """11 quadratic entropies plus 5 smoothed Kruzkov ones over the datum range +-50%.

    ``value_range`` is the range the Kruzkov flux tables must cover; by
    default the datum range widened by twice its span.
    """
    span = u_max - u_min
    lo, hi = u_min - 0.5 * span, u_max + 0.5 * span
    pairs = [make_entropy_pair("quadratic", k) for k in np.linspace(lo, hi, 11)]
    table = value_range or (min(lo - 2 * span, -span), max(hi + 2 * span, span))
    pairs += [make_entropy_pair("kruzkov_smooth", k, 0.1 * span, value_range=table)
              for k in np.linspace(lo, hi, 5)]
    return pairs


# ------------------------------------------------------------------- records

@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    l2_u: float
    l6_u: float
    linf_u: float
    mean_u: float
    mean_P: float
    linf_P: float
    l2_P: float
    l2_dxP: float
    l2_dxxP: float
    G1: float
    G2: float
    energy_margin: float
    p_identity_residual: float
    up_identity_residual: float
    F_right_edge: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_row(self) -> list[float]:
        return [getattr(self, c) for c in self.columns()]

    def to_dict(self) -> dict:
        return asdict(self)


class EnergyBudget:
    """Running trapezoid for D(t) = int_0^t exp(-2 gamma s) ||u_x(s)||^2 ds."""

    def __init__(self, epsilon: float, gamma: float):
        self.epsilon = epsilon
        self.gamma = gamma
        self.u0_sq = None
        self.t = 0.0
        self.integral = 0.0
        self._last = None

    def update(self, t: float, u: Field) -> None:
        if self.u0_sq is None:
            self.u0_sq = g.lp_norm(u, 2) ** 2
        val = math.exp(-2 * self.gamma * t) * g.lp_norm(g.derivative(u), 2) ** 2
        if self._last is not None:
            t_prev, v_prev = self._last
            self.integral += 0.5 * (t - t_prev) * (val + v_prev)
        self._last = (t, val)
        self.t = t

    def envelope(self, t: float) -> float:
        return math.exp(2 * self.gamma * t) * self.u0_sq

    def dissipation(self, t: float) -> float:
        return 2 * self.epsilon * math.exp(2 * self.gamma * t) * self.integral

    def margin(self, t: float, u: Field) -> float:
        return self.envelope(t) - (g.lp_norm(u, 2) ** 2 + self.dissipation(t))


def record(u: Field, P: Field, params, t: float, budget: EnergyBudget | None = None) -> DiagnosticsRecord:
    eps = float(getattr(params, "epsilon", 0.0))
    beta = float(getattr(params, "beta", 0.0))
    gamma = float(params.gamma)
    h = u.grid.spacing
    dx_u = g.derivative(u)
    dx_p = g.derivative(P)
    dxx_p = g.derivative(P, 2)
    l2u = g.lp_norm(u, 2)
    l2p = g.lp_norm(P, 2)
    l2dp = g.lp_norm(dx_p, 2)
    l2ddp = g.lp_norm(dxx_p, 2)
    l2dxu = g.lp_norm(dx_u, 2)
    l6 = g.lp_norm(u, 6)

    u_sq = l2u**2
    p_res = abs(eps**2 * l2ddp**2 + l2dp**2 - u_sq) / u_sq if u_sq > 0 else 0.0
    up = g.integrate(u.values * P.values, h)
    scale = l2u * l2p
    up_res = abs(up - eps * l2dp**2) / scale if scale > 0 else 0.0
    if budget is None:
        margin = 0.0 if t == 0 else float("nan")
    else:
        margin = budget.margin(t, u)
    try:
        f_edge = second_primitive_right_edge(P)
    except ValueError:
        f_edge = float("nan")

    return DiagnosticsRecord(
        t=float(t),
        l2_u=l2u,
        l6_u=l6,
        linf_u=g.lp_norm(u, np.inf),
        mean_u=g.mean(u),
        mean_P=g.mean(P),
        linf_P=g.lp_norm(P, np.inf),
        l2_P=l2p,
        l2_dxP=l2dp,
        l2_dxxP=l2ddp,
        G1=beta * l2dxu**2 - g.integrate(u.values**4, h) / 12.0 + gamma * l2p**2 + eps**2 * gamma * l2dp**2,
        G2=l6**6 / 6.0 + 1.5 * eps**2 * l2dxu**2,
        energy_margin=margin,
        p_identity_residual=p_res,
        up_identity_residual=up_res,
        F_right_edge=f_edge,
    )


# --------------------------------------------------------- entropy residual

def _bump(s: np.ndarray, center: float, half_width: float):
    """cos^4 window (C^3) normalized to unit integral, and its derivative.

    A plain cos^2 window is only C^1; its second-derivative jump makes the
    trapezoidal time quadrature over snapshots first-order visible.
    """
    z = (s - center) / half_width
    inside = np.abs(z) < 1.0
    c = np.cos(0.5 * np.pi * z)
    sn = np.sin(0.5 * np.pi * z)
    norm = 0.75 * half_width
    val = np.where(inside, c**4, 0.0) / norm
    dval = np.where(inside, -2.0 * np.pi * c**3 * sn / half_width, 0.0) / norm
    return val, dval


@dataclass(frozen=True)
class TestBattery:
    """Tensor-product bumps phi(t, x) = a_i(t) b_j(x) on a lattice of windows."""

    __test__ = False  # not a pytest class

    t_centers: tuple
    t_half_width: float
    x_centers: tuple
    x_half_width: float

    @property
    def size(self) -> int:
        return len(self.t_centers) * len(self.x_centers)

    @classmethod
    def lattice(cls, t_span, x_span, n_t: int = 6, n_x: int = 6) -> "TestBattery":
        """Overlapping windows, each of width two lattice spacings, inside the spans."""
        (t0, t1), (x0, x1) = t_span, x_span
        ht = (t1 - t0) / (n_t + 1)
        hx = (x1 - x0) / (n_x + 1)
        return cls(tuple(t0 + ht * (i + 1) for i in range(n_t)), ht,
                   tuple(x0 + hx * (j + 1) for j in range(n_x)), hx)


def trajectory_support(traj, threshold: float = 1e-6, pad: float = 1.0):
    """x-interval where max_t |u| exceeds threshold * max |u|, padded, clipped to the grid."""
    u = np.abs(traj.u_array)
    env = u.max(axis=0)
    x = traj.grid.x
    if env.max() == 0:
        return (x[0], x[-1])
    idx = np.nonzero(env > threshold * env.max())[0]
    return (max(x[0], x[idx[0]] - pad), min(x[-1], x[idx[-1]] + pad))


def default_test_battery(traj, window=None) -> TestBattery:
    x_span = trajectory_support(traj) if window is None else tuple(window)
    return TestBattery.lattice((traj.times[0], traj.times[-1]), x_span)


def _trapezoid_weights(times: np.ndarray) -> np.ndarray:
    w = np.zeros_like(times)
    dt = np.diff(times)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _bump_antiderivative(s: np.ndarray, center: float, half_width: float) -> np.ndarray:
    """int_{-inf}^s of the normalized cos^4 window, in closed form."""
    th = 0.5 * np.pi * np.clip((s - center) / half_width, -1.0, 1.0)
    core = 3 * th / 8 + np.sin(2 * th) / 4 + np.sin(4 * th) / 32
    return (core + 3 * np.pi / 16) * (2 * half_width / np.pi) / (0.75 * half_width)


def _time_weights(times: np.ndarray, center: float, half_width: float):
    """Weights that integrate the piecewise-linear interpolant of snapshot data against a and a'.

    For a' the hat-function weights telescope (integration by parts against the
    exact interval means of a), so a constant state integrates to zero exactly.
    """
    dt = np.diff(times)
    anti = _bump_antiderivative(times, center, half_width)
    means = np.diff(anti) / dt                      # (1/dt_k) int_{t_k}^{t_k+1} a
    w_der = np.zeros_like(times)
    w_der[:-1] += means
    w_der[1:] -= means
    s = 0.5 * (_GAUSS_NODES + 1.0)                  # nodes on [0, 1]
    tau = times[:-1, None] + dt[:, None] * s[None, :]
    vals = _bump(tau, center, half_width)[0] * (0.5 * _GAUSS_WEIGHTS)[None, :] * dt[:, None]
    w_val = np.zeros_like(times)
    w_val[:-1] += vals @ (1.0 - s)
    w_val[1:] += vals @ s
    return w_val, w_der


def entropy_residuals(traj, pair: EntropyPair, tests: TestBattery | None = None,
                      gamma: float | None = None) -> np.ndarray:
    """R(phi) = int int [eta(u) phi_t + q(u) phi_x + gamma eta'(u) P phi] for each phi.

    Rectangle rule in space. In time the snapshot data are linearly
    interpolated and integrated against phi (see ``_time_weights``).
    Returned with shape (n_t windows, n_x windows).
    """
    tests = default_test_battery(traj) if tests is None else tests
    gamma = traj.params.gamma if gamma is None else gamma
    times = np.asarray(traj.times, dtype=float)
    x = traj.grid.x
    t_lo = min(tests.t_centers) - tests.t_half_width
    t_hi = max(tests.t_centers) + tests.t_half_width
    x_lo = min(tests.x_centers) - tests.x_half_width
    x_hi = max(tests.x_centers) + tests.x_half_width
    eps_t = 1e-9 * max(1.0, times[-1])
    if t_lo < times[0] - eps_t or t_hi > times[-1] + eps_t or x_lo < x[0] - 1e-9 or x_hi > x[-1] + 1e-9:
        raise ValueError("test battery window outside the trajectory support")

    u = traj.u_array
    P = traj.p_array
    eta = pair.eta(u)
    qu = pair.q(u)
    src = gamma * pair.eta_prime(u) * P

    b = np.array([_bump(x, c, tests.x_half_width)[0] for c in tests.x_centers]).T
    db = np.array([_bump(x, c, tests.x_half_width)[1] for c in tests.x_centers]).T
    tw = [_time_weights(times, c, tests.t_half_width) for c in tests.t_centers]
    wa = np.array([w[0] for w in tw])
    wda = np.array([w[1] for w in tw])

    h = traj.grid.spacing
    eta_b = h * eta @ b             # (n_snap, n_x)
    rest = h * (qu @ db + src @ b)  # (n_snap, n_x)
    return wda @ eta_b + wa @ rest


def entropy_residual(traj, pair: EntropyPair, tests: TestBattery | None = None) -> float:
    """min over the test battery of R(phi); admissible trajectories give min >= -tol."""
    return float(np.min(entropy_residuals(traj, pair, tests)))


def _table_range(u0, u_all):
    span = float(u0.max() - u0.min())
    lo = min(float(u_all.min()), float(u0.min()) - 2.5 * span, -span)
    hi = max(float(u_all.max()), float(u0.max()) + 2.5 * span, span)
    return (lo - 0.1 * span, hi + 0.1 * span)


def entropy_violation(traj, pairs=None, tests: TestBattery | None = None) -> float:
    """max(0, -min R) over a battery of entropy pairs and test functions."""
    if pairs is None:
        u0 = traj.snapshots[0].values
        u_all = traj.u_array
        pairs = default_entropy_battery(float(u0.min()), float(u0.max()),
                                        _table_range(u0, u_all))
    tests = default_test_battery(traj) if tests is None else tests
    worst = min(entropy_residual(traj, pair, tests) for pair in pairs)
    return max(0.0, -worst)


# ------------------------------------------------------------ scaling suite

@dataclass
class ScalingReport:
    runs: list
    slope_linf_vs_beta: float
    max_linf_P: float
    coarsest_linf_P: float
    max_l6_u: float
    max_eps_l2_dxu: float
    max_beta_dxu_dxxu: float
    max_beta2_dxxu_over_eps: float

    def to_dict(self) -> dict:
        return asdict(self)


def loglog_slope(x, y) -> float:
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if np.ptp(lx) == 0:
        if np.ptp(ly) == 0:
            return 0.0
        return float("nan")
    return float(np.polyfit(lx, ly, 1)[0])


def run_metrics(params, traj) -> dict:
    """Sup-in-time bound quantities for one dispersive run."""
    grid = traj.grid
    h = grid.spacing
    u = traj.u_array
    times = np.asarray(traj.times)
    ux = np.array([g.derivative_values(r, grid, 1) for r in u])
    uxx = np.array([g.derivative_values(r, grid, 2) for r in u])
    w = _trapezoid_weights(times)
    eps, beta = params.epsilon, params.beta
    return {
        "epsilon": eps,
        "beta": beta,
        "sup_linf_u": float(np.max(np.abs(u))),
        "sup_linf_P": float(np.max(np.abs(traj.p_array))),
        "sup_l6_u": float(np.max((h * np.sum(u**6, axis=1)) ** (1 / 6))),
        "sup_eps_l2_dxu": float(eps * np.max(np.sqrt(h * np.sum(ux**2, axis=1)))),
        "beta_dxu_dxxu": float(beta * w @ (h * np.sum(np.abs(ux * uxx), axis=1))),
        "beta2_dxxu_over_eps": float(beta**2 * (w @ (h * np.sum(uxx**2, axis=1))) / eps),
        "failed": bool(traj.failed),
    }


def scaling_suite(runs) -> ScalingReport:
    """Fit sup||u||_inf against beta and aggregate the bound quantities across a sweep.

    ``runs`` is a list of (params, trajectory); the coarsest run is the one
    with the largest epsilon.
    """
    if len(runs) < 3:
        raise ValueError("scaling suite needs at least 3 runs")
    rows = [run_metrics(p, t) for p, t in runs]
    coarsest = max(rows, key=lambda r: r["epsilon"])
    return ScalingReport(
        runs=rows,
        slope_linf_vs_beta=loglog_slope([r["beta"] for r in rows], [r["sup_linf_u"] for r in rows]),
        max_linf_P=max(r["sup_linf_P"] for r in rows),
        coarsest_linf_P=coarsest["sup_linf_P"],
        max_l6_u=max(r["sup_l6_u"] for r in rows),
        max_eps_l2_dxu=max(r["sup_eps_l2_dxu"] for r in rows),
        max_beta_dxu_dxxu=max(r["beta_dxu_dxxu"] for r in rows),
        max_beta2_dxxu_over_eps=max(r["beta2_dxxu_over_eps"] for r in rows),
    )
