"""Fixed-step method-of-steps integration of delayed mass-action systems.

    dx/dt = sum_i k_i [ x(t - tau_i)^{y_i} y'_i - x(t)^{y_i} y_i ]

Delays are rounded to whole multiples of the step so past states are read
straight from the stored grid; RK4 stage times that fall between grid
points are interpolated.  Along the run we track the conserved quantities
a . g(x_t) for a in the orthogonal complement of the stoichiometric subspace,
and the Lyapunov-Krasovskii functional relative to a complex-balanced
equilibrium.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numba import njit

from .balance import find_complex_balanced_equilibrium
from .errors import (
    MemoryCapExceeded,
    NegativeStateAborted,
    NonFiniteState,
    NonPositiveWindow,
    NotWeaklyReversible,
    StepTooLarge,
    WindowTooShort,
)
from .model import ReactionNetwork
from .stoich import conservation_basis, stoich_matrix

log = logging.getLogger(__name__)

MAX_POINTS = 10_000_000
NEGATIVE_TOL = -1e-12
PROBE_FLOOR = 1e-6


class DelayRoundingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class HistoryFunction:
    """Initial function on [-tau_max, 0]: a constant, or piecewise linear."""

    kind: str
    values: np.ndarray
    grid: np.ndarray | None = None

    @classmethod
    def constant(cls, values) -> "HistoryFunction":
        return cls("constant", np.asarray(values, dtype=float))

    @classmethod
    def piecewise_linear(cls, grid, values) -> "HistoryFunction":
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or values.shape[0] != grid.shape[0] or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing and match values")
        return cls("piecewise_linear", values, grid)

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    @property
    def span_start(self) -> float:
        return -math.inf if self.grid is None else float(self.grid[0])

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.kind == "constant":
            return np.tile(self.values, (t.size, 1))
        return np.column_stack([np.interp(t, self.grid, self.values[:, j]) for j in range(self.n)])

    def slope(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.kind == "constant":
            return np.zeros((t.size, self.n))
        seg = np.clip(np.searchsorted(self.grid, t, side="left") - 1, 0, len(self.grid) - 2)
        dv = (self.values[seg + 1] - self.values[seg]) / (self.grid[seg + 1] - self.grid[seg])[:, None]
        return dv


@dataclass
class TrajectoryState:
    step_h: float
    times: np.ndarray  # includes the history prefix (t <= 0)
    values: np.ndarray
    delay_offsets: np.ndarray
    history_points: int  # index of t = 0 in ``times``
    warnings: list[str] = field(default_factory=list)
    # one-sided derivatives: start_slopes[j] at the left end of [t_j, t_j+1],
    # end_slopes[j] at the right end of [t_j-1, t_j]
    start_slopes: np.ndarray | None = None
    end_slopes: np.ndarray | None = None

    @property
    def t(self) -> np.ndarray:
        return self.times[self.history_points:]

    @property
    def x(self) -> np.ndarray:
        return self.values[self.history_points:]


@dataclass
class RunReport:
    conservation_drift: float
    lyapunov_series: np.ndarray  # rows (t, V)
    min_concentration: np.ndarray
    terminal_state: np.ndarray
    equilibrium_residual: float
    equilibrium: np.ndarray | None = None


# -- right-hand side ------------------------------------------------------------

class _Kinetics:
    def __init__(self, net: ReactionNetwork):
        self.Y = net.reactant_matrix().astype(float)
        self.P = net.product_matrix().astype(float)
        self.k = net.rates
        self.n = net.n

    def monomials(self, x: np.ndarray) -> np.ndarray:
        """x^{y_i} for every reaction; ``x`` is one state (n,) or a batch (m, n)."""
        if x.ndim == 1:
            return np.prod(x[None, :] ** self.Y, axis=1)
        return np.prod(x[:, None, :] ** self.Y[None, :, :], axis=2)

    def monomial_slopes(self, x: np.ndarray, xdot: np.ndarray) -> np.ndarray:
        """Time derivative of every x^{y_i} along a batch of states (m, n)."""
        powers = x[:, None, :] ** self.Y[None, :, :]
        out = np.zeros((x.shape[0], self.Y.shape[0]))
        for j in range(self.n):
            y = self.Y[:, j]
            if not y.any():
                continue
            others = np.prod(np.delete(powers, j, axis=2), axis=2)
            dj = y[None, :] * x[:, j:j + 1] ** np.maximum(y - 1, 0)[None, :] * xdot[:, j:j + 1]
            out += dj * others
        return out

    def rhs(self, x_now: np.ndarray, x_delayed: np.ndarray) -> np.ndarray:
        """``x_delayed[i]`` is the state at t - tau_i."""
        produced = self.k * np.multiply.reduce(x_delayed ** self.Y, axis=1)
        consumed = self.k * np.multiply.reduce(x_now ** self.Y, axis=1)
        return produced @ self.P - consumed @ self.Y


def rhs(net: ReactionNetwork, x_now, x_delayed=None) -> np.ndarray:
    """Evaluate the delayed vector field; ``x_delayed`` defaults to ``x_now``."""
    kin = _Kinetics(net)
    x_now = np.asarray(x_now, dtype=float)
    if x_delayed is None:
        x_delayed = np.tile(x_now, (net.r, 1))
    return kin.rhs(x_now, np.asarray(x_delayed, dtype=float))


# -- integrator -------------------------------------------------------------------

_OK, _NON_FINITE, _NEGATIVE = 0, 1, 2


@njit(cache=True)
def _monomial(x, Y, i):
    v = 1.0
    for j in range(Y.shape[1]):
        if Y[i, j]:
            v *= x[j] ** Y[i, j]
    return v


@njit(cache=True)
def _field(x, D, Y, P, k, out):
    out[:] = 0.0
    for i in range(Y.shape[0]):
        produced = k[i] * _monomial(D[i], Y, i)
        consumed = k[i] * _monomial(x, Y, i)
        for j in range(Y.shape[1]):
            out[j] += P[i, j] * produced - Y[i, j] * consumed


@njit(cache=True)
def _delayed(X, d_start, d_end, d, k, where, stage, D, h, hermite):
    """Fill D[i] with the state at stage time t_k + where*h/2 minus tau_i."""
    for i in range(d.shape[0]):
        if d[i] == 0:
            D[i, :] = stage
            continue
        base = k - d[i]
        if where == 0:
            D[i, :] = X[base]
        elif where == 2:
            D[i, :] = X[base + 1]
        else:
            for j in range(X.shape[1]):
                v = 0.5 * (X[base, j] + X[base + 1, j])
                if hermite:
                    v += h / 8.0 * (d_start[base, j] - d_end[base + 1, j])
                D[i, j] = v


@njit(cache=True)
def _rk4_run(X, d_start, d_end, Y, P, rates, d, m, steps, h, hermite):
    """Classical RK4 over the grid; returns (status, grid index of failure)."""
    n = X.shape[1]
    D = np.empty((Y.shape[0], n))
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    stage = np.empty(n)
    for s in range(steps):
        k = m + s
        x = X[k]
        _delayed(X, d_start, d_end, d, k, 0, x, D, h, hermite)
        _field(x, D, Y, P, rates, k1)
        d_start[k] = k1
        if k > m:
            d_end[k] = k1
        stage[:] = x + 0.5 * h * k1
        _delayed(X, d_start, d_end, d, k, 1, stage, D, h, hermite)
        _field(stage, D, Y, P, rates, k2)
        stage[:] = x + 0.5 * h * k2
        _delayed(X, d_start, d_end, d, k, 1, stage, D, h, hermite)
        _field(stage, D, Y, P, rates, k3)
        stage[:] = x + h * k3
        _delayed(X, d_start, d_end, d, k, 2, stage, D, h, hermite)
        _field(stage, D, Y, P, rates, k4)
        for j in range(n):
            v = x[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if not np.isfinite(v):
                return _NON_FINITE, k + 1
            X[k + 1, j] = v
        for j in range(n):
            if X[k + 1, j] < NEGATIVE_TOL:
                return _NEGATIVE, k + 1
    return _OK, 0



def _delay_offsets(delays: np.ndarray, h: float) -> tuple[np.ndarray, list[str]]:
    positive = delays[delays > 0]
    if positive.size and h > positive.min() * (1 + 1e-12):
        raise StepTooLarge(f"step {h} exceeds the smallest positive delay {positive.min()}")
    offsets = np.rint(delays / h).astype(np.int64)
    notes = []
    for i, (tau, d) in enumerate(zip(delays, offsets)):
        if abs(tau - d * h) > 1e-12:
            msg = f"delay of reaction {i} rounded from {tau!r} to {d * h!r}"
            notes.append(msg)
            warnings.warn(msg, DelayRoundingWarning, stacklevel=3)
    return offsets, notes


def simulate(
    net: ReactionNetwork,
    psi: HistoryFunction,
    t_end: float,
    step_h: float,
    delays=None,
    interpolation: str = "hermite",
    lyapunov_every: int | None = None,
    xbar=None,
) -> tuple[TrajectoryState, RunReport]:
    """Integrate from history ``psi`` up to ``t_end`` with a fixed step.

    ``delays`` overrides the network's delays (scalar or per reaction).
    ``interpolation`` picks how delayed states at half steps are read:
    "linear" between grid points, or "hermite" (cubic, using the stored
    derivatives).  The Lyapunov functional is sampled every
    ``lyapunov_every`` steps when a complex-balanced equilibrium is known.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if not step_h > 0 or not math.isfinite(step_h):
        raise ValueError("step_h must be positive")
    if interpolation not in ("linear", "hermite"):
        raise ValueError(f"unknown interpolation {interpolation!r}")
    if psi.n != net.n:
        raise ValueError(f"history has {psi.n} components, network has {net.n} species")
    tau = net.delays if delays is None else np.broadcast_to(np.asarray(delays, dtype=float), (net.r,)).copy()
    if np.any(tau < 0):
        raise ValueError("delays must be non-negative")
    h = float(step_h)
    d, notes = _delay_offsets(tau, h)
    m = int(d.max()) if d.size else 0
    if psi.span_start > -m * h + 1e-12:
        raise WindowTooShort("history does not cover the longest delay")
    steps = int(math.ceil(t_end / h - 1e-9))
    total = m + steps + 1
    if total * net.n > MAX_POINTS:
        raise MemoryCapExceeded(f"{total} grid points x {net.n} species exceeds the cap of {MAX_POINTS}")

    times = (np.arange(total) - m) * h
    X = np.zeros((total, net.n))
    X[: m + 1] = psi(times[: m + 1])
    if np.any(X[: m + 1] <= 0):
        raise NonPositiveWindow("history must be strictly positive")
    # Derivatives at the two ends of each grid segment [t_j, t_j+1]:
    # d_start[j] at its left end, d_end[j+1] at its right end.  They differ
    # at t = 0, where the history meets the solution.
    d_start = np.zeros((total, net.n))
    d_end = np.zeros((total, net.n))
    if m > 0:
        seg = psi.slope(times[:m] + 0.5 * h)
        d_start[:m] = seg
        d_end[1 : m + 1] = seg

    kin = _Kinetics(net)
    status, at = _rk4_run(
        X, d_start, d_end, net.reactant_matrix(), net.product_matrix(), kin.k,
        d.astype(np.int64), m, steps, h, interpolation == "hermite",
    )
    if status == _NON_FINITE:
        raise NonFiniteState(f"non-finite state at t = {times[at]:.6g}")
    if status == _NEGATIVE:
        raise NegativeStateAborted(f"negative concentration at t = {times[at]:.6g}")
    last = total - 1
    delayed_last = X[last - d]
    d_end[last] = kin.rhs(X[last], delayed_last)

    state = TrajectoryState(h, times, X, d, m, notes, d_start, d_end)
    report = _report(net, kin, state, tau_used=d * h, lyapunov_every=lyapunov_every, xbar=xbar)
    return state, report


def _cumquad(values: np.ndarray, h: float, start: np.ndarray, end: np.ndarray) -> np.ndarray:
    """Running integral by the trapezoid rule with endpoint slope corrections.

    Each segment contributes h/2 (f0 + f1) + h^2/12 (f0' - f1'), which is
    fourth-order accurate for smooth f and handles a derivative jump at a
    grid point because the slopes are one-sided.
    """
    out = np.zeros_like(values)
    seg = 0.5 * h * (values[1:] + values[:-1]) + (h * h / 12.0) * (start[:-1] - end[1:])
    out[1:] = np.cumsum(seg, axis=0)
    return out


def _monomial_series(kin: _Kinetics, X: np.ndarray, chunk: int = 100_000) -> np.ndarray:
    out = np.empty((X.shape[0], kin.Y.shape[0]))
    for a in range(0, X.shape[0], chunk):
        out[a : a + chunk] = kin.monomials(X[a : a + chunk])
    return out


def _monomial_slope_series(kin: _Kinetics, X: np.ndarray, Xdot: np.ndarray, chunk: int = 100_000) -> np.ndarray:
    out = np.empty((X.shape[0], kin.Y.shape[0]))
    for a in range(0, X.shape[0], chunk):
        out[a : a + chunk] = kin.monomial_slopes(X[a : a + chunk], Xdot[a : a + chunk])
    return out


def _xlogx(z: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(z > 0, z * np.log(np.where(z > 0, z, 1.0)), 0.0)


def _report(net, kin, state: TrajectoryState, tau_used, lyapunov_every, xbar) -> RunReport:
    X, h, d, m = state.values, state.step_h, state.delay_offsets, state.history_points
    mono = _monomial_series(kin, X)
    mono_start = _monomial_slope_series(kin, X, state.start_slopes)
    mono_end = _monomial_slope_series(kin, X, state.end_slopes)
    C = _cumquad(mono, h, mono_start, mono_end)
    idx = np.arange(m, X.shape[0])
    cols = np.arange(net.r)
    integrals = C[idx] - C[idx[:, None] - d[None, :], cols]
    g = X[idx] + (integrals * kin.k) @ kin.Y

    basis = conservation_basis(stoich_matrix(net)).as_array()
    if basis.size:
        q = g @ basis.T
        drift = float(np.max(np.abs(q - q[0]) / (1.0 + np.abs(q[0]))))
    else:
        drift = 0.0

    t = state.times[idx]
    half = t >= t[-1] / 2
    min_conc = X[idx][half].min(axis=0)
    terminal = X[-1].copy()
    residual = float(np.max(np.abs(kin.rhs(terminal, np.tile(terminal, (net.r, 1))))))

    if xbar is None:
        try:
            eq = find_complex_balanced_equilibrium(net)
        except NotWeaklyReversible:
            eq = None
        xbar = None if eq is None else eq.concentrations
    series = np.empty((0, 2))
    if xbar is not None:
        xbar = np.asarray(xbar, dtype=float)
        every = lyapunov_every or max(1, (X.shape[0] - m) // 1000)
        sample = idx[::every]
        if sample[-1] != idx[-1]:
            sample = np.append(sample, idx[-1])
        mbar = kin.monomials(xbar)
        integrand = _xlogx(mono) - mono * (np.log(mbar) + 1.0) + mbar
        log_ratio = np.log(np.where(mono > 0, mono, 1.0)) - np.log(mbar)
        L = _cumquad(integrand, h, mono_start * log_ratio, mono_end * log_ratio)
        delay_part = (L[sample] - L[sample[:, None] - d[None, :], cols]) @ kin.k
        xs = X[sample]
        point_part = np.sum(_xlogx(xs) - xs * (np.log(xbar) + 1.0) + xbar, axis=1)
        series = np.column_stack([state.times[sample], point_part + delay_part])
    return RunReport(drift, series, min_conc, terminal, residual, xbar)


# -- window functionals ----------------------------------------------------------

def _window_samples(window, span: float, step: float | None):
    """(times, values) on [-span, 0] from a callable or a sampled window."""
    if callable(window):
        if span == 0:
            times = np.array([0.0])
        else:
            pts = max(2, int(math.ceil(span / (step or span / 1000))) + 1)
            times = np.linspace(-span, 0.0, pts)
        return times, np.asarray(window(times), dtype=float).reshape(times.size, -1)
    times, values = window
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times[-1] != 0:
        raise ValueError("window times must end at 0")
    if times[0] > -span + 1e-12:
        raise WindowTooShort(f"window starts at {times[0]}, needs to reach {-span}")
    return times, values


def _integral_to_zero(times: np.ndarray, f: np.ndarray, a: float) -> np.ndarray:
    """Trapezoid integral of sampled ``f`` over [a, 0] (a <= 0)."""
    if a >= 0:
        return np.zeros(f.shape[1:])
    inside = times >= a
    t_in, f_in = times[inside], f[inside]
    if t_in[0] > a:
        j = np.searchsorted(times, a) - 1
        w = (a - times[j]) / (times[j + 1] - times[j])
        fa = (1 - w) * f[j] + w * f[j + 1]
        t_in = np.concatenate([[a], t_in])
        f_in = np.concatenate([fa[None], f_in])
    return np.sum(0.5 * np.diff(t_in)[:, None] * (f_in[1:] + f_in[:-1]), axis=0)


def compute_g(net: ReactionNetwork, window, step: float | None = None) -> np.ndarray:
    """psi(0) + sum_i k_i (integral over [-tau_i, 0] of psi^{y_i}) y_i.

    ``window`` is either a callable on [-tau_max, 0] or a ``(times, values)``
    pair whose times end at 0.  Integrals use the composite trapezoid rule.
    """
    kin = _Kinetics(net)
    tau = net.delays
    times, values = _window_samples(window, float(tau.max(initial=0.0)), step)
    mono = kin.monomials(values)
    g = values[-1].copy()
    for i, ti in enumerate(tau):
        if ti > 0:
            g += kin.k[i] * _integral_to_zero(times, mono[:, i:i + 1], -ti)[0] * kin.Y[i]
    return g


def lyapunov_value(net: ReactionNetwork, xbar, window, step: float | None = None) -> float:
    """Lyapunov-Krasovskii functional of a history window relative to ``xbar``."""
    xbar = np.asarray(xbar, dtype=float)
    if xbar.shape != (net.n,) or np.any(xbar <= 0):
        raise NonPositiveWindow("equilibrium must be strictly positive")
    kin = _Kinetics(net)
    tau = net.delays
    times, values = _window_samples(window, float(tau.max(initial=0.0)), step)
    if np.any(values <= 0):
        raise NonPositiveWindow("window must be strictly positive")
    x0 = values[-1]
    v = float(np.sum(x0 * (np.log(x0) - np.log(xbar) - 1.0) + xbar))
    mono = kin.monomials(values)
    mbar = kin.monomials(xbar)
    integrand = mono * (np.log(mono) - np.log(mbar) - 1.0) + mbar
    for i, ti in enumerate(tau):
        if ti > 0:
            v += kin.k[i] * float(_integral_to_zero(times, integrand[:, i:i + 1], -ti)[0])
    return v


# -- random probing -------------------------------------------------------------

@dataclass
class ProbeSummary:
    min_concentration: float
    floor_breached: bool
    floor: float
    terminal_states: np.ndarray
    delays: np.ndarray
    histories: np.ndarray


def persistence_probe(
    net: ReactionNetwork,
    trials: int,
    t_end: float,
    step_h: float,
    seed: int | None = None,
    max_delay: float = 2.0,
    floor: float = PROBE_FLOOR,
    history_range: tuple[float, float] = (0.1, 10.0),
) -> ProbeSummary:
    """Simulate from random positive constant histories and random delays.

    Histories are log-uniform on ``history_range``; delays are drawn from
    [0, max_delay] on the step grid.  The floor and the final-half window
    are conventions for flagging near-extinction, not a proof of anything.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    lo, hi = np.log(history_range[0]), np.log(history_range[1])
    hist = np.exp(rng.uniform(lo, hi, size=(trials, net.n)))
    max_steps = int(math.floor(max_delay / step_h + 1e-9))
    taus = rng.integers(0, max_steps + 1, size=(trials, net.r)) * step_h
    terminals = np.empty((trials, net.n))
    lowest = math.inf
    for t in range(trials):
        _, rep = simulate(net, HistoryFunction.constant(hist[t]), t_end, step_h, delays=taus[t])
        terminals[t] = rep.terminal_state
        lowest = min(lowest, float(rep.min_concentration.min()))
    return ProbeSummary(lowest, lowest < floor, floor, terminals, taus, hist)


def write_trajectory_csv(state: TrajectoryState, names, stream, every: int = 1) -> int:
    """Write ``t,<species...>`` rows for t >= 0, keeping every ``every``-th point.

    The final point is always written.  Returns the number of data rows.
    """
    if every < 1:
        raise ValueError("every must be at least 1")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["t", *names])
    t, x = state.t, state.x
    rows = list(range(0, len(t), every))
    if rows[-1] != len(t) - 1:
        rows.append(len(t) - 1)
    for i in rows:
        writer.writerow([repr(float(t[i])), *(repr(float(v)) for v in x[i])])
    return len(rows)
