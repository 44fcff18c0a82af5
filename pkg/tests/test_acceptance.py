"""End-to-end acceptance checks, one test per criterion.

Each test records a ``PASS``/``FAIL criterion N: ...`` line that is printed in
the terminal summary, then asserts at the stated tolerance.
"""

import math
import time
from itertools import combinations

import numpy as np
import pytest
import sympy

from crnp.balance import deficiency, find_complex_balanced_equilibrium, is_weakly_reversible
from crnp.compose import Rule, certify_persistence, evaluate_rules
from crnp.dde import HistoryFunction, lyapunov_value, compute_g, simulate
from crnp.parser import parse_network
from crnp.reduce import is_reduced_conservative, reduce_on, reduced_rhs
from crnp.siphon import enumerate_semilocking, partition_complement, is_semilocking
from crnp.stoich import conservation_basis, face_dimension, face_kernel, projected_dimension, stoich_matrix

from conftest import ACCEPTANCE_LINES, load
from netgen import random_network, random_subset

DELAYS = (0.0, 0.2, 0.5, 1.0)
HISTORIES = {"net_ab": (2.0, 0.5), "net_trio": (3.0, 0.4, 1.5)}


def record(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def mass_action_rhs(net, x_now, x_delayed):
    """Plain-loop delayed mass-action field, independent of the library kernel."""
    out = [0.0] * net.n
    for i, rx in enumerate(net.reactions):
        past = rx.rate_k * math.prod(x_delayed[i][j] ** c for j, c in rx.reactant.coeffs)
        now = rx.rate_k * math.prod(x_now[j] ** c for j, c in rx.reactant.coeffs)
        for j, c in rx.product.coeffs:
            out[j] += c * past
        for j, c in rx.reactant.coeffs:
            out[j] -= c * now
    return np.array(out)


def g_of_constant_history(net, psi):
    """a.g for a constant history, in closed form: psi + sum k_i tau_i psi^y_i y_i."""
    g = np.array(psi, dtype=float)
    for rx in net.reactions:
        mono = math.prod(psi[j] ** c for j, c in rx.reactant.coeffs)
        for j, c in rx.reactant.coeffs:
            g[j] += rx.rate_k * rx.delay_tau * mono * c
    return g


@pytest.fixture(scope="module")
def runs():
    """Simulations shared by criteria 6 to 8."""
    out = {}
    for name, psi in HISTORIES.items():
        net = load(name)
        for tau in DELAYS:
            delayed = net.with_params(delays=tau)
            state, report = simulate(delayed, HistoryFunction.constant(psi), 50.0, 1e-3)
            out[name, tau] = (delayed, state, report)
    return out


def brute_force_masks(net):
    reactant = [sum(1 << j for j in rx.reactant.support) for rx in net.reactions]
    product = [sum(1 << j for j in rx.product.support) for rx in net.reactions]
    return {
        w
        for w in range(1, 1 << net.n)
        if all(not (w & p) or (w & c) for p, c in zip(product, reactant))
    }


def test_criterion_1_semilocking_oracle():
    rng = np.random.default_rng(20261018)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(100):
        net = random_network(rng, int(rng.integers(1, 13)), int(rng.integers(1, 21)))
        found = {sum(1 << j for j in rep.members) for rep in enumerate_semilocking(net)}
        mismatches += found != brute_force_masks(net)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    record(1, ok, f"100 random networks, {mismatches} mismatches, {elapsed:.1f} s")
    assert mismatches == 0
    assert elapsed < 60


def test_criterion_2_trio_example():
    net = parse_network("X2 + X1 <-> 2 X1 [k=1,1]\nX3 + X1 <-> 2 X1 [k=1,1]")
    x1, x2, x3 = (net.index_of(s) for s in ("X1", "X2", "X3"))
    kernel = face_kernel(net, {"X1"})
    vec = [int(kernel[0][j]) for j in (x1, x2, x3)] if len(kernel) == 1 else None
    proportional = vec is not None and all(kernel[0][j].denominator == 1 for j in range(3)) and vec[0] == 0 and vec[1] != 0 and vec[1] == -vec[2]
    part = partition_complement(net, {"X1"})
    ok = is_semilocking(net, {"X1"}) and proportional and part.sr == {x2, x3} and not part.tf and not part.tr
    record(2, ok, f"W={{X1}} semilocking, kernel {vec}, W^sr={sorted(net.format_set(part.sr))}")
    assert is_semilocking(net, {"X1"})
    assert proportional
    assert part.sr == frozenset({x2, x3}) and not part.tf and not part.tr


def test_criterion_3_rank_nullity():
    rng = np.random.default_rng(3)
    failures = 0
    for _ in range(1000):
        net = random_network(rng, int(rng.integers(1, 9)), int(rng.integers(1, 11)))
        w = random_subset(rng, net.n)
        m = stoich_matrix(net)
        dim = sympy.Matrix([list(row) for row in m.entries]).rank()
        failures += face_dimension(net, w) + projected_dimension(net, w) != dim
    record(3, failures == 0, f"1000 random (network, W) pairs, {failures} failures")
    assert failures == 0


def test_criterion_4_complex_balance():
    start = time.perf_counter()
    ab = load("net_ab")
    eq = find_complex_balanced_equilibrium(ab)
    exact = eq is not None and list(eq.concentrations) == [1.0, 1.0] and eq.residual == 0
    names = ("net_ab", "net_trio", "net_chain", "net_comb_open", "net_semi")
    rng = np.random.default_rng(4)
    worst_res = worst_rhs = 0.0
    failures = 0
    for name in names:
        net = load(name)
        assert is_weakly_reversible(net) and deficiency(net) == 0
        for _ in range(50):
            rated = net.with_params(rates=rng.uniform(0.1, 10.0, net.r))
            found = find_complex_balanced_equilibrium(rated)
            if found is None:
                failures += 1
                continue
            x = list(found.concentrations)
            field = np.max(np.abs(mass_action_rhs(rated, x, [x] * rated.r)))
            worst_res = max(worst_res, found.residual)
            worst_rhs = max(worst_rhs, field)
    elapsed = time.perf_counter() - start
    ok = exact and failures == 0 and worst_res <= 1e-9 and worst_rhs <= 1e-8 and elapsed < 30
    record(
        4, ok,
        f"NET_AB exact={exact}; 250 random rates, {failures} failures, "
        f"max residual {worst_res:.1e}, max |rhs| {worst_rhs:.1e}, {elapsed:.1f} s",
    )
    assert exact
    assert failures == 0
    assert worst_res <= 1e-9 and worst_rhs <= 1e-8
    assert elapsed < 30


def test_criterion_5_certificates():
    trio = load("net_trio")
    cert = certify_persistence(trio)
    labels = {tuple(trio.format_set(r.report.members)): r.discharge.rule for r in cert.records}
    trio_ok = cert.verdict.value == "Persistent" and labels == {
        ("X1",): Rule.R1,
        ("X1", "X2"): Rule.R2,
        ("X1", "X3"): Rule.R2,
        ("X1", "X2", "X3"): Rule.TRIVIAL,
    }

    comb = load("net_comb_open")
    comb_cert = certify_persistence(comb)
    comb_rules = {r.discharge.rule for r in comb_cert.records}
    comb_ok = comb_cert.verdict.value == "Persistent" and bool(comb_rules & {Rule.R3, Rule.R4})

    semi = load("net_semi")
    semi_cert = certify_persistence(semi)
    rec = next(r for r in semi_cert.records if semi.format_set(r.report.members) == ["X1", "X2"])
    hits, _ = evaluate_rules(semi, semi_cert.decomposition, rec.report, rec.analysis)
    r8 = [h for h in hits if h[0] is Rule.R8]
    semi_ok = bool(r8) and r8[0][2] == {"reduced_dim": 1, "size": 2} and is_reduced_conservative(semi, {"X1", "X2"}) == (True, 1, 2)

    ok = trio_ok and comb_ok and semi_ok
    record(
        5, ok,
        f"NET_TRIO {sorted((' '.join(k), v.value) for k, v in labels.items())}; "
        f"NET_COMB_OPEN {sorted(r.value for r in comb_rules)}; NET_SEMI R8 witness {r8[0][2] if r8 else None}",
    )
    assert trio_ok and comb_ok and semi_ok


def test_criterion_6_conservation(runs):
    worst_running = worst_window = 0.0
    for (name, tau), (net, state, report) in runs.items():
        basis = conservation_basis(stoich_matrix(net)).as_array()
        q0 = basis @ g_of_constant_history(net, HISTORIES[name])
        span = int(round(max(tau, 1e-3) / state.step_h))
        window = (state.times[-span - 1:] - state.times[-1], state.values[-span - 1:])
        q1 = basis @ compute_g(net, window)
        worst_window = max(worst_window, float(np.max(np.abs(q1 - q0) / (1 + np.abs(q0)))))
        worst_running = max(worst_running, report.conservation_drift)
    ok = worst_running < 1e-6 and worst_window < 1e-6
    record(6, ok, f"max relative drift {worst_running:.1e} along runs, {worst_window:.1e} at t_end")
    assert worst_running < 1e-6
    assert worst_window < 1e-6


def test_criterion_7_lyapunov(runs):
    worst_rise = -math.inf
    min_v = math.inf
    for net, state, report in runs.values():
        v = report.lyapunov_series[:, 1]
        assert v.size > 100
        worst_rise = max(worst_rise, float(np.max(np.diff(v) - 1e-8 * (1 + v[:-1]))))
        min_v = min(min_v, float(v.min()))
    at_eq = 0.0
    for name in HISTORIES:
        for tau in DELAYS:
            net = load(name).with_params(delays=tau)
            xbar = find_complex_balanced_equilibrium(net).concentrations
            psi = HistoryFunction.constant(xbar)
            _, rep = simulate(net, psi, 2.0, 1e-2, xbar=xbar)
            at_eq = max(at_eq, abs(lyapunov_value(net, xbar, psi)), float(np.max(np.abs(rep.lyapunov_series[:, 1]))))
    ok = worst_rise <= 0 and min_v >= 0 and at_eq <= 1e-12
    record(7, ok, f"max V increase beyond slack {worst_rise:.1e}, min V {min_v:.1e}, |V| at equilibrium {at_eq:.1e}")
    assert worst_rise <= 0
    assert min_v >= 0
    assert at_eq <= 1e-12


def test_criterion_8_delay_independence(runs):
    terminals = [runs["net_ab", tau][2].terminal_state for tau in DELAYS]
    spread = max(float(np.max(np.abs(a - b))) for a, b in combinations(terminals, 2))
    record(8, spread <= 1e-6, f"NET_AB terminal states pairwise spread {spread:.1e}")
    assert spread <= 1e-6


def observed_orders(errors):
    return [math.log2(a / b) for a, b in zip(errors, errors[1:])]


def test_criterion_9_integrator_order():
    net = load("net_ab")
    psi = HistoryFunction.constant([2.0, 0.5])
    t_end = 2.0
    exact = np.array([1.25 + 0.75 * math.exp(-2 * t_end), 1.25 - 0.75 * math.exp(-2 * t_end)])
    steps = [0.1 / 2**k for k in range(4)]
    errors = [np.max(np.abs(simulate(net, psi, t_end, h)[1].terminal_state - exact)) for h in steps]
    closed = observed_orders(errors)

    delayed = net.with_params(delays=0.5)
    finals = [simulate(delayed, psi, t_end, h)[1].terminal_state for h in [0.1 / 2**k for k in range(5)]]
    diffs = [np.max(np.abs(a - b)) for a, b in zip(finals, finals[1:])]
    richardson = observed_orders(diffs)

    order = min(closed + richardson)
    ok = order >= 3.5
    record(
        9, ok,
        f"orders tau=0 vs closed form {[round(p, 2) for p in closed]}, "
        f"tau=0.5 self-convergence {[round(p, 2) for p in richardson]}",
    )
    assert order >= 3.5


def five_point_derivative(values, j, h):
    return (values[j - 2] - 8 * values[j - 1] + 8 * values[j + 1] - values[j + 2]) / (12 * h)


def test_criterion_10_reduction_consistency():
    net = load("net_trio")
    h = 1e-3
    state, _ = simulate(net, HistoryFunction.constant([3.0, 0.4, 1.5]), 20.0, h)
    X, d, m = state.values, state.delay_offsets, state.history_points
    rng = np.random.default_rng(10)
    sample = np.sort(rng.choice(np.arange(m + 1000, X.shape[0] - 3), size=100, replace=False))
    worst_fd = worst_field = 0.0
    for rep in enumerate_semilocking(net):
        keep = sorted(rep.members)
        rs = reduce_on(net, rep.members)
        for j in sample:
            delayed = X[j - d]
            reduced = reduced_rhs(rs, X[j], delayed)
            numeric = five_point_derivative(X, j, h)[keep]
            direct = mass_action_rhs(net, X[j], delayed)[keep]
            worst_fd = max(worst_fd, float(np.max(np.abs(reduced - numeric))))
            worst_field = max(worst_field, float(np.max(np.abs(reduced - direct))))
    ok = worst_fd <= 1e-8 and worst_field <= 1e-8
    record(
        10, ok,
        f"100 times x every semilocking set of NET_TRIO, max gap {worst_fd:.1e} to the trajectory "
        f"derivative, {worst_field:.1e} to the full field",
    )
    assert worst_fd <= 1e-8
    assert worst_field <= 1e-8
