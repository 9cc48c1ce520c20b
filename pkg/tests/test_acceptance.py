"""Acceptance suite: one test (or group) per criterion, each tagged with
``@pytest.mark.criterion``; the conftest prints one PASS/FAIL line per
criterion.  Run directly with ``python tests/test_acceptance.py``.
"""

import json
import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from schkdv import cli, data
from schkdv.dynamics import PhysParams, StepperConfig, simulate, step
from schkdv.errors import ConfigurationError
from schkdv.experiments import ScanConfig, conservation_drift, convergence_study, gwp_threshold, oracle_error
from schkdv.functionals import apriori_report, energy_rate_terms, l_rate_terms, modified_e, modified_l, rate_report
from schkdv.spacetime import ACCEPTANCE_IDS, EstimateParams, check_gates
from schkdv.spectral import ComplexField, IParams, RealField, SpectralGrid, i_multiplier

P = PhysParams(1.0, 1.0, 1.0)


def criterion(num, title):
    return pytest.mark.criterion(num, title)


# one trajectory shared by the conservation and rate-identity criteria
ACCEPT_GRID = dict(n=1024, L=64 * math.pi)
ACCEPT_DT = 1e-3


def _accept_initial(grid):
    return data.gaussian_bump(grid, amplitude=1.0, width=2.0, k0=1.0)


# ---------------------------------------------------------------------------
# CLI runs used by the scan, harness and reproducibility criteria

RUNS = {
    "threshold": ["gwp-threshold", "--beta-nonzero", "--at", "7/10"],
    "conserve": ["conserve", "--set", "run.stride=100", "--rates"],
    "converge": ["converge", "--oracle", "plane_wave", "--set", "physics.alpha=0", "--set", "physics.gamma=0",
                 "--set", "data.amplitude=2", "--set", "data.k0=2"],
    "iscan": ["iscan"],
    "estimates": ["estimates"],
}


@pytest.fixture(scope="module")
def cli_runs(tmp_path_factory):
    """Every CLI acceptance run executed twice into separate directories."""
    root = tmp_path_factory.mktemp("accept")
    out = {}
    for name, argv in RUNS.items():
        dirs, secs = [], []
        for rep in ("a", "b"):
            d = root / f"{name}-{rep}"
            t0 = time.perf_counter()
            code = cli.main(argv + ["--seed", "0", "-o", str(d)])
            secs.append(time.perf_counter() - t0)
            assert code == cli.EXIT_OK, name
            dirs.append(d)
        out[name] = (dirs, secs)
    return out


# ---------------------------------------------------------------------------
# 1


@criterion(1, "threshold arithmetic")
def test_c01_threshold_arithmetic(record_property):
    t0 = time.perf_counter()
    nz, z = gwp_threshold(False), gwp_threshold(True)
    elapsed = time.perf_counter() - t0
    F = Fraction
    assert isinstance(nz.overall, Fraction) and nz.overall == F(2, 3)
    assert isinstance(z.overall, Fraction) and z.overall == F(3, 5)
    assert nz.thresholds == [F(2, 3), F(13, 20), F(2, 3), F(5, 8), F(1, 2), F(4, 7)]
    assert z.thresholds == [F(3, 5), F(9, 16), F(3, 5), F(4, 7), F(3, 7), F(1, 2)]
    assert all(nz.evaluate(F(7, 10)).values())
    assert elapsed < 1.0
    record_property("detail", f"2/3 and 3/5 in {elapsed * 1e3:.2f} ms")


# ---------------------------------------------------------------------------
# 2


@criterion(2, "conservation of M, L, E")
def test_c02_conservation(record_property):
    grid = SpectralGrid(ACCEPT_GRID["n"], ACCEPT_GRID["L"])
    t0 = time.perf_counter()
    rep = conservation_drift(_accept_initial(grid), P, StepperConfig(ACCEPT_DT), 1.0, stride=10)
    elapsed = time.perf_counter() - t0
    drift = {k: rep.relative_drift(k) for k in ("M", "L", "E")}
    assert max(drift.values()) < 1e-6, drift
    assert elapsed < 120
    record_property("detail", " ".join(f"{k}={v:.1e}" for k, v in drift.items()) + f" in {elapsed:.1f} s")


# ---------------------------------------------------------------------------
# 3


@pytest.fixture(scope="module")
def wide():
    return SpectralGrid(1024, 64 * math.pi)


@criterion(3, "exact-solution regressions")
def test_c03_plane_wave(wide, record_property):
    err = oracle_error("plane_wave", 1e-3, wide, PhysParams(0.0, 1.0, 0.0), amplitude=2.0, k=2.0)
    assert err < 1e-8
    record_property("detail", f"plane wave {err:.1e}")


@criterion(3, "exact-solution regressions")
def test_c03_kdv_soliton(wide, record_property):
    err = oracle_error("kdv_soliton", 1e-3, wide, P, c=1.0)
    assert err < 1e-4
    record_property("detail", f"soliton {err:.1e}")


@criterion(3, "exact-solution regressions")
@pytest.mark.parametrize("dt", [0.5, 1e-3])
def test_c03_free_flow(wide, dt, record_property):
    err = oracle_error("free_flow", dt, wide)
    assert err < 1e-10
    record_property("detail", f"free flow dt={dt:g} {err:.1e}")


# ---------------------------------------------------------------------------
# 4


@criterion(4, "integrator order")
def test_c04_order(wide, cli_runs, record_property):
    rep = convergence_study("plane_wave", [4e-3, 2e-3, 1e-3], wide, PhysParams(0.0, 1.0, 0.0))
    assert 3.6 <= rep.order <= 4.4
    (a, _), _ = cli_runs["converge"]
    doc = json.loads((a / "convergence.json").read_text())
    assert doc["order"] == pytest.approx(rep.order, rel=1e-12)
    record_property("detail", f"order {rep.order:.3f}")


# ---------------------------------------------------------------------------
# 5


@criterion(5, "I-multiplier properties")
@pytest.mark.parametrize("N", [4, 8, 16, 32])
@pytest.mark.parametrize("s", [0.6, 0.7, 0.9])
def test_c05_multiplier(N, s):
    p = IParams(N, s)
    for grid in (SpectralGrid(2048, 16 * math.pi), SpectralGrid(ACCEPT_GRID["n"], ACCEPT_GRID["L"])):
        xi = grid.wavenumbers
        m = i_multiplier(xi, p)
        assert np.array_equal(m, i_multiplier(-xi, p))
        order = np.argsort(np.abs(xi), kind="stable")
        assert np.all(np.diff(m[order]) <= 0)
        assert np.all(m[np.abs(xi) <= N] == 1.0)
        hi = np.abs(xi) >= 2 * N  # empty when the grid stops below 2N
        assert np.all(np.abs(m[hi] - (N / np.abs(xi[hi])) ** (1 - s)) <= 1e-14)
        assert np.max(m * (1 + xi**2) ** ((1 - s) / 2)) <= math.sqrt(5) * N ** (1 - s)
    dense = np.linspace(0, 40 * N, 200_001)
    md = i_multiplier(dense, p)
    assert np.all(np.diff(md) <= 0) and np.array_equal(md, i_multiplier(-dense, p))
    far = dense >= 2 * N
    assert np.all(np.abs(md[far] - (N / dense[far]) ** (1 - s)) <= 1e-14)


# ---------------------------------------------------------------------------
# 6


@pytest.fixture(scope="module")
def accept_samples():
    grid = SpectralGrid(ACCEPT_GRID["n"], ACCEPT_GRID["L"])
    tr = simulate(_accept_initial(grid), P, StepperConfig(ACCEPT_DT), 0.9, stride=100)
    assert len(tr.states) == 10
    return tr.states


def _central(state, ip, h=1e-4):
    cfg = StepperConfig(h)
    mid = step(state, P, cfg)
    end = step(mid, P, cfg)
    dE = (modified_e(end.u, end.v, P, ip) - modified_e(state.u, state.v, P, ip)) / (2 * h)
    dL = (modified_l(end.u, end.v, P, ip) - modified_l(state.u, state.v, P, ip)) / (2 * h)
    return mid, dE, dL


@criterion(6, "rate identities")
@pytest.mark.parametrize("N", [4.0, 16.0])
def test_c06_rate_identities(accept_samples, N, record_property):
    ip = IParams(N, 0.7)
    worst_e = worst_l = 0.0
    for st in accept_samples:
        mid, dE, dL = _central(st, ip)
        r = rate_report(mid, P, ip)
        worst_e = max(worst_e, abs(r.e_sum - dE) / (1 + abs(dE)))
        worst_l = max(worst_l, abs(r.l_sum - dL) / (1 + abs(dL)))
    assert worst_e < 1e-4 and worst_l < 1e-4
    record_property("detail", f"N={N:g} E {worst_e:.1e} L {worst_l:.1e}")


@criterion(6, "rate identities")
def test_c06_rates_vanish_at_s1(accept_samples):
    ip = IParams(4.0, 1.0)
    for st in accept_samples:
        terms = energy_rate_terms(st, P, ip) + l_rate_terms(st, P, ip)
        assert len(terms) == 16
        assert max(abs(x) for x in terms) < 1e-13


# ---------------------------------------------------------------------------
# 7


@criterion(7, "almost-conservation decay")
def test_c07_scan(cli_runs, record_property):
    (a, _), secs = cli_runs["iscan"]
    doc = json.loads((a / "scan.json").read_text())
    cfg = ScanConfig()
    assert doc["N_values"] == [4.0, 8.0, 16.0, 32.0] and doc["s"] == 0.7 and doc["T"] == 1.0
    assert cfg.family == "rough"
    e, l = doc["e_increment"], doc["l_increment"]
    for name, inc in (("E", e), ("L", l)):
        for lo, hi in zip(inc, inc[1:]):
            assert hi < lo, (name, inc)
    assert doc["e_mean_slope"] <= -0.5 and doc["l_mean_slope"] <= -0.5
    record_property("detail", f"slopes E {doc['e_mean_slope']:.2f} L {doc['l_mean_slope']:.2f} in {secs[0]:.0f} s")


# ---------------------------------------------------------------------------
# 8


def _boundary_decaying(grid, rng):
    c = 0.5 * grid.box_length
    w1, w2 = rng.uniform(0.5, 3.0, 2)
    a1, a2 = rng.uniform(0.1, 3.0, 2)
    x = grid.x - c - rng.uniform(-5, 5)
    u = a1 * np.exp(-((x / w1) ** 2)) * (1 + 0.3 * np.cos(rng.uniform(0, 4) * x)) * np.exp(1j * rng.uniform(-3, 3) * x)
    v = a2 * np.exp(-(((x - rng.uniform(-3, 3)) / w2) ** 2)) * (1 + 0.5 * np.sin(rng.uniform(0, 4) * x))
    return ComplexField(grid, u), RealField(grid, v)


@criterion(8, "Gagliardo-Nirenberg constant one")
def test_c08_gagliardo_nirenberg(record_property):
    grid = SpectralGrid(1024, 32 * math.pi)
    worst = {"gn_u4": 0.0, "gn_v3": 0.0, "gn_uinf": 0.0}
    for seed in range(1000):
        u, v = _boundary_decaying(grid, np.random.default_rng(seed))
        rep = apriori_report(u, v, P)
        assert rep.decaying
        for tag in worst:
            worst[tag] = max(worst[tag], rep.get(tag).ratio)
    assert max(worst.values()) <= 1 + 1e-8, worst
    record_property("detail", " ".join(f"{k}={v:.3f}" for k, v in worst.items()))


# ---------------------------------------------------------------------------
# 9


@criterion(9, "estimate harness")
def test_c09_estimates(cli_runs, record_property):
    (a, _), secs = cli_runs["estimates"]
    doc = json.loads((a / "estimates.json").read_text())
    seen = {d["catalog_id"] for d in doc["reports"]}
    assert set(ACCEPTANCE_IDS) <= seen
    worst = 0.0
    for d in doc["reports"]:
        assert d["ensemble_size"] == 100
        assert d["epsilon"] == 0.01
        for g in d["growth"]:
            worst = max(worst, abs(g - 1.0))
    assert worst < 0.10
    assert secs[0] < 600
    record_property("detail", f"{len(doc['reports'])} entries, worst growth deviation {worst:.1e} in {secs[0]:.0f} s")


@criterion(9, "estimate harness")
@pytest.mark.parametrize(
    "cid, params, quote",
    [
        ("L11", EstimateParams(s=0.3, bprime=0.0), "b' ≥ max(1/4 − s/3, 0)"),
        ("L12", EstimateParams(s=0.3, bprime=0.2), "b' > max(1/6, 1/2 − s)"),
        ("EF", EstimateParams(gamma1=-0.4, gamma2=-0.4), "γ₁+γ₂ > −3/4"),
        ("EC", EstimateParams(separation=1.0), "|ξ₁| ≥ β|ξ₂|"),
        ("EH", EstimateParams(b=0.4), "b > 1/2"),
    ],
)
def test_c09_gate_messages(cid, params, quote):
    with pytest.raises(ConfigurationError) as ei:
        check_gates(cid, params)
    assert quote in str(ei.value)


# ---------------------------------------------------------------------------
# 10


@criterion(10, "reproducibility")
@pytest.mark.parametrize("name", list(RUNS))
def test_c10_byte_identical(cli_runs, name):
    (a, b), _ = cli_runs[name]
    files = sorted(p.name for p in a.iterdir() if p.suffix in (".csv", ".json") and p.name != "manifest.json")
    assert files and files == sorted(p.name for p in b.iterdir() if p.name != "manifest.json")
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    assert ma["files"] == mb["files"]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
