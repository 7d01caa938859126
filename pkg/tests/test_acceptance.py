"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances are pinned here and nowhere else.  Every criterion also carries a
wall-clock budget which is asserted (single-core desk scale).
"""

import time

import numpy as np
import pytest

from toruslab import bumps
from toruslab import energy as en
from toruslab import estimates as es
from toruslab import evolution as ev
from toruslab import runner as rn
from toruslab import spacetime as st
from toruslab import spectral as sp


def _announce(name, ok, detail):
    print(f"\n[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def test_criterion_01_spectral_exactness():
    t0 = time.time()
    rng = np.random.default_rng(101)
    worst_pl = worst_pa = 0.0
    per_lam = 34  # 3 lambdas x 34 > 100 fields
    for lam in (1.0, 2.0, 4.0):
        g = sp.TorusGeometry(lam, 256)
        for _ in range(per_lam):
            u = sp.random_field(g, rng, band=126)
            v = sp.random_field(g, rng, band=126)
            l2 = sp.lebesgue_norm(u.samples(), lam, 2)
            worst_pl = max(worst_pl, abs(l2 - u.l2_norm()) / u.l2_norm())
            dx = g.dx
            pair_x = dx * np.sum(u.samples() * np.conj(v.samples()))
            pair_xi = np.sum(u.coeffs * np.conj(v.coeffs)) / (2 * np.pi * lam)
            worst_pa = max(worst_pa, abs(pair_x - pair_xi) / abs(pair_xi))
    elapsed = time.time() - t0
    ok = worst_pl <= 1e-12 and worst_pa <= 1e-12 and elapsed < 5.0
    _announce(
        "1 spectral exactness",
        ok,
        f"plancherel {worst_pl:.2e}, parseval {worst_pa:.2e} (tol 1e-12), "
        f"{elapsed:.1f}s < 5s",
    )


def test_criterion_02_conservation():
    t0 = time.time()
    mdrift, edrift = rn.conservation_run(seed=7, m=256, s=0.3, size=0.05,
                                         t_final=1.0)
    o1, o2 = rn.convergence_order(seed=7)
    elapsed = time.time() - t0
    ok = (
        mdrift <= 1e-8
        and edrift <= 1e-6
        and abs(o1 - 4.0) <= 0.3
        and abs(o2 - 4.0) <= 0.3
        and elapsed < 120.0
    )
    _announce(
        "2 conservation",
        ok,
        f"mass drift {mdrift:.2e} <= 1e-8, energy drift {edrift:.2e} <= 1e-6, "
        f"orders {o1:.2f},{o2:.2f} in 4+-0.3, {elapsed:.0f}s < 120s",
    )


def test_criterion_03_symmetrization():
    t0 = time.time()
    rng = np.random.default_rng(103)
    g = sp.TorusGeometry(1.0, 64)
    env_seed = sp.random_field(g, rng, band=20, real=True)
    symbols = [en.DyadicSymbol.from_exponent(s) for s in (0.3, 0.5, 0.75, 1.0)]
    symbols.append(en.build_symbol(en.build_envelope(env_seed, 0.3, 0.1), 2, 0.3, 0.1))
    worst = 0.0
    for i in range(50):
        law = ev.BENJAMIN_ONO if i % 2 == 0 else ev.SCHROEDINGER
        sigma = 1 if i % 4 < 2 else -1
        u = sp.random_field(g, rng, band=20, real=law.odd) * 0.5
        symb = symbols[i % 5]
        r4 = en.r4_form(symb, u, law, sigma)
        d0 = en.e0_time_derivative(symb, u, law, sigma)
        worst = max(worst, abs(r4 - d0) / max(abs(d0), 1e-300))
    flat = en.DyadicSymbol.from_exponent(0.0)
    u = sp.random_field(g, rng, band=20, real=True)
    null = abs(en.r4_form(flat, u, ev.BENJAMIN_ONO, 1))
    elapsed = time.time() - t0
    ok = worst <= 1e-10 and null <= 1e-12 and elapsed < 60.0
    _announce(
        "3 symmetrization identity",
        ok,
        f"max rel discrepancy {worst:.2e} <= 1e-10 over 50 fields x 5 symbols, "
        f"flat-symbol form {null:.1e} <= 1e-12, {elapsed:.0f}s < 60s",
    )


def test_criterion_04_cancellation():
    t0 = time.time()
    rng = np.random.default_rng(104)
    sym = en.DyadicSymbol.from_exponent(0.3)
    g = sp.TorusGeometry(1.0, 32)
    u0 = sp.random_field(g, rng, band=10, real=True, decay=2.0) * 0.4
    prob = ev.FlowProblem(ev.BENJAMIN_ONO, +1, u0)
    mids6 = []
    for nsnap in (11, 21, 41):
        traj = ev.evolve(prob, 0.2, dt=(0.2 / (nsnap - 1)) / 10.0,
                         n_snapshots=nsnap)
        rep = en.cancellation_check(traj, sym, band=ev.dealias_band(g))
        mids6.append(rep["residual_r6_mid"])
    orders = [float(np.log2(mids6[i] / mids6[i + 1])) for i in range(2)]
    order_ok = all(abs(o - 4.0) <= 1.0 for o in orders)
    worst_enum = 0.0
    for m in (8, 12, 16):
        gs = sp.TorusGeometry(1.0, max(16, bumps.next_pow2(m)))
        band = max(2, m // 3)
        ur = sp.random_field(gs, rng, band=band, real=True) * 0.7
        worst_enum = max(
            worst_enum,
            abs(en.r6_form(sym, ur, ev.BENJAMIN_ONO)
                - en.r6_enumerated(sym, ur, ev.BENJAMIN_ONO))
            / max(abs(en.r6_enumerated(sym, ur, ev.BENJAMIN_ONO)), 1e-300),
        )
        uc = sp.random_field(gs, rng, band=band, real=False) * 0.7
        worst_enum = max(
            worst_enum,
            abs(en.r6_form(sym, uc, ev.SCHROEDINGER)
                - en.r6_enumerated(sym, uc, ev.SCHROEDINGER))
            / max(abs(en.r6_enumerated(sym, uc, ev.SCHROEDINGER)), 1e-300),
        )
    elapsed = time.time() - t0
    ok = order_ok and worst_enum <= 1e-10 and elapsed < 600.0
    _announce(
        "4 cancellation",
        ok,
        f"FD orders {orders[0]:.2f},{orders[1]:.2f} in 4+-1, sextic form "
        f"contracted vs enumerated {worst_enum:.2e} <= 1e-10 (M <= 16, both "
        f"flows), {elapsed:.0f}s < 600s",
    )


def test_criterion_05_multiplier_bounds():
    t0 = time.time()
    rng = np.random.default_rng(105)
    sym = en.DyadicSymbol.from_exponent(0.3)
    worst_c = worst_agree = worst_band = 0.0
    patterns = [(1, 1, 5), (1, 3, 5), (2, 4, 6), (3, 3, 3), (1, 5, 5),
                (0, 2, 7), (4, 5, 6), (2, 2, 8)]
    for law in (ev.BENJAMIN_ONO, ev.SCHROEDINGER):
        for (la, lb, lm) in patterns:
            n = 10000
            x1 = rng.uniform(2.0**la, 2.0 ** (la + 1), n) * rng.choice([-1, 1], n)
            x2 = rng.uniform(2.0**lb, 2.0 ** (lb + 1), n) * rng.choice([-1, 1], n)
            x3 = rng.uniform(2.0**lm, 2.0 ** (lm + 1), n) * rng.choice([-1, 1], n)
            x4 = -(x1 + x2 + x3)
            b4 = en.b4_multiplier(sym, (x1, x2, x3, x4), law)
            mu = np.maximum.reduce([np.abs(x) for x in (x1, x2, x3, x4)])
            worst_c = max(worst_c, float(np.max(np.abs(b4) * mu / sym(mu))))
            quot, ext = en.b4_branch_values(sym, (x1, x2, x3, x4), law)
            om = en.resonance_function(law, x1, x2, x3, x4)
            mu2 = np.maximum(mu, 1.0) ** 2
            rel = np.abs(quot - ext) / np.abs(quot)
            # the defining four-term sum is conditioned to ~|Omega|/mu^2 of
            # machine precision, so the tight agreement is asserted on the
            # well-conditioned region and a guard everywhere else
            off = np.abs(om) > 100.0 * en.RESONANCE_THETA * mu2
            band = (np.abs(om) > en.RESONANCE_THETA * mu2) & ~off
            worst_agree = max(worst_agree, float(np.max(rel[off])))
            if np.any(band):
                worst_band = max(worst_band, float(np.max(rel[band])))
    elapsed = time.time() - t0
    ok = (worst_c <= 20.0 and worst_agree <= 1e-10 and worst_band <= 1e-8
          and elapsed < 120.0)
    _announce(
        "5 multiplier bounds",
        ok,
        f"size constant {worst_c:.3f} <= 20 over {len(patterns)} patterns x "
        f"2 laws x 1e4 tuples, branch agreement {worst_agree:.2e} <= 1e-10 "
        f"off resonance ({worst_band:.1e} <= 1e-8 at the switching band), "
        f"{elapsed:.0f}s < 120s",
    )


def test_criterion_06_boundary_bound():
    t0 = time.time()
    rng = np.random.default_rng(106)
    sym = en.DyadicSymbol.from_exponent(0.3)
    law = ev.BENJAMIN_ONO
    # one continuum function family, evaluated at three truncations: the
    # spread measures discretization dependence, not sampling noise
    base = sp.TorusGeometry(1.0, 256)
    spread = 1.0
    consts = {64: 0.0, 128: 0.0, 256: 0.0}
    for _ in range(12):
        u_full = sp.random_field(base, rng, band=85, real=True, decay=1.5) * 0.2
        per_m = {}
        for m in (64, 128, 256):
            g = sp.TorusGeometry(1.0, m)
            ms = g.mvals[np.abs(g.mvals) <= min(85, m // 2 - 1)]
            tab = np.zeros(m, dtype=complex)
            tab[ms % m] = u_full.coeffs[ms % 256]
            u = sp.SpectralField(g, tab, real=True)
            per_m[m] = abs(en.e1_correction(sym, u, law)) / (
                u.l2_norm() ** 2 * en.e0_energy(sym, u, law)
            )
            consts[m] = max(consts[m], per_m[m])
        spread = max(spread, max(per_m.values()) / min(per_m.values()))
    g = sp.TorusGeometry(1.0, 64)
    u = sp.random_field(g, rng, band=5, real=True) * 0.2
    r1 = abs(en.e1_correction(sym, u, law)) / (
        u.l2_norm() ** 2 * en.e0_energy(sym, u, law)
    )
    u2 = u * 3.7
    r2 = abs(en.e1_correction(sym, u2, law)) / (
        u2.l2_norm() ** 2 * en.e0_energy(sym, u2, law)
    )
    amp_dev = abs(r1 - r2) / r1
    elapsed = time.time() - t0
    ok = spread <= 1.5 and amp_dev <= 1e-12 and elapsed < 300.0
    _announce(
        "6 boundary bound",
        ok,
        "constants " + ", ".join(f"M={m}: {c:.4f}" for m, c in consts.items())
        + f", spread {spread:.3f} within +-20%, amplitude deviation "
        f"{amp_dev:.1e} <= 1e-12, {elapsed:.0f}s < 300s",
    )


def test_criterion_07_envelope_axioms():
    t0 = time.time()
    rng = np.random.default_rng(107)
    g = sp.TorusGeometry(1.0, 256)
    worst_dom = worst_lip = -np.inf
    max_sum = 0.0
    for _ in range(100):
        u0 = sp.random_field(g, rng, band=100, real=True,
                             decay=rng.uniform(0, 2))
        env = en.build_envelope(u0, 0.3, 0.1)
        dom, total, lip = en.envelope_axioms(env, u0)
        worst_dom = max(worst_dom, dom)
        worst_lip = max(worst_lip, lip)
        max_sum = max(max_sum, total)
    elapsed = time.time() - t0
    ok = (worst_dom <= 1e-12 and worst_lip <= 1e-12 and np.isfinite(max_sum)
          and elapsed < 10.0)
    _announce(
        "7 envelope axioms",
        ok,
        f"domination violation {worst_dom:.1e} <= 1e-12, log-Lipschitz excess "
        f"{worst_lip:.1e} <= 1e-12, recorded sums <= {max_sum:.2f} over 100 "
        f"data, {elapsed:.1f}s < 10s",
    )


def test_criterion_08_estimate_slopes():
    t0 = time.time()
    count = 64
    # the bilinear hypothesis needs n - k >= 4, so the sweep starts at n = 5
    bil = es.bilinear_ratio([5, 6, 7, 8], 1, seed=108, count=count)
    mx = es.maximal_ratio([3, 4, 5, 6, 7, 8], seed=108, count=count,
                          slope_tol=0.15)
    sm = es.smoothing_ratio([3, 4, 5, 6, 7, 8], seed=108, count=count)
    sm_log = es.smoothing_ratio([3, 4, 5, 6, 7, 8], seed=108, count=16,
                                log_normalized=True)
    l4 = es.l4_modulation_ratio([0, 1, 2, 3, 4, 5, 6], seed=108, count=count)
    ns = [4, 8, 16, 32, 64, 128, 256]
    gridvals = [es.smoothing_grid_operator_norm(n) for n in ns]
    grid_ratio = max(v / np.log2(n) for v, n in zip(gridvals, ns))
    elapsed = time.time() - t0
    checks = {
        "bilinear slope (raw -0.5 +- 0.15)": abs(bil.slope) <= 0.15,
        "maximal slope (raw +0.25 +- 0.15)": abs(mx.slope) <= 0.15,
        "smoothing slope (sharp scale, 0 +- 0.1)": abs(sm.slope) <= 0.1,
        "smoothing no growth (log scale)": sm_log.slope <= 0.1,
        "l4 modulation slope (0 +- 0.1)": abs(l4.slope) <= 0.1,
        "grid operator norm/log2(N) <= 5": grid_ratio <= 5.0,
        "runtime < 900s": elapsed < 900.0,
    }
    ok = all(checks.values())
    _announce(
        "8 estimate slopes",
        ok,
        f"bilinear {bil.slope:+.3f}, maximal {mx.slope:+.3f}, smoothing "
        f"{sm.slope:+.3f} (log {sm_log.slope:+.3f}), l4 {l4.slope:+.3f}, "
        f"gridop {grid_ratio:.2f}, {elapsed:.0f}s; "
        + "; ".join(k for k, v in checks.items() if not v),
    )


def test_criterion_09_trilinear_classes():
    t0 = time.time()
    lines = []
    ok = True
    for eq, law, conj in (("mbo", ev.BENJAMIN_ONO, False),
                          ("dnls", ev.SCHROEDINGER, True)):
        for cls, recipe in rn.TRILINEAR_SWEEPS.items():
            rep = es.trilinear_sweep(cls, recipe["sweep"], law=law,
                                     conjugate_middle=conj, seed=109, count=4,
                                     include_tuned=recipe["tuned"])
            center, tol = recipe["window"]
            good = abs(rep.slope - center) <= tol
            ok = ok and good
            lines.append(f"{eq}/{cls}: {rep.slope:+.3f}"
                         + ("" if good else " OUT"))
    elapsed = time.time() - t0
    ok = ok and elapsed < 1200.0
    _announce(
        "9 trilinear classes",
        ok,
        "; ".join(lines) + f"; {elapsed:.0f}s < 1200s",
    )


def test_criterion_10_apriori_tracking():
    t0 = time.time()
    ratios, consts = rn.apriori_run(seed=110, s=0.3, size=0.05, m=256,
                                    t_final=1.0, count=10)
    elapsed = time.time() - t0
    rmax, cmax = max(ratios), max(consts)
    ok = rmax <= 4.0 and np.isfinite(cmax) and cmax <= 50.0 and elapsed < 600.0
    _announce(
        "10 a priori tracking",
        ok,
        f"max Sobolev ratio {rmax:.4f} <= 4 over 10 samples, energy "
        f"propagation constant {cmax:.2f} <= 50, {elapsed:.0f}s < 600s",
    )
