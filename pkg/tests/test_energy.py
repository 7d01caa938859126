import numpy as np
import pytest

from toruslab import energy as en
from toruslab import evolution as ev
from toruslab import spectral as sp

BO = ev.BENJAMIN_ONO
NLS = ev.SCHROEDINGER


@pytest.fixture
def sym():
    return en.DyadicSymbol.from_exponent(0.3)


def rand_field(m=64, band=20, real=True, amp=0.4, seed=0):
    rng = np.random.default_rng(seed)
    g = sp.TorusGeometry(1.0, m)
    return sp.random_field(g, rng, band=band, real=real) * amp


# ---------------------------------------------------------------------------
# envelopes


def test_envelope_single_block():
    g = sp.TorusGeometry(1.0, 256)
    coeffs = np.zeros(256, dtype=complex)
    for m in (9, 10, 12, -9, -10, -12):
        coeffs[m] = 1.0
    u0 = sp.SpectralField(g, coeffs, real=True)
    s, eps = 0.5, 0.2
    env = en.build_envelope(u0, s, eps)
    n0 = 3  # data concentrated in block 3
    gamma = 4.0 ** (n0 * s) * sp.lp_project(u0, n0).l2_norm() ** 2 / sp.sobolev_norm(u0, s) ** 2
    n = np.arange(len(env))
    expected = gamma * 2.0 ** (-(eps / 2.0) * np.abs(n - n0))
    assert np.max(np.abs(env.beta - expected)) < 1e-14
    # geometric-series bound on the recorded sum
    assert env.total <= gamma * (1.0 + 2.0 / (1.0 - 2.0 ** (-eps / 2.0))) + 1e-12


def test_envelope_axioms_random():
    rng = np.random.default_rng(1)
    g = sp.TorusGeometry(1.0, 256)
    for i in range(25):
        u0 = sp.random_field(g, rng, band=100, real=True, decay=rng.uniform(0, 2))
        env = en.build_envelope(u0, 0.3, 0.1)
        dom, total, lip = en.envelope_axioms(env, u0)
        assert dom <= 1e-12
        assert lip <= 1e-12
        assert np.isfinite(total)


def test_envelope_rejects_zero():
    g = sp.TorusGeometry(1.0, 64)
    z = sp.SpectralField(g, np.zeros(64), real=True)
    with pytest.raises(ValueError):
        en.build_envelope(z, 0.3, 0.1)


# ---------------------------------------------------------------------------
# symbols


def test_symbol_class_checks(sym):
    rng = np.random.default_rng(2)
    assert en.check_slowly_varying(sym, rng, 500.0) < 3.0
    c1, c2 = en.check_derivative_bounds(sym, rng, 500.0)
    assert c1 < 5.0 and c2 < 10.0
    assert en.check_growth_window(sym, 500.0) <= 1e-9


def test_build_symbol_from_envelope():
    u0 = rand_field(m=256, band=100, seed=3)
    s, eps = 0.3, 0.1
    env = en.build_envelope(u0, s, eps)
    kmax = len(env) - 1
    rng = np.random.default_rng(4)
    for k0 in (0, 2, kmax):
        symb = en.build_symbol(env, k0, s, eps)
        # membership: slowly varying, derivative bounds, windowed growth
        assert en.check_slowly_varying(symb, rng, 100.0) < 6.0
        c1, c2 = en.check_derivative_bounds(symb, rng, 100.0)
        assert c1 < 10.0 and c2 < 60.0
        assert en.check_growth_window(symb, 100.0) <= 1e-9
        # the max attains the second branch at k = k0
        lower = 4.0 ** (k0 * s) / env.beta[k0]
        assert symb(2.0**k0) >= lower / 4.0
    # flat envelope: symbol reduces to the plain bracket power
    flat = en.EnvelopeSequence(np.ones(kmax + 1), s, eps)
    symb = en.build_symbol(flat, 3, s, eps)
    xi = np.array([1.0, 4.0, 17.0, 60.0])
    ratio = symb(xi) / (1.0 + xi**2) ** s
    assert np.all(ratio < 4.0) and np.all(ratio > 0.25)
    # weighted-data bound: sum_k a_k ||P_k u0||^2 <= C ||u0||_{H^s}^2, C
    # independent of k0
    hs2 = sp.sobolev_norm(u0, s) ** 2
    consts = []
    for k0 in range(kmax + 1):
        table = 4.0 ** (np.arange(kmax + 1) * s) * np.maximum(
            1.0, 2.0 ** (-eps * np.abs(np.arange(kmax + 1) - k0)) / env.beta[k0]
        )
        tot = sum(
            table[k] * sp.lp_project(u0, k).l2_norm() ** 2 for k in range(kmax + 1)
        )
        consts.append(tot / hs2)
    assert max(consts) < 3.0 / (1.0 - 2.0 ** (-eps / 2.0))


def test_envelope_with_zero_entry_rejected():
    env = en.EnvelopeSequence(np.array([1.0, 0.0, 1.0]), 0.3, 0.1)
    with pytest.raises(ValueError):
        en.build_symbol(env, 0, 0.3, 0.1)


# ---------------------------------------------------------------------------
# multiplier


def test_q_examples(sym):
    assert abs(en.q_smooth(sym, np.array([1.0]), np.array([1.0]))[0] - sym(1.0)) < 1e-14
    # removable singularity: q(x, -x) -> g'(x)
    val = en.q_smooth(sym, np.array([3.0]), np.array([-3.0 + 1e-9]))[0]
    assert abs(val - sym.g_prime(3.0)) < 1e-6


def test_b4_flat_symbol_vanishes():
    sym0 = en.DyadicSymbol.from_exponent(0.0)
    rng = np.random.default_rng(5)
    x1, x2, x3 = (rng.uniform(-20, 20, 500) for _ in range(3))
    x4 = -(x1 + x2 + x3)
    for law in (BO, NLS):
        assert np.max(np.abs(en.b4_multiplier(sym0, (x1, x2, x3, x4), law))) == 0.0


def test_b4_branch_agreement(sym):
    rng = np.random.default_rng(6)
    x1, x2, x3 = (rng.uniform(-30, 30, 4000) for _ in range(3))
    x4 = -(x1 + x2 + x3)
    for law in (BO, NLS):
        quot, ext = en.b4_branch_values(sym, (x1, x2, x3, x4), law)
        om = en.resonance_function(law, x1, x2, x3, x4)
        mu = np.maximum.reduce([np.abs(x) for x in (x1, x2, x3, x4)])
        off = np.abs(om) > en.RESONANCE_THETA * np.maximum(mu, 1.0) ** 2
        rel = np.abs(quot[off] - ext[off]) / np.abs(quot[off])
        assert np.max(rel) < 1e-10


def test_b4_size_bound_and_resonant_values(sym):
    rng = np.random.default_rng(7)
    x1, x2, x3 = (rng.uniform(-100, 100, 5000) for _ in range(3))
    x4 = -(x1 + x2 + x3)
    for law in (BO, NLS):
        b = en.b4_multiplier(sym, (x1, x2, x3, x4), law)
        mu = np.maximum.reduce([np.abs(x) for x in (x1, x2, x3, x4)])
        assert np.max(np.abs(b) * mu / sym(mu)) < 20.0
    # exactly resonant lattice tuples get finite extension values
    pairs = (np.array([3.0, 5.0, 2.0]), np.array([-3.0, -5.0, -2.0]),
             np.array([7.0, 5.0, 2.0]), np.array([-7.0, -5.0, -2.0]))
    for law in (BO, NLS):
        vals = en.b4_multiplier(sym, pairs, law)
        assert np.all(np.isfinite(vals))


def test_b4_rejects_off_simplex(sym):
    with pytest.raises(ValueError):
        en.b4_multiplier(sym, (np.array([1.0]), np.array([1.0]),
                               np.array([1.0]), np.array([1.0])), BO)


def test_b4_derivative_bounds_on_simplex(sym):
    """Finite differences along zero-sum directions respect the dyadic
    scaling of the extension bounds (constant recorded)."""
    rng = np.random.default_rng(8)
    worst = 0.0
    for (sa, sb, smu) in [(1, 2, 5), (2, 3, 6), (0, 4, 7)]:
        n = 400
        x1 = rng.uniform(2.0**sa, 2.0 ** (sa + 1), n) * rng.choice([-1, 1], n)
        x2 = rng.uniform(2.0**sb, 2.0 ** (sb + 1), n) * rng.choice([-1, 1], n)
        x3 = rng.uniform(2.0**smu, 2.0 ** (smu + 1), n)
        x4 = -(x1 + x2 + x3)
        mu = np.maximum.reduce([np.abs(x) for x in (x1, x2, x3, x4)])
        keep = np.abs(x4) >= 2.0**smu / 2.0
        x1, x2, x3, x4, mu = (a[keep] for a in (x1, x2, x3, x4, mu))
        h = 1e-4 * 2.0**sa
        up = en.b4_multiplier(sym, (x1 + h, x2 - h, x3, x4), BO)
        dn = en.b4_multiplier(sym, (x1 - h, x2 + h, x3, x4), BO)
        deriv = np.abs(up - dn) / (2 * h)
        scale = sym(mu) / mu / 2.0**sa
        worst = max(worst, float(np.max(deriv / scale)))
    assert worst < 50.0


# ---------------------------------------------------------------------------
# energies and remainder forms


def test_grid_simplex_counts():
    simplex = en.GridSimplex(4, 3, 1.0)
    brute = 0
    rng = range(-3, 4)
    for a in rng:
        for b in rng:
            for c in rng:
                if abs(a + b + c) <= 3:
                    brute += 1
    assert simplex.count() == brute
    chunked = sum(len(m2) for _, m2, _, _ in simplex.chunks())
    assert chunked == brute


def test_e0_examples(sym):
    u = rand_field(seed=9)
    sym1 = en.DyadicSymbol.from_exponent(0.0)
    assert abs(en.e0_energy(sym1, u, BO) - 2.0 * np.pi * ev.conserved_mass(u)) < 1e-12
    z = sp.SpectralField(u.geometry, np.zeros_like(u.coeffs), real=True)
    assert en.e0_energy(sym, z, BO) == 0.0
    # bracket-power symbol: comparable to the squared Sobolev norm
    e0 = en.e0_energy(sym, u, BO)
    hs2 = sp.sobolev_norm(u, 0.3) ** 2
    assert 0.2 * hs2 < e0 <= hs2 * 1.0001
    with pytest.raises(ValueError):
        en.e0_energy(sym, rand_field(real=False, seed=10), BO)


def test_r4_identity_both_laws(sym):
    for seed in range(4):
        u = rand_field(seed=20 + seed, band=18)
        for sigma in (1, -1):
            r4 = en.r4_form(sym, u, BO, sigma)
            d0 = en.e0_time_derivative(sym, u, BO, sigma)
            assert abs(r4 - d0) <= 1e-10 * max(abs(d0), 1e-14)
        uc = rand_field(seed=30 + seed, band=18, real=False)
        r4 = en.r4_form(sym, uc, NLS, 1)
        d0 = en.e0_time_derivative(sym, uc, NLS, 1)
        assert abs(r4 - d0) <= 1e-10 * abs(d0)


def test_r4_single_mode_vanishes(sym):
    g = sp.TorusGeometry(1.0, 32)
    coeffs = np.zeros(32, dtype=complex)
    coeffs[5] = 1.0
    coeffs[-5] = 1.0
    u = sp.SpectralField(g, coeffs, real=True)
    assert abs(en.r4_form(sym, u, BO, 1)) < 1e-16


def test_e1_homogeneity_and_boundary(sym):
    u = rand_field(seed=11, band=12, amp=0.2)
    e1 = en.e1_correction(sym, u, BO)
    e1_scaled = en.e1_correction(sym, u * 2.0, BO)
    assert abs(e1_scaled - 16.0 * e1) < 1e-12 * abs(e1_scaled)
    sym1 = en.DyadicSymbol.from_exponent(0.0)
    assert en.e1_correction(sym1, u, BO) == 0.0
    ratio = abs(e1) / (u.l2_norm() ** 2 * en.e0_energy(sym, u, BO))
    assert ratio < 10.0


def test_r6_contracted_vs_enumerated(sym):
    rng = np.random.default_rng(12)
    for m in (8, 12, 16):
        from toruslab.bumps import next_pow2

        g = sp.TorusGeometry(1.0, max(16, next_pow2(m)))
        band = max(2, m // 3)
        ur = sp.random_field(g, rng, band=band, real=True) * 0.7
        c = en.r6_form(sym, ur, BO)
        e = en.r6_enumerated(sym, ur, BO)
        assert abs(c - e) <= 1e-10 * max(abs(e), 1e-14)
        uc = sp.random_field(g, rng, band=band, real=False) * 0.7
        c = en.r6_form(sym, uc, NLS)
        e = en.r6_enumerated(sym, uc, NLS)
        assert abs(c - e) <= 1e-10 * max(abs(e), 1e-14)


def test_r6_flat_symbol_and_homogeneity(sym):
    u = rand_field(seed=13, band=8, m=32, amp=0.5)
    sym1 = en.DyadicSymbol.from_exponent(0.0)
    assert en.r6_form(sym1, u, BO) == 0.0
    a = en.r6_form(sym, u, BO)
    b = en.r6_form(sym, u * 2.0, BO)
    assert abs(b - 64.0 * a) < 1e-10 * abs(b)


def test_cancellation_along_flow(sym):
    rng = np.random.default_rng(14)
    g = sp.TorusGeometry(1.0, 32)
    u0 = sp.random_field(g, rng, band=10, real=True, decay=2.0) * 0.4
    prob = ev.FlowProblem(BO, +1, u0)
    mids4, mids6 = [], []
    for nsnap in (11, 21, 41):
        traj = ev.evolve(prob, 0.2, dt=(0.2 / (nsnap - 1)) / 10.0, n_snapshots=nsnap)
        rep = en.cancellation_check(traj, sym, band=ev.dealias_band(g))
        mids4.append(rep["residual_r4_mid"])
        mids6.append(rep["residual_r6_mid"])
    for mids in (mids4, mids6):
        orders = [np.log2(mids[i] / mids[i + 1]) for i in range(2)]
        assert all(abs(o - 4.0) <= 1.0 for o in orders)


def test_cancellation_free_flow(sym):
    u = rand_field(seed=15, band=10, m=32)
    e0a = en.e0_energy(sym, u, BO)
    e0b = en.e0_energy(sym, ev.free_evolve(u, 0.37, BO), BO)
    assert abs(e0a - e0b) < 1e-12 * e0a


def test_cancellation_check_rejects_short(sym):
    g = sp.TorusGeometry(1.0, 32)
    rng = np.random.default_rng(16)
    u0 = sp.random_field(g, rng, band=8, real=True) * 0.1
    prob = ev.FlowProblem(BO, +1, u0)
    traj = ev.evolve(prob, 0.01, n_snapshots=2)
    with pytest.raises(ValueError):
        en.cancellation_check(traj, sym)


def test_cancellation_flat_symbol_reduces_to_mass(sym):
    """With the flat symbol the corrected energy is proportional to the mass
    and both algebraic forms vanish, so residuals sit at integrator level."""
    rng = np.random.default_rng(17)
    g = sp.TorusGeometry(1.0, 32)
    u0 = sp.random_field(g, rng, band=10, real=True, decay=1.5) * 0.3
    prob = ev.FlowProblem(BO, +1, u0)
    traj = ev.evolve(prob, 0.1, dt=ev.default_dt(prob), n_snapshots=11)
    flat = en.DyadicSymbol.from_exponent(0.0)
    rep = en.cancellation_check(traj, flat, band=ev.dealias_band(g))
    e0 = en.e0_energy(flat, traj.field(0), BO)
    assert rep["scale_r4"] == 0.0 and rep["scale_r6"] == 0.0
    assert rep["residual_r4"] < 1e-9 * e0
    assert rep["residual_r6"] < 1e-9 * e0


def test_grid_simplex_d6_count():
    simplex = en.GridSimplex(6, 2, 1.0)
    rng = range(-2, 3)
    brute = sum(
        1
        for a in rng for b in rng for c in rng for d in rng for e in rng
        if abs(a + b + c + d + e) <= 2
    )
    assert simplex.count() == brute
