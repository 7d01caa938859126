"""Generalized energies, correction multipliers, and cancellation checks.

For a symbol a and the quadratic energy
    E0 = lam^-1 sum_xi a(xi) uhat(xi) uhat(-xi)
(conjugate pairing for the complex flow), the time derivative along the flow
is a quartic lattice form R4 on the zero-sum set Gamma4.  A quartic
correction E1 with multiplier b4 cancels R4, leaving a sextic remainder R6.

All prefactors below are the honest ones for the discrete flows of
``evolution`` (Fourier convention fhat = integral f exp(-i xi x) dx), so the
identities d/dt E0 = R4 and d/dt (E0 + sigma E1) = R6 hold along integrated
trajectories up to time-discretization error alone.  With Q = sum xi_i a(xi_i)
and Omega the resonance function of the law:

* real flow (omega odd, all slots unconjugated, data real):
    R4 = -sigma/6 * (2 pi)^-2 * lam^-3 * sum_Gamma4 i Q prod uhat
    b4 = (2 pi)^-2 / 6 * Q / Omega,   Omega = sum omega(xi_i)
    R6 = 4/3 * lam^-3 * sum_Gamma4 i b4 xi4 uhat uhat uhat what,
         what = coefficients of u^3 restricted to the flow band
* derivative Schroedinger flow (slots alternate u, conj u):
    R4 = -sigma/2 * (2 pi)^-2 * lam^-3 * sum i Q u1 v2 u3 v4,
         v(xi) = conj(uhat(-xi))
    b4 = -(2 pi)^-2 / 2 * Q / Omega,  Omega = xi1^2 - xi2^2 + xi3^2 - xi4^2
    R6 = 2 lam^-3 * sum i b4 (xi1 F(xi1) v2 u3 v4 + xi2 G(xi2) u1 u3 v4),
         F = coefficients of |u|^2 u, G(xi) = conj(F(-xi))

b4 is sigma-independent (the correction enters as sigma * E1; sigma^2 = 1
drops out of R6).  Q vanishes wherever Omega vanishes on the zero-sum set,
and the quotient extends smoothly across the resonance set; the extension is
evaluated through exact divided-difference factorizations of Q and Omega, so
the quotient branch and the decomposition branch agree to rounding wherever
both are defined.
"""

from dataclasses import dataclass

import numpy as np

from .evolution import dealias_band
from .spectral import SpectralField, block_indicator, lp_project, max_block, sobolev_norm

TWO_PI_SQ_INV = 1.0 / (2.0 * np.pi) ** 2
RESONANCE_THETA = 1e-6   # quotient branch iff |Omega| > theta * mu^2
Q_CONFLUENT = 1e-5       # q(x, y) switches to the derivative form below this
DEN_CONFLUENT = 1e-8     # deepest-degeneracy switch in the extension branch


# ---------------------------------------------------------------------------
# frequency envelopes


@dataclass(frozen=True)
class EnvelopeSequence:
    """Summable log-Lipschitz majorant of the dyadic energy profile."""

    beta: np.ndarray
    s: float
    eps: float

    @property
    def total(self):
        return float(np.sum(self.beta))

    def __len__(self):
        return len(self.beta)


def build_envelope(u0, s, eps):
    """Envelope beta_n = max_m gamma_m 2^(-eps/2 |n-m|) from the block masses
    gamma_m = 2^(2ms) ||P_m u0||^2 / ||u0||_{H^s}^2."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    hs = sobolev_norm(u0, s)
    if hs == 0.0:
        raise ValueError("zero data has no envelope")
    kmax = max_block(u0.geometry)
    gamma = np.empty(kmax + 1)
    for m in range(kmax + 1):
        gamma[m] = 4.0 ** (m * s) * lp_project(u0, m).l2_norm() ** 2 / hs**2
    n = np.arange(kmax + 1)
    decay = 2.0 ** (-(eps / 2.0) * np.abs(n[:, None] - n[None, :]))
    beta = np.max(gamma[None, :] * decay, axis=1)
    return EnvelopeSequence(beta, s, eps)


def envelope_axioms(env, u0):
    """Measured axiom data: (max violation of the domination axiom,
    recorded sum, max log-Lipschitz excess)."""
    hs2 = sobolev_norm(u0, env.s) ** 2
    kmax = len(env) - 1
    dom = -np.inf
    for m in range(kmax + 1):
        lhs = 4.0 ** (m * env.s) * lp_project(u0, m).l2_norm() ** 2
        dom = max(dom, lhs - env.beta[m] * hs2)
    lb = np.log2(env.beta)
    n = np.arange(kmax + 1)
    lip = np.abs(lb[:, None] - lb[None, :]) - (env.eps / 2.0) * np.abs(
        n[:, None] - n[None, :]
    )
    return dom, env.total, float(np.max(lip))


# ---------------------------------------------------------------------------
# symbol class


@dataclass(frozen=True)
class DyadicSymbol:
    """Slowly varying even weight of approximate growth |xi|^(2s).

    Either an exact bracket power <xi>^(2s) or a table of dyadic block
    values joined by a C^inf monotone step in log2 <xi> (flat at the nodes,
    so the interpolant is globally smooth).
    """

    s: float
    eps: float
    table: np.ndarray = None   # log2 of block values, index = block exponent
    _kind: str = "power"

    @classmethod
    def from_exponent(cls, s, eps=0.05):
        return cls(s=s, eps=eps, table=None, _kind="power")

    @classmethod
    def from_blocks(cls, log2_values, s, eps):
        t = np.asarray(log2_values, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("need at least two block values")
        if not np.all(np.isfinite(t)):
            raise ValueError("block value table must be finite (no zero entries)")
        return cls(s=s, eps=eps, table=t, _kind="blocks")

    def _loglog(self, xi):
        """A(t), A'(t) at t = log2 <xi>, by smoothed linear interpolation."""
        from .bumps import smoothstep, smoothstep_prime

        tab = self.table
        kmax = tab.size - 1
        t = 0.5 * np.log2(1.0 + np.asarray(xi, dtype=float) ** 2)
        end_slope = tab[-1] - tab[-2]
        cell = np.clip(np.floor(t).astype(int), 0, kmax - 1)
        frac = t - cell
        inside = t < kmax
        sstep = smoothstep(np.where(inside, frac, 0.0))
        sprime = smoothstep_prime(np.where(inside, frac, 0.0))
        dtab = tab[np.minimum(cell + 1, kmax)] - tab[cell]
        a_in = tab[cell] + dtab * sstep
        ap_in = dtab * sprime
        a_out = tab[-1] + end_slope * (t - kmax)
        val = np.where(inside, a_in, a_out)
        der = np.where(inside, ap_in, end_slope)
        return val, der, t

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self._kind == "power":
            return (1.0 + xi**2) ** self.s
        val, _, _ = self._loglog(xi)
        return 2.0**val

    def deriv(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self._kind == "power":
            return 2.0 * self.s * xi * (1.0 + xi**2) ** (self.s - 1.0)
        val, der, _ = self._loglog(xi)
        return 2.0**val * der * xi / (1.0 + xi**2)

    def g(self, xi):
        """g(xi) = xi * a(xi), the odd function driving the multiplier."""
        xi = np.asarray(xi, dtype=float)
        return xi * self(xi)

    def g_prime(self, xi):
        return self(xi) + np.asarray(xi, dtype=float) * self.deriv(xi)

    def g_double_prime(self, xi, h_rel=1e-4):
        xi = np.asarray(xi, dtype=float)
        h = h_rel * np.sqrt(1.0 + xi**2)
        return (self.g_prime(xi + h) - self.g_prime(xi - h)) / (2.0 * h)


def build_symbol(envelope, k0, s, eps):
    """Block table 2^(2ks) * max(1, beta_k0^-1 2^(-eps |k - k0|)), smoothed."""
    kmax = len(envelope) - 1
    if not 0 <= k0 <= kmax:
        raise ValueError("k0 outside the block range")
    if np.any(envelope.beta <= 0.0):
        raise ValueError("envelope has a zero entry")
    k = np.arange(kmax + 1)
    bump = np.maximum(1.0, 2.0 ** (-eps * np.abs(k - k0)) / envelope.beta[k0])
    log2_vals = 2.0 * s * k + np.log2(bump)
    return DyadicSymbol.from_blocks(log2_vals, s, eps)


def symbol_block_table(sym, kmax):
    """Representative block values a(2^k), k = 0..kmax."""
    return sym(2.0 ** np.arange(kmax + 1))


def check_slowly_varying(sym, rng, xi_max, n=512):
    """Max ratio a(xi)/a(xi') over comparable pairs xi' in [xi/2, 2 xi]."""
    xi = np.exp(rng.uniform(0.0, np.log(xi_max), n))
    fac = 2.0 ** rng.uniform(-1.0, 1.0, n)
    r = sym(xi) / sym(xi * fac)
    return float(np.max(np.maximum(r, 1.0 / r)))


def check_derivative_bounds(sym, rng, xi_max, n=512):
    """Finite-difference constants C_alpha with
    |d^alpha a| <= C a(xi) <xi>^-alpha, alpha = 1, 2."""
    xi = np.exp(rng.uniform(0.0, np.log(xi_max), n))
    br = np.sqrt(1.0 + xi**2)
    h = 1e-3 * br
    d1 = (sym(xi + h) - sym(xi - h)) / (2.0 * h)
    d2 = (sym(xi + h) - 2.0 * sym(xi) + sym(xi - h)) / h**2
    a = sym(xi)
    c1 = float(np.max(np.abs(d1) * br / a))
    c2 = float(np.max(np.abs(d2) * br**2 / a))
    return c1, c2


def check_growth_window(sym, xi_max, n=256):
    """Max deviation of log a / log(1 + xi^2) from [s - eps, s + eps] on
    |xi| >= 4, net of the table's own multiplicative headroom."""
    xi = np.exp(np.linspace(np.log(4.0), np.log(xi_max), n))
    ratio = np.log(sym(xi)) / np.log(1.0 + xi**2)
    headroom = 0.0
    if sym._kind == "blocks":
        k = np.arange(sym.table.size)
        headroom = float(np.max(np.abs(sym.table - 2.0 * sym.s * k)))
    allowance = sym.eps + headroom / np.log2(1.0 + xi**2)
    over = np.maximum(ratio - (sym.s + allowance), (sym.s - allowance) - ratio)
    return float(np.max(over))


# ---------------------------------------------------------------------------
# correction multiplier


def q_smooth(sym, x, y):
    """q(x, y) = (x a(x) + y a(y)) / (x + y): the divided difference of
    g(x) = x a(x) at nodes x, -y; confluent limit g'((x - y)/2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = x + y
    scale = np.maximum(np.maximum(np.abs(x), np.abs(y)), 1.0)
    direct = np.abs(s) > Q_CONFLUENT * scale
    out = np.empty(np.broadcast_shapes(x.shape, y.shape), dtype=float)
    xs, ys = np.broadcast_arrays(x, y)
    d = direct
    out[d] = (sym.g(xs[d]) + sym.g(ys[d])) / (xs[d] + ys[d])
    c = ~direct
    if np.any(c):
        out[c] = sym.g_prime(0.5 * (xs[c] - ys[c]))
    return out


def _omega_dd(law, x, y):
    """Divided difference (omega(x) - omega(y)) / (x - y), confluent limit
    omega'((x + y)/2); requires an odd dispersion relation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    scale = np.maximum(np.maximum(np.abs(x), np.abs(y)), 1.0)
    direct = np.abs(d) > DEN_CONFLUENT * scale
    out = np.empty(np.broadcast_shapes(x.shape, y.shape), dtype=float)
    xs, ys = np.broadcast_arrays(x, y)
    out[direct] = (law.omega(xs[direct]) - law.omega(ys[direct])) / (
        xs[direct] - ys[direct]
    )
    c = ~direct
    if np.any(c):
        mid = 0.5 * (xs[c] + ys[c])
        out[c] = -2.0 * np.abs(mid)
    return out


def resonance_function(law, xi1, xi2, xi3, xi4):
    """Omega on the zero-sum set: sum of omegas for the odd law, the
    slot-signed quadratic form for the Schroedinger law."""
    if law.odd:
        return law.omega(xi1) + law.omega(xi2) + law.omega(xi3) + law.omega(xi4)
    return xi1**2 - xi2**2 + xi3**2 - xi4**2


def _ratio_extension_odd(sym, law, z1, z2, z3, z4):
    """Q/Omega through exact factorizations for an odd law: with s = z1 + z2,
    Q = s [q(z1,z2) - q(z3,z4)] and Omega = s [dd(z1,-z2) - dd(z3,-z4)]."""
    num = q_smooth(sym, z1, z2) - q_smooth(sym, z3, z4)
    den = _omega_dd(law, z1, -z2) - _omega_dd(law, z3, -z4)
    scale = np.maximum.reduce([np.abs(z1), np.abs(z2), np.abs(z3), np.abs(z4)])
    scale = np.maximum(scale, 1.0)
    deep = np.abs(den) <= DEN_CONFLUENT * scale
    out = np.empty_like(num)
    ok = ~deep
    out[ok] = num[ok] / den[ok]
    if np.any(deep):
        mu = 0.5 * (np.abs(z1) + np.abs(z3))
        out[deep] = -0.5 * sym.g_double_prime(mu[deep])
    return out


def _ratio_extension_schroedinger(sym, z):
    """Q/Omega for the slot-signed quadratic law: Omega = -2 s12 s23 with
    s12 = z1 + z2, s23 = z2 + z3; divide by the larger factor."""
    z1, z2, z3, z4 = z
    s12 = z1 + z2
    s23 = z2 + z3
    scale = np.maximum.reduce([np.abs(z1), np.abs(z2), np.abs(z3), np.abs(z4)])
    scale = np.maximum(scale, 1.0)
    out = np.empty_like(s12)
    use23 = np.abs(s23) >= np.abs(s12)
    # Q = s12 [q(z1,z2) - q(z3,z4)]  ->  Q/Omega = -(qA - qB) / (2 s23)
    m = use23 & (np.abs(s23) > DEN_CONFLUENT * scale)
    if np.any(m):
        out[m] = -(
            q_smooth(sym, z1[m], z2[m]) - q_smooth(sym, z3[m], z4[m])
        ) / (2.0 * s23[m])
    # Q = s23 [q(z2,z3) - q(z1,z4)]  ->  Q/Omega = -(qA - qB) / (2 s12)
    m2 = (~use23) & (np.abs(s12) > DEN_CONFLUENT * scale)
    if np.any(m2):
        out[m2] = -(
            q_smooth(sym, z2[m2], z3[m2]) - q_smooth(sym, z1[m2], z4[m2])
        ) / (2.0 * s12[m2])
    deep = (np.abs(s12) <= DEN_CONFLUENT * scale) & (
        np.abs(s23) <= DEN_CONFLUENT * scale
    )
    if np.any(deep):
        mu = 0.25 * (np.abs(z1) + np.abs(z2) + np.abs(z3) + np.abs(z4))
        out[deep] = 0.5 * sym.g_double_prime(mu[deep])
    return out


def _best_pairing(xi1, xi2, xi3, xi4):
    """Relabel each tuple so the near-cancelling pair sits in slots (1, 2)."""
    s12 = np.abs(xi1 + xi2)
    s13 = np.abs(xi1 + xi3)
    s14 = np.abs(xi1 + xi4)
    choice = np.argmin(np.stack([s12, s13, s14]), axis=0)
    z1 = xi1
    z2 = np.choose(choice, [xi2, xi3, xi4])
    z3 = np.choose(choice, [xi3, xi2, xi2])
    z4 = np.choose(choice, [xi4, xi4, xi3])
    return z1, z2, z3, z4


def b4_multiplier(sym, xi, law, theta_res=RESONANCE_THETA):
    """Correction multiplier on the zero-sum set (+1-sign normalization).

    ``xi`` is a tuple of four equal-shape arrays summing to zero.  Off the
    resonance set (|Omega| > theta * mu^2) the defining quotient is returned;
    on and near it, the smooth extension through the divided-difference
    decompositions.  Both branches agree to rounding in the overlap.
    """
    xi1, xi2, xi3, xi4 = (np.asarray(x, dtype=float) for x in xi)
    shape = np.broadcast_shapes(xi1.shape, xi2.shape, xi3.shape, xi4.shape)
    xi1, xi2, xi3, xi4 = np.broadcast_arrays(xi1, xi2, xi3, xi4)
    mu = np.maximum.reduce([np.abs(xi1), np.abs(xi2), np.abs(xi3), np.abs(xi4)])
    if np.any(np.abs(xi1 + xi2 + xi3 + xi4) > 1e-9 * np.maximum(mu, 1.0)):
        raise ValueError("tuple is not on the zero-sum set")
    omega = resonance_function(law, xi1, xi2, xi3, xi4)
    quot = np.abs(omega) > theta_res * np.maximum(mu, 1.0) ** 2
    ratio = np.empty(shape, dtype=float)
    if np.any(quot):
        qq = (
            sym.g(xi1[quot])
            + sym.g(xi2[quot])
            + sym.g(xi3[quot])
            + sym.g(xi4[quot])
        )
        ratio[quot] = qq / omega[quot]
    near = ~quot
    if np.any(near):
        if law.odd:
            z = _best_pairing(xi1[near], xi2[near], xi3[near], xi4[near])
            ratio[near] = _ratio_extension_odd(sym, law, *z)
        else:
            z = (xi1[near], xi2[near], xi3[near], xi4[near])
            ratio[near] = _ratio_extension_schroedinger(sym, z)
    if not np.all(np.isfinite(ratio)):
        raise AssertionError("uncovered tuple in the multiplier dispatch")
    if law.odd:
        return (TWO_PI_SQ_INV / 6.0) * ratio
    return (-TWO_PI_SQ_INV / 2.0) * ratio


def b4_branch_values(sym, xi, law):
    """(quotient value, extension value) for cross-checking both formulas;
    the quotient entry is nan on the exact resonance set."""
    xi1, xi2, xi3, xi4 = (np.asarray(x, dtype=float) for x in xi)
    omega = resonance_function(law, xi1, xi2, xi3, xi4)
    qq = sym.g(xi1) + sym.g(xi2) + sym.g(xi3) + sym.g(xi4)
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = np.where(omega != 0.0, qq / omega, np.nan)
    if law.odd:
        z = _best_pairing(xi1, xi2, xi3, xi4)
        ext = _ratio_extension_odd(sym, law, *z)
        pref = TWO_PI_SQ_INV / 6.0
    else:
        ext = _ratio_extension_schroedinger(sym, (xi1, xi2, xi3, xi4))
        pref = -TWO_PI_SQ_INV / 2.0
    return pref * quot, pref * ext


# ---------------------------------------------------------------------------
# lattice simplex enumeration


@dataclass(frozen=True)
class GridSimplex:
    """Zero-sum lattice tuples xi_1 + ... + xi_d = 0 with |m_i| <= band,
    carrying the measure normalization lam^-(d-1)."""

    dimension: int
    band: int
    lam: float

    def __post_init__(self):
        if self.dimension not in (2, 4, 6):
            raise ValueError("dimension must be 2, 4 or 6")

    @property
    def weight(self):
        return self.lam ** (-(self.dimension - 1))

    def count(self):
        """Number of zero-sum tuples, by convolution power counting."""
        width = 2 * self.band + 1
        ind = np.ones(width)
        conv = ind.copy()
        for _ in range(self.dimension - 1):
            conv = np.convolve(conv, ind)
        mid = len(conv) // 2
        return int(round(conv[mid]))

    def chunks(self):
        """Yield (m1, M2, M3, M4) with m4 = -(m1+m2+m3) in band (d = 4)."""
        if self.dimension != 4:
            raise ValueError("chunked iteration is for d = 4")
        b = self.band
        rng = np.arange(-b, b + 1)
        m2, m3 = np.meshgrid(rng, rng, indexing="ij")
        m2 = m2.ravel()
        m3 = m3.ravel()
        for m1 in rng:
            m4 = -(m1 + m2 + m3)
            keep = np.abs(m4) <= b
            yield m1, m2[keep], m3[keep], m4[keep]


def _coeff_lookup(u, band):
    """Coefficient table c[m + band] for |m| <= band (zero beyond support)."""
    g = u.geometry
    mv = g.mvals
    tab = np.zeros(2 * band + 1, dtype=complex)
    sel = np.abs(mv) <= band
    tab[mv[sel] + band] = u.coeffs[sel]
    return tab


def _support_band(u):
    nz = np.abs(u.coeffs) > 0.0
    if not np.any(nz):
        return 1
    return int(np.max(np.abs(u.geometry.mvals[nz])))


def _check_energy_data(u, law):
    if law.odd and not u.real:
        raise ValueError("the real flow's energies require real data")


def e0_energy(sym, u, law):
    """Quadratic generalized energy lam^-1 sum a(xi) uhat(xi) uhat(-xi)
    (equivalently a-weighted |uhat|^2 in both slot conventions)."""
    _check_energy_data(u, law)
    a = sym(u.geometry.xi)
    return float(np.sum(a * np.abs(u.coeffs) ** 2) / u.lam)


def _gamma4_value(sym, u, law, multiplier, band=None, slots=None):
    """Chunked evaluation of lam^-3 sum_Gamma4 multiplier * prod slot values.

    multiplier(xi1, xi2, xi3, xi4) -> array; slots is a list of four
    coefficient tables over |m| <= band (default: four copies of uhat).
    """
    if band is None:
        band = max(_support_band(u), 1)
    tab = _coeff_lookup(u, band)
    if slots is None:
        slots = [tab, tab, tab, tab]
    lam = u.lam
    simplex = GridSimplex(4, band, lam)
    total = 0.0 + 0.0j
    for m1, m2, m3, m4 in simplex.chunks():
        c = slots[0][m1 + band] * slots[1][m2 + band] * slots[2][m3 + band] * (
            slots[3][m4 + band]
        )
        live = c != 0.0
        if not np.any(live):
            continue
        mult = multiplier(
            m1 / lam * np.ones(np.count_nonzero(live)),
            m2[live] / lam,
            m3[live] / lam,
            m4[live] / lam,
        )
        total += np.sum(mult * c[live])
    return simplex.weight * total


def _slots_for_law(u, law, band):
    tab = _coeff_lookup(u, band)
    if law.odd:
        return [tab, tab, tab, tab]
    bar = np.conj(tab[::-1])  # conj(uhat(-xi)) at slot m
    return [tab, bar, tab, bar]


def e1_correction(sym, u, law, band=None):
    """Quartic correction energy with the +1-normalized multiplier; the
    corrected quantity along the sign-sigma flow is E0 + sigma * E1."""
    _check_energy_data(u, law)
    if band is None:
        band = max(_support_band(u), 1)
    slots = _slots_for_law(u, law, band)
    val = _gamma4_value(
        sym,
        u,
        law,
        lambda *xi: b4_multiplier(sym, xi, law),
        band=band,
        slots=slots,
    )
    return float(val.real)


def r4_form(sym, u, law, sigma, band=None):
    """Symmetrized quartic form: the exact value of d/dt E0 along the flow."""
    _check_energy_data(u, law)
    if band is None:
        band = max(_support_band(u), 1)
    slots = _slots_for_law(u, law, band)

    def mult(x1, x2, x3, x4):
        return 1j * (sym.g(x1) + sym.g(x2) + sym.g(x3) + sym.g(x4))

    val = _gamma4_value(sym, u, law, mult, band=band, slots=slots)
    pref = -sigma * TWO_PI_SQ_INV / (6.0 if law.odd else 2.0)
    return float((pref * val).real)


def _cube_hat(u, conj_middle):
    """Exact coefficients of u^3 (or |u|^2 u) on a four-fold padded grid,
    returned as a lookup table over |m| <= 3 * support band."""
    g = u.geometry
    band = _support_band(u)
    npad = 4 * g.grid_size
    mv = g.mvals
    padded = np.zeros(npad, dtype=complex)
    padded[mv % npad] = u.coeffs
    uu = np.fft.ifft(padded) * npad / g.period
    cube = (uu * np.conj(uu) * uu) if conj_middle else uu**3
    chat = np.fft.fft(cube) * (g.period / npad)
    out_band = min(3 * band, npad // 2 - 1)
    m = np.arange(-out_band, out_band + 1)
    tab = chat[m % npad]
    return tab, out_band


def e0_time_derivative(sym, u, law, sigma, band=None):
    """Direct pairing d/dt E0 = 2 Re <a uhat, Nhat> under the lattice
    measure, with the flow's pseudospectral nonlinearity (independent
    evaluation path from the symmetrized form).

    The pairing localizes to the support of uhat, so truncating the
    nonlinearity to any band containing that support leaves the value
    unchanged; band=None uses the full cubic range.
    """
    _check_energy_data(u, law)
    g = u.geometry
    cube, cube_band = _cube_hat(u, conj_middle=not law.odd)
    if band is None:
        band = cube_band
    mv = g.mvals
    nhat = np.zeros(g.grid_size, dtype=complex)
    sel = np.abs(mv) <= min(band, cube_band)
    xi = g.xi
    factor = sigma * (1j * xi) / (3.0 if law.odd else 1.0)
    nhat[sel] = factor[sel] * cube[mv[sel] + cube_band]
    a = sym(xi)
    return float(2.0 * np.sum(a * (np.conj(u.coeffs) * nhat).real) / g.lam)


def r6_form(sym, u, law, sigma=1, band=None):
    """Sextic remainder: the exact value of d/dt (E0 + sigma E1) along the
    flow whose nonlinearity is truncated to ``band`` (default: the
    integrator's dealiased band).  Computed by contracting three slots
    through the exact cubic convolution."""
    _check_energy_data(u, law)
    g = u.geometry
    if band is None:
        band = dealias_band(g)
    data_band = max(_support_band(u), 1)
    cube, cube_band = _cube_hat(u, conj_middle=not law.odd)
    w_band = max(data_band, min(band, cube_band))
    wtab = np.zeros(2 * w_band + 1, dtype=complex)
    m = np.arange(-min(band, cube_band), min(band, cube_band) + 1)
    wtab[m + w_band] = cube[m + cube_band]
    utab = _coeff_lookup(u, w_band)

    def b4(*xi):
        return b4_multiplier(sym, xi, law)

    lam = u.lam
    if law.odd:

        def mult(x1, x2, x3, x4):
            return (4.0 / 3.0) * 1j * b4(x1, x2, x3, x4) * x4

        val = _gamma4_value(
            sym, u, law, mult, band=w_band, slots=[utab, utab, utab, wtab]
        )
        return float(val.real)
    bar = np.conj(utab[::-1])
    ftab = wtab
    gtab = np.conj(wtab[::-1])

    def mult1(x1, x2, x3, x4):
        return 2.0 * 1j * b4(x1, x2, x3, x4) * x1

    def mult2(x1, x2, x3, x4):
        return 2.0 * 1j * b4(x1, x2, x3, x4) * x2

    val1 = _gamma4_value(
        sym, u, law, mult1, band=w_band, slots=[ftab, bar, utab, bar]
    )
    val2 = _gamma4_value(
        sym, u, law, mult2, band=w_band, slots=[utab, gtab, utab, bar]
    )
    return float((val1 + val2).real)


def r6_enumerated(sym, u, law, sigma=1, band=None):
    """Brute-force six-fold zero-sum enumeration of the remainder (oracle
    path, independent of the contracted evaluation; small grids only).

    Real flow: sum over Gamma6 of (4/3) i b4(x1, x2, x3, x456) x456 prod uhat
    with |m4+m5+m6| <= band.  Complex flow: the two slot-contracted terms
    with the alternating conjugation pattern.
    """
    _check_energy_data(u, law)
    g = u.geometry
    if band is None:
        band = dealias_band(g)
    b = max(_support_band(u), 1)
    lam = g.lam
    utab = _coeff_lookup(u, b)
    bar = np.conj(utab[::-1])
    if law.odd:
        slot = [utab] * 6
    else:
        slot = [utab, bar, utab, bar, utab, bar]
    rng = np.arange(-b, b + 1)
    total = 0.0 + 0.0j
    for m1 in rng:
        c1 = slot[0][m1 + b]
        if c1 == 0.0:
            continue
        for m2 in rng:
            c12 = c1 * slot[1][m2 + b]
            if c12 == 0.0:
                continue
            for m3 in rng:
                c123 = c12 * slot[2][m3 + b]
                if c123 == 0.0:
                    continue
                for m4 in rng:
                    c1234 = c123 * slot[3][m4 + b]
                    if c1234 == 0.0:
                        continue
                    m5 = rng
                    m6 = -(m1 + m2 + m3 + m4 + m5)
                    keep = np.abs(m6) <= b
                    if not np.any(keep):
                        continue
                    m5k = m5[keep]
                    m6k = m6[keep]
                    c = c1234 * slot[4][m5k + b] * slot[5][m6k + b]
                    live = c != 0.0
                    if not np.any(live):
                        continue
                    m5l, m6l, cl = m5k[live], m6k[live], c[live]
                    nn = m5l.size
                    x1 = np.full(nn, m1 / lam)
                    x2 = np.full(nn, m2 / lam)
                    x3 = np.full(nn, m3 / lam)
                    x4 = np.full(nn, m4 / lam)
                    x5 = m5l / lam
                    x6 = m6l / lam
                    if law.odd:
                        m456 = m4 + m5l + m6l
                        ok = np.abs(m456) <= band
                        if np.any(ok):
                            x456 = m456[ok] / lam
                            b4v = b4_multiplier(
                                sym, (x1[ok], x2[ok], x3[ok], x456), law
                            )
                            total += np.sum(
                                (4.0 / 3.0) * 1j * b4v * x456 * cl[ok]
                            )
                    else:
                        # slot-1 contraction over (x1, x2, x3)
                        m123 = m1 + m2 + m3
                        if abs(m123) <= band:
                            x123 = np.full(nn, m123 / lam)
                            b4v = b4_multiplier(sym, (x123, x4, x5, x6), law)
                            total += np.sum(2.0 * 1j * b4v * x123 * cl)
                        # slot-2 contraction over (x2, x3, x4)
                        m234 = m2 + m3 + m4
                        if abs(m234) <= band:
                            x234 = np.full(nn, m234 / lam)
                            b4v = b4_multiplier(sym, (x1, x234, x5, x6), law)
                            total += np.sum(2.0 * 1j * b4v * x234 * cl)
    return float((lam ** (-5) * TWO_PI_SQ_INV * total).real)


# ---------------------------------------------------------------------------
# cancellation along trajectories


def _fd_derivative(series, dt):
    """Central difference of a uniformly sampled series: fourth order where
    the stencil fits (n >= 5), second order otherwise; returns (interior
    indices, derivative values)."""
    f = np.asarray(series, dtype=float)
    n = f.size
    if n < 3:
        raise ValueError("need at least three snapshots")
    if n >= 5:
        idx = np.arange(2, n - 2)
        d = (-f[idx + 2] + 8.0 * f[idx + 1] - 8.0 * f[idx - 1] + f[idx - 2]) / (
            12.0 * dt
        )
    else:
        idx = np.arange(1, n - 1)
        d = (f[idx + 1] - f[idx - 1]) / (2.0 * dt)
    return idx, d


def cancellation_check(traj, sym, band=None):
    """Compare finite-difference d/dt of E0 and of E0 + sigma E1 against the
    algebraic forms R4 and R6 along one trajectory.

    Returns a dict with the two max absolute discrepancies and the scales
    (max |R4|, max |R6|) for relative reporting.
    """
    law = traj.problem.law
    sigma = traj.problem.sigma
    n = len(traj)
    if n < 3:
        raise ValueError("need at least three snapshots")
    dts = np.diff(traj.times)
    dt = float(dts[0])
    e0s = np.empty(n)
    e1s = np.empty(n)
    r4s = np.empty(n)
    r6s = np.empty(n)
    for i in range(n):
        u = traj.field(i)
        e0s[i] = e0_energy(sym, u, law)
        e1s[i] = e1_correction(sym, u, law)
        r4s[i] = r4_form(sym, u, law, sigma)
        r6s[i] = r6_form(sym, u, law, sigma, band=band)
    idx, d0 = _fd_derivative(e0s, dt)
    _, dc = _fd_derivative(e0s + sigma * e1s, dt)
    res4 = np.abs(d0 - r4s[idx])
    res6 = np.abs(dc - r6s[idx])
    # residual at the interior time closest to the window midpoint: a fixed
    # evaluation point gives clean convergence orders under refinement
    tmid = 0.5 * (traj.times[0] + traj.times[-1])
    imid = int(np.argmin(np.abs(traj.times[idx] - tmid)))
    return {
        "residual_r4": float(np.max(res4)),
        "residual_r6": float(np.max(res6)),
        "residual_r4_mid": float(res4[imid]),
        "residual_r6_mid": float(res6[imid]),
        "scale_r4": float(np.max(np.abs(r4s))),
        "scale_r6": float(np.max(np.abs(r6s))),
        "sigma": sigma,
        "series": (traj.times, e0s, e1s, r4s, r6s),
    }
