"""Self-contained invariant suite behind ``barflow check``.

Each check is a small deterministic function that raises AssertionError
with a diagnostic message on failure; :func:`run_all` collects the
results.  The golden-matrix comparison rebuilds shipped operator CSVs
from their sidecar parameters and reports any differing entries.
"""

from __future__ import annotations

import math
import os

import numpy as np

from . import eigensolve, evolution, fields, hypocoercivity, operators

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")


def _seeded_row_field(nx, ny, ell, seed, decay=0.05):
    rng = np.random.default_rng(seed)
    c = np.zeros((2 * nx + 1, 2 * ny + 1), dtype=complex)
    ks = np.arange(-nx, nx + 1)
    c[:, ell + ny] = (
        rng.standard_normal(2 * nx + 1) + 1j * rng.standard_normal(2 * nx + 1)
    ) * np.exp(-decay * ks * ks)
    return fields.SpectralField(nx, ny, c, copy=False)


# ---------------------------------------------------------------- fields

def check_biot_savart_divergence_free():
    # exactly zero on dyadic coefficients, one rounding on generic ones
    for w in (fields.bar_state(1, 8, 8), fields.dipole_state(2, 8, 8)):
        u = fields.biot_savart(w)
        assert u.max_divergence() == 0.0, f"divergence {u.max_divergence():.3e}"
    for seed in range(3):
        w = fields.random_field(12, 12, seed)
        u = fields.biot_savart(w)
        scale = np.abs(w.coeffs).max()
        assert u.max_divergence() <= 1e-15 * scale, f"divergence {u.max_divergence():.3e}"


def check_curl_recovery():
    w = fields.random_field(10, 10, 1)
    u = fields.biot_savart(w)
    ks, ls = w.wavenumbers()
    curl = 1j * ks * u.u2.coeffs - 1j * ls * u.u1.coeffs
    err = np.abs(curl - w.coeffs).max()
    assert err < 1e-14, f"curl mismatch {err:.3e}"


def check_projection():
    w = fields.random_field(11, 9, 2)
    p = fields.remove_anomalous(w)
    pp = fields.remove_anomalous(p)
    assert np.abs(pp.coeffs - p.coeffs).max() == 0.0, "not idempotent"
    assert p.norm() <= w.norm() + 1e-15, "norm increased"
    ok, viol = fields.is_anomalous_free(p, tol=1e-14)
    assert ok, f"projected field keeps anomalous content {viol:.3e}"
    ip = np.vdot(w.coeffs - p.coeffs, p.coeffs)
    assert abs(ip) < 1e-12 * w.norm() ** 2, f"projection not orthogonal: {ip:.3e}"


def check_poincare():
    for seed in range(3):
        w = fields.random_field(9, 9, seed)
        assert fields.grad_norm_sq(w) >= fields.enstrophy(w) - 1e-12


def check_reality_synthesis():
    w = fields.random_field(6, 6, 3, real_valued=True)
    _, _, vals = fields.synthesize(w)
    worst = np.abs(vals.imag).max()
    assert worst < 1e-12, f"imaginary residue {worst:.3e}"


# ------------------------------------------------------------- operators

def check_commutator_identity():
    n = 8
    d = np.diag(1j * np.arange(-n, n + 1).astype(complex))
    for ell in (1, 2, 3):
        # dyadic amplitude: identity is exact bit-for-bit
        b = operators.advection_matrix(ell, n, 1.0)
        c = operators.commutator_matrix(ell, n, 1.0)
        err = np.abs(((d @ b - b @ d) - c)[1:-1, :]).max()
        assert err == 0.0, f"[d/dx, advection] != commutator on interior ({err:.3e})"
        # generic amplitude: exact up to rounding
        b = operators.advection_matrix(ell, n, 1.3, t=0.2, nu=0.01)
        c = operators.commutator_matrix(ell, n, 1.3, t=0.2, nu=0.01)
        err = np.abs(((d @ b - b @ d) - c)[1:-1, :]).max()
        assert err <= 1e-14 * abs(c).max(), f"commutator identity drift {err:.3e}"


def check_advection_commutes_with_commutator():
    n = 9
    b = operators.advection_matrix(2, n, 1.0)
    c = operators.commutator_matrix(2, n, 1.0)
    err = np.abs((b @ c - c @ b)[2:-2, :]).max()
    assert err == 0.0, f"[advection, commutator] != 0 on interior ({err:.3e})"
    b = operators.advection_matrix(2, n, 0.7)
    c = operators.commutator_matrix(2, n, 0.7)
    err = np.abs((b @ c - c @ b)[2:-2, :]).max()
    assert err <= 1e-15, f"[advection, commutator] drift {err:.3e}"


def check_slice_decomposition():
    op = operators.bar_slice(2, 8, 0.01, 1.5, t=0.3, variant="approximate")
    ks = op.wavenumbers
    delta = np.diag((-0.01 * (ks * ks + 4)).astype(complex))
    b = operators.advection_matrix(2, 8, 1.5, t=0.3, nu=0.01)
    err = np.abs(op.matrix - (delta + b)).max()
    assert err == 0.0, f"approximate slice != diffusion + advection ({err:.3e})"
    full = operators.bar_slice(2, 8, 0.01, 1.5, t=0.3, variant="full")
    corr = full.matrix - op.matrix
    i = 8  # row k = 0
    expected = -(2 / 2) * 1.5 * math.exp(-0.01 * 0.3) * (-1.0 / ((0 - 1) ** 2 + 4))
    assert abs(corr[i, i - 1] - expected) < 1e-15, "correction factor wrong"


def check_anomalous_generator_consistency():
    jmax, nu, a, t = 3, 0.01, 1.3, 0.7
    n = 2 * jmax + 1
    rng = np.random.default_rng(0)
    row = rng.standard_normal(2 * n + 1) + 1j * rng.standard_normal(2 * n + 1)

    def coords(r):
        out = []
        for j in range(jmax + 1):
            out.append(r[2 * j + n] + r[-2 * j + n])
            out.append(r[(2 * j + 1) + n] - r[-(2 * j + 1) + n])
        return np.array(out)

    for sign in (+1, -1):
        op = operators.bar_slice(sign, n, nu, a, t, "full")
        lhs = coords(op.matrix @ row)
        rhs = operators.anomalous_generator(nu, a, t, jmax, sign) @ coords(row)
        err = np.abs(lhs - rhs).max()
        assert err < 1e-13, f"generator mismatch (sign={sign}): {err:.3e}"


def check_symmetrized_stability():
    for ell, nu in ((1, 1e-3), (2, 1e-4), (3, 1e-2)):
        op = operators.symmetrized_bar_slice(ell, 40, nu, 1.0)
        top = eigensolve.least_decaying(eigensolve.compute_spectrum(op)).real
        assert top <= 1e-10, f"symmetrized slice unstable: Re={top:.3e}"


def check_anomalous_mode_exactness():
    for m in (1, 2, 3):
        w = fields.mode_field(6, 6, {(m, 0): 1.0})
        lw = operators.apply_bar_generator(w, 0.01, 1.0, 0.0, "full")
        expected = -0.01 * m * m * w.coeffs
        err = np.abs(lw.coeffs - expected).max()
        assert err == 0.0, f"mode e^{{i{m}x}} not exactly diffusive ({err:.3e})"
        law = operators.apply_bar_adjoint(w, 0.01, 1.0, 0.0)
        err = np.abs(law.coeffs - expected).max()
        assert err == 0.0, f"adjoint null direction fails at m={m} ({err:.3e})"


# ------------------------------------------------------------- eigensolve

def check_eigen_residual():
    op = operators.bar_slice(2, 20, 1e-3, 1.0)
    res = eigensolve.eigen_residual(op)
    assert res <= 1e-8, f"eigen residual {res:.3e}"


def check_adjoint_spectrum():
    # set equality (Hausdorff both ways): rank order is fragile under
    # rounding for conjugate pairs, set distance is not
    op = operators.bar_slice(2, 15, 1e-3, 1.0)
    s = eigensolve.compute_spectrum(op).eigenvalues
    sa = np.conj(eigensolve.compute_spectrum(operators.adjoint_slice(op)).eigenvalues)
    d1 = np.abs(s[:, None] - sa[None, :]).min(axis=1).max()
    d2 = np.abs(s[:, None] - sa[None, :]).min(axis=0).max()
    err = max(d1, d2)
    assert err < 1e-9, f"adjoint spectrum mismatch {err:.3e}"


def check_trace():
    op = operators.bar_slice(2, 25, 1e-3, 1.0)
    s = eigensolve.compute_spectrum(op).eigenvalues
    tr = np.trace(op.matrix)
    err = abs(s.sum() - tr) / abs(tr)
    assert err < 1e-8, f"trace mismatch {err:.3e}"


def check_truncation_stability():
    a = eigensolve.compute_spectrum(operators.bar_slice(2, 40, 1e-3, 1.0)).eigenvalues[:10]
    b = eigensolve.compute_spectrum(operators.bar_slice(2, 80, 1e-3, 1.0)).eigenvalues[:10]
    rel = np.abs(a - b) / np.abs(b)
    assert rel.max() < 0.01, f"first 10 eigenvalues drift {rel.max():.3e} from N=40 to 80"


# -------------------------------------------------------------- evolution

def check_subspace_invariance():
    w0 = fields.remove_anomalous(fields.random_field(24, 24, 7))
    cfg = evolution.IntegratorConfig(dt=0.05, t_final=100.0, sample_every=400)
    traj = evolution.evolve_linear(w0, 1e-2, 1.0, "full", cfg)
    worst = (traj.diagnostics["max_pq"] / traj.diagnostics["l2"]).max()
    assert worst <= 1e-8, f"anomalous leak {worst:.3e}"


def check_shear_row_diagonal_decay():
    w0 = fields.mode_field(6, 6, {(2, 0): 1.0, (3, 0): 0.5})
    cfg = evolution.IntegratorConfig(dt=0.05, t_final=10.0, sample_every=200)
    traj = evolution.evolve_linear(w0, 0.01, 1.0, "full", cfg)
    wt = traj.fields[-1]
    for m, a0 in ((2, 1.0), (3, 0.5)):
        got = wt.get(m, 0)
        want = a0 * math.exp(-0.01 * m * m * 10.0)
        assert abs(got - want) < 1e-10 * a0, f"mode {m} decay off by {abs(got - want):.3e}"


def check_fourth_order():
    w0 = fields.remove_anomalous(fields.random_field(8, 8, 5))

    def run(dt):
        cfg = evolution.IntegratorConfig(dt=dt, t_final=1.0, sample_every=int(round(1.0 / dt)))
        return evolution.evolve_linear(w0, 0.05, 1.0, "full", cfg).fields[-1].coeffs

    ref = run(0.003125)
    e1 = np.abs(run(0.05) - ref).max()
    e2 = np.abs(run(0.025) - ref).max()
    ratio = e1 / e2
    assert 10.0 < ratio < 25.0, f"halving dt changed error by {ratio:.2f}x, not ~16x"


def check_reality_preservation():
    w0 = fields.random_field(8, 8, 9, real_valued=True)
    cfg = evolution.IntegratorConfig(dt=0.02, t_final=2.0, sample_every=10)
    traj = evolution.evolve_linear(w0, 0.05, 1.0, "full", cfg)
    worst = max(fields.conjugate_asymmetry(f) for f in traj.fields)
    assert worst < 1e-12, f"conjugate symmetry drift {worst:.3e}"


def check_inviscid_conservation():
    w0 = fields.random_field(8, 8, 2, decay=0.15)
    cfg = evolution.IntegratorConfig(dt=1e-3, t_final=1.0, sample_every=500, grid=64)
    traj = evolution.evolve_nonlinear(w0, 0.0, cfg)
    z = traj.diagnostics["enstrophy"]
    drift = abs(z[-1] - z[0]) / z[0]
    assert drift <= 1e-6, f"inviscid enstrophy drift {drift:.3e}"


def check_anomalous_dynamics_match():
    # a nonzero even-sum coordinate reproduces the closed tridiagonal ODE
    jmax, nu, a = 2, 0.05, 1.0
    n = 2 * jmax + 1
    w0 = fields.mode_field(n, n, {(0, 1): 0.5, (1, 1): 0.3, (2, 1): 0.2 + 0.1j})
    dt, t_final = 0.01, 2.0
    cfg = evolution.IntegratorConfig(dt=dt, t_final=t_final, sample_every=int(t_final / dt))
    traj = evolution.evolve_linear(w0, nu, a, "full", cfg)
    got = traj.fields[-1].get(0, 1)
    c0 = fields.anomalous_coordinates(w0, jmax)
    u = np.empty(2 * (jmax + 1), dtype=complex)
    u[0::2] = c0.even_sums_plus
    u[1::2] = c0.odd_diffs_plus
    for i in range(int(round(t_final / dt))):
        t = i * dt
        a1 = operators.anomalous_generator(nu, a, t, jmax, +1)
        a2 = operators.anomalous_generator(nu, a, t + dt / 2, jmax, +1)
        a4 = operators.anomalous_generator(nu, a, t + dt, jmax, +1)
        k1 = a1 @ u
        k2 = a2 @ (u + dt / 2 * k1)
        k3 = a2 @ (u + dt / 2 * k2)
        k4 = a4 @ (u + dt * k3)
        u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    want = u[0] / 2  # what(0, 1) = even_sum_0 / 2
    rel = abs(got - want) / abs(want)
    assert rel < 1e-6, f"central mode deviates from the closed ODE by {rel:.3e}"


# ---------------------------------------------------------- hypocoercivity

def check_constants_identities():
    rng = np.random.default_rng(0)
    for _ in range(100):
        m0 = float(rng.uniform(0.01, 10.0))
        a = float(rng.uniform(0.1, 5.0))
        ell = int(rng.integers(1, 9))
        c = hypocoercivity.hypo_constants(m0, a, ell, nu=1e-4)
        rel = abs(c.beta0 - 4 * c.alpha0**2) / c.beta0
        assert rel < 1e-12, f"beta0 != 4 alpha0^2 (rel {rel:.3e})"
        assert c.beta0**2 < c.alpha0 * c.gamma0 / 4, "cross-term inequality fails"


def check_functional_sandwich():
    rng = np.random.default_rng(1)
    cst = hypocoercivity.hypo_constants(0.25, 1.0, 2, 1e-3)
    for _ in range(100):
        row = rng.standard_normal(21) + 1j * rng.standard_normal(21)
        s = hypocoercivity.functional_sample(row, cst, 0.0)
        lo = s.l2_sq + cst.alpha / 2 * s.dx_sq + cst.gamma / 2 * s.c_sq
        hi = s.l2_sq + 3 * cst.alpha / 2 * s.dx_sq + 3 * cst.gamma / 2 * s.c_sq
        assert lo < s.phi_value < hi, "sandwich bounds fail"
        assert s.phi_value >= 0.5 * s.l2_sq, "lower sandwich bound fails"


def check_enhanced_decay():
    nu = 1e-3
    w0 = _seeded_row_field(40, 3, 2, seed=7)
    fit = hypocoercivity.decay_check(w0, nu, 1.0, t_final=1000.0, dt=0.25)
    base = evolution.diffusion_rate(w0, nu)
    assert fit.rate >= 5 * base, f"rate {fit.rate:.3e} < 5 x diffusive {base:.3e}"


def check_m0_monotone_in_time():
    vals = [
        hypocoercivity.estimate_m0(1 / 1024, 1e-4, 1.0, 2, t=t, n_modes=96)
        for t in (0.0, 1000.0, 5000.0, 10000.0)
    ]
    for earlier, later in zip(vals, vals[1:]):
        assert later <= earlier + 1e-15, f"m0 grew with time: {vals}"


def check_dissipation_negative():
    nu = 1e-4
    m0 = hypocoercivity.auto_m0(1.0, 2, nu)
    cst = hypocoercivity.hypo_constants(m0, 1.0, 2, nu)
    w0 = _seeded_row_field(40, 3, 2, seed=3)
    cfg = evolution.IntegratorConfig(dt=0.05, t_final=30.0, sample_every=1)
    traj = evolution.evolve_linear(w0, nu, 1.0, "approximate", cfg)
    rep = hypocoercivity.functional_dissipation(traj, cst)
    assert rep.max_ratio < 0, f"functional grew: max ratio {rep.max_ratio:.3e}"


# ------------------------------------------------------------------ golden

def check_golden_matrices(golden_dir=None):
    golden_dir = golden_dir or GOLDEN_DIR
    names = sorted(
        f for f in os.listdir(golden_dir) if f.endswith(".csv")
    )
    assert names, f"no golden matrices in {golden_dir}"
    for name in names:
        path = os.path.join(golden_dir, name)
        entries, meta = operators.load_matrix(path)
        op = operators.build_from_params(meta)
        mat = np.asarray(op.matrix)
        rebuilt = {
            (int(r), int(c)): mat[r, c] for r, c in zip(*np.nonzero(mat))
        }
        diffs = []
        for key in sorted(set(entries) | set(rebuilt)):
            a = entries.get(key, 0.0)
            b = rebuilt.get(key, 0.0)
            if a != b:
                diffs.append(f"  {name} entry {key}: stored {a} rebuilt {b}")
        assert not diffs, "golden mismatch:\n" + "\n".join(diffs[:10])


ALL_CHECKS = [
    ("fields/biot-savart-divergence-free", check_biot_savart_divergence_free),
    ("fields/curl-recovery", check_curl_recovery),
    ("fields/projection", check_projection),
    ("fields/poincare", check_poincare),
    ("fields/reality-synthesis", check_reality_synthesis),
    ("operators/commutator-identity", check_commutator_identity),
    ("operators/advection-commutator-commute", check_advection_commutes_with_commutator),
    ("operators/slice-decomposition", check_slice_decomposition),
    ("operators/anomalous-generator-consistency", check_anomalous_generator_consistency),
    ("operators/symmetrized-stability", check_symmetrized_stability),
    ("operators/anomalous-mode-exactness", check_anomalous_mode_exactness),
    ("eigensolve/residual", check_eigen_residual),
    ("eigensolve/adjoint-spectrum", check_adjoint_spectrum),
    ("eigensolve/trace", check_trace),
    ("eigensolve/truncation-stability", check_truncation_stability),
    ("evolution/subspace-invariance", check_subspace_invariance),
    ("evolution/shear-row-diagonal-decay", check_shear_row_diagonal_decay),
    ("evolution/fourth-order", check_fourth_order),
    ("evolution/reality-preservation", check_reality_preservation),
    ("evolution/inviscid-conservation", check_inviscid_conservation),
    ("evolution/anomalous-dynamics-match", check_anomalous_dynamics_match),
    ("hypocoercivity/constants-identities", check_constants_identities),
    ("hypocoercivity/functional-sandwich", check_functional_sandwich),
    ("hypocoercivity/enhanced-decay", check_enhanced_decay),
    ("hypocoercivity/m0-monotone-in-time", check_m0_monotone_in_time),
    ("hypocoercivity/dissipation-negative", check_dissipation_negative),
    ("golden/matrices", check_golden_matrices),
]


def run_all(golden_dir=None, report=print):
    """Run every check; returns the number of failures."""
    failures = 0
    for name, fn in ALL_CHECKS:
        try:
            if fn is check_golden_matrices:
                fn(golden_dir)
            else:
                fn()
        except AssertionError as exc:
            failures += 1
            report(f"FAIL {name}: {exc}")
        except Exception as exc:  # noqa: BLE001 - surface unexpected breakage
            failures += 1
            report(f"ERROR {name}: {exc!r}")
        else:
            report(f"PASS {name}")
    return failures
