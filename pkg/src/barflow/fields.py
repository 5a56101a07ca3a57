"""Spectral fields on the square torus [-pi, pi]^2.

A scalar field (vorticity, or a perturbation of it) is stored as a dense
complex array of Fourier coefficients on the truncated wavenumber lattice
|k| <= nx, |l| <= ny, with the convention

    w(x, y) = sum_{k,l} what(k, l) exp(i (k x + l y)),
    what(k, l) = (1 / 4 pi^2) integral w(x, y) exp(-i (k x + l y)) dx dy,

so that Parseval reads  integral |w|^2 = 4 pi^2 sum |what|^2.  Every field
has zero mean, what(0, 0) = 0, which is preserved by all operations here.

The module provides the exact slowly-decaying shear ("bar") and
Taylor-Green ("dipole") states, the Biot-Savart velocity reconstruction,
the anomalous-mode coordinates on the |l| = 1 rows together with the
orthogonal projection that removes them, quadratic diagnostics, and a CSV
interchange format shared by the rest of the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi
PARSEVAL = TWO_PI * TWO_PI  # (2 pi)^2 factor relating coefficient sums to integrals


class SpectralField:
    """Immutable complex Fourier coefficient array on the truncated lattice.

    Parameters
    ----------
    nx, ny : int
        Truncation: coefficients are stored for |k| <= nx, |l| <= ny.
    coeffs : array_like of complex, shape (2*nx+1, 2*ny+1), optional
        Coefficient array; entry [k + nx, l + ny] is what(k, l).  Defaults
        to the zero field.
    real_valued : bool
        Declares that the field represents a real-valued function, i.e.
        what(-k, -l) = conj(what(k, l)).
    """

    __slots__ = ("nx", "ny", "coeffs", "real_valued")

    def __init__(self, nx, ny, coeffs=None, real_valued=False, copy=True):
        nx = int(nx)
        ny = int(ny)
        if nx < 1 or ny < 1:
            raise ValueError("truncation must be at least 1 in each direction")
        if coeffs is None:
            coeffs = np.zeros((2 * nx + 1, 2 * ny + 1), dtype=complex)
            copy = False
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (2 * nx + 1, 2 * ny + 1):
            raise ValueError(
                f"coefficient array has shape {coeffs.shape}, "
                f"expected {(2 * nx + 1, 2 * ny + 1)}"
            )
        if coeffs[nx, ny] != 0:
            raise ValueError("zero-mean violated: what(0, 0) must vanish")
        if real_valued:
            asym = conjugate_asymmetry_raw(coeffs)
            scale = np.abs(coeffs).max()
            if scale > 0 and asym > 1e-8 * scale:
                raise ValueError(
                    f"real_valued field lacks conjugate symmetry "
                    f"(asymmetry {asym:.3e}, scale {scale:.3e})"
                )
        if copy:
            coeffs = coeffs.copy()
        coeffs.setflags(write=False)
        object.__setattr__(self, "nx", nx)
        object.__setattr__(self, "ny", ny)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "real_valued", bool(real_valued))

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    def __repr__(self):
        return (
            f"SpectralField(nx={self.nx}, ny={self.ny}, "
            f"real_valued={self.real_valued}, norm={self.norm():.6g})"
        )

    def get(self, k, l):
        """Coefficient what(k, l)."""
        if abs(k) > self.nx or abs(l) > self.ny:
            raise IndexError(f"mode ({k}, {l}) outside truncation")
        return complex(self.coeffs[k + self.nx, l + self.ny])

    def norm(self):
        """l2 norm of the coefficient array, sqrt(sum |what|^2)."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def wavenumbers(self):
        """Column/row wavenumber grids (ks[:, None], ls[None, :])."""
        ks = np.arange(-self.nx, self.nx + 1)[:, None]
        ls = np.arange(-self.ny, self.ny + 1)[None, :]
        return ks, ls


def _wrap(nx, ny, coeffs, real_valued):
    """Internal constructor skipping validation and the defensive copy."""
    f = object.__new__(SpectralField)
    coeffs.setflags(write=False)
    object.__setattr__(f, "nx", nx)
    object.__setattr__(f, "ny", ny)
    object.__setattr__(f, "coeffs", coeffs)
    object.__setattr__(f, "real_valued", real_valued)
    return f


def conjugate_asymmetry_raw(coeffs):
    """max |what(-k,-l) - conj(what(k,l))| of a raw coefficient array."""
    return float(np.abs(coeffs[::-1, ::-1] - np.conj(coeffs)).max())


def conjugate_asymmetry(field):
    """Deviation of a field from the reality condition, as a max-abs value."""
    return conjugate_asymmetry_raw(field.coeffs)


def zero_field(nx, ny, real_valued=True):
    return SpectralField(nx, ny, real_valued=real_valued)


def mode_field(nx, ny, entries, real_valued=False):
    """Field with prescribed coefficients, e.g. ``{(1, 0): 0.5, (-1, 0): 0.5}``."""
    c = np.zeros((2 * nx + 1, 2 * ny + 1), dtype=complex)
    for (k, l), amp in entries.items():
        if abs(k) > nx or abs(l) > ny:
            raise ValueError(f"mode ({k}, {l}) outside truncation ({nx}, {ny})")
        c[k + nx, l + ny] = amp
    return SpectralField(nx, ny, c, real_valued=real_valued, copy=False)


def bar_state(m, nx, ny, phase="cos", t=0.0, nu=0.0, amplitude=1.0):
    """Exact shear solution a e^{-nu m^2 t} cos(mx) (or sin) as a field.

    Exactly two coefficients are nonzero.  Raises if m exceeds the
    truncation.
    """
    m = int(m)
    if m < 1:
        raise ValueError("m must be a positive integer")
    if m > nx:
        raise ValueError(f"m={m} exceeds truncation nx={nx}")
    amp = amplitude * math.exp(-nu * m * m * t)
    if phase == "cos":
        entries = {(m, 0): amp / 2, (-m, 0): amp / 2}
    elif phase == "sin":
        entries = {(m, 0): -0.5j * amp, (-m, 0): 0.5j * amp}
    else:
        raise ValueError("phase must be 'cos' or 'sin'")
    return mode_field(nx, ny, entries, real_valued=True)


def dipole_state(m, nx, ny, phase="cos", t=0.0, nu=0.0, amplitude=1.0):
    """Exact Taylor-Green solution a e^{-nu m^2 t}[cos mx + cos my] (or sin).

    Four nonzero coefficients; otherwise analogous to :func:`bar_state`.
    """
    m = int(m)
    if m < 1:
        raise ValueError("m must be a positive integer")
    if m > nx or m > ny:
        raise ValueError(f"m={m} exceeds truncation ({nx}, {ny})")
    amp = amplitude * math.exp(-nu * m * m * t)
    if phase == "cos":
        entries = {
            (m, 0): amp / 2,
            (-m, 0): amp / 2,
            (0, m): amp / 2,
            (0, -m): amp / 2,
        }
    elif phase == "sin":
        entries = {
            (m, 0): -0.5j * amp,
            (-m, 0): 0.5j * amp,
            (0, m): -0.5j * amp,
            (0, -m): 0.5j * amp,
        }
    else:
        raise ValueError("phase must be 'cos' or 'sin'")
    return mode_field(nx, ny, entries, real_valued=True)


@dataclass(frozen=True)
class VelocityField:
    """Divergence-free velocity as two spectral components on one lattice."""

    u1: SpectralField
    u2: SpectralField

    def __post_init__(self):
        if (self.u1.nx, self.u1.ny) != (self.u2.nx, self.u2.ny):
            raise ValueError("velocity components must share a truncation")

    def max_divergence(self):
        """max_k |k . u1hat + l . u2hat|; identically zero up to rounding."""
        ks, ls = self.u1.wavenumbers()
        return float(np.abs(ks * self.u1.coeffs + ls * self.u2.coeffs).max())


def biot_savart(w):
    """Velocity field uhat(k,l) = i (l, -k) what(k,l) / (k^2 + l^2).

    The (0, 0) amplitude must vanish (zero-mean vorticity); the velocity
    mean is set to zero.
    """
    if w.coeffs[w.nx, w.ny] != 0:
        raise ValueError("vorticity must have zero mean")
    ks, ls = w.wavenumbers()
    k2 = (ks * ks + ls * ls).astype(float)
    k2[w.nx, w.ny] = 1.0  # center excluded below
    u1 = 1j * ls * w.coeffs / k2
    u2 = -1j * ks * w.coeffs / k2
    u1[w.nx, w.ny] = 0.0
    u2[w.nx, w.ny] = 0.0
    return VelocityField(
        _wrap(w.nx, w.ny, u1, w.real_valued),
        _wrap(w.nx, w.ny, u2, w.real_valued),
    )


@dataclass(frozen=True)
class AnomalousCoordinates:
    """Pairwise mode combinations on the |l| = 1 rows that detect slow content.

    For j = 0..jmax,

        even_sums_(sign)[j] = what(2j, sign) + what(-2j, sign)
        odd_diffs_(sign)[j] = what(2j+1, sign) - what(-(2j+1), sign)

    (so even_sums[0] = 2 what(0, sign)).  A field free of viscously-decaying
    anomalous content has all of these equal to zero, together with the
    whole l = 0 row.
    """

    jmax: int
    even_sums_plus: np.ndarray
    odd_diffs_plus: np.ndarray
    even_sums_minus: np.ndarray
    odd_diffs_minus: np.ndarray

    def max_abs(self):
        return float(
            max(
                np.abs(self.even_sums_plus).max(),
                np.abs(self.odd_diffs_plus).max(),
                np.abs(self.even_sums_minus).max(),
                np.abs(self.odd_diffs_minus).max(),
            )
        )


def default_jmax(nx):
    """Largest jmax with 2*jmax + 1 <= nx."""
    return (nx - 1) // 2


def anomalous_coordinates(w, jmax=None):
    """Extract the paired even-sum / odd-difference coordinates.

    Requires 2*jmax + 1 <= nx so every referenced mode is stored.
    """
    if jmax is None:
        jmax = default_jmax(w.nx)
    jmax = int(jmax)
    if jmax < 0:
        raise ValueError("jmax must be nonnegative")
    if 2 * jmax + 1 > w.nx:
        raise ValueError(f"jmax={jmax} exceeds truncation nx={w.nx}")
    js = np.arange(jmax + 1)
    out = {}
    for sign, l in (("plus", 1), ("minus", -1)):
        row = w.coeffs[:, l + w.ny]
        even = row[2 * js + w.nx] + row[-2 * js + w.nx]
        odd = row[(2 * js + 1) + w.nx] - row[-(2 * js + 1) + w.nx]
        out[sign] = (even, odd)
    return AnomalousCoordinates(
        jmax,
        out["plus"][0],
        out["plus"][1],
        out["minus"][0],
        out["minus"][1],
    )


def remove_anomalous(w):
    """Orthogonal projection killing every anomalous coordinate.

    The l = 0 row is zeroed.  On the rows l = +-1 the even-k coefficients
    are replaced by their antisymmetric part (what(k) - what(-k))/2 and the
    odd-k coefficients by their symmetric part (what(k) + what(-k))/2; all
    other rows are untouched.  Idempotent, linear, and orthogonal for the
    coefficient inner product.
    """
    c = w.coeffs.copy()
    c[:, w.ny] = 0.0
    ks = np.arange(-w.nx, w.nx + 1)
    even = (ks % 2) == 0
    for l in (1, -1):
        row = c[:, l + w.ny]
        flipped = row[::-1].copy()
        c[:, l + w.ny] = np.where(even, (row - flipped) / 2, (row + flipped) / 2)
    return _wrap(w.nx, w.ny, c, w.real_valued)


def anomalous_content(w, jmax=None):
    """Largest anomalous-coordinate magnitude: the shear-aligned row and the
    paired combinations on the |l| = 1 rows."""
    shear = float(np.abs(w.coeffs[:, w.ny]).max())
    coords = anomalous_coordinates(w, jmax)
    return max(shear, coords.max_abs())


def is_anomalous_free(w, tol=1e-10):
    """Whether every anomalous coordinate is below tol * ||w||.

    Returns ``(ok, violation)`` with the maximal violating magnitude.
    """
    viol = anomalous_content(w)
    return viol <= tol * w.norm(), viol


def enstrophy(w):
    """integral w^2 over the torus = (2 pi)^2 sum |what|^2."""
    return PARSEVAL * float(np.sum(np.abs(w.coeffs) ** 2))


def grad_norm_sq(w):
    """integral |grad w|^2 = (2 pi)^2 sum (k^2 + l^2) |what|^2."""
    ks, ls = w.wavenumbers()
    return PARSEVAL * float(np.sum((ks * ks + ls * ls) * np.abs(w.coeffs) ** 2))


def synthesize(w, grid_x=None, grid_y=None):
    """Sample the field on a uniform physical grid.

    Returns ``(x, y, values)`` where ``values[i, j] = w(x[i], y[j])`` as a
    complex array; for reality-flagged fields the imaginary part is at
    rounding level.
    """
    if grid_x is None:
        grid_x = 1 << max(3, (2 * w.nx + 2 - 1).bit_length())
    if grid_y is None:
        grid_y = 1 << max(3, (2 * w.ny + 2 - 1).bit_length())
    if grid_x < 2 * w.nx + 1 or grid_y < 2 * w.ny + 1:
        raise ValueError("grid too small for the stored truncation")
    f = np.zeros((grid_x, grid_y), dtype=complex)
    ks = np.arange(-w.nx, w.nx + 1)
    ls = np.arange(-w.ny, w.ny + 1)
    f[np.ix_(ks % grid_x, ls % grid_y)] = w.coeffs
    vals = np.fft.ifft2(f) * (grid_x * grid_y)
    x = -math.pi + TWO_PI * np.arange(grid_x) / grid_x
    y = -math.pi + TWO_PI * np.arange(grid_y) / grid_y
    # ifft samples start at 0; roll so the first sample sits at -pi
    vals = np.roll(vals, (grid_x // 2, grid_y // 2), axis=(0, 1))
    return x, y, vals


def random_field(nx, ny, seed, decay=0.1, real_valued=True):
    """Seeded random smooth field: complex Gaussian coefficients damped by
    exp(-decay (k^2 + l^2)), conjugate-symmetrized, zero mean."""
    rng = np.random.default_rng(seed)
    shape = (2 * nx + 1, 2 * ny + 1)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    ks = np.arange(-nx, nx + 1)[:, None]
    ls = np.arange(-ny, ny + 1)[None, :]
    g *= np.exp(-decay * (ks * ks + ls * ls))
    if real_valued:
        g = (g + np.conj(g[::-1, ::-1])) / 2
    g[nx, ny] = 0.0
    return SpectralField(nx, ny, g, real_valued=real_valued, copy=False)


def save_field(field, path):
    """Write the field as CSV: a header carrying nx, ny and the reality
    flag, then one ``k,l,re,im`` row per nonzero coefficient."""
    lines = [f"# nx={field.nx} ny={field.ny} reality={int(field.real_valued)}"]
    lines.append("k,l,re,im")
    for i in range(2 * field.nx + 1):
        for j in range(2 * field.ny + 1):
            c = field.coeffs[i, j]
            if c != 0:
                lines.append(
                    f"{i - field.nx},{j - field.ny},"
                    f"{c.real:.17g},{c.imag:.17g}"
                )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path):
    """Inverse of :func:`save_field`."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing field header")
        meta = dict(item.split("=") for item in header[1:].split())
        nx = int(meta["nx"])
        ny = int(meta["ny"])
        reality = bool(int(meta["reality"]))
        fh.readline()  # column names
        c = np.zeros((2 * nx + 1, 2 * ny + 1), dtype=complex)
        for line in fh:
            line = line.strip()
            if not line:
                continue
            k, l, re, im = line.split(",")
            c[int(k) + nx, int(l) + ny] = float(re) + 1j * float(im)
    return SpectralField(nx, ny, c, real_valued=reality, copy=False)
