"""Dense non-Hermitian eigenvalue studies and viscosity scaling fits.

Spectra are computed with LAPACK's general dense solver (Hessenberg
reduction plus shifted QR, backward stable) via numpy; matrices here are at
most a few thousand square, so the dense route is the robust default.
Eigenvalues are sorted by descending real part with ties broken by
ascending imaginary part, which makes sweep tables and rank-collapse plots
deterministic.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import operators

THREADS_ENV = "BARFLOW_THREADS"


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenvalues plus the parameters of the matrix they came from."""

    eigenvalues: np.ndarray
    params: dict

    def __len__(self):
        return len(self.eigenvalues)


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares line through (ln nu, ln |Re lambda_1|)."""

    samples: tuple
    slope: float
    intercept: float
    max_residual: float


def _sort(vals, tie_tol=1e-9):
    """Descending real part; within real-part ties, ascending imaginary part.

    Ties are detected up to ``tie_tol`` times the real-part scale, so
    conjugate pairs (whose computed real parts differ only by rounding)
    order deterministically across runs and truncations.
    """
    order = np.lexsort((vals.imag, -vals.real))
    v = vals[order]
    n = len(v)
    if n == 0:
        return v
    scale = max(1.0, float(np.abs(v.real).max()))
    out = v.copy()
    i = 0
    while i < n:
        j = i + 1
        while j < n and abs(v[j].real - v[j - 1].real) <= tie_tol * scale:
            j += 1
        if j - i > 1:
            seg = v[i:j]
            out[i:j] = seg[np.argsort(seg.imag, kind="stable")]
        i = j
    return out


def _params_of(op):
    if hasattr(op, "params"):
        return op.params()
    return {}


def compute_spectrum(op):
    """All eigenvalues of a built operator, sorted.

    Raises ValueError on non-finite entries and RuntimeError (with the
    build parameters attached) if the QR iteration fails to converge.
    """
    mat = np.asarray(op.matrix)
    if not np.all(np.isfinite(mat)):
        raise ValueError(f"matrix has non-finite entries: {_params_of(op)}")
    try:
        vals = np.linalg.eigvals(mat)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed for {_params_of(op)}: {exc}") from exc
    return Spectrum(_sort(vals), _params_of(op))


def compute_eigsystem(op):
    """Eigenvalues and right eigenvectors, sorted consistently."""
    mat = np.asarray(op.matrix)
    if not np.all(np.isfinite(mat)):
        raise ValueError(f"matrix has non-finite entries: {_params_of(op)}")
    try:
        vals, vecs = np.linalg.eig(mat)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed for {_params_of(op)}: {exc}") from exc
    order = np.lexsort((vals.imag, -vals.real))
    return Spectrum(vals[order], _params_of(op)), vecs[:, order]


def least_decaying(spectrum):
    """First eigenvalue under the sort order (largest real part)."""
    if len(spectrum) == 0:
        raise ValueError("empty spectrum")
    return complex(spectrum.eigenvalues[0])


def _thread_count(threads):
    if threads is not None:
        return max(1, int(threads))
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def nu_sweep(ell, trunc, nus, amplitude=1.0, variant="full", threads=None):
    """One spectrum per viscosity, with the advective amplitude held fixed.

    The slice is built at t = 0 with a = amplitude, so the shear amplitude
    a e^{-nu t} equals ``amplitude`` independently of nu.  Results are
    returned in the input nu order regardless of how the solves are
    scheduled (``BARFLOW_THREADS`` controls the pool size).
    """
    nus = [float(v) for v in nus]
    if any(v <= 0 for v in nus):
        raise ValueError("viscosities must be positive")
    if len(set(nus)) != len(nus):
        raise ValueError("viscosities must be distinct")

    def solve(nu):
        return compute_spectrum(bar_slice_for(ell, trunc, nu, amplitude, variant))

    nworkers = _thread_count(threads)
    if nworkers == 1 or len(nus) == 1:
        spectra = [solve(nu) for nu in nus]
    else:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            spectra = list(pool.map(solve, nus))
    return list(zip(nus, spectra))


def bar_slice_for(ell, trunc, nu, amplitude, variant):
    if variant == "symmetrized":
        return operators.symmetrized_bar_slice(ell, trunc, nu, amplitude, 0.0)
    return operators.bar_slice(ell, trunc, nu, amplitude, 0.0, variant)


def fit_scaling(sweep):
    """Log-log fit of |Re lambda_1| against nu over a sweep result.

    Accepts either ``[(nu, Spectrum), ...]`` or ``[(nu, value), ...]``.
    Needs at least three samples; a vanishing |Re lambda_1| is rejected.
    """
    points = []
    for nu, item in sweep:
        value = abs(least_decaying(item).real) if isinstance(item, Spectrum) else abs(item)
        points.append((float(nu), float(value)))
    if len(points) < 3:
        raise ValueError("need at least 3 samples for a scaling fit")
    if any(v == 0 for _, v in points):
        raise ValueError("|Re lambda_1| = 0 cannot enter a log-log fit")
    x = np.log([p[0] for p in points])
    y = np.log([p[1] for p in points])
    slope, intercept = np.polyfit(x, y, 1)
    resid = np.abs(y - (slope * x + intercept)).max()
    return ScalingFit(tuple(points), float(slope), float(intercept), float(resid))


def collapse_table(ell, trunc, nus, count, amplitude=1.0, variant="full", threads=None):
    """Rows (rank, nu, Re lambda_rank / sqrt(nu)) for the first ``count``
    eigenvalues of each sweep member; rank is 1-based."""
    sweep = nu_sweep(ell, trunc, nus, amplitude, variant, threads)
    dim = len(sweep[0][1])
    if count > dim:
        raise ValueError(f"count={count} exceeds matrix dimension {dim}")
    rows = []
    for nu, spec in sweep:
        scaled = spec.eigenvalues.real[:count] / np.sqrt(nu)
        for rank in range(count):
            rows.append((rank + 1, nu, float(scaled[rank])))
    return rows


def eigen_residual(op):
    """max_i ||M v_i - lambda_i v_i|| / (||M|| ||v_i||) over all eigenpairs."""
    spec, vecs = compute_eigsystem(op)
    mat = np.asarray(op.matrix)
    mnorm = np.linalg.norm(mat, 2)
    worst = 0.0
    mv = mat @ vecs
    for i, lam in enumerate(spec.eigenvalues):
        r = np.linalg.norm(mv[:, i] - lam * vecs[:, i])
        worst = max(worst, r / (mnorm * np.linalg.norm(vecs[:, i])))
    return worst
