"""Eigen decompositions with a deterministic ordering contract.

Backed by LAPACK through numpy.linalg (geev does the balancing +
Hessenberg + shifted-QR pipeline; eigh the symmetric tridiagonal one).
The value-add here is the canonical ordering: modulus descending, then
absolute argument ascending, conjugate pairs with the positive-imaginary
member first.  That makes spectra reproducible across runs and platforms.
"""
from __future__ import annotations

import numpy as np

__all__ = ["MAX_DIM", "eig_general", "eig_symmetric", "sort_complex_spectrum"]

MAX_DIM = 2000
SYMMETRY_TOL = 1e-9


def sort_complex_spectrum(values: np.ndarray) -> np.ndarray:
    """Order eigenvalues canonically: |z| desc, |arg z| asc, +imag before -imag."""
    values = np.asarray(values, dtype=complex)
    keys = np.array(
        [(-abs(z), abs(np.angle(z)), -z.imag, -z.real) for z in values],
        dtype=float,
    )
    order = np.lexsort(keys.T[::-1])
    return values[order]


def eig_general(m: np.ndarray) -> np.ndarray:
    """All eigenvalues of a real square matrix, canonically ordered."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if m.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {m.shape[0]} exceeds the supported cap {MAX_DIM}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or infinite entries")
    try:
        values = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"eigenvalue iteration failed to converge: {exc}") from exc
    return sort_complex_spectrum(values)


def eig_symmetric(m: np.ndarray, k: int | None = None, which: str = "smallest"):
    """Eigenpairs of a symmetric real matrix.

    Returns (values, vectors) with vectors in columns, restricted to the k
    smallest or largest eigenvalues (all of them when k is None).
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or infinite entries")
    scale = max(1.0, float(np.abs(m).max()))
    if float(np.abs(m - m.T).max()) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is asymmetric beyond tolerance")
    if which not in ("smallest", "largest"):
        raise ValueError(f"which must be 'smallest' or 'largest', got {which!r}")
    n = m.shape[0]
    if k is None:
        k = n
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    values, vectors = np.linalg.eigh(0.5 * (m + m.T))  # ascending
    if which == "smallest":
        idx = np.arange(k)
    else:
        idx = np.arange(n - k, n)[::-1]
    return values[idx], vectors[:, idx]
