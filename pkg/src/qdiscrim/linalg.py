"""Small fixed-size complex linear algebra used throughout the library.

States and operators live on plain numpy arrays: 2- and 4-component complex
vectors, 2x2 and 4x4 complex matrices.  Two-qubit indices are ordered
Alice-major, i.e. the product basis is (HH, HV, VH, VV), and ``kron`` takes
the Alice factor first so that index arithmetic matches that ordering.

The Hermitian eigensolver is a cyclic Jacobi iteration specialised to these
tiny dimensions; it returns deterministically ordered, phase-fixed
eigenpairs so that downstream results are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, NotHermitianError, NotUnitaryError

SQRT1_2 = 1.0 / np.sqrt(2.0)

# Single-qubit polarisation kets in the (H, V) computational basis.
KET_H = np.array([1.0, 0.0], dtype=complex)
KET_V = np.array([0.0, 1.0], dtype=complex)
KET_D = np.array([SQRT1_2, SQRT1_2], dtype=complex)
KET_A = np.array([SQRT1_2, -SQRT1_2], dtype=complex)
KET_R = np.array([SQRT1_2, 1j * SQRT1_2], dtype=complex)
KET_L = np.array([SQRT1_2, -1j * SQRT1_2], dtype=complex)

PAULI_Y = np.array([[0.0, -1j], [1j, 0.0]], dtype=complex)
# Phase flip: H -> H, V -> -V.
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)
ID4 = np.eye(4, dtype=complex)

NORM_ATOL = 1e-12
UNITARY_ATOL = 1e-12
HERMITIAN_ATOL = 1e-10

_JACOBI_OFF_THRESHOLD = 1e-14
_JACOBI_MAX_SWEEPS = 100


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(m).conj().T


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the Alice factor first (Alice-major indexing)."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def projector(v: np.ndarray) -> np.ndarray:
    """Rank-1 projector |v><v| of a (not necessarily normalised) vector."""
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def perp2(v: np.ndarray) -> np.ndarray:
    """The canonical unit vector orthogonal to a single-qubit unit vector.

    For v = (x, y) returns (-conj(y), conj(x)); together they form an
    orthonormal basis of C^2.
    """
    v = np.asarray(v, dtype=complex)
    return np.array([-np.conj(v[1]), np.conj(v[0])], dtype=complex)


def is_normalized(v: np.ndarray, atol: float = NORM_ATOL) -> bool:
    return bool(abs(np.linalg.norm(v) - 1.0) <= atol)


def require_unitary(m: np.ndarray, atol: float = UNITARY_ATOL) -> np.ndarray:
    """Return ``m`` as a complex array, raising NotUnitaryError when m m^† != I."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotUnitaryError(f"expected a square matrix, got shape {m.shape}")
    dev = np.abs(m @ dagger(m) - np.eye(m.shape[0])).max()
    if dev > atol:
        raise NotUnitaryError(f"matrix deviates from unitarity by {dev:.3e}")
    return m


def require_hermitian(m: np.ndarray, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Return the exactly symmetrised copy of ``m``, or raise NotHermitianError."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise NotHermitianError("matrix contains non-finite entries")
    dev = np.abs(m - dagger(m)).max()
    if dev > atol:
        raise NotHermitianError(f"matrix deviates from hermiticity by {dev:.3e}")
    return (m + dagger(m)) / 2.0


@dataclass(frozen=True)
class HermitianEig:
    """Eigendecomposition of a Hermitian matrix.

    eigenvalues are real and ascending; eigenvectors[:, k] is the unit
    eigenvector of eigenvalues[k] with its largest-magnitude component made
    real and positive.  Exact eigenvalue ties are broken by lexicographic
    comparison of the eigenvectors' real parts, so the ordering is total.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _fix_phase(v: np.ndarray) -> np.ndarray:
    j = int(np.argmax(np.abs(v)))
    a = v[j]
    if abs(a) == 0.0:
        return v
    return v * (np.conj(a) / abs(a))


def hermitian_eig(m: np.ndarray, atol: float = HERMITIAN_ATOL) -> HermitianEig:
    """Diagonalise a small Hermitian matrix by cyclic Jacobi rotations.

    Each sweep zeroes every off-diagonal pivot (p, q) in turn with a complex
    plane rotation; sweeps repeat until the largest off-diagonal magnitude
    falls below 1e-14 relative to the input scale.  The iteration cap is 100
    sweeps, far above what dimension 4 ever needs.

    Raises NotHermitianError for non-Hermitian input and ConvergenceFailure
    if the cap is exhausted.
    """
    a = require_hermitian(m, atol)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.abs(a).max()))
    threshold = _JACOBI_OFF_THRESHOLD * scale

    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.abs(a - np.diag(np.diag(a))).max()
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                if abs(b) <= threshold:
                    continue
                # Phase out the pivot, then apply the classical real rotation
                # with |angle| <= pi/4 (guarantees cyclic-sweep convergence).
                phase = b / abs(b)
                tau = (a[q, q].real - a[p, p].real) / (2.0 * abs(b))
                if tau == 0.0:
                    t = 1.0
                else:
                    t = np.sign(tau) / (abs(tau) + np.hypot(tau, 1.0))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                g = np.eye(n, dtype=complex)
                g[p, p] = c
                g[p, q] = s
                g[q, p] = -np.conj(phase) * s
                g[q, q] = np.conj(phase) * c
                a = dagger(g) @ a @ g
                v = v @ g
        a = (a + dagger(a)) / 2.0
    else:
        raise ConvergenceFailure(
            f"Jacobi sweeps exhausted ({_JACOBI_MAX_SWEEPS}) before reaching "
            f"off-diagonal threshold {threshold:.3e}"
        )

    eigenvalues = np.diag(a).real.copy()
    vectors = [_fix_phase(v[:, k].copy()) for k in range(n)]
    order = sorted(range(n), key=lambda k: (eigenvalues[k], tuple(vectors[k].real)))
    eigenvalues = np.array([eigenvalues[k] for k in order])
    eigenvectors = np.column_stack([vectors[k] for k in order])
    return HermitianEig(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def trace_norm(m: np.ndarray, atol: float = HERMITIAN_ATOL) -> float:
    """Trace norm (sum of absolute eigenvalues) of a Hermitian matrix."""
    eig = hermitian_eig(m, atol)
    return float(np.abs(eig.eigenvalues).sum())
