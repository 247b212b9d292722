"""Dense operator algebra on plain complex numpy arrays.

Every operator in the package is a square ``complex128`` ndarray. Functions
that act on a single matrix also accept stacks of shape ``(..., d, d)``
where that is cheap to support (``unitary_exp``, ``commutator``).
"""
from math import comb

import numpy as np

from .exceptions import DensityMatrixError, DimensionError, HermiticityError

HERMITIAN_RTOL = 1e-10

_PAULI = {
    "0": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(axis):
    """Return the Pauli matrix for ``axis`` in {"x", "y", "z", "0"}."""
    key = str(axis).lower()
    if key in ("i", "id", "identity"):
        key = "0"
    try:
        return _PAULI[key].copy()
    except KeyError:
        raise ValueError(f"invalid Pauli axis {axis!r}; expected one of x, y, z, 0") from None


def as_operator(a):
    """Coerce ``a`` to a square complex matrix, raising DimensionError otherwise."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def _check_same_dim(a, b):
    if a.shape[-2:] != b.shape[-2:]:
        raise DimensionError(f"dimension mismatch: {a.shape[-2:]} vs {b.shape[-2:]}")


def hermiticity_error(a):
    """Largest entrywise deviation max|A - A^dagger| (over a stack if given)."""
    a = np.asarray(a)
    return float(np.max(np.abs(a - np.swapaxes(a, -1, -2).conj()), initial=0.0))


def is_hermitian(a, rtol=HERMITIAN_RTOL):
    a = np.asarray(a)
    scale = float(np.max(np.abs(a), initial=0.0))
    return hermiticity_error(a) <= rtol * max(scale, 1e-300)


def check_hermitian(a, name="operator", rtol=HERMITIAN_RTOL):
    """Raise HermiticityError unless ``a`` is Hermitian to ``rtol`` relative."""
    if not is_hermitian(a, rtol):
        raise HermiticityError(
            f"{name} is not Hermitian: max|A - A^dagger| = {hermiticity_error(a):.3e}"
        )


def tensor(ops):
    """Kronecker product of ``ops`` in list order."""
    ops = list(ops)
    if not ops:
        raise ValueError("tensor() needs at least one operator")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def embed_site(op, site, n_sites, local_dim=None):
    """Place ``op`` at position ``site`` of an ``n_sites`` chain of identities."""
    op = as_operator(op)
    if local_dim is None:
        local_dim = op.shape[0]
    if op.shape[0] != local_dim:
        raise DimensionError(f"operator dim {op.shape[0]} != local_dim {local_dim}")
    if not 0 <= site < n_sites:
        raise IndexError(f"site {site} out of range for {n_sites} sites")
    eye = np.eye(local_dim, dtype=complex)
    return tensor([op if k == site else eye for k in range(n_sites)])


def commutator(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _check_same_dim(a, b)
    return a @ b - b @ a


def nested_commutator(a, b, j):
    """j-fold right-nested commutator [[[A, B], B], ...]; j = 0 returns A."""
    if j < 0:
        raise ValueError("nesting depth must be nonnegative")
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _check_same_dim(a, b)
    out = a.copy()
    for _ in range(j):
        out = out @ b - b @ out
    return out


def binomial_commutator_expansion(a, b, n):
    """Right-hand side of A B^n = sum_j C(n, j) B^(n-j) Com^j(A, B)."""
    out = np.zeros_like(np.asarray(a, dtype=complex))
    for j in range(n + 1):
        out += comb(n, j) * np.linalg.matrix_power(b, n - j) @ nested_commutator(a, b, j)
    return out


def _canonical_basis(vecs):
    # Gram-Schmidt of the projected standard basis, in input order
    d, k = vecs.shape
    proj = vecs @ vecs.conj().T
    basis = []
    for col in range(d):
        v = proj[:, col].copy()
        for u in basis:
            v -= (u.conj() @ v) * u
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis.append(v / norm)
            if len(basis) == k:
                break
    return np.column_stack(basis)


def _fix_phase(v):
    idx = np.argmax(np.abs(v) > np.abs(v).max() * (1 - 1e-9))
    return v * (abs(v[idx]) / v[idx])


def hermitian_eig(a, degeneracy_tol=1e-9):
    """Eigen-decomposition of a Hermitian matrix with reproducible eigenvectors.

    Eigenvalues are ascending. Within a degenerate cluster the eigenvectors
    are replaced by Gram-Schmidt of the projected standard basis, and every
    vector's phase is fixed so its first dominant entry is real positive.
    """
    a = as_operator(a)
    check_hermitian(a)
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    scale = max(float(np.max(np.abs(w), initial=0.0)), 1.0)
    start = 0
    n = len(w)
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[start] <= degeneracy_tol * scale:
            stop += 1
        if stop - start > 1:
            v[:, start:stop] = _canonical_basis(v[:, start:stop])
        start = stop
    for k in range(n):
        v[:, k] = _fix_phase(v[:, k])
    return w, v


def unitary_exp(h, s=1.0):
    """exp(-i s H) for Hermitian H (or a stack of them) by eigendecomposition."""
    h = np.asarray(h, dtype=complex)
    check_hermitian(h, "generator")
    w, v = np.linalg.eigh(h)
    phase = np.exp(-1j * s * w)
    return (v * phase[..., None, :]) @ np.swapaxes(v, -1, -2).conj()


def gibbs_state(h, beta):
    """Normalized exp(-beta H), with the ground energy subtracted first."""
    h = as_operator(h)
    if not (np.isfinite(beta) and beta > 0):
        raise ValueError(f"beta must be finite and positive, got {beta}")
    check_hermitian(h, "Hamiltonian")
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    p = np.exp(-beta * (w - w[0]))
    p /= p.sum()
    rho = (v * p) @ v.conj().T
    return 0.5 * (rho + rho.conj().T)


def partial_trace(rho, factor_dims, keep):
    """Reduce ``rho`` on the tensor factors listed in ``keep`` (others traced)."""
    rho = as_operator(rho)
    dims = [int(d) for d in factor_dims]
    if int(np.prod(dims)) != rho.shape[0]:
        raise DimensionError(f"factor dims {dims} do not multiply to {rho.shape[0]}")
    keep = sorted({int(k) for k in ([keep] if np.isscalar(keep) else keep)})
    if not keep:
        raise ValueError("keep must name at least one factor")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise IndexError(f"keep indices {keep} out of range for {len(dims)} factors")
    n = len(dims)
    t = rho.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for k in range(n):
        if k not in keep:
            col[k] = row[k]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = int(np.prod([dims[k] for k in keep]))
    return reduced.reshape(d, d)


def expect(rho, op):
    """Real expectation value Tr(rho op)."""
    return float(np.real(np.trace(np.asarray(rho) @ np.asarray(op))))


def check_density_matrix(rho, trace_tol=1e-9, herm_tol=1e-10, pos_tol=1e-8):
    """Validate trace, Hermiticity and numerical positivity of a state."""
    rho = as_operator(rho)
    tr = np.trace(rho)
    if abs(tr - 1) > trace_tol:
        raise DensityMatrixError(f"trace {tr.real:.12g} differs from 1")
    herm = hermiticity_error(rho)
    if herm > herm_tol:
        raise DensityMatrixError(f"state is not Hermitian (deviation {herm:.3e})")
    lowest = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    if lowest < -pos_tol:
        raise DensityMatrixError(f"state has negative eigenvalue {lowest:.3e}")
    return rho
