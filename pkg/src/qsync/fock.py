"""Truncated Fock-space operators and density matrices.

Tensor products are Kronecker-ordered with factor 0 leftmost, so for two
oscillators the basis index of ``|n1 n2>`` is ``n1 * N2 + n2``.

Superoperators act on row-major vectorized density matrices,
``vec(rho)[i * d + j] = rho[i, j]``, for which
``vec(A rho B) = kron(A, B.T) @ vec(rho)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from math import prod
from numbers import Number
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

__all__ = [
    "FockSpace",
    "FockOperator",
    "DensityMatrix",
    "destroy",
    "create",
    "number",
    "identity",
    "partial_trace",
    "fock_dm",
    "coherent_dm",
    "thermal_dm",
    "maximally_mixed",
    "vec",
    "unvec",
    "spre",
    "spost",
    "sprepost",
    "total_number_labels",
]

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-8


@dataclass(frozen=True)
class FockSpace:
    """Tensor product of truncated single-mode Fock spaces."""

    factors: tuple[int, ...]

    def __init__(self, *factors: int | Sequence[int]):
        if len(factors) == 1 and not isinstance(factors[0], (int, np.integer)):
            factors = tuple(factors[0])
        dims = tuple(int(n) for n in factors)
        if not dims:
            raise ValueError("FockSpace needs at least one factor")
        if any(n < 2 for n in dims):
            raise ValueError(f"every factor needs dimension >= 2, got {dims}")
        object.__setattr__(self, "factors", dims)

    @property
    def dim(self) -> int:
        return prod(self.factors)

    @property
    def nmodes(self) -> int:
        return len(self.factors)

    def __repr__(self) -> str:
        return f"FockSpace{self.factors}"


def _as_sparse(data) -> sp.csr_matrix:
    if sp.issparse(data):
        return sp.csr_matrix(data, dtype=complex)
    return sp.csr_matrix(np.asarray(data, dtype=complex))


class FockOperator:
    """Matrix on a :class:`FockSpace`; immutable, sparse storage.

    Supports ``+``, ``-``, scalar ``*``, operator products with ``@`` (or
    ``*`` between two operators), integer powers with ``**`` and the
    adjoint via :meth:`dag`.
    """

    __slots__ = ("space", "_data")
    __array_priority__ = 100

    def __init__(self, space: FockSpace, data):
        mat = _as_sparse(data)
        if mat.shape != (space.dim, space.dim):
            raise ValueError(
                f"operator shape {mat.shape} does not match {space} (dim {space.dim})"
            )
        mat.sum_duplicates()
        mat.eliminate_zeros()
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "_data", mat)

    def __setattr__(self, name, value):
        raise AttributeError("FockOperator is immutable")

    @property
    def data(self) -> sp.csr_matrix:
        return self._data.copy()

    @property
    def sparse(self) -> sp.csr_matrix:
        # shared reference; callers must not mutate
        return self._data

    def full(self) -> np.ndarray:
        return self._data.toarray()

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    def _check(self, other: FockOperator) -> None:
        if other.space != self.space:
            raise ValueError(f"space mismatch: {self.space} vs {other.space}")

    def dag(self) -> FockOperator:
        return FockOperator(self.space, self._data.conj().T)

    def __add__(self, other):
        if isinstance(other, FockOperator):
            self._check(other)
            return FockOperator(self.space, self._data + other._data)
        if isinstance(other, Number):
            if other == 0:
                return self
            return self + other * identity(self.space)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return FockOperator(self.space, -self._data)

    def __sub__(self, other):
        if isinstance(other, (FockOperator, Number)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, FockOperator):
            return self @ other
        if isinstance(other, Number):
            return FockOperator(self.space, self._data * complex(other))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return FockOperator(self.space, self._data * complex(other))
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Number):
            return self * (1.0 / other)
        return NotImplemented

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            self._check(other)
            return FockOperator(self.space, self._data @ other._data)
        return NotImplemented

    def __pow__(self, n: int):
        if int(n) != n or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = identity(self.space)
        for _ in range(int(n)):
            result = result @ self
        return result

    def __eq__(self, other):
        if not isinstance(other, FockOperator) or other.space != self.space:
            return False
        return abs(self._data - other._data).sum() == 0

    __hash__ = None

    def allclose(self, other: FockOperator, atol: float = 1e-12) -> bool:
        self._check(other)
        diff = abs(self._data - other._data)
        return diff.nnz == 0 or diff.max() <= atol

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return self.allclose(self.dag(), atol)

    def __repr__(self) -> str:
        return f"FockOperator({self.space}, nnz={self._data.nnz})"


def _embed(space: FockSpace, which: int, single) -> sp.csr_matrix:
    mats = [sp.identity(n, dtype=complex, format="csr") for n in space.factors]
    mats[which] = single
    return reduce(lambda x, y: sp.kron(x, y, format="csr"), mats)


def destroy(space: FockSpace | int, which: int = 0) -> FockOperator:
    """Annihilation operator on factor ``which`` (identity elsewhere)."""
    if not isinstance(space, FockSpace):
        space = FockSpace(space)
    if not 0 <= which < space.nmodes:
        raise IndexError(f"mode index {which} out of range for {space}")
    n = space.factors[which]
    single = sp.diags(np.sqrt(np.arange(1, n, dtype=float)), 1, format="csr")
    return FockOperator(space, _embed(space, which, single))


def create(space: FockSpace | int, which: int = 0) -> FockOperator:
    return destroy(space, which).dag()


def number(space: FockSpace | int, which: int = 0) -> FockOperator:
    a = destroy(space, which)
    return a.dag() @ a


def identity(space: FockSpace | int) -> FockOperator:
    if not isinstance(space, FockSpace):
        space = FockSpace(space)
    return FockOperator(space, sp.identity(space.dim, dtype=complex, format="csr"))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite state on a FockSpace.

    Validation runs at construction; pass ``check=False`` for intermediate
    objects such as propagated non-physical vectors.
    """

    space: FockSpace
    data: np.ndarray = field(repr=False)
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        mat = np.array(self.data, dtype=complex)
        if mat.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"density matrix shape {mat.shape} does not match {self.space}")
        mat.setflags(write=False)
        object.__setattr__(self, "data", mat)
        if self.check:
            self.validate()

    def validate(self) -> None:
        herm = np.max(np.abs(self.data - self.data.conj().T)) if self.data.size else 0.0
        if herm > HERMITIAN_TOL:
            raise ValueError(f"density matrix not Hermitian (max deviation {herm:.3g})")
        tr = np.trace(self.data)
        if abs(tr - 1) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr:.12g} != 1")
        emin = self.min_eigenvalue()
        if emin < -PSD_TOL:
            raise ValueError(f"density matrix not PSD (min eigenvalue {emin:.3g})")

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.data + self.data.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def expect(self, op: FockOperator) -> complex:
        if op.space != self.space:
            raise ValueError(f"space mismatch: {op.space} vs {self.space}")
        # Tr[A rho] = sum_ij A_ij rho_ji
        A = op.sparse.tocoo()
        return complex(np.sum(A.data * self.data[A.col, A.row]))

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.data)).copy()

    def vec(self) -> np.ndarray:
        return self.data.reshape(-1).copy()

    def trace_distance(self, other: DensityMatrix) -> float:
        diff = self.data - other.data
        diff = 0.5 * (diff + diff.conj().T)
        return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def partial_trace(rho: DensityMatrix, keep: int) -> DensityMatrix:
    """Reduced state of mode ``keep``; requires at least two factors."""
    space = rho.space
    if space.nmodes < 2:
        raise ValueError("partial_trace needs a multi-mode state")
    if not 0 <= keep < space.nmodes:
        raise IndexError(f"mode index {keep} out of range for {space}")
    dims = space.factors
    k = len(dims)
    t = np.asarray(rho.data).reshape(dims + dims)
    # trace out every other mode pairwise
    row = list(range(k))
    col = [i + k for i in range(k)]
    for i in range(k):
        if i != keep:
            col[i] = row[i]
    out = np.einsum(t, row + col, [keep, keep + k])
    return DensityMatrix(FockSpace(dims[keep]), out, check=rho.check)


def fock_dm(space: FockSpace | int, occupations: int | Sequence[int]) -> DensityMatrix:
    if not isinstance(space, FockSpace):
        space = FockSpace(space)
    occ = [occupations] if np.isscalar(occupations) else list(occupations)
    if len(occ) != space.nmodes:
        raise ValueError("one occupation per mode required")
    idx = int(np.ravel_multi_index(occ, space.factors))
    mat = np.zeros((space.dim, space.dim), dtype=complex)
    mat[idx, idx] = 1.0
    return DensityMatrix(space, mat)


def coherent_dm(space: FockSpace | int, alpha: complex, normalize: bool = True) -> DensityMatrix:
    """Projector onto the truncated coherent state ``|alpha>`` (single mode).

    Amplitudes are the exact Poisson amplitudes; with ``normalize=False`` the
    truncation loss is kept, so expectations equal the infinite-space values
    up to the missing tail.
    """
    if not isinstance(space, FockSpace):
        space = FockSpace(space)
    if space.nmodes != 1:
        raise ValueError("coherent_dm builds single-mode states")
    n = np.arange(space.dim)
    logmag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha) if alpha else 1.0) - 0.5 * gammaln(n + 1)
    amp = np.exp(logmag) * np.exp(1j * n * np.angle(alpha)) if alpha else (n == 0).astype(complex)
    if normalize:
        amp = amp / np.linalg.norm(amp)
    mat = np.outer(amp, amp.conj())
    return DensityMatrix(space, mat, check=normalize)


def thermal_dm(space: FockSpace | int, nbar: float) -> DensityMatrix:
    if not isinstance(space, FockSpace):
        space = FockSpace(space)
    if space.nmodes != 1:
        raise ValueError("thermal_dm builds single-mode states")
    n = np.arange(space.dim)
    p = (nbar / (1 + nbar)) ** n
    return DensityMatrix(space, np.diag(p / p.sum()).astype(complex))


def maximally_mixed(space: FockSpace) -> DensityMatrix:
    return DensityMatrix(space, np.eye(space.dim, dtype=complex) / space.dim)


def vec(mat: np.ndarray) -> np.ndarray:
    return np.asarray(mat).reshape(-1)


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return v.reshape(dim, dim)


def _mat(op) -> sp.csr_matrix:
    return op.sparse if isinstance(op, FockOperator) else _as_sparse(op)


def spre(op) -> sp.csr_matrix:
    """Superoperator of ``rho -> op @ rho``."""
    A = _mat(op)
    return sp.kron(A, sp.identity(A.shape[0], format="csr"), format="csr")


def spost(op) -> sp.csr_matrix:
    """Superoperator of ``rho -> rho @ op``."""
    B = _mat(op)
    return sp.kron(sp.identity(B.shape[0], format="csr"), B.T, format="csr")


def sprepost(a, b) -> sp.csr_matrix:
    """Superoperator of ``rho -> a @ rho @ b``."""
    return sp.kron(_mat(a), _mat(b).T, format="csr")


def total_number_labels(space: FockSpace) -> np.ndarray:
    """Excitation number ``sum_k n_k`` of every basis state."""
    grids = np.indices(space.factors).reshape(space.nmodes, -1)
    return grids.sum(axis=0)
