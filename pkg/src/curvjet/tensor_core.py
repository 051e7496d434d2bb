"""Point-level curvature algebra over exact rationals.

A curvature model is a nondegenerate symmetric form ``eps`` together with an
algebraic curvature tensor ``A``, optionally carrying a (para-)Hermitian or
hyper structure.  All indices are 0-based in code; anything reported to a
user (violation witnesses, documents) is 1-based.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from gmpy2 import mpq

from . import rational as rl
from .errors import DegenerateFormError, DimensionError, PreconditionError, StructureError
from .rational import ONE, ZERO, Matrix, Q

KINDS = ("plain", "hermitian", "para", "hyper-pseudo", "hyper-para")
HYPER_KINDS = ("hyper-pseudo", "hyper-para")


# -- bilinear forms ------------------------------------------------------------

@dataclass(frozen=True)
class BilinearForm:
    """Nondegenerate symmetric form; ``signature = (p, q)`` counts (negative, positive)."""

    eps: Matrix
    eps_inv: Matrix = field(init=False, repr=False, compare=False)
    signature: tuple[int, int] = field(init=False, compare=False)

    def __post_init__(self):
        eps = rl.matrix(self.eps)
        m, c = rl.shape(eps)
        if m < 1 or m != c:
            raise DimensionError("form must be a nonempty square matrix")
        if not rl.is_symmetric(eps):
            raise DegenerateFormError("form is not symmetric")
        try:
            inv = rl.inverse(eps)
        except DegenerateFormError:
            raise DegenerateFormError("form is degenerate") from None
        neg, pos, _ = rl.inertia(eps)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "eps_inv", inv)
        object.__setattr__(self, "signature", (neg, pos))

    @property
    def m(self) -> int:
        return len(self.eps)

    def inner(self, u: Sequence, v: Sequence) -> mpq:
        return sum((u[i] * self.eps[i][j] * v[j] for i in range(self.m) for j in range(self.m)
                    if u[i] and v[j]), ZERO)

    def is_orthonormal(self) -> bool:
        """True when ``eps`` is diagonal with entries +-1."""
        return all((self.eps[i][j] in (ONE, -ONE)) if i == j else self.eps[i][j] == 0
                   for i in range(self.m) for j in range(self.m))


def standard_form(p: int, q: int) -> BilinearForm:
    """``diag(-1 x p, +1 x q)``: negative directions first."""
    return BilinearForm(rl.diag([-1] * p + [1] * q))


# -- algebraic curvature tensors ----------------------------------------------

def _sym_images(i, j, k, l):
    """The eight index images of A_ijkl under the Z2^3 symmetries, with signs."""
    return (((i, j, k, l), 1), ((j, i, k, l), -1), ((i, j, l, k), -1), ((j, i, l, k), 1),
            ((k, l, i, j), 1), ((l, k, i, j), -1), ((k, l, j, i), -1), ((l, k, j, i), 1))


class CurvTensor:
    """Dense rank-4 array of rationals addressed as ``A[i, j, k, l]``."""

    __slots__ = ("m", "_data")

    def __init__(self, m: int, data: Sequence):
        if m < 1:
            raise DimensionError("dimension must be positive")
        if len(data) != m ** 4:
            raise DimensionError(f"expected {m ** 4} entries, got {len(data)}")
        self.m = m
        self._data = tuple(Q(x) for x in data)

    @classmethod
    def zero(cls, m: int) -> "CurvTensor":
        return cls(m, (ZERO,) * m ** 4)

    @classmethod
    def from_function(cls, m: int, f) -> "CurvTensor":
        return cls(m, [f(i, j, k, l) for i, j, k, l in itertools.product(range(m), repeat=4)])

    @classmethod
    def from_entries(cls, m: int, entries: Mapping[tuple, object]) -> "CurvTensor":
        """Raw construction: listed entries set, everything else zero, no symmetrization."""
        data = [ZERO] * m ** 4
        for (i, j, k, l), v in entries.items():
            data[((i * m + j) * m + k) * m + l] = Q(v)
        return cls(m, data)

    @classmethod
    def from_canonical(cls, m: int, entries: Mapping[tuple, object]) -> "CurvTensor":
        """Write each given entry into all eight symmetry images.

        Raises :class:`StructureError` when two entries (or one entry and its own
        image, e.g. a nonzero ``A_iikl``) demand different values of one slot.
        The first Bianchi identity is *not* imposed; validate afterwards.
        """
        data: dict[int, mpq] = {}
        for idx, v in entries.items():
            if len(idx) != 4 or any(not 0 <= t < m for t in idx):
                raise DimensionError(f"index {idx} out of range for m={m}")
            v = Q(v)
            for (a, b, c, d), s in _sym_images(*idx):
                pos = ((a * m + b) * m + c) * m + d
                val = v if s > 0 else -v
                if pos in data and data[pos] != val:
                    raise StructureError(
                        f"inconsistent entries at {tuple(t + 1 for t in (a, b, c, d))}: "
                        f"{rl.fmt(data[pos])} vs {rl.fmt(val)}")
                data[pos] = val
        flat = [ZERO] * m ** 4
        for pos, v in data.items():
            flat[pos] = v
        return cls(m, flat)

    def __getitem__(self, idx) -> mpq:
        i, j, k, l = idx
        m = self.m
        return self._data[((i * m + j) * m + k) * m + l]

    @property
    def data(self) -> tuple:
        return self._data

    def entries(self) -> dict[tuple, mpq]:
        m = self.m
        return {idx: v for idx, v in zip(itertools.product(range(m), repeat=4), self._data) if v}

    def canonical_entries(self) -> dict[tuple, mpq]:
        """Nonzero ``A_ijkl`` with ``i < j``, ``k < l`` and ``(i, j) <= (k, l)``."""
        out = {}
        for (i, j, k, l), v in self.entries().items():
            if i < j and k < l and (i, j) <= (k, l):
                out[(i, j, k, l)] = v
        return out

    def is_zero(self) -> bool:
        return not any(self._data)

    def _check(self, other: "CurvTensor"):
        if not isinstance(other, CurvTensor) or other.m != self.m:
            raise DimensionError("curvature tensors of different dimension")

    def __add__(self, other: "CurvTensor") -> "CurvTensor":
        self._check(other)
        return CurvTensor(self.m, [a + b for a, b in zip(self._data, other._data)])

    def __sub__(self, other: "CurvTensor") -> "CurvTensor":
        self._check(other)
        return CurvTensor(self.m, [a - b for a, b in zip(self._data, other._data)])

    def __neg__(self):
        return CurvTensor(self.m, [-a for a in self._data])

    def scale(self, c) -> "CurvTensor":
        c = Q(c)
        return CurvTensor(self.m, [c * a for a in self._data])

    def __eq__(self, other):
        if not isinstance(other, CurvTensor):
            return NotImplemented
        return self.m == other.m and self._data == other._data

    def __hash__(self):
        return hash((self.m, self._data))

    def __repr__(self):
        return f"CurvTensor(m={self.m}, nonzero={sum(1 for x in self._data if x)})"


@dataclass(frozen=True)
class Violation:
    identity: str
    witness: tuple[int, ...]  # 1-based indices
    residual: mpq

    def describe(self) -> str:
        return f"{self.identity} fails at {self.witness} (defect {rl.fmt(self.residual)})"


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def identities(self) -> set[str]:
        return {v.identity for v in self.violations}


def validate_curvature_tensor(A: CurvTensor, max_witnesses: int = 10) -> ValidationResult:
    """Check antisymmetry, pair symmetry and the first Bianchi identity entrywise."""
    if not isinstance(A, CurvTensor):
        raise TypeError("expected a CurvTensor")
    m = A.m
    found: dict[str, list[Violation]] = {"antisymmetry": [], "pair_symmetry": [], "bianchi": []}
    for i, j, k, l in itertools.product(range(m), repeat=4):
        a = A[i, j, k, l]
        checks = (("antisymmetry", a + A[j, i, k, l]),
                  ("pair_symmetry", a - A[k, l, i, j]),
                  ("bianchi", a + A[j, k, i, l] + A[k, i, j, l]))
        for name, defect in checks:
            if defect and len(found[name]) < max_witnesses:
                found[name].append(Violation(name, (i + 1, j + 1, k + 1, l + 1), defect))
    return ValidationResult(tuple(v for name in found for v in found[name]))


# -- structures ---------------------------------------------------------------

@dataclass(frozen=True)
class HermitianStructure:
    """``J`` with ``J^2 = rho id``; rho = -1 pseudo-Hermitian, +1 para-Hermitian.

    Matrix convention: column ``k`` of ``J`` holds the components of ``J e_k``.
    """

    J: Matrix
    rho: int

    def __post_init__(self):
        object.__setattr__(self, "J", rl.matrix(self.J))
        if self.rho not in (-1, 1):
            raise StructureError("rho must be -1 (pseudo-Hermitian) or +1 (para-Hermitian)")

    @property
    def kind(self) -> str:
        return "hermitian" if self.rho == -1 else "para"

    def violations(self, form: BilinearForm) -> list[str]:
        m = form.m
        if rl.shape(self.J) != (m, m):
            return [f"J has shape {rl.shape(self.J)}, expected {(m, m)}"]
        out = []
        if rl.mat_mul(self.J, self.J) != rl.mat_scale(self.rho, rl.identity(m)):
            out.append(f"J^2 != {self.rho:+d} id")
        pulled = rl.mat_mul(rl.mat_mul(rl.transpose(self.J), form.eps), self.J)
        if pulled != rl.mat_scale(-self.rho, form.eps):
            out.append("J^T eps J != " + ("eps" if self.rho == -1 else "-eps"))
        p, q = form.signature
        if self.rho == -1 and (p % 2 or q % 2):
            out.append(f"pseudo-Hermitian structure needs p, q even, got {(p, q)}")
        if self.rho == 1 and p != q:
            out.append(f"para-Hermitian structure needs p = q, got {(p, q)}")
        return out

    def check(self, form: BilinearForm) -> None:
        bad = self.violations(form)
        if bad:
            raise StructureError("; ".join(bad))

    def negated(self) -> "HermitianStructure":
        return HermitianStructure(rl.mat_scale(-1, self.J), self.rho)


@dataclass(frozen=True)
class HyperStructure:
    """Triple obeying the quaternion (hyper-pseudo) or para-quaternion relations."""

    J1: HermitianStructure
    J2: HermitianStructure
    J3: HermitianStructure
    kind: str

    def __post_init__(self):
        if self.kind not in HYPER_KINDS:
            raise StructureError(f"unknown hyper kind {self.kind!r}")

    @property
    def structures(self) -> tuple[HermitianStructure, HermitianStructure, HermitianStructure]:
        return (self.J1, self.J2, self.J3)

    @property
    def rhos(self) -> tuple[int, int, int]:
        return (-1, -1, -1) if self.kind == "hyper-pseudo" else (-1, 1, 1)

    def violations(self, form: BilinearForm) -> list[str]:
        m = form.m
        out = []
        if m % 4:
            out.append(f"hyper structures need m = 0 mod 4, got m={m}")
        for name, H, rho in zip(("J1", "J2", "J3"), self.structures, self.rhos):
            if H.rho != rho:
                out.append(f"{name} must have rho={rho:+d} for {self.kind}")
            out.extend(f"{name}: {msg}" for msg in H.violations(form))
        if out:
            return out
        j1, j2, j3 = (H.J for H in self.structures)
        if rl.mat_mul(j1, j2) != j3:
            out.append("J1 J2 != J3")
        if rl.mat_mul(j2, j1) != rl.mat_scale(-1, j3):
            out.append("J2 J1 != -J3")
        return out

    def check(self, form: BilinearForm) -> None:
        bad = self.violations(form)
        if bad:
            raise StructureError("; ".join(bad))


Structure = Union[HermitianStructure, HyperStructure, None]


@dataclass(frozen=True)
class CurvatureModel:
    form: BilinearForm
    A: CurvTensor
    structure: Structure = None

    def __post_init__(self):
        if not isinstance(self.form, BilinearForm):
            object.__setattr__(self, "form", BilinearForm(self.form))
        if self.A.m != self.form.m:
            raise DimensionError(f"form has dimension {self.form.m} but tensor has {self.A.m}")

    @property
    def m(self) -> int:
        return self.form.m

    @property
    def eps(self) -> Matrix:
        return self.form.eps

    @property
    def kind(self) -> str:
        if self.structure is None:
            return "plain"
        return self.structure.kind

    def structure_violations(self) -> list[str]:
        return [] if self.structure is None else self.structure.violations(self.form)

    def with_tensor(self, A: CurvTensor) -> "CurvatureModel":
        return CurvatureModel(self.form, A, self.structure)


# -- traces ---------------------------------------------------------------------

SymTensor2 = Matrix


def ricci(M: CurvatureModel) -> SymTensor2:
    """``rho_il = eps^{jk} A_ijkl``."""
    m, inv, A = M.m, M.form.eps_inv, M.A
    pairs = [(j, k, inv[j][k]) for j in range(m) for k in range(m) if inv[j][k]]
    return tuple(tuple(sum((c * A[i, j, k, l] for j, k, c in pairs), ZERO) for l in range(m))
                 for i in range(m))


def scalar_curvature(M: CurvatureModel) -> mpq:
    """``tau = eps^{il} eps^{jk} A_ijkl``."""
    rho, inv, m = ricci(M), M.form.eps_inv, M.m
    return sum((inv[i][l] * rho[i][l] for i in range(m) for l in range(m) if inv[i][l]), ZERO)


def _twisted_trace(A: CurvTensor, eps_inv: Matrix, J: Matrix) -> mpq:
    # sum eps^{il} eps^{jk} A(e_i, e_j, J e_k, J e_l) = sum_{ijab} P_ib P_ja A_ijab, P = eps^-1 J^T
    m = A.m
    P = rl.mat_mul(eps_inv, rl.transpose(J))
    total = ZERO
    for i, j, a, b in itertools.product(range(m), repeat=4):
        if P[i][b] and P[j][a]:
            v = A[i, j, a, b]
            if v:
                total += P[i][b] * P[j][a] * v
    return total


def star_scalar(M: CurvatureModel, H: HermitianStructure | None = None) -> mpq:
    """Star-scalar curvature, signed ``+`` for pseudo-Hermitian and ``-`` for para."""
    H = M.structure if H is None else H
    if not isinstance(H, HermitianStructure):
        raise StructureError("star_scalar needs a (para-)Hermitian structure")
    H.check(M.form)
    return -H.rho * _twisted_trace(M.A, M.form.eps_inv, H.J)


def star_scalar_hyper(M: CurvatureModel, Qs: HyperStructure | None = None) -> mpq:
    Qs = M.structure if Qs is None else Qs
    if not isinstance(Qs, HyperStructure):
        raise StructureError("star_scalar_hyper needs a hyper structure")
    Qs.check(M.form)
    return sum((star_scalar(M, H) for H in Qs.structures), ZERO)


# -- Kulkarni-Nomizu and Weyl -------------------------------------------------------

def kulkarni_nomizu(h: SymTensor2, k: SymTensor2) -> CurvTensor:
    """``(h o k)_ijkl = h_il k_jk + h_jk k_il - h_ik k_jl - h_jl k_ik``."""
    h, k = rl.matrix(h), rl.matrix(k)
    m = len(h)
    if rl.shape(h) != (m, m) or rl.shape(k) != (m, m):
        raise DimensionError("Kulkarni-Nomizu factors must be square of equal size")
    return CurvTensor.from_function(
        m, lambda i, j, a, b: h[i][b] * k[j][a] + h[j][a] * k[i][b] - h[i][a] * k[j][b] - h[j][b] * k[i][a])


def weyl(M: CurvatureModel) -> CurvTensor:
    """Totally trace-free part ``A - rho0 o eps / (m-2) - tau eps o eps / (2m(m-1))``."""
    m = M.m
    if m < 3:
        raise DimensionError("the Weyl tensor needs m >= 3")
    rho = ricci(M)
    tau = scalar_curvature(M)
    eps = M.eps
    rho0 = rl.mat_sub(rho, rl.mat_scale(tau / m, eps))
    W = M.A - kulkarni_nomizu(rho0, eps).scale(mpq(1, m - 2))
    return W - kulkarni_nomizu(eps, eps).scale(tau / (2 * m * (m - 1)))


def is_conformally_flat(M: CurvatureModel) -> bool:
    return weyl(M).is_zero()


def constant_curvature_tensor(eps: Matrix, kappa=1) -> CurvTensor:
    """``kappa (eps_il eps_jk - eps_ik eps_jl)``, the curvature of a space form."""
    return kulkarni_nomizu(eps, eps).scale(Q(kappa) / 2)


# -- basis changes -----------------------------------------------------------

def transport_tensor(A: CurvTensor, phi: Matrix) -> CurvTensor:
    """``A'_ijkl = A(phi e_i, phi e_j, phi e_k, phi e_l)`` by four single-index passes."""
    m = A.m
    cur = list(A.data)
    strides = (m ** 3, m ** 2, m, 1)
    for slot in range(4):
        s = strides[slot]
        nxt = [ZERO] * m ** 4
        for pos in range(m ** 4):
            i = (pos // s) % m
            base = pos - i * s
            acc = ZERO
            for a in range(m):
                c = phi[a][i]
                if c:
                    v = cur[base + a * s]
                    if v:
                        acc += c * v
            nxt[pos] = acc
        cur = nxt
    return CurvTensor(m, cur)


def transport_model(M: CurvatureModel, phi: Matrix) -> CurvatureModel:
    """Express ``M`` in the basis whose vectors are the columns of ``phi``."""
    phi = rl.matrix(phi)
    if rl.shape(phi) != (M.m, M.m):
        raise DimensionError("basis change must be m x m")
    phi_inv = rl.inverse(phi)
    eps = rl.mat_mul(rl.mat_mul(rl.transpose(phi), M.eps), phi)

    def conj(J):
        return rl.mat_mul(rl.mat_mul(phi_inv, J), phi)

    s = M.structure
    if isinstance(s, HermitianStructure):
        s = HermitianStructure(conj(s.J), s.rho)
    elif isinstance(s, HyperStructure):
        s = HyperStructure(*(HermitianStructure(conj(H.J), H.rho) for H in s.structures), s.kind)
    return CurvatureModel(BilinearForm(eps), transport_tensor(M.A, phi), s)


# -- standard (adapted) frames -------------------------------------------------

def standard_hermitian_J(m: int, rho: int) -> Matrix:
    """``J e_i = e_{i+r}`` (i < r), ``J e_i = rho e_{i-r}`` (i >= r), r = m/2."""
    if m % 2:
        raise StructureError("Hermitian structures need even m")
    r = m // 2
    J = [[ZERO] * m for _ in range(m)]
    for i in range(r):
        J[i + r][i] = ONE
        J[i][i + r] = Q(rho)
    return rl.matrix(J)


def _hyper_block_matrices(ell: int, rho2: int) -> tuple[Matrix, Matrix, Matrix]:
    # basis blocks of size ell: B0 = v, B1 = J2 v, B2 = J1 v, B3 = J3 v
    m = 4 * ell

    def blank():
        return [[ZERO] * m for _ in range(m)]

    J1, J2 = blank(), blank()
    for s in range(ell):
        b0, b1, b2, b3 = s, s + ell, s + 2 * ell, s + 3 * ell
        # J1: v->J1v, J2v->J3v, J1v->-v, J3v->-J2v
        J1[b2][b0] = ONE
        J1[b3][b1] = ONE
        J1[b0][b2] = -ONE
        J1[b1][b3] = -ONE
        # J2: v->J2v, J2v->rho2 v, J1v->-J3v, J3v->-rho2 J1v
        J2[b1][b0] = ONE
        J2[b0][b1] = Q(rho2)
        J2[b3][b2] = -ONE
        J2[b2][b3] = Q(-rho2)
    J1, J2 = rl.matrix(J1), rl.matrix(J2)
    return J1, J2, rl.mat_mul(J1, J2)


def standard_structure(kind: str, m: int) -> Structure:
    """Structure in the adapted frame used throughout (see :func:`standard_eps`)."""
    if kind == "plain":
        return None
    if kind == "hermitian":
        return HermitianStructure(standard_hermitian_J(m, -1), -1)
    if kind == "para":
        return HermitianStructure(standard_hermitian_J(m, 1), 1)
    if kind in HYPER_KINDS:
        if m % 4:
            raise StructureError("hyper structures need m = 0 mod 4")
        rho2 = -1 if kind == "hyper-pseudo" else 1
        J1, J2, J3 = _hyper_block_matrices(m // 4, rho2)
        return HyperStructure(HermitianStructure(J1, -1), HermitianStructure(J2, rho2),
                              HermitianStructure(J3, rho2), kind)
    raise StructureError(f"unknown kind {kind!r}")


def check_signature(m: int, signature: tuple[int, int], kind: str) -> None:
    p, q = signature
    if p < 0 or q < 0 or p + q != m:
        raise StructureError(f"signature {signature} does not add up to m={m}")
    if kind not in KINDS:
        raise StructureError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    if kind == "hermitian" and (p % 2 or q % 2):
        raise StructureError(f"pseudo-Hermitian structures need p and q even, got {signature}")
    if kind == "para" and p != q:
        raise StructureError(f"para-Hermitian structures need p = q, got {signature}")
    if kind == "hyper-pseudo" and (p % 4 or q % 4):
        raise StructureError(f"hyper-pseudo-Hermitian structures need p, q = 0 mod 4, got {signature}")
    if kind == "hyper-para" and (m % 4 or p != q):
        raise StructureError(f"hyper-para-Hermitian structures need m = 0 mod 4 and p = q, got {signature}")


def standard_eps(kind: str, signature: tuple[int, int]) -> Matrix:
    """Diagonal +-1 form of the adapted frame for ``kind``.

    plain: negatives first.  hermitian: each half is (negatives, positives).
    para: first half +1, second half -1.  hyper: four blocks of size m/4 laid
    out as (v, J2 v, J1 v, J3 v); for hyper-pseudo each block is
    (negatives, positives), for hyper-para the v and J1 v blocks are +1.
    """
    p, q = signature
    m = p + q
    check_signature(m, signature, kind)
    if kind == "plain":
        d = [-1] * p + [1] * q
    elif kind == "hermitian":
        half = [-1] * (p // 2) + [1] * (q // 2)
        d = half + half
    elif kind == "para":
        d = [1] * (m // 2) + [-1] * (m // 2)
    elif kind == "hyper-pseudo":
        block = [-1] * (p // 4) + [1] * (q // 4)
        d = block * 4
    else:
        ell = m // 4
        d = [1] * ell + [-1] * ell + [1] * ell + [-1] * ell
    return rl.diag(d)


def is_adapted(M_eps: Matrix, structure: Structure) -> bool:
    """Whether ``(eps, structure)`` is already in the standard frame."""
    form = BilinearForm(M_eps)
    if not form.is_orthonormal():
        return False
    m = form.m
    if structure is None:
        return True
    if isinstance(structure, HermitianStructure):
        return structure.J == standard_hermitian_J(m, structure.rho)
    std = standard_structure(structure.kind, m)
    return all(a.J == b.J for a, b in zip(structure.structures, std.structures))


# -- orthonormalization ------------------------------------------------------------

def _orbit(v, structure: Structure) -> list:
    if structure is None:
        return [v]
    if isinstance(structure, HermitianStructure):
        return [v, rl.mat_vec(structure.J, v)]
    J1, J2, J3 = (H.J for H in structure.structures)
    return [v, rl.mat_vec(J2, v), rl.mat_vec(J1, v), rl.mat_vec(J3, v)]


def _candidate_vectors(m: int, max_height: int, budget: int):
    for k in range(m):
        yield tuple(ONE if t == k else ZERO for t in range(m))
    tried = 0
    for h in range(1, max_height + 1):
        for w in itertools.product(range(-h, h + 1), repeat=m):
            if max(abs(t) for t in w) != h or not any(w):
                continue
            first = next(t for t in w if t)
            if first < 0:
                continue
            tried += 1
            if tried > budget:
                return
            yield tuple(Q(t) for t in w)


def _adapted_basis(form: BilinearForm, structure: Structure, max_height: int, budget: int) -> Matrix:
    m = form.m
    chosen: list = []
    firsts: list = []
    orbits: list = []

    def project(w):
        v = list(w)
        for c in chosen:
            coef = form.inner(w, c) / form.inner(c, c)
            if coef:
                v = [a - coef * b for a, b in zip(v, c)]
        return tuple(v)

    candidates = _candidate_vectors(m, max_height, budget)
    while len(chosen) < m:
        for w in candidates:
            v = project(w)
            if not any(v):
                continue
            n = form.inner(v, v)
            if not n or not rl.is_rational_square(abs(n)):
                continue
            v = tuple(x / rl.rational_sqrt(abs(n)) for x in v)
            if structure is not None and n < 0 and (
                    (isinstance(structure, HermitianStructure) and structure.rho == 1)
                    or (isinstance(structure, HyperStructure) and structure.kind == "hyper-para")):
                # para directions: the representative must have norm +1
                J = structure.J if isinstance(structure, HermitianStructure) else structure.J2.J
                v = rl.mat_vec(J, v)
            orbit = _orbit(v, structure)
            chosen.extend(orbit)
            firsts.append(v)
            orbits.append(orbit)
            break
        else:
            raise StructureError("no rational adapted basis found within the search budget")

    def sign(v):
        return 0 if form.inner(v, v) < 0 else 1

    order = sorted(range(len(firsts)), key=lambda t: sign(firsts[t]))
    if structure is None:
        basis = [firsts[t] for t in order]
    else:
        width = len(orbits[0])
        basis = []
        slot_order = [0, 1] if width == 2 else [0, 1, 2, 3]
        for slot in slot_order:
            basis.extend(orbits[t][slot] for t in order)
    return rl.transpose(tuple(basis))


def orthonormalize_model(M: CurvatureModel, max_height: int = 3, budget: int = 200000):
    """Move ``M`` (and its structure) to the adapted orthonormal frame.

    Returns ``(transported model, phi)``; the columns of ``phi`` are the new
    basis vectors in old coordinates.  The frame must be rational: vectors of
    norm +-(rational square) are sought first among the coordinate vectors
    (Gram-Schmidt) and then among small integer vectors.
    """
    if M.structure is not None:
        M.structure.check(M.form)
    if is_adapted(M.eps, M.structure):
        return M, rl.identity(M.m)
    phi = _adapted_basis(M.form, M.structure, max_height, budget)
    out = transport_model(M, phi)
    if not is_adapted(out.eps, out.structure):
        raise StructureError("could not bring the structure to its standard block form")
    return out, phi


# -- random models ----------------------------------------------------------------

def bianchi_project(T: Sequence, m: int) -> CurvTensor:
    """Project a rank-4 array (flat, length m^4) onto algebraic curvature tensors.

    First average over the eight index symmetries, then subtract the cyclic
    (Bianchi) part, which is totally antisymmetric on that subspace.
    """
    def t(i, j, k, l):
        return T[((i * m + j) * m + k) * m + l]

    S = [ZERO] * m ** 4
    eighth = mpq(1, 8)
    for i, j, k, l in itertools.product(range(m), repeat=4):
        S[((i * m + j) * m + k) * m + l] = eighth * sum(s * Q(t(*idx)) for idx, s in _sym_images(i, j, k, l))

    def s(i, j, k, l):
        return S[((i * m + j) * m + k) * m + l]

    third = mpq(1, 3)
    return CurvTensor.from_function(
        m, lambda i, j, k, l: s(i, j, k, l) - third * (s(i, j, k, l) + s(j, k, i, l) + s(k, i, j, l)))


def random_symmetric(m: int, rng: random.Random, spread: int = 3) -> Matrix:
    S = [[ZERO] * m for _ in range(m)]
    for i in range(m):
        for j in range(i, m):
            S[i][j] = S[j][i] = Q(rng.randint(-spread, spread))
    return rl.matrix(S)


def random_model(m: int, signature: tuple[int, int], seed: int, kind: str = "plain",
                 weyl_part: bool = True) -> CurvatureModel:
    """Seeded random model in the adapted frame of ``kind``.

    ``A`` mixes a Kulkarni-Nomizu product ``eps o S`` with the Bianchi
    projection of a random integer array, so both the Ricci and the Weyl
    sectors are generically nonzero (set ``weyl_part=False`` for a
    conformally flat model).
    """
    check_signature(m, tuple(signature), kind)
    rng = random.Random(f"curvjet:{m}:{tuple(signature)}:{kind}:{seed}")
    eps = standard_eps(kind, tuple(signature))
    S = random_symmetric(m, rng)
    A = kulkarni_nomizu(eps, S)
    if weyl_part:
        T = [rng.randint(-3, 3) for _ in range(m ** 4)]
        A = A + bianchi_project(T, m)
    return CurvatureModel(BilinearForm(eps), A, standard_structure(kind, m))


def random_congruence(m: int, seed: int, steps: int | None = None) -> Matrix:
    """Deterministic unimodular integer matrix (product of elementary shears)."""
    rng = random.Random(f"curvjet-congruence:{m}:{seed}")
    L = [list(r) for r in rl.identity(m)]
    for _ in range(steps if steps is not None else 2 * m):
        i, j = rng.sample(range(m), 2) if m > 1 else (0, 0)
        if i == j:
            continue
        c = rng.choice((-1, 1))
        for r in range(m):
            L[r][j] += c * L[r][i]
    return rl.matrix(L)
