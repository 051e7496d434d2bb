"""Curvature of metric jets.

Given the jet of a metric ``g`` at order ``N`` this module computes the
Christoffel symbols (order ``N - 1``), the lowered Riemann tensor of the
Levi-Civita connection (order ``N - 2``) and its traces, and evaluates
everything at the origin into :mod:`curvjet.tensor_core` objects.

Sign convention: ``R(x, y, z, w) = g((nabla_x nabla_y - nabla_y nabla_x
- nabla_[x,y]) z, w)``, which in coordinates reads::

    R_ijkl = d_i G_jkl - d_j G_ikl + g^{pq} (G_jlp G_ikq - G_ilp G_jkq)

with ``G_ijk = g(nabla_i d_j, d_k)`` the symbols of the first kind.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from . import rational as rl
from .errors import DegenerateFormError, DimensionError, PreconditionError, StructureError
from .rational import ZERO
from .series_jet import SeriesMatrix, TruncatedSeries, dot, linear_substitute, matrix_inverse, sum_series
from .tensor_core import (BilinearForm, CurvatureModel, CurvTensor, HermitianStructure, HyperStructure)


@dataclass(frozen=True)
class MetricJet:
    """Symmetric matrix of series with invertible value at the origin."""

    g: SeriesMatrix

    def __post_init__(self):
        n, c = self.g.shape
        if n != c:
            raise DimensionError("metric must be square")
        if n != self.g.nvars:
            raise DimensionError(f"metric is {n}x{n} but lives in {self.g.nvars} variables")
        for i in range(n):
            for j in range(i + 1, n):
                if self.g[i, j] != self.g[j, i]:
                    raise DegenerateFormError(f"metric jet is not symmetric at ({i + 1},{j + 1})")
        if rl.det(self.g.at_origin()) == 0:
            raise DegenerateFormError("metric is degenerate at the origin")

    @classmethod
    def constant(cls, eps, order: int) -> "MetricJet":
        eps = rl.matrix(eps)
        return cls(SeriesMatrix.constant(eps, len(eps), order))

    @property
    def m(self) -> int:
        return self.g.shape[0]

    @property
    def order(self) -> int:
        return self.g.order

    def __getitem__(self, ij) -> TruncatedSeries:
        return self.g[ij]

    def at_origin(self) -> rl.Matrix:
        return self.g.at_origin()

    def truncate(self, order: int) -> "MetricJet":
        return MetricJet(self.g.truncate(order))

    def inverse(self, order: int | None = None) -> SeriesMatrix:
        g = self.g if order is None else self.g.truncate(order)
        return matrix_inverse(g)


@dataclass(frozen=True)
class StructureField:
    """A (para-)Hermitian structure field ``J(x)``; column k holds ``J d_k``."""

    J: SeriesMatrix
    rho: int

    def __post_init__(self):
        if self.rho not in (-1, 1):
            raise StructureError("rho must be -1 or +1")

    @classmethod
    def constant(cls, H: HermitianStructure, order: int) -> "StructureField":
        return cls(SeriesMatrix.constant(H.J, len(H.J), order), H.rho)

    @property
    def order(self) -> int:
        return self.J.order

    def at_origin(self) -> HermitianStructure:
        return HermitianStructure(self.J.at_origin(), self.rho)

    def truncate(self, order: int) -> "StructureField":
        return StructureField(self.J.truncate(order), self.rho)

    def negated(self) -> "StructureField":
        return StructureField(-self.J, self.rho)

    def violations(self, g: MetricJet) -> list[str]:
        """Series identities ``J^2 = rho id`` and ``J^T g J = -rho g`` through the common order."""
        n = min(self.order, g.order)
        J = self.J.truncate(n)
        gm = g.g.truncate(n)
        m = g.m
        out = []
        if J @ J != SeriesMatrix.identity(m, m, n).scale(self.rho):
            out.append(f"J^2 != {self.rho:+d} id as series")
        if J.transpose() @ gm @ J != gm.scale(-self.rho):
            out.append("J^T g J != " + ("g" if self.rho == -1 else "-g") + " as series")
        return out


def structure_field_of(structure, order: int):
    """Constant extension of a point structure (Hermitian or hyper) as fields."""
    if structure is None:
        return None
    if isinstance(structure, HermitianStructure):
        return StructureField.constant(structure, order)
    return tuple(StructureField.constant(H, order) for H in structure.structures)


# -- Christoffel symbols ------------------------------------------------------------

Array3 = list  # nested lists [i][j][k] of TruncatedSeries


def christoffel_first(g: MetricJet) -> Array3:
    """``G_ijk = (g_jk/i + g_ik/j - g_ij/k) / 2``, order ``N - 1``; symmetric in (i, j)."""
    m = g.m
    if g.order < 1:
        raise PreconditionError("Christoffel symbols need order >= 1")
    dg = [[[g[a, b].derive(c) for c in range(m)] for b in range(m)] for a in range(m)]
    half = rl.Q("1/2")
    G = [[[None] * m for _ in range(m)] for _ in range(m)]
    for i in range(m):
        for j in range(i, m):
            for k in range(m):
                G[i][j][k] = (dg[j][k][i] + dg[i][k][j] - dg[i][j][k]).scale(half)
                G[j][i][k] = G[i][j][k]
    return G


def christoffel_second(G1: Array3, ginv: SeriesMatrix) -> Array3:
    """``G^k_ij = g^{kl} G_ijl`` at the order of ``G1``; returned as ``[k][i][j]``."""
    m = len(G1)
    n = G1[0][0][0].order
    inv = ginv.truncate(n)
    out = [[[None] * m for _ in range(m)] for _ in range(m)]
    for k in range(m):
        row = inv.rows[k]
        for i in range(m):
            for j in range(i, m):
                out[k][i][j] = out[k][j][i] = dot(row, G1[i][j])
    return out


# -- curvature -------------------------------------------------------------------------

class CurvatureField:
    """Lowered Riemann tensor as series ``R[i][j][k][l]`` of reliable order ``N - 2``."""

    __slots__ = ("R", "m", "order")

    def __init__(self, R):
        self.R = R
        self.m = len(R)
        self.order = R[0][0][0][0].order

    def __getitem__(self, idx) -> TruncatedSeries:
        i, j, k, l = idx
        return self.R[i][j][k][l]

    def at_origin(self) -> CurvTensor:
        m = self.m
        return CurvTensor.from_function(m, lambda i, j, k, l: self.R[i][j][k][l].eval_at_origin())

    def coefficient_tensor(self, alpha: Sequence[int]) -> CurvTensor:
        """The coefficient of ``x^alpha`` in every component, as a point tensor."""
        return CurvTensor.from_function(self.m, lambda i, j, k, l: self.R[i][j][k][l].coeff(alpha))

    def truncate(self, order: int) -> "CurvatureField":
        return CurvatureField([[[[s.truncate(order) for s in r3] for r3 in r2] for r2 in r1] for r1 in self.R])


def riemann(g: MetricJet, ginv: SeriesMatrix | None = None) -> CurvatureField:
    """Full Levi-Civita curvature of ``g`` with reliable order ``N - 2``.

    Components with ``i < j`` and ``k < l`` are computed; the remaining ones
    follow from the two antisymmetries.  Pair symmetry and the first Bianchi
    identity are therefore not built in and remain genuine checks.
    """
    m, N = g.m, g.order
    if N < 2:
        raise PreconditionError("curvature needs a metric jet of order >= 2")
    n = N - 2
    if ginv is None:
        ginv = g.inverse(N - 1)
    G1 = christoffel_first(g)
    G2 = christoffel_second(G1, ginv)
    G1t = [[[s.truncate(n) for s in r] for r in rr] for rr in G1]
    G2t = [[[s.truncate(n) for s in r] for r in rr] for rr in G2]
    # dG[i][j][k][l] = d_i G_jkl, only what is needed
    zero = TruncatedSeries.zero(m, n)
    R = [[[[zero] * m for _ in range(m)] for _ in range(m)] for _ in range(m)]
    # G2t is [q][i][k]; gather column vectors G^q_ik over q
    col = [[[G2t[q][i][k] for q in range(m)] for k in range(m)] for i in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(m):
                for l in range(k + 1, m):
                    lead = G1[j][k][l].derive(i) - G1[i][k][l].derive(j)
                    # g^{pq} G_jlp G_ikq = G_jlp G^p_ik
                    quad = dot(G1t[j][l], col[i][k]) - dot(G1t[i][l], col[j][k])
                    v = lead + quad
                    R[i][j][k][l] = v
                    R[j][i][k][l] = -v
                    R[i][j][l][k] = -v
                    R[j][i][l][k] = v
    return CurvatureField(R)


def ricci_series(R: CurvatureField, ginv: SeriesMatrix) -> SeriesMatrix:
    """``rho_il = g^{jk} R_ijkl``."""
    m, n = R.m, R.order
    inv = ginv.truncate(n)
    pairs = [(j, k) for j in range(m) for k in range(m) if not inv[j, k].is_zero()]
    coeffs = [inv[j, k] for j, k in pairs]
    rho = [[None] * m for _ in range(m)]
    for i in range(m):
        for l in range(m):
            rho[i][l] = dot(coeffs, [R.R[i][j][k][l] for j, k in pairs]) if pairs else TruncatedSeries.zero(m, n)
    return SeriesMatrix(rho)


def scalar_from_curvature(R: CurvatureField, ginv: SeriesMatrix) -> TruncatedSeries:
    m, n = R.m, R.order
    rho = ricci_series(R, ginv)
    inv = ginv.truncate(n)
    return dot([inv[i, l] for i in range(m) for l in range(m)],
               [rho[i, l] for i in range(m) for l in range(m)])


def scalar_series(g: MetricJet) -> TruncatedSeries:
    """``tau = g^{il} g^{jk} R_ijkl`` as a series of order ``N - 2``."""
    ginv = g.inverse(g.order - 1)
    return scalar_from_curvature(riemann(g, ginv), ginv)


def star_from_curvature(R: CurvatureField, ginv: SeriesMatrix, S: StructureField) -> TruncatedSeries:
    """``-rho g^{il} g^{jk} R(e_i, e_j, J e_k, J e_l) = -rho sum P_ib P_ja R_ijab``, ``P = g^-1 J^T``."""
    m, n = R.m, R.order
    P = ginv.truncate(n) @ S.J.truncate(n).transpose()
    # X_ja = sum_{i,b} P_ib R_ijab
    X = [[dot([P[i, b] for i in range(m) for b in range(m)],
              [R.R[i][j][a][b] for i in range(m) for b in range(m)])
          for a in range(m)] for j in range(m)]
    total = dot([P[j, a] for j in range(m) for a in range(m)],
                [X[j][a] for j in range(m) for a in range(m)])
    return total.scale(-S.rho)


def star_scalar_series(g: MetricJet, S: StructureField, check: bool = True) -> TruncatedSeries:
    """Star-scalar curvature series (order ``N - 2``) for a structure field on ``g``."""
    if check:
        bad = S.violations(g)
        if bad:
            raise StructureError("; ".join(bad))
    n = min(g.order, S.order)
    g = g.truncate(n)
    ginv = g.inverse(n - 1)
    return star_from_curvature(riemann(g, ginv), ginv, S)


def star_scalar_hyper_series(g: MetricJet, triple: Sequence[StructureField], check: bool = True) -> TruncatedSeries:
    if check:
        for S in triple:
            bad = S.violations(g)
            if bad:
                raise StructureError("; ".join(bad))
    n = min([g.order] + [S.order for S in triple])
    g = g.truncate(n)
    ginv = g.inverse(n - 1)
    R = riemann(g, ginv)
    parts = [star_from_curvature(R, ginv, S) for S in triple]
    return sum_series(parts, g.m, R.order)


def point_model(g: MetricJet, structure=None) -> CurvatureModel:
    """``(T_P M, g_P, R_P)`` plus the structure at the origin when given.

    ``structure`` may be a :class:`StructureField`, a triple of them (taken as
    a hyper structure; the kind is read off the rhos), or ``None``.
    """
    if g.order < 2:
        raise PreconditionError("point model needs order >= 2")
    eps = g.at_origin()
    # only the 2-jet matters for R(0)
    A = riemann(g.truncate(2)).at_origin()
    s = None
    if isinstance(structure, StructureField):
        s = structure.at_origin()
    elif structure is not None:
        parts = tuple(S.at_origin() for S in structure)
        kind = "hyper-pseudo" if all(H.rho == -1 for H in parts) else "hyper-para"
        s = HyperStructure(*parts, kind)
    return CurvatureModel(BilinearForm(eps), A, s)


def weyl_series(g: MetricJet) -> CurvatureField:
    """Weyl tensor field ``R - rho o g / (m-2) + tau g o g / (2(m-1)(m-2))``.

    Same Kulkarni-Nomizu convention as :func:`curvjet.tensor_core.weyl`; the
    result has the reliable order ``N - 2`` of the curvature.
    """
    m = g.m
    if m < 3:
        raise DimensionError("the Weyl tensor needs m >= 3")
    ginv = g.inverse(g.order - 1)
    R = riemann(g, ginv)
    n = R.order
    rho = ricci_series(R, ginv)
    tau = scalar_from_curvature(R, ginv)
    gt = g.g.truncate(n)
    c1 = rl.Q(1) / (m - 2)
    c2 = tau.scale(rl.Q(1) / (2 * (m - 1) * (m - 2)))

    def kn(h, k, i, j, a, b):
        return dot([h[i, b], h[j, a], h[i, a], h[j, b]],
                   [k[j, a], k[i, b], -k[j, b], -k[i, a]])

    zero = TruncatedSeries.zero(m, n)
    W = [[[[zero] * m for _ in range(m)] for _ in range(m)] for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            for a in range(m):
                for b in range(a + 1, m):
                    v = R[i, j, a, b] - kn(rho, gt, i, j, a, b).scale(c1) + c2 * kn(gt, gt, i, j, a, b)
                    W[i][j][a][b] = v
                    W[j][i][a][b] = -v
                    W[i][j][b][a] = -v
                    W[j][i][b][a] = v
    return CurvatureField(W)


# -- coordinate changes ----------------------------------------------------------------

def pullback_metric(g: MetricJet, L: rl.Matrix) -> MetricJet:
    """Metric in coordinates ``x = L x'``: ``g'(x') = L^T g(L x') L``."""
    L = rl.matrix(L)
    sub = SeriesMatrix([[linear_substitute(s, L) for s in row] for row in g.g.rows])
    Lm = SeriesMatrix.constant(L, g.m, g.order)
    return MetricJet(Lm.transpose() @ sub @ Lm)


def pullback_structure(S: StructureField, L: rl.Matrix) -> StructureField:
    """``J'(x') = L^{-1} J(L x') L``."""
    L = rl.matrix(L)
    m = len(L)
    sub = SeriesMatrix([[linear_substitute(s, L) for s in row] for row in S.J.rows])
    Lm = SeriesMatrix.constant(L, m, S.order)
    Li = SeriesMatrix.constant(rl.inverse(L), m, S.order)
    return StructureField(Li @ sub @ Lm, S.rho)


def pullback_function(f: TruncatedSeries, L: rl.Matrix) -> TruncatedSeries:
    return linear_substitute(f, rl.matrix(L))
