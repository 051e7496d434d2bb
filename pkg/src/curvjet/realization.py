"""Metric jets that realize a curvature model at the origin.

* :func:`realize` -- the quadratic metric ``g_ik = eps_ik - A_ijlk x^j x^l / 3``.
* :func:`realize_conformally_flat` -- ``(1 + phi) eps`` with quadratic ``phi``
  for models with vanishing Weyl tensor.
* :func:`extend_structure` -- extends a point structure ``J`` to a field
  compatible with ``g`` by conjugating with the square root of ``eps^-1 g``.
* :func:`hermitian_variation`, :func:`hyper_variation` -- the two-function
  families of structure-compatible metric deformations used by the
  constant (star-)scalar curvature solvers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from gmpy2 import mpq

from . import rational as rl
from .errors import PreconditionError, StructureError
from .geometry_engine import MetricJet, StructureField, point_model
from .rational import ZERO
from .series_jet import SeriesMatrix, TruncatedSeries, constant_times, matrix_inverse, matrix_sqrt, sum_series
from .tensor_core import (CurvatureModel, HermitianStructure, HyperStructure, is_adapted, is_conformally_flat,
                          ricci, scalar_curvature, standard_hermitian_J, standard_structure)

FieldStructure = Union[StructureField, tuple, None]


@dataclass(frozen=True)
class RealizedGeometry:
    g: MetricJet
    structure: FieldStructure
    provenance: str
    model: CurvatureModel

    def point_model(self) -> CurvatureModel:
        return point_model(self.g, self.structure)

    def reproduces_model(self) -> bool:
        return self.point_model() == self.model


def _xvar(i: int, m: int, N: int) -> TruncatedSeries:
    return TruncatedSeries.variable(i, m, N)


def quadratic_metric(M: CurvatureModel, N: int) -> MetricJet:
    m = M.m
    third = mpq(1, 3)
    rows = []
    for i in range(m):
        row = []
        for k in range(m):
            terms = {}
            for j in range(m):
                for l in range(m):
                    a = M.A[i, j, l, k]
                    if a:
                        alpha = [0] * m
                        alpha[j] += 1
                        alpha[l] += 1
                        alpha = tuple(alpha)
                        terms[alpha] = terms.get(alpha, ZERO) - third * a
            if N >= 0:
                terms[(0,) * m] = terms.get((0,) * m, ZERO) + M.eps[i][k]
            row.append(TruncatedSeries(m, N, terms))
        rows.append(row)
    return MetricJet(SeriesMatrix(rows))


def realize(M: CurvatureModel, N: int) -> RealizedGeometry:
    """Quadratic realization; any structure on ``M`` is extended as a field."""
    if N < 2:
        raise PreconditionError("realization needs order N >= 2")
    g = quadratic_metric(M, N)
    return RealizedGeometry(g, _extend_any(M, g), "quadratic-realization", M)


def _extend_any(M: CurvatureModel, g: MetricJet) -> FieldStructure:
    if M.structure is None:
        return None
    if isinstance(M.structure, HermitianStructure):
        return extend_structure(M, M.structure, g)
    return extend_structure_hyper(M, M.structure, g)


def conformal_factor(M: CurvatureModel, N: int) -> TruncatedSeries:
    """Quadratic ``phi`` with Ricci of ``(1 + phi) eps`` at 0 equal to ``rho_M``.

    In an orthonormal frame: diagonal coefficients
    ``(eps_jj tau + (2 - 2m) rho_jj) / (2 (m-1)(m-2))`` and mixed coefficients
    ``2 rho_ij / (2 - m)``.
    """
    m = M.m
    rho = ricci(M)
    tau = scalar_curvature(M)
    terms = {}
    for j in range(m):
        alpha = tuple(2 if t == j else 0 for t in range(m))
        terms[alpha] = (M.eps[j][j] * tau + (2 - 2 * m) * rho[j][j]) / (2 * (m - 1) * (m - 2))
    for i in range(m):
        for j in range(i + 1, m):
            alpha = tuple(1 if t in (i, j) else 0 for t in range(m))
            terms[alpha] = mpq(2, 2 - m) * rho[i][j]
    return TruncatedSeries(m, N, terms)


def realize_conformally_flat(M: CurvatureModel, N: int) -> RealizedGeometry:
    if M.m < 3:
        raise PreconditionError("conformally flat realization needs m >= 3")
    if N < 2:
        raise PreconditionError("realization needs order N >= 2")
    if not M.form.is_orthonormal():
        raise PreconditionError("conformally flat realization needs a diagonal +-1 form; orthonormalize first")
    if not is_conformally_flat(M):
        raise PreconditionError("model is not conformally flat")
    phi = conformal_factor(M, N)
    g = MetricJet(SeriesMatrix.constant(M.eps, M.m, N).scale(phi + 1))
    return RealizedGeometry(g, _extend_any(M, g), "conformally-flat-realization", M)


# -- structure extension ---------------------------------------------------------------

def metric_root(eps: rl.Matrix, g: MetricJet) -> SeriesMatrix:
    """``psi = sqrt(eps^-1 g)``, so that ``g = psi^T eps psi``."""
    eps = rl.matrix(eps)
    if g.at_origin() != eps:
        raise PreconditionError("g(0) must equal the model form")
    Psi = constant_times(rl.inverse(eps), g.g)
    return matrix_sqrt(Psi)


def extend_structure(M: CurvatureModel, H: HermitianStructure, g: MetricJet) -> StructureField:
    """``J_1 = psi^-1 J psi`` with ``psi`` the root of ``eps^-1 g``."""
    H.check(M.form)
    psi = metric_root(M.eps, g)
    return _conjugate(psi, H, g.order)


def _conjugate(psi: SeriesMatrix, H: HermitianStructure, N: int) -> StructureField:
    J = SeriesMatrix.constant(H.J, len(H.J), N)
    return StructureField(matrix_inverse(psi) @ J @ psi, H.rho)


def extend_structure_hyper(M: CurvatureModel, Qs: HyperStructure, g: MetricJet) -> tuple:
    Qs.check(M.form)
    psi = metric_root(M.eps, g)
    psi_inv = matrix_inverse(psi)
    out = []
    for H in Qs.structures:
        J = SeriesMatrix.constant(H.J, len(H.J), g.order)
        out.append(StructureField(psi_inv @ J @ psi, H.rho))
    return tuple(out)


# -- structure-compatible variations ---------------------------------------------------------

def _check_adapted_hermitian(g: MetricJet, S: StructureField):
    eps = g.at_origin()
    if not is_adapted(eps, S.at_origin()):
        raise PreconditionError("variation needs adapted coordinates: orthonormal frame with J in standard block form")


def _check_vanishing(*fs: TruncatedSeries):
    for f in fs:
        if f.eval_at_origin():
            raise PreconditionError("variation functions must vanish at the origin")


def _xi_form(i: int, Js: Sequence[tuple[SeriesMatrix, int]], m: int, n: int) -> list:
    """Components of ``dx_i o dx_i - sum rho_a (J_a^* dx_i) o (J_a^* dx_i)``.

    ``(J^* dx_i)_k = dx_i(J d_k) = J[i][k]``.
    """
    out = [[None] * m for _ in range(m)]
    for k in range(m):
        for l in range(k, m):
            parts = [(J.rows[i][k] * J.rows[i][l]).scale(-rho) for J, rho in Js]
            s = sum_series(parts, m, n)
            if k == i and l == i:
                s = s + 1
            out[k][l] = out[l][k] = s
    return out


def _apply_variation(g: MetricJet, Js, xi, eta) -> MetricJet:
    m = g.m
    n = min([g.order, xi.order, eta.order] + [J.order for J, _ in Js])
    Js = [(J.truncate(n), rho) for J, rho in Js]
    xi2, eta2 = xi.truncate(n).scale(2), eta.truncate(n).scale(2)
    X1 = _xi_form(0, Js, m, n)
    Xm = _xi_form(m - 1, Js, m, n)
    gt = g.g.truncate(n)
    rows = [[gt[k, l] + xi2 * X1[k][l] + eta2 * Xm[k][l] for l in range(m)] for k in range(m)]
    return MetricJet(SeriesMatrix(rows))


def hermitian_variation(g: MetricJet, S: StructureField, xi: TruncatedSeries, eta: TruncatedSeries) -> MetricJet:
    """``g + 2 xi (dx_1^2 - rho (J dx_1)^2) + 2 eta (dx_m^2 - rho (J dx_m)^2)``."""
    if g.m < 4:
        raise PreconditionError("Hermitian variations need m >= 4")
    _check_adapted_hermitian(g, S)
    _check_vanishing(xi, eta)
    return _apply_variation(g, [(S.J, S.rho)], xi, eta)


def hyper_variation(g: MetricJet, triple: Sequence[StructureField], xi: TruncatedSeries,
                    eta: TruncatedSeries) -> MetricJet:
    """``g + 2 xi Xi_1 + 2 eta Xi_m`` with ``Xi_i = dx_i^2 - sum_a rho_a (J_a^* dx_i)^2``."""
    m = g.m
    if m < 8 or m % 4:
        raise PreconditionError("hyper variations need m >= 8 and m = 0 mod 4")
    parts = tuple(S.at_origin() for S in triple)
    kind = "hyper-pseudo" if all(H.rho == -1 for H in parts) else "hyper-para"
    if not is_adapted(g.at_origin(), HyperStructure(*parts, kind)):
        raise PreconditionError("variation needs the adapted hyper frame")
    _check_vanishing(xi, eta)
    return _apply_variation(g, [(S.J, S.rho) for S in triple], xi, eta)
