"""Formal Cauchy-Kovalevskaya solving and the constant-curvature pipelines.

:func:`ck_solve` finds the unique jet ``U`` (values in Q^d) with zero Cauchy
data on ``x_m = 0`` that kills a quasilinear second-order residual through
total degree ``N - 2``.  The residual is supplied as a black box; its
quasilinear structure is recovered and checked at runtime:

* the ``x_m^a`` slice of the residual depends affinely on the coefficients
  of ``x_m^(a+2)`` in ``U`` and not at all on higher ones;
* the matrix multiplying the coefficient of ``y^beta x_m^(a+2)`` in the
  ``y^beta x_m^a`` residual coefficient is the same for every ``beta`` (it is
  ``(a+2)(a+1)`` times the leading symbol at the origin), while lower-degree
  ``beta'`` only feed higher-degree ``beta``.

So each step probes the ``d x d`` block once, then sweeps: one residual
evaluation fixes one more ``y``-degree.

The pipelines deform a metric jet so that the scalar curvature (and the
star-scalar curvature) become constant through the reliable order.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from gmpy2 import mpq

from . import rational as rl
from .errors import PreconditionError, QuasilinearityError, SingularStepError, StructureError
from .geometry_engine import (MetricJet, StructureField, point_model, pullback_function, pullback_metric,
                              pullback_structure, riemann, scalar_from_curvature, star_from_curvature)
from .rational import ZERO, Matrix
from .realization import hermitian_variation, hyper_variation
from .series_jet import SeriesMatrix, TruncatedSeries, monomials, sum_series
from .tensor_core import (BilinearForm, CurvatureModel, CurvTensor, HermitianStructure, HyperStructure,
                          is_adapted, orthonormalize_model)

Residual = Callable[[Sequence[TruncatedSeries]], Sequence[TruncatedSeries]]


@dataclass(frozen=True)
class QuasilinearSystem:
    """``d`` unknown functions of ``m`` variables; ``x_m`` is the last variable.

    ``residual(U)`` must return ``d`` series in ``m`` variables of order at
    least ``N - 2`` when ``U`` has order ``N``, and be of the form
    ``psi^{ij}(x, u) d_i d_j U + psi(x, u)`` with ``u = (U, dU)``.
    """

    d: int
    m: int
    residual: Residual
    name: str = ""


@dataclass(frozen=True)
class StepDiagnostics:
    step: int           # x_m exponent a of the residual slice
    block: Matrix       # d(residual y^0 x_m^a) / d(coefficient of x_m^(a+2)), rows = equations
    determinant: mpq
    sweeps: int


@dataclass(frozen=True)
class CKSolution:
    U: tuple[TruncatedSeries, ...]
    order: int
    achieved_order: int
    steps: tuple[StepDiagnostics, ...]
    evaluations: int

    @property
    def leading_symbol(self) -> Matrix:
        """``psi^{mm}(0)``: the step-0 block divided by ``(0+2)(0+1) = 2``."""
        if not self.steps:
            return ()
        return rl.mat_scale(mpq(1, 2), self.steps[0].block)


def _bump(U: Sequence[TruncatedSeries], comp: int, alpha: tuple, value) -> list:
    out = list(U)
    s = U[comp]
    out[comp] = s + TruncatedSeries(s.nvars, s.order, {alpha: value})
    return out


def ck_solve(system: QuasilinearSystem, N: int, check_affinity: bool = True) -> CKSolution:
    """Jet solution of ``residual(U) = 0`` with ``U(y, 0) = d_m U(y, 0) = 0``."""
    d, m = system.d, system.m
    if N < 2:
        raise PreconditionError("CK solving needs order N >= 2")
    if d < 1 or m < 1:
        raise PreconditionError("need at least one unknown and one variable")
    last = m - 1
    n_res = N - 2
    evaluations = 0

    def evaluate(U):
        nonlocal evaluations
        evaluations += 1
        r = list(system.residual(U))
        if len(r) != d:
            raise QuasilinearityError(-1, f"residual returned {len(r)} components, expected {d}")
        out = []
        for s in r:
            if s.nvars != m or s.order < n_res:
                raise QuasilinearityError(-1, f"residual component has (m={s.nvars}, N={s.order}); "
                                              f"need m={m} and order >= {n_res}")
            out.append(s.truncate(n_res))
        return out

    U = [TruncatedSeries.zero(m, N) for _ in range(d)]
    r = evaluate(U)
    steps = []
    for a in range(n_res + 1):
        top = n_res - a
        lead = tuple(0 for _ in range(m - 1)) + (a + 2,)
        origin_a = tuple(0 for _ in range(m - 1)) + (a,)
        cols = []
        for c in range(d):
            r1 = evaluate(_bump(U, c, lead, 1))
            if check_affinity:
                r2 = evaluate(_bump(U, c, lead, 2))
                _check_probe(r, r1, r2, last, a)
            cols.append([r1[e].coeff(origin_a) - r[e].coeff(origin_a) for e in range(d)])
        block = rl.transpose(rl.matrix(cols))
        det = rl.det(block)
        if det == 0:
            raise SingularStepError(a, f"leading block {_fmt_matrix(block)} is singular at x_m-exponent step {a}")
        block_inv = rl.inverse(block)
        betas = [b + (a,) for b in monomials(m - 1, top)] if m > 1 else [(a,)]
        sweeps = 0
        while True:
            vals = {beta: [r[e].coeff(beta) for e in range(d)] for beta in betas}
            if not any(any(v) for v in vals.values()):
                break
            if sweeps > top:
                raise QuasilinearityError(a, "x_m-slice of the residual did not vanish after one sweep per degree")
            updates = [dict() for _ in range(d)]
            for beta, v in vals.items():
                if any(v):
                    delta = rl.mat_vec(block_inv, v)
                    target = beta[:-1] + (a + 2,)
                    for c in range(d):
                        if delta[c]:
                            updates[c][target] = -delta[c]
            U = [U[c] + TruncatedSeries(m, N, updates[c]) if updates[c] else U[c] for c in range(d)]
            r = evaluate(U)
            sweeps += 1
        steps.append(StepDiagnostics(a, block, det, sweeps))
    if not all(s.is_zero() for s in r):
        raise QuasilinearityError(n_res, "residual does not vanish after the last step")
    return CKSolution(tuple(U), N, n_res, tuple(steps), evaluations)


def _check_probe(r0, r1, r2, var: int, a: int) -> None:
    for e, (s0, s1, s2) in enumerate(zip(r0, r1, r2)):
        for lower in range(a):
            if s1.x_slice(var, lower) != s0.x_slice(var, lower):
                raise QuasilinearityError(a, f"residual {e} slice x_m^{lower} depends on the x_m^{a + 2} block")
        d1 = s1 - s0
        d2 = s2 - s0
        for alpha, c in d2.x_slice(var, a).items():
            if c != 2 * d1.coeff(alpha):
                raise QuasilinearityError(a, f"residual {e} is not affine in the x_m^{a + 2} block")
        for alpha, c in d1.x_slice(var, a).items():
            if 2 * c != d2.coeff(alpha):
                raise QuasilinearityError(a, f"residual {e} is not affine in the x_m^{a + 2} block")


def _fmt_matrix(mat: Matrix) -> str:
    return "[" + ", ".join("[" + ", ".join(rl.fmt(x) for x in row) + "]" for row in mat) + "]"


# -- pipelines --------------------------------------------------------------------------

@dataclass
class PipelineResult:
    """Output of one constant-curvature deformation.

    ``unknowns`` maps names (``phi`` or ``xi``/``eta``) to series in the
    caller's coordinates; ``h`` is the deformed metric there as well.
    ``frame`` is the basis change used internally (identity when the input
    was already adapted).
    """

    target: str
    unknowns: dict[str, TruncatedSeries]
    h: MetricJet
    solution: CKSolution
    frame: Matrix
    targets: dict[str, mpq]
    structure: object = None
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def achieved_order(self) -> int:
        return self.solution.achieved_order

    @property
    def linearization(self) -> Matrix:
        return self.solution.leading_symbol


def _orthonormal_frame(eps: Matrix, structure=None) -> Matrix | None:
    if is_adapted(eps, structure):
        return None
    m = len(eps)
    _, phi = orthonormalize_model(CurvatureModel(BilinearForm(eps), CurvTensor.zero(m), structure))
    return phi


def constant_scalar_conformal(g: MetricJet, N: int | None = None) -> PipelineResult:
    """Find ``phi`` with ``tau((1 + 2 phi) g)`` constant through order ``N - 2``."""
    N = g.order if N is None else N
    if N > g.order:
        raise PreconditionError(f"order {N} exceeds the metric jet order {g.order}")
    m = g.m
    if m < 2:
        raise PreconditionError("scalar curvature is trivial for m = 1")
    g = g.truncate(N)
    t0 = time.perf_counter()
    L = _orthonormal_frame(g.at_origin())
    gw = g if L is None else pullback_metric(g, L)
    base = gw.inverse(N - 1)
    tau0 = scalar_from_curvature(riemann(gw, base), base).eval_at_origin()
    gmat = gw.g

    def residual(U):
        h = MetricJet(gmat.scale(U[0].scale(2) + 1))
        ginv = h.inverse(N - 1)
        return [scalar_from_curvature(riemann(h, ginv), ginv) - tau0]

    sol = ck_solve(QuasilinearSystem(1, m, residual, "conformal-tau"), N)
    phi = sol.U[0]
    h = MetricJet(gmat.scale(phi.scale(2) + 1))
    if L is not None:
        Linv = rl.inverse(L)
        phi = pullback_function(phi, Linv)
        h = pullback_metric(h, Linv)
    return PipelineResult("tau", {"phi": phi}, h, sol, L if L is not None else rl.identity(m),
                          {"tau": tau0}, None, {"solve": time.perf_counter() - t0})


def _two_residual(g, Ss, N, builder, triple: bool):
    base = g.inverse(N - 1)
    R = riemann(g, base)
    tau0 = scalar_from_curvature(R, base).eval_at_origin()
    star0 = _star_total(R, base, Ss).eval_at_origin()

    def residual(U):
        h = builder(g, Ss if triple else Ss[0], U[0], U[1])
        ginv = h.inverse(N - 1)
        Rh = riemann(h, ginv)
        return [scalar_from_curvature(Rh, ginv) - tau0, _star_total(Rh, ginv, Ss) - star0]

    return residual, tau0, star0


def _star_total(R, ginv, Ss) -> TruncatedSeries:
    parts = [star_from_curvature(R, ginv, S) for S in Ss]
    return sum_series(parts, R.m, R.order)


def constant_tau_taustar(g: MetricJet, S: StructureField, N: int | None = None) -> PipelineResult:
    """Find ``xi, eta`` with ``tau`` and ``tau*`` of ``h_{xi,eta}`` constant through ``N - 2``."""
    return _structured_pipeline(g, (S,), N, triple=False)


def constant_tau_taustar_hyper(g: MetricJet, triple: Sequence[StructureField], N: int | None = None) -> PipelineResult:
    """Hyper version: ``tau`` and ``tau*_Q`` (sum over the three structures)."""
    if len(triple) != 3:
        raise PreconditionError("hyper pipeline needs three structure fields")
    return _structured_pipeline(g, tuple(triple), N, triple=True)


def _structured_pipeline(g: MetricJet, Ss: tuple, N: int | None, triple: bool) -> PipelineResult:
    N = min([g.order] + [S.order for S in Ss]) if N is None else N
    if N > g.order or any(N > S.order for S in Ss):
        raise PreconditionError(f"order {N} exceeds the order of the metric or structure jets")
    m = g.m
    if triple and (m < 8 or m % 4):
        raise PreconditionError("the hyper pipeline needs m >= 8 and m = 0 mod 4")
    if not triple and m < 4:
        raise PreconditionError("the Hermitian pipeline needs m >= 4")
    g = g.truncate(N)
    Ss = tuple(S.truncate(N) for S in Ss)
    for S in Ss:
        bad = S.violations(g)
        if bad:
            raise StructureError("; ".join(bad))
    t0 = time.perf_counter()
    point = _point_structure(Ss, triple)
    L = _orthonormal_frame(g.at_origin(), point)
    if L is not None:
        g = pullback_metric(g, L)
        Ss = tuple(pullback_structure(S, L) for S in Ss)
    builder = hyper_variation if triple else hermitian_variation
    residual, tau0, star0 = _two_residual(g, Ss, N, builder, triple)
    sol = ck_solve(QuasilinearSystem(2, m, residual, "tau-taustar-hyper" if triple else "tau-taustar"), N)
    xi, eta = sol.U
    h = builder(g, Ss if triple else Ss[0], xi, eta)
    if L is not None:
        Linv = rl.inverse(L)
        xi, eta = pullback_function(xi, Linv), pullback_function(eta, Linv)
        h = pullback_metric(h, Linv)
        Ss = tuple(pullback_structure(S, Linv) for S in Ss)
    return PipelineResult("tau-taustar", {"xi": xi, "eta": eta}, h, sol,
                          L if L is not None else rl.identity(m),
                          {"tau": tau0, "taustar": star0}, Ss if triple else Ss[0],
                          {"solve": time.perf_counter() - t0})


def _point_structure(Ss, triple: bool):
    parts = tuple(S.at_origin() for S in Ss)
    if not triple:
        return parts[0]
    kind = "hyper-pseudo" if all(H.rho == -1 for H in parts) else "hyper-para"
    return HyperStructure(*parts, kind)
