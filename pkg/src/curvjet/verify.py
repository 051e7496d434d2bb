"""Recomputation-backed verdicts for models, realizations and deformations.

Nothing here reads pipeline-internal state: every check starts from the
metric jet / structure fields / unknowns that would be written to disk and
recomputes curvature, traces and structure identities from scratch.
"""
from __future__ import annotations

from typing import Sequence

from gmpy2 import mpq

from . import rational as rl
from .geometry_engine import (MetricJet, StructureField, point_model, pullback_metric, pullback_structure,
                              riemann, scalar_from_curvature, scalar_series, star_from_curvature, weyl_series)
from .realization import hermitian_variation, hyper_variation, metric_root
from .series_jet import TruncatedSeries, constant_times, sum_series
from .tensor_core import (CurvatureModel, HermitianStructure, scalar_curvature, star_scalar, star_scalar_hyper,
                          validate_curvature_tensor)


def constancy_degree(s: TruncatedSeries) -> int:
    """Largest ``d <= order`` with every coefficient of degree ``1..d`` zero."""
    low = min((sum(alpha) for alpha, c in s.terms() if sum(alpha) > 0), default=None)
    return s.order if low is None else low - 1


def series_valuation(s: TruncatedSeries) -> int:
    """Lowest degree with a nonzero coefficient (``order + 1`` for the zero series)."""
    return min((sum(alpha) for alpha, _ in s.terms()), default=s.order + 1)


# -- point models ----------------------------------------------------------------------

def check_model(M: CurvatureModel, conflicts: Sequence = ()) -> tuple[dict, dict]:
    """Verdicts and diagnostics for a point model."""
    res = validate_curvature_tensor(M.A)
    bad = res.identities()
    verdicts = {
        "antisymmetry": "antisymmetry" not in bad,
        "pair_symmetry": "pair_symmetry" not in bad,
        "bianchi": "bianchi" not in bad,
        "consistent_entries": not conflicts,
    }
    diags: dict = {"signature": list(M.form.signature), "kind": M.kind}
    if res.violations:
        diags["witnesses"] = [v.describe() for v in res.violations]
    if conflicts:
        diags["conflicts"] = list(conflicts)
    if M.structure is not None:
        sv = M.structure_violations()
        verdicts["structure_identities"] = not sv
        if sv:
            diags["structure_violations"] = sv
    if res.ok and M.m >= 2:
        diags["tau"] = rl.fmt(scalar_curvature(M))
        if M.structure is not None and verdicts["structure_identities"]:
            if isinstance(M.structure, HermitianStructure):
                diags["taustar"] = rl.fmt(star_scalar(M))
            else:
                diags["taustar"] = rl.fmt(star_scalar_hyper(M))
    return verdicts, diags


# -- structure fields ------------------------------------------------------------------

def _as_tuple(structure) -> tuple:
    if structure is None:
        return ()
    if isinstance(structure, StructureField):
        return (structure,)
    return tuple(structure)


def structure_field_verdicts(g: MetricJet, structure, eps=None) -> tuple[dict, dict]:
    """``J^2 = rho``, ``J^T g J = -rho g`` coefficientwise; quaternion relations for triples;
    and, when ``eps`` is given, the self-adjointness ``psi^T eps = eps psi`` of ``psi = sqrt(eps^-1 g)``."""
    Ss = _as_tuple(structure)
    verdicts: dict = {}
    diags: dict = {}
    if not Ss:
        return verdicts, diags
    msgs = []
    for name, S in zip(("J1", "J2", "J3") if len(Ss) == 3 else ("J",), Ss):
        msgs.extend(f"{name}: {v}" for v in S.violations(g))
    verdicts["structure_field_identities"] = not msgs
    if len(Ss) == 3:
        n = min(S.order for S in Ss)
        J1, J2, J3 = (S.J.truncate(n) for S in Ss)
        ok = (J1 @ J2 == J3) and (J2 @ J1 == J3.scale(-1))
        verdicts["quaternion_identities"] = ok
        if not ok:
            msgs.append("J1 J2 = J3 = -J2 J1 fails")
    if eps is not None:
        psi = metric_root(eps, g)
        lhs = constant_times(rl.transpose(rl.matrix(eps)), psi).transpose()  # psi^T eps
        rhs = constant_times(eps, psi)
        verdicts["root_self_adjoint"] = lhs == rhs
        verdicts["root_reproduces_metric"] = psi.transpose() @ rhs == g.g.truncate(psi.order)
    if msgs:
        diags["structure_violations"] = msgs
    return verdicts, diags


# -- realizations ----------------------------------------------------------------------

def verify_realization(M: CurvatureModel, g: MetricJet, structure, mode: str = "plain") -> tuple[dict, dict]:
    verdicts: dict = {}
    diags: dict = {}
    P = point_model(g, structure)
    verdicts["curvature_at_origin"] = P.A == M.A
    verdicts["metric_at_origin"] = P.eps == M.eps
    if M.structure is not None:
        verdicts["structure_at_origin"] = P.structure == M.structure
        v, d = structure_field_verdicts(g, structure, M.eps)
        verdicts.update(v)
        diags.update(d)
    if mode == "conformally-flat":
        W = weyl_series(g)
        m = g.m
        verdicts["weyl_flat"] = all(W[i, j, k, l].is_zero()
                                    for i in range(m) for j in range(m) for k in range(m) for l in range(m))
        diags["weyl_reliable_order"] = W.order
    return verdicts, diags


# -- deformations ----------------------------------------------------------------------

def expected_linearization(kind: str, eps) -> tuple:
    """The leading symbol the solver should probe, in an adapted frame with form ``eps``."""
    m = len(eps)
    e11, emm = rl.Q(eps[0][0]), rl.Q(eps[m - 1][m - 1])
    if kind == "tau":
        return ((mpq(2 - 2 * m) * emm,),)
    if kind == "hermitian":
        return ((-4 * e11 * emm, mpq(-2)), (mpq(0), mpq(-2)))
    if kind == "hyper":
        return ((-8 * e11 * emm, mpq(-6)), (mpq(0), mpq(-6)))
    raise ValueError(f"unknown pattern {kind!r}")


def probe_linearization(g: MetricJet, structure, frame) -> rl.Matrix:
    """Leading symbol of the residual map, probed independently of the solver.

    Bumps ``x_m^2 / 2`` in each unknown and differentiates the constant
    terms of ``tau`` (and ``tau*``) -- the same quantity the solver's first
    step must invert, recomputed here from the bare metric.
    """
    m = g.m
    L = rl.matrix(frame)
    gw = g.truncate(2) if L == rl.identity(m) else pullback_metric(g.truncate(2), L)
    Ss = tuple(S.truncate(2) if L == rl.identity(m) else pullback_structure(S.truncate(2), L)
               for S in _as_tuple(structure))
    bump = TruncatedSeries.monomial(tuple(2 if t == m - 1 else 0 for t in range(m)), m, 2, mpq(1, 2))
    zero = TruncatedSeries.zero(m, 2)

    def values(h: MetricJet) -> list:
        ginv = h.inverse(1)
        R = riemann(h, ginv)
        out = [scalar_from_curvature(R, ginv).eval_at_origin()]
        if Ss:
            parts = [star_from_curvature(R, ginv, S) for S in Ss]
            out.append(sum_series(parts, m, R.order).eval_at_origin())
        return out

    base = values(gw)
    if not Ss:
        h = MetricJet(gw.g.scale(bump.scale(2) + 1))
        return ((values(h)[0] - base[0],),)
    builder = hyper_variation if len(Ss) == 3 else hermitian_variation
    arg = Ss if len(Ss) == 3 else Ss[0]
    cols = []
    for U in ((bump, zero), (zero, bump)):
        v = values(builder(gw, arg, *U))
        cols.append([v[0] - base[0], v[1] - base[1]])
    return tuple(tuple(cols[c][r] for c in range(2)) for r in range(2))


def verify_deformation(g: MetricJet, structure, h: MetricJet, h_structure, unknowns: dict, N: int,
                       target: str = "tau", frame=None) -> tuple[dict, dict, dict]:
    """Verdicts for ``h`` obtained from ``g``; returns (verdicts, orders, diagnostics).

    ``target`` is ``"tau"`` (conformal deformation; the structure, if any, is
    only carried along) or ``"tau-taustar"``.
    """
    m = g.m
    reliable = N - 2
    verdicts: dict = {}
    diags: dict = {}
    orders = {"requested": N, "reliable": reliable}
    tau = scalar_series(h)
    deg_tau = constancy_degree(tau)
    verdicts["tau_constant"] = deg_tau >= reliable
    orders["tau_constancy_degree"] = deg_tau
    diags["tau"] = rl.fmt(tau.eval_at_origin())
    Ss = _as_tuple(h_structure)
    if Ss:
        v, d = structure_field_verdicts(h, h_structure)
        verdicts.update(v)
        diags.update(d)
    if Ss and target == "tau-taustar":
        if verdicts.get("structure_field_identities", True):
            n = min([h.order] + [S.order for S in Ss])
            hh = h.truncate(n)
            ginv = hh.inverse(n - 1)
            R = riemann(hh, ginv)
            star = sum_series([star_from_curvature(R, ginv, S) for S in Ss], m, R.order)
            deg_star = constancy_degree(star)
            orders["taustar_constancy_degree"] = deg_star
            verdicts["taustar_constant"] = deg_star >= reliable
            diags["taustar"] = rl.fmt(star.eval_at_origin())
        else:
            verdicts["taustar_constant"] = False
    vals = {name: series_valuation(f) for name, f in unknowns.items()}
    verdicts["unknowns_vanish_to_second_order"] = all(v >= 3 for v in vals.values())
    diags["unknown_valuations"] = vals
    verdicts["point_model_preserved"] = point_model(h, h_structure) == point_model(g, structure)
    if frame is not None:
        lin = probe_linearization(g, structure if target == "tau-taustar" else None, frame)
        L = rl.matrix(frame)
        eps_w = rl.mat_mul(rl.mat_mul(rl.transpose(L), g.at_origin()), L)
        kind = "tau" if target == "tau" else ("hyper" if len(Ss) == 3 else "hermitian")
        want = expected_linearization(kind, eps_w)
        verdicts["linearization_pattern"] = lin == want
        diags["linearization"] = [[rl.fmt(x) for x in row] for row in lin]
        diags["expected_linearization"] = [[rl.fmt(x) for x in row] for row in want]
    return verdicts, orders, diags
