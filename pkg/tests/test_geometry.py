"""Series curvature checked against an independent sympy implementation."""
import itertools

import pytest
from gmpy2 import mpq

import oracles
from curvjet import rational as rl
from curvjet.errors import PreconditionError, StructureError
from curvjet.geometry_engine import (MetricJet, StructureField, christoffel_first, point_model, pullback_metric,
                                     riemann, scalar_series, star_scalar_series, weyl_series)
from curvjet.realization import realize
from curvjet.series_jet import SeriesMatrix, TruncatedSeries
from curvjet.tensor_core import (CurvatureModel, CurvTensor, random_congruence, random_model, scalar_curvature,
                                 standard_form, standard_structure, star_scalar, weyl)


def perturbed_metric(m, N, seed):
    """Non-quadratic metric jet: eps plus small cubic and quadratic terms."""
    import random
    rng = random.Random(seed)
    eps = rl.diag([-1] + [1] * (m - 1))
    rows = [[None] * m for _ in range(m)]
    for i in range(m):
        for j in range(i, m):
            terms = {(0,) * m: eps[i][j]}
            for alpha in itertools.product(range(N + 1), repeat=m):
                if 1 <= sum(alpha) <= N and rng.random() < 0.3:
                    terms[alpha] = mpq(rng.randint(-2, 2), rng.randint(1, 3))
            rows[i][j] = rows[j][i] = TruncatedSeries(m, N, terms)
    return MetricJet(SeriesMatrix(rows))


def test_christoffel_example():
    m, N = 2, 3
    x2 = TruncatedSeries.variable(1, m, N)
    one = TruncatedSeries.constant(1, m, N)
    zero = TruncatedSeries.zero(m, N)
    g = MetricJet(SeriesMatrix([[one - (x2 * x2).scale(mpq(1, 3)), zero], [zero, one]]))
    G = christoffel_first(g)
    third = TruncatedSeries.variable(1, m, N - 1).scale(mpq(1, 3))
    assert G[0][0][1] == third
    assert G[0][1][0] == -third and G[1][0][0] == -third


def test_constant_metric_is_flat():
    g = MetricJet.constant(rl.diag([-1, 1, 1]), 3)
    R = riemann(g)
    assert R.at_origin().is_zero()
    assert scalar_series(g).is_zero()
    assert point_model(g) == CurvatureModel(standard_form(1, 2), CurvTensor.zero(3))
    with pytest.raises(PreconditionError):
        riemann(MetricJet.constant(rl.identity(2), 1))


@pytest.mark.parametrize("m,N,seed", [(2, 4, 0), (3, 3, 1), (3, 4, 2)])
def test_riemann_and_scalar_match_sympy_oracle(m, N, seed):
    g = perturbed_metric(m, N, seed)
    xs = oracles.symbols(m)
    G = [[oracles.to_sympy(g[i, j], xs) for j in range(m)] for i in range(m)]
    R_or, _ = oracles.riemann_series(G, xs, N)
    R = riemann(g)
    for idx in itertools.product(range(m), repeat=4):
        assert oracles.coefficients(oracles.to_sympy(R[idx], xs), xs) == oracles.coefficients(R_or[idx], xs), idx
    tau = oracles.scalar_series(G, xs, N)
    assert oracles.coefficients(oracles.to_sympy(scalar_series(g), xs), xs) == oracles.coefficients(tau, xs)


@pytest.mark.parametrize("m,sig", [(2, (0, 2)), (3, (1, 2)), (4, (2, 2))])
def test_realized_curvature_at_origin_matches_quadratic_oracle(m, sig):
    M = random_model(m, sig, 3)
    g = realize(M, 2).g
    g2 = {}
    for i in range(m):
        for j in range(i, m):
            d = {}
            for a in range(m):
                for b in range(a, m):
                    alpha = [0] * m
                    alpha[a] += 1
                    alpha[b] += 1
                    c = oracles.F(g[i, j].coeff(alpha))
                    d[(a, b)] = c * (2 if a == b else 1)
            g2[(i, j)] = d
    assert oracles.riemann_at_origin_quadratic(g2, m) == oracles.tensor(M.A, m)


def test_point_model_after_linear_change():
    M = random_model(3, (1, 2), 2)
    g = realize(M, 3).g
    L = random_congruence(3, 1)
    P = point_model(pullback_metric(g, L))
    from curvjet.tensor_core import transport_model
    assert P == transport_model(M, L)


def test_star_series_at_origin_and_flat_case():
    M = random_model(4, (2, 2), 6, "hermitian")
    G = realize(M, 3)
    s = star_scalar_series(G.g, G.structure)
    assert s.eval_at_origin() == star_scalar(M)
    flat = MetricJet.constant(rl.identity(4), 3)
    J = StructureField.constant(standard_structure("hermitian", 4), 3)
    assert star_scalar_series(flat, J).is_zero()


def test_star_series_rejects_incompatible_structure():
    g = MetricJet.constant(rl.identity(4), 2)
    bad = StructureField(SeriesMatrix.constant(rl.identity(4), 4, 2), -1)
    with pytest.raises(StructureError):
        star_scalar_series(g, bad)


def test_weyl_series_agrees_with_point_weyl():
    M = random_model(4, (1, 3), 8)
    W = weyl_series(realize(M, 3).g)
    assert W.at_origin() == weyl(M)
    assert scalar_curvature(point_model(realize(M, 2).g)) == scalar_curvature(M)
