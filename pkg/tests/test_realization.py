import pytest
from gmpy2 import mpq

from curvjet import rational as rl
from curvjet.errors import PreconditionError
from curvjet.geometry_engine import MetricJet, StructureField, point_model, scalar_series, star_scalar_series
from curvjet.realization import (conformal_factor, extend_structure, extend_structure_hyper, hermitian_variation,
                                 hyper_variation, metric_root, quadratic_metric, realize, realize_conformally_flat)
from curvjet.series_jet import SeriesMatrix, TruncatedSeries, constant_times
from curvjet.tensor_core import (BilinearForm, CurvatureModel, CurvTensor, constant_curvature_tensor,
                                 random_model, scalar_curvature, standard_form, standard_structure, star_scalar)


def cc(m):
    eps = rl.identity(m)
    return CurvatureModel(BilinearForm(eps), constant_curvature_tensor(eps))


def test_flat_model_realizes_constant_metric():
    M = CurvatureModel(standard_form(1, 2), CurvTensor.zero(3))
    G = realize(M, 4)
    assert G.g == MetricJet.constant(M.eps, 4)
    assert realize_conformally_flat(M, 4).g == G.g


def test_quadratic_metric_m2_example():
    g = quadratic_metric(cc(2), 2)
    x1 = TruncatedSeries.variable(0, 2, 2)
    x2 = TruncatedSeries.variable(1, 2, 2)
    third = mpq(1, 3)
    assert g[0, 0] == 1 - (x2 * x2).scale(third)
    assert g[1, 1] == 1 - (x1 * x1).scale(third)
    assert g[0, 1] == (x1 * x2).scale(third)


def test_realize_reproduces_model_all_kinds():
    cases = [(2, (1, 1), "plain"), (5, (2, 3), "plain"), (4, (2, 2), "hermitian"), (4, (2, 2), "para"),
             (8, (0, 8), "hyper-pseudo"), (8, (4, 4), "hyper-para")]
    for m, sig, kind in cases:
        M = random_model(m, sig, 1, kind)
        G = realize(M, 2 if m == 8 else 3)
        assert G.reproduces_model(), (m, sig, kind)
    with pytest.raises(PreconditionError):
        realize(cc(3), 1)


def test_conformal_factor_example_m3():
    phi = conformal_factor(cc(3), 2)
    xs = [TruncatedSeries.variable(i, 3, 2) for i in range(3)]
    want = sum((x * x for x in xs), TruncatedSeries.zero(3, 2)).scale(mpq(-1, 2))
    assert phi == want
    G = realize_conformally_flat(cc(3), 4)
    assert scalar_series(G.g).eval_at_origin() == 6
    assert G.reproduces_model()


def test_conformally_flat_preconditions():
    with pytest.raises(PreconditionError):
        realize_conformally_flat(random_model(2, (0, 2), 0), 3)
    with pytest.raises(PreconditionError):
        realize_conformally_flat(random_model(4, (0, 4), 0), 3)
    skew = CurvatureModel(BilinearForm(rl.diag([2, 1, 1])), CurvTensor.zero(3))
    with pytest.raises(PreconditionError):
        realize_conformally_flat(skew, 3)


@pytest.mark.parametrize("m,sig", [(3, (1, 2)), (4, (2, 2)), (5, (0, 5))])
def test_kulkarni_nomizu_models_realize_conformally(m, sig):
    M = random_model(m, sig, 7, weyl_part=False)
    assert realize_conformally_flat(M, 3).reproduces_model()


def test_extension_of_constant_metric_is_trivial():
    M = random_model(4, (0, 4), 0, "hermitian").with_tensor(CurvTensor.zero(4))
    g = MetricJet.constant(M.eps, 3)
    assert metric_root(M.eps, g) == SeriesMatrix.identity(4, 4, 3)
    assert extend_structure(M, M.structure, g).J == SeriesMatrix.constant(M.structure.J, 4, 3)
    H = random_model(8, (4, 4), 0, "hyper-para").with_tensor(CurvTensor.zero(8))
    triple = extend_structure_hyper(H, H.structure, MetricJet.constant(H.eps, 2))
    assert tuple(S.J.at_origin() for S in triple) == tuple(S.J for S in H.structure.structures)


@pytest.mark.parametrize("kind,sig", [("hermitian", (0, 4)), ("hermitian", (2, 2)), ("para", (2, 2))])
def test_extended_structure_identities(kind, sig):
    M = random_model(4, sig, 3, kind)
    G = realize(M, 4)
    S = G.structure
    assert S.violations(G.g) == []
    psi = metric_root(M.eps, G.g)
    assert constant_times(M.eps, psi) == constant_times(M.eps, psi).transpose()  # psi^T eps = eps psi
    assert star_scalar_series(G.g, S).eval_at_origin() == star_scalar(M)


def test_extended_hyper_identities():
    for kind, sig in (("hyper-pseudo", (4, 4)), ("hyper-para", (4, 4))):
        M = random_model(8, sig, 3, kind)
        G = realize(M, 3)
        J1, J2, J3 = (S.J for S in G.structure)
        I = SeriesMatrix.identity(8, 8, 3)
        assert J1 @ J1 == I.scale(-1)
        rho2 = -1 if kind == "hyper-pseudo" else 1
        assert J2 @ J2 == I.scale(rho2) and J3 @ J3 == I.scale(rho2)
        assert J1 @ J2 == J3 and J2 @ J1 == J3.scale(-1)
        assert all(not S.violations(G.g) for S in G.structure)


def test_variations_with_zero_functions_are_trivial():
    M = random_model(4, (0, 4), 2, "hermitian")
    G = realize(M, 3)
    zero = TruncatedSeries.zero(4, 3)
    assert hermitian_variation(G.g, G.structure, zero, zero) == G.g
    H = random_model(8, (0, 8), 2, "hyper-pseudo")
    GH = realize(H, 2)
    z8 = TruncatedSeries.zero(8, 2)
    assert hyper_variation(GH.g, GH.structure, z8, z8) == GH.g


def test_variation_preserves_compatibility_and_preconditions():
    M = random_model(4, (2, 2), 2, "para")
    G = realize(M, 3)
    x4 = TruncatedSeries.variable(3, 4, 3)
    x1 = TruncatedSeries.variable(0, 4, 3)
    h = hermitian_variation(G.g, G.structure, x4 * x4 * x1, x1 * x1)
    assert G.structure.violations(h) == []
    with pytest.raises(PreconditionError):
        hermitian_variation(G.g, G.structure, 1 + x1, x1 * x1)
    small = random_model(2, (0, 2), 0, "hermitian")
    Gs = realize(small, 3)
    z = TruncatedSeries.zero(2, 3)
    with pytest.raises(PreconditionError):
        hermitian_variation(Gs.g, Gs.structure, z, z)
