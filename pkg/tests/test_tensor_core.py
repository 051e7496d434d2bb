"""Point-tensor algebra checked against literal index-summation oracles."""
import random

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

import oracles
from curvjet import rational as rl
from curvjet.errors import DimensionError, StructureError
from curvjet.tensor_core import (BilinearForm, CurvatureModel, CurvTensor, HermitianStructure, HyperStructure,
                                 constant_curvature_tensor, is_adapted, is_conformally_flat, kulkarni_nomizu,
                                 orthonormalize_model, random_congruence, random_model, random_symmetric, ricci,
                                 scalar_curvature, standard_eps, standard_form, standard_structure, star_scalar,
                                 star_scalar_hyper, transport_model, validate_curvature_tensor, weyl)


def euclid(m):
    return standard_form(0, m)


def cc_model(m, p=0, kind="plain"):
    eps = standard_eps(kind, (p, m - p))
    return CurvatureModel(BilinearForm(eps), constant_curvature_tensor(eps), standard_structure(kind, m))


# -- validation -----------------------------------------------------------------------

def test_zero_tensor_is_valid():
    assert validate_curvature_tensor(CurvTensor.zero(3)).ok


def test_antisymmetry_violation_has_witness():
    A = CurvTensor.from_entries(2, {(0, 1, 0, 1): 1, (1, 0, 0, 1): 1})
    res = validate_curvature_tensor(A)
    assert not res.ok
    assert "antisymmetry" in res.identities()
    assert any(v.witness == (1, 2, 1, 2) or v.witness == (2, 1, 1, 2) for v in res.violations)


def test_constant_curvature_tensor_matches_oracle():
    for m in (2, 3, 4):
        eps = euclid(m).eps
        A = constant_curvature_tensor(eps)
        want = oracles.constant_curvature(eps, m)
        assert oracles.tensor(A, m) == want
        assert oracles.curvature_symmetric(want, m)
        assert validate_curvature_tensor(A).ok


def test_pair_symmetry_and_bianchi_are_checked_independently():
    # satisfies both antisymmetries but not pair symmetry
    A = CurvTensor.from_entries(3, {(0, 1, 0, 2): 1, (1, 0, 0, 2): -1, (0, 1, 2, 0): -1, (1, 0, 2, 0): 1})
    assert "pair_symmetry" in validate_curvature_tensor(A).identities()
    # antisymmetric in pairs, pair symmetric, but not Bianchi: A_1234 alone (with its images)
    B = CurvTensor.from_canonical(4, {(0, 1, 2, 3): 1})
    res = validate_curvature_tensor(B)
    assert res.identities() == {"bianchi"}


def test_from_canonical_rejects_inconsistent_entries():
    with pytest.raises(StructureError):
        CurvTensor.from_canonical(2, {(0, 1, 0, 1): 1, (0, 1, 1, 0): 1})
    with pytest.raises(DimensionError):
        CurvTensor.from_canonical(2, {(0, 1, 0, 2): 1})


# -- traces against oracles ------------------------------------------------------------

@pytest.mark.parametrize("m,p", [(3, 0), (3, 1), (4, 0), (4, 2)])
def test_ricci_and_scalar_of_constant_curvature(m, p):
    M = cc_model(m, p)
    rho = ricci(M)
    assert rho == rl.mat_scale(m - 1, M.eps)
    assert scalar_curvature(M) == m * (m - 1)
    T = oracles.tensor(M.A, m)
    assert oracles.scalar(T, M.eps, m) == m * (m - 1)


def test_zero_model_traces():
    M = CurvatureModel(euclid(4), CurvTensor.zero(4), standard_structure("hermitian", 4))
    assert scalar_curvature(M) == 0 and star_scalar(M) == 0
    assert ricci(M) == rl.zeros(4, 4)
    P = CurvatureModel(BilinearForm(standard_eps("para", (2, 2))), CurvTensor.zero(4), standard_structure("para", 4))
    assert star_scalar(P) == 0


def test_star_scalar_constant_curvature_is_four():
    M = cc_model(4, 0, "hermitian")
    assert star_scalar(M) == 4
    T = oracles.tensor(M.A, 4)
    assert oracles.star(T, M.eps, M.structure.J, -1, 4) == 4


@pytest.mark.parametrize("kind,sig", [("plain", (1, 3)), ("hermitian", (0, 4)), ("hermitian", (2, 2)),
                                      ("para", (2, 2)), ("plain", (2, 3))])
def test_random_traces_match_oracle(kind, sig):
    m = sum(sig)
    for seed in range(3):
        M = random_model(m, sig, seed, kind)
        T = oracles.tensor(M.A, m)
        assert oracles.ricci(T, M.eps, m) == [[oracles.F(v) for v in row] for row in ricci(M)]
        assert oracles.scalar(T, M.eps, m) == scalar_curvature(M)
        if M.structure is not None:
            assert oracles.star(T, M.eps, M.structure.J, M.structure.rho, m) == star_scalar(M)


@pytest.mark.parametrize("kind,sig", [("hyper-pseudo", (0, 8)), ("hyper-para", (4, 4))])
def test_hyper_star_is_sum_of_three(kind, sig):
    M = random_model(8, sig, 1, kind)
    T = oracles.tensor(M.A, 8)
    total = sum(oracles.star(T, M.eps, H.J, H.rho, 8) for H in M.structure.structures)
    assert star_scalar_hyper(M) == total


def test_hyper_constant_curvature_is_three_times_single():
    M = cc_model(8, 0, "hyper-pseudo")
    single = star_scalar(M, M.structure.J1)
    assert star_scalar_hyper(M) == 3 * single


# -- invariances -------------------------------------------------------------------------

def test_star_scalar_sign_of_J_irrelevant():
    for kind, sig in (("hermitian", (2, 2)), ("para", (2, 2))):
        M = random_model(4, sig, 5, kind)
        assert star_scalar(M, M.structure.negated()) == star_scalar(M)


def test_hyper_cyclic_and_pairwise_sign_invariance():
    for kind, sig in (("hyper-pseudo", (4, 4)), ("hyper-para", (4, 4))):
        M = random_model(8, sig, 2, kind)
        J1, J2, J3 = M.structure.structures
        base = star_scalar_hyper(M)
        # the defining sum only sees each J up to order and sign; cyclic
        # relabelling keeps the quaternion relations only in the pseudo case
        if kind == "hyper-pseudo":
            for perm in ((J2, J3, J1), (J3, J1, J2)):
                assert star_scalar_hyper(M, HyperStructure(*perm, kind)) == base
        twisted = HyperStructure(J1.negated(), J2.negated(), J3, kind)
        assert star_scalar_hyper(M, twisted) == base


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_transport_preserves_traces(seed):
    M = random_model(4, (1, 3), seed)
    phi = random_congruence(4, seed)
    N = transport_model(M, phi)
    assert validate_curvature_tensor(N.A).ok
    assert scalar_curvature(N) == scalar_curvature(M)


def test_transport_preserves_star_scalar():
    M = random_model(4, (2, 2), 3, "hermitian")
    N = transport_model(M, random_congruence(4, 3))
    assert not N.structure_violations()
    assert star_scalar(N) == star_scalar(M)


# -- Kulkarni-Nomizu and Weyl ------------------------------------------------------------

def test_kulkarni_nomizu_examples():
    eps = euclid(3).eps
    assert kulkarni_nomizu(rl.zeros(3, 3), rl.zeros(3, 3)).is_zero()
    assert kulkarni_nomizu(eps, eps) == constant_curvature_tensor(eps).scale(2)
    with pytest.raises(DimensionError):
        kulkarni_nomizu(eps, rl.identity(2))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 4))
def test_kulkarni_nomizu_is_a_curvature_tensor(seed, m):

    rng = random.Random(seed)
    h, k = random_symmetric(m, rng), random_symmetric(m, rng)
    A = kulkarni_nomizu(h, k)
    assert oracles.tensor(A, m) == oracles.kulkarni_nomizu(h, k, m)
    assert validate_curvature_tensor(A).ok


def test_weyl_examples():
    assert weyl(CurvatureModel(euclid(4), CurvTensor.zero(4))).is_zero()
    for seed in range(5):
        assert is_conformally_flat(random_model(4, (1, 3), seed, weyl_part=False))
        assert weyl(random_model(3, (seed % 4, 3 - seed % 4), seed)).is_zero()
    with pytest.raises(DimensionError):
        weyl(random_model(2, (0, 2), 0))


def test_weyl_is_totally_trace_free_and_detects_weyl_sector():
    M = random_model(4, (2, 2), 11)
    W = weyl(M)
    assert validate_curvature_tensor(W).ok
    T = oracles.tensor(W, 4)
    assert all(v == 0 for row in oracles.ricci(T, M.eps, 4) for v in row)
    assert not is_conformally_flat(M)
    # a Ricci-flat tensor with one Weyl component
    A = CurvTensor.from_canonical(4, {(0, 1, 0, 1): 1, (2, 3, 2, 3): 1, (0, 2, 0, 2): -1, (1, 3, 1, 3): -1})
    P = CurvatureModel(euclid(4), A)
    assert validate_curvature_tensor(A).ok
    assert ricci(P) == rl.zeros(4, 4)
    assert not is_conformally_flat(P)


# -- structures and frames ----------------------------------------------------------------

def test_structure_invariants():
    for kind, sig in (("hermitian", (0, 4)), ("hermitian", (2, 2)), ("para", (2, 2))):
        M = random_model(4, sig, 0, kind)
        assert validate_curvature_tensor(M.A).ok and not M.structure_violations()
    H = random_model(8, (4, 4), 0, "hyper-para").structure
    j1, j2, j3 = (S.J for S in H.structures)
    I = rl.identity(8)
    assert rl.mat_mul(j1, j1) == rl.mat_scale(-1, I)
    assert rl.mat_mul(j2, j2) == I and rl.mat_mul(j3, j3) == I
    assert rl.mat_mul(j1, j2) == j3 == rl.mat_scale(-1, rl.mat_mul(j2, j1))


def test_broken_J_is_reported():
    bad = HermitianStructure(rl.identity(4), -1)
    assert "J^2 != -1 id" in bad.violations(euclid(4))


def test_random_model_is_deterministic_and_checks_signature():
    assert random_model(4, (1, 3), 9).A == random_model(4, (1, 3), 9).A
    assert random_model(4, (1, 3), 9).A != random_model(4, (1, 3), 10).A
    with pytest.raises(StructureError):
        random_model(3, (0, 3), 0, "hermitian")
    with pytest.raises(StructureError):
        random_model(4, (1, 3), 0, "para")


def test_orthonormalize_examples():
    M = random_model(4, (0, 4), 0, "hermitian")
    N, phi = orthonormalize_model(M)
    assert phi == rl.identity(4) and N == M
    D = CurvatureModel(BilinearForm(rl.diag([4, 9])), CurvTensor.zero(2))
    N, phi = orthonormalize_model(D)
    assert phi == rl.diag([mpq(1, 2), mpq(1, 3)])
    assert N.eps == rl.identity(2)


@pytest.mark.parametrize("kind,sig", [("plain", (1, 2)), ("hermitian", (2, 2)), ("para", (2, 2)),
                                      ("hyper-pseudo", (4, 4))])
def test_orthonormalize_recovers_adapted_frame(kind, sig):
    m = sum(sig)
    M = random_model(m, sig, 4, kind)
    C = transport_model(M, random_congruence(m, 4))
    N, phi = orthonormalize_model(C)
    assert is_adapted(N.eps, N.structure)
    assert N.form.signature == M.form.signature
    assert scalar_curvature(N) == scalar_curvature(M)
    assert validate_curvature_tensor(N.A).ok
    assert N == transport_model(C, phi)
