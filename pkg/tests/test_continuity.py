import numpy as np
import pytest
from hypothesis import given, strategies as st

from pwqcont.cones import build_partition, cone_samples, shared_boundary
from pwqcont.continuity import (GammaSet, PhiParam, PwqFunction, boundary_basis, check_gamma,
                                check_ray_pairs, check_rays, check_subspace, constrained_pairs,
                                cross_validate, evaluate, gamma_report, materialize_from_phi,
                                random_phi, synthesize_gamma, synthesize_phi, transform,
                                verdicts)
from pwqcont.errors import InvalidInputError, OutOfDomainError, PreconditionError

from conftest import fan, octants

P2_EX1 = np.array([[2.0, -1.0], [-1.0, 1.0]])


def with_p(pwq, *P):
    return PwqFunction(pwq.C, tuple(np.asarray(M, dtype=float) for M in P))


def test_pwq_validation():
    with pytest.raises(InvalidInputError):
        PwqFunction(np.array([[1.0, 0.0], [2.0, 0.0]]), (np.eye(2),))
    with pytest.raises(InvalidInputError):
        PwqFunction(np.eye(2), (np.array([[1.0, 2.0], [0.0, 1.0]]),))


def test_evaluate_examples(ex1, ex1_pwq):
    ev = evaluate(ex1_pwq, ex1, [0.0, 2.0])
    assert ev.value == 4.0 and ev.regions == [0, 1] and ev.spread == 0.0
    assert evaluate(ex1_pwq, ex1, [1.0, 0.0]).value == 1.0
    ev = evaluate(ex1_pwq, ex1, [-1.0, 1.0])
    assert ev.value == 5.0 and ev.regions == [1]
    with pytest.raises(OutOfDomainError):
        evaluate(ex1_pwq, ex1, [0.0, -1.0])


def test_transform_examples(ex1_pwq):
    tp = transform(ex1_pwq)
    assert np.allclose(tp.T, np.eye(2))
    assert np.allclose(tp.P11[1], P2_EX1)
    assert tp.C_perp.shape == (2, 0)

    pw = PwqFunction(np.array([[1.0, 0.0]]), (np.array([[1.0, 2.0], [2.0, 5.0]]),))
    tp = transform(pw)
    assert np.allclose(tp.T, np.eye(2))
    assert tp.P11[0].shape == tp.P21[0].shape == tp.P22[0].shape == (1, 1)


def test_transform_round_trip():
    rng = np.random.default_rng(4)
    C = rng.normal(size=(2, 4))
    P = [sym_(rng.normal(size=(4, 4))) for _ in range(3)]
    tp = transform(PwqFunction(C, tuple(P)))
    assert np.allclose(tp.T @ tp.T_inv, np.eye(4))
    for i, Pi in enumerate(P):
        assert np.allclose(tp.T.T @ tp.full(i) @ tp.T, Pi)


def sym_(M):
    return 0.5 * (M + M.T)


def test_ray_pair_examples(ex1, ex1_pwq):
    r = check_ray_pairs(ex1_pwq, ex1, 0, 1).residuals
    assert r["ray11"] == r["ray21"] == r["block22"] == 0.0
    # perturbing along e1 leaves the shared ray e2 untouched
    eps = 1e-3
    r = check_ray_pairs(with_p(ex1_pwq, np.eye(2) + np.diag([eps, 0.0]), P2_EX1), ex1, 0, 1)
    assert r.residuals["ray11"] == 0.0
    r = check_ray_pairs(with_p(ex1_pwq, np.eye(2) + np.diag([0.0, eps]), P2_EX1), ex1, 0, 1)
    assert np.isclose(r.residuals["ray11"], eps)


def test_origin_only_pair_is_vacuous_for_square_c(fan8):
    P = tuple(np.eye(2) * (k + 1) for k in range(8))
    r = check_ray_pairs(PwqFunction(np.eye(2), P), fan8, 0, 4).residuals
    assert r["max"] == 0.0
    assert (0, 4) not in constrained_pairs(fan8, 2)
    assert (0, 4) in constrained_pairs(fan8, 3)


def test_subspace_examples(ex1, ex1_pwq, ex2_rounded):
    rep = check_subspace(ex1_pwq, ex1)
    assert rep.verdict and rep.worst_residual == 0.0
    p8 = fan(np.arange(8) * np.pi / 4)
    rep = check_subspace(ex2_rounded, p8)
    first = rep.pairs[0]
    assert (first.i, first.j) == (0, 1)
    assert np.isclose(first.value[0, 0], -5e-5, atol=1e-6)
    assert not rep.verdict
    same = PwqFunction(np.eye(2), tuple(np.eye(2) for _ in range(8)))
    assert check_subspace(same, p8).worst_residual == 0.0


def test_boundary_basis_square_c(ex1, ex1_pwq):
    W = boundary_basis(ex1_pwq, ex1, 0, 1)
    assert np.allclose(W, [[0.0], [1.0]])


def test_phi_examples(ex1, ex1_pwq):
    phi = synthesize_phi(ex1_pwq, ex1)
    assert np.allclose(phi.full, [[1, 0, 0], [0, 2, 1], [0, 1, 1]])
    assert not phi.defined_mask[0, 1] and phi.defined_mask[1, 2]
    for c in (0.0, 3.7, -2.0):
        full = phi.full.copy()
        full[0, 1] = full[1, 0] = c
        back = materialize_from_phi(PhiParam(full, phi.phi21, phi.phi22, None, phi.defined_mask),
                                    ex1, ex1_pwq.C)
        assert np.allclose(back.P[0], np.eye(2)) and np.allclose(back.P[1], P2_EX1)

    single = build_partition(np.eye(2), [[1, 2]])
    phi1 = synthesize_phi(PwqFunction(np.eye(2), (np.eye(2),)), single)
    assert np.allclose(phi1.phi11, np.eye(2))


def test_phi_infeasible_on_discontinuous(ex1, ex1_pwq):
    res = synthesize_phi(with_p(ex1_pwq, np.eye(2), 2 * np.eye(2)), ex1)
    assert not res
    assert res.worst_pair == (0, 1)


def test_phi_zero_and_dimension_errors(ex1):
    zero = PhiParam(np.zeros((3, 3)), np.zeros((0, 3)), np.zeros((0, 0)), None,
                    np.ones((3, 3), dtype=bool))
    assert all(np.all(P == 0) for P in materialize_from_phi(zero, ex1, np.eye(2)).P)
    bad = PhiParam(np.zeros((2, 2)), np.zeros((0, 2)), np.zeros((0, 0)), None,
                   np.ones((2, 2), dtype=bool))
    with pytest.raises(InvalidInputError):
        materialize_from_phi(bad, ex1, np.eye(2))


@given(st.integers(0, 2**32 - 1))
def test_phi_round_trip_on_fan(seed):
    p = fan(np.arange(8) * np.pi / 4)
    rng = np.random.default_rng(seed)
    phi0 = random_phi(p, np.eye(2), rng)
    pwq = materialize_from_phi(phi0, p, np.eye(2))
    phi = synthesize_phi(pwq, p)
    mask = phi.defined_mask
    assert np.allclose(phi.phi11[mask], phi0.phi11[mask], atol=1e-9)
    back = materialize_from_phi(phi, p, np.eye(2))
    for a, b in zip(back.P, pwq.P):
        assert np.allclose(a, b, atol=1e-9)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["cperp", "identity"]))
def test_materialized_is_continuous_wide_c(seed, vmat):
    p = octants()
    rng = np.random.default_rng(seed)
    C = rng.normal(size=(3, 4))
    pwq = materialize_from_phi(random_phi(p, C, rng, vmat), p, C)
    assert check_subspace(pwq, p).worst_residual <= 1e-10
    phi = synthesize_phi(pwq, p, vmat)
    back = materialize_from_phi(phi, p, C)
    for a, b in zip(back.P, pwq.P):
        assert np.allclose(a, b, atol=1e-9 * max(1.0, np.linalg.norm(b)))


def test_gamma_examples(ex1, ex1_pwq):
    g = synthesize_gamma(ex1_pwq, ex1)
    assert check_gamma(ex1_pwq, ex1, g).worst_residual <= 1e-14
    known = GammaSet({(0, 1): np.array([[-0.5, 1.0]])})
    assert check_gamma(ex1_pwq, ex1, known).worst_residual <= 1e-12
    assert np.allclose(known.get(1, 0), [[0.5, -1.0]])

    wrong = check_gamma(ex1_pwq, ex1, GammaSet({(0, 1): np.array([[1.0, 0.0]])}))
    assert not wrong.verdict
    assert np.allclose(wrong.pairs[0].value, [[-3.0, 1.0], [1.0, 0.0]])

    same = with_p(ex1_pwq, np.eye(2), np.eye(2))
    zero = GammaSet({(0, 1): np.zeros((1, 2))})
    assert check_gamma(same, ex1, zero).worst_residual == 0.0
    assert np.allclose(synthesize_gamma(same, ex1).get(0, 1), 0.0)


def test_gamma_infeasible_and_missing(ex1, ex1_pwq):
    bad = synthesize_gamma(with_p(ex1_pwq, np.eye(2), 2 * np.eye(2)), ex1)
    assert not bad and bad.pair == (0, 1)
    rep = gamma_report(with_p(ex1_pwq, np.eye(2), 2 * np.eye(2)), ex1)
    assert rep.verdict is False
    with pytest.raises(InvalidInputError):
        check_gamma(ex1_pwq, ex1, GammaSet({}))


def test_gamma_json_round_trip(ex1, ex1_pwq):
    g = synthesize_gamma(ex1_pwq, ex1)
    h = GammaSet.from_dict(g.to_dict())
    assert np.allclose(h.get(0, 1), g.get(0, 1))


def test_unvalidated_partition_rejected(ex1, ex1_pwq):
    raw = build_partition(ex1.rays, [[1, 3], [2, 3]], validate=False)
    with pytest.raises(PreconditionError):
        check_subspace(ex1_pwq, raw)


def test_all_four_verdicts_flip(ex1, ex1_pwq):
    assert all(verdicts(ex1_pwq, ex1).values())
    assert not any(verdicts(with_p(ex1_pwq, np.eye(2), 2 * np.eye(2)), ex1).values())


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_scaling_covariance(seed, alpha):
    p = fan(np.arange(8) * np.pi / 4)
    rng = np.random.default_rng(seed)
    P = tuple(sym_(rng.normal(size=(2, 2))) for _ in range(8))
    pwq = PwqFunction(np.eye(2), P)
    a = check_subspace(pwq, p)
    b = check_subspace(pwq.scaled(alpha), p)
    for x, y in zip(a.pairs, b.pairs):
        assert np.allclose(y.value, alpha * x.value, rtol=1e-12, atol=1e-14)
    assert verdicts(pwq, p) == verdicts(pwq.scaled(alpha), p)


def test_subspace_pass_implies_no_boundary_spread():
    p = fan(np.arange(8) * np.pi / 4)
    rng = np.random.default_rng(8)
    pwq = materialize_from_phi(random_phi(p, np.eye(2), rng), p, np.eye(2))
    assert check_subspace(pwq, p).verdict
    worst = 0.0
    for i, j in p.adjacent_pairs:
        Z = shared_boundary(p, i, j).Z
        for z in (Z @ rng.exponential(size=(Z.shape[1], 10_000 // len(p.adjacent_pairs)))).T:
            ev = evaluate(pwq, p, z)
            worst = max(worst, ev.spread / max(1.0, abs(ev.value)))
    assert worst <= 1e-9


def test_square_path_matches_padded_wide_path():
    p = fan(np.arange(8) * np.pi / 4)
    rng = np.random.default_rng(21)
    base = materialize_from_phi(random_phi(p, np.eye(2), rng), p, np.eye(2))
    C_wide = np.hstack([np.eye(2), np.zeros((2, 1))])
    for P_set, expect in ((base.P, True), ((2 * np.eye(2),) + base.P[1:], False)):
        square = PwqFunction(np.eye(2), P_set)
        padded = PwqFunction(C_wide, tuple(np.block([[Pi, np.zeros((2, 1))],
                                                     [np.zeros((1, 2)), np.eye(1)]])
                                           for Pi in P_set))
        assert verdicts(square, p) == verdicts(padded, p) == {k: expect for k in verdicts(square, p)}


def test_cross_validate_small_and_deterministic(ex1):
    a = cross_validate(ex1, np.eye(2), trials=5, seed=3)
    b = cross_validate(ex1, np.eye(2), trials=5, seed=3, workers=3)
    assert a.ok and a.agreement == 5
    assert a.to_dict() == b.to_dict()
    assert a.agreement_matrix()[0][0] == 10


def test_report_serialisation(ex1, ex1_pwq):
    d = check_rays(with_p(ex1_pwq, np.eye(2), 2 * np.eye(2)), ex1).to_dict()
    assert d["verdict"] is False and d["worst_pair"] == [1, 2]
    assert d["pairs"][0]["i"] == 1


def test_cone_sample_values_positive_for_identity(ex1):
    rng = np.random.default_rng(0)
    Z = cone_samples(ex1.cones[0], rng, 100)
    pwq = PwqFunction(np.eye(2), (np.eye(2), np.eye(2)))
    assert all(evaluate(pwq, ex1, z).value >= 0 for z in Z.T)
