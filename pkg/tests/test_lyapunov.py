import numpy as np
import pytest

from pwqcont.backends import (Affine, CvxpyBackend, ProblemBuilder, SdpResult, SolverBackend)
from pwqcont.cones import build_partition
from pwqcont.errors import InvalidInputError, SolverError
from pwqcont.io import load_fixture
from pwqcont.lyapunov import (ConewiseLinearSystem, StabilityCertificate, lmi_margins,
                              synthesize, unrelaxed, verify)

from conftest import A_SOFT, A_STIFF, fan


class ScriptedBackend(SolverBackend):
    name = "scripted"

    def __init__(self, status):
        self.status = status
        self.seen = None

    def solve(self, problem):
        self.seen = problem
        return SdpResult(self.status, None, {}, f"raw-{self.status}", self.name)


@pytest.fixture(scope="module")
def ex2_cert():
    sysm = ConewiseLinearSystem.from_dict(load_fixture("ex2_system"))
    return sysm, synthesize(sysm, "phi", 1e-6, symmetric_pairs=True)


def test_affine_algebra():
    b = ProblemBuilder()
    X = b.sym_matrix(2)
    M = np.array([[1.0, 2.0], [0.0, 1.0]])
    expr = M.T @ X @ M - 2 * X + np.eye(2)
    y = np.array([1.0, 2.0, 3.0])
    Xv = X.value(y)
    assert np.allclose(Xv, [[1.0, 2.0], [2.0, 3.0]])
    assert np.allclose(expr.value(y), M.T @ Xv @ M - 2 * Xv + np.eye(2))
    assert np.allclose(expr.T.value(y), expr.value(y).T)
    assert np.allclose((-X - X).value(y), -2 * Xv)


def test_builder_shapes():
    b = ProblemBuilder()
    W = b.sym_matrix(2, nonneg=True)
    b.add_psd(W - np.eye(2), "w")
    b.add_zero(W @ np.ones((2, 1)) - np.ones((2, 1)))
    prob = b.build()
    assert prob.n_vars == 3 and list(prob.nonneg) == [0, 1, 2]
    assert prob.A_eq.shape == (2, 3)
    with pytest.raises(InvalidInputError):
        b.add_psd(Affine(np.zeros((2, 3))))
    with pytest.raises(InvalidInputError):
        b.minimise(W)


def test_cvxpy_backend_small_sdp():
    b = ProblemBuilder()
    t = b.sym_matrix(1)
    b.add_psd(t - 2 * np.eye(1), "lower")
    b.minimise(t)
    res = CvxpyBackend().solve(b.build())
    assert res.status == "optimal"
    assert np.isclose(res.y[0], 2.0, atol=1e-6)
    assert "lower" in res.duals


def test_system_validation(ex1):
    with pytest.raises(InvalidInputError):
        ConewiseLinearSystem((np.eye(2),), np.eye(2), ex1)
    with pytest.raises(InvalidInputError):
        ConewiseLinearSystem((np.eye(3), np.eye(3)), np.eye(2), ex1)
    with pytest.raises(InvalidInputError):
        ConewiseLinearSystem((np.eye(2), np.eye(2)), np.eye(3)[:2], ex1)
    with pytest.raises(InvalidInputError):
        synthesize(ConewiseLinearSystem((-np.eye(2),) * 2, np.eye(2), ex1), method="lmi")


def test_system_json_round_trip(ex2_system):
    again = ConewiseLinearSystem.from_dict(ex2_system.to_dict())
    assert all(np.array_equal(a, b) for a, b in zip(again.A, ex2_system.A))
    assert again.partition.cone_rays == ex2_system.partition.cone_rays


def test_contracting_half_plane(ex1):
    sysm = ConewiseLinearSystem((-np.eye(2), -np.eye(2)), np.eye(2), ex1)
    cert = synthesize(sysm, "phi")
    assert cert and cert.min_margin > 0
    witness = StabilityCertificate(
        P=(np.eye(2), np.eye(2)), W=(np.zeros((2, 2)),) * 2, U=(np.zeros((2, 2)),) * 2,
        method="phi", eps=1e-6, margins=[])
    rep = verify(sysm, witness, samples=500)
    assert rep.passed
    assert rep.margins[0] == {"positivity": 1.0, "decrease": 2.0}


@pytest.mark.parametrize("method", ["phi", "equality"])
def test_unstable_is_infeasible(method):
    quadrant = build_partition(np.eye(2), [[1, 2]])
    sysm = ConewiseLinearSystem((np.eye(2),), np.eye(2), quadrant)
    res = synthesize(sysm, method)
    assert not res
    assert "infeasible" in res.status
    assert res.to_dict()["feasible"] is False


def test_backend_outcomes_propagate(ex1):
    sysm = ConewiseLinearSystem((-np.eye(2), -np.eye(2)), np.eye(2), ex1)
    be = ScriptedBackend("infeasible")
    res = synthesize(sysm, "phi", backend=be)
    assert not res and res.dual_status == "raw-infeasible"
    assert len(be.seen.psd) == 4
    with pytest.raises(SolverError) as exc:
        synthesize(sysm, "equality", backend=ScriptedBackend("error"))
    assert exc.value.status == "raw-error"


def test_equality_constraints_posed(ex1):
    sysm = ConewiseLinearSystem((-np.eye(2), -np.eye(2)), np.eye(2), ex1)
    be = ScriptedBackend("infeasible")
    synthesize(sysm, "equality", backend=be)
    assert be.seen.A_eq.shape[0] == 1      # one shared ray, one scalar equality


def test_example_two_certificate(ex2_cert):
    sysm, cert = ex2_cert
    assert cert.method == "phi" and cert.symmetric_pairs
    for k in range(4):
        assert np.allclose(cert.P[k], cert.P[k + 4])
    assert all(np.all(M >= -1e-12) and np.allclose(M, M.T, atol=1e-9) for M in cert.W + cert.U)
    assert cert.min_margin > 0
    assert cert.continuity_residual <= 1e-12
    assert "sliding" in cert.warning
    rep = verify(sysm, cert, samples=2000, seed=1)
    assert rep.passed, rep.to_dict()


def test_certificate_json_round_trip(ex2_cert):
    sysm, cert = ex2_cert
    back = StabilityCertificate.from_dict(cert.to_dict())
    assert all(np.array_equal(a, b) for a, b in zip(back.P, cert.P))
    assert np.array_equal(back.phi.full, cert.phi.full)
    assert verify(sysm, back, samples=200).passed


def test_flipped_p_fails_everywhere_in_region(ex2_cert):
    sysm, cert = ex2_cert
    P = list(cert.P)
    P[0] = -P[0]
    bad = StabilityCertificate(tuple(P), cert.W, cert.U, cert.method, cert.eps, [])
    rep = verify(sysm, bad, samples=300, seed=2)
    assert not rep.passed and not rep.lmi_ok
    first = rep.sample_failures[0]
    assert first["region"] == 1 and first["positivity"] == 300


def test_zeroed_multipliers_give_unrelaxed_margins(ex2_cert):
    sysm, cert = ex2_cert
    bare = unrelaxed(cert)
    rep = verify(sysm, bare, samples=100)
    for i, mg in enumerate(rep.margins):
        Pi, Ai = cert.P[i], sysm.A[i]
        assert np.isclose(mg["positivity"], np.linalg.eigvalsh(Pi)[0])
        assert np.isclose(mg["decrease"], -np.linalg.eigvalsh(Ai.T @ Pi + Pi @ Ai)[-1])
    relaxed = lmi_margins(sysm, cert.P, cert.W, cert.U)
    assert any(r["decrease"] != u["decrease"] for r, u in zip(relaxed, rep.margins))


@pytest.mark.parametrize("beta", [0.1, 3.0])
def test_time_rescaling(ex2_cert, beta):
    sysm, cert = ex2_cert
    scaled = sysm.scaled(beta)
    U = tuple(beta * Uk for Uk in cert.U)
    margins = lmi_margins(scaled, cert.P, cert.W, U)
    for a, b in zip(margins, cert.margins):
        assert np.isclose(a["decrease"], beta * b["decrease"])
    assert synthesize(scaled, "phi", symmetric_pairs=True)


def test_equality_method_contrast(ex2_system):
    cert = synthesize(ex2_system, "equality", 1e-6)
    assert cert.min_margin > 0
    assert cert.continuity_residual <= 1e-8
    assert verify(ex2_system, cert, samples=500).passed


def test_symmetric_pairs_requires_matching_dynamics(ex2_system):
    A = list(ex2_system.A)
    A[4] = -np.eye(2)
    with pytest.raises(InvalidInputError):
        synthesize(ConewiseLinearSystem(tuple(A), np.eye(2), ex2_system.partition),
                   symmetric_pairs=True)


def random_stable_fan(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(4, 9))
    gaps = rng.uniform(0.5, 1.5, size=k)
    angles = np.cumsum(gaps / gaps.sum() * 2 * np.pi) - gaps[0]
    p = fan(np.sort(np.mod(angles, 2 * np.pi)))
    base = -np.eye(2) + np.array([[0.0, 1.0], [-1.0, 0.0]]) * rng.uniform(-2, 2)
    A = tuple(base + 0.3 * rng.normal(size=(2, 2)) for _ in range(p.N))
    return ConewiseLinearSystem(A, np.eye(2), p)


@pytest.mark.parametrize("seed", range(10))
def test_methods_agree_on_random_fans(seed):
    sysm = random_stable_fan(seed)
    a = synthesize(sysm, "phi")
    b = synthesize(sysm, "equality")
    assert bool(a) == bool(b)
    for cert in (c for c in (a, b) if c):
        assert cert.min_margin > 0
        assert cert.continuity_residual <= 1e-8


def test_methods_agree_on_example_two(ex2_system):
    assert bool(synthesize(ex2_system, "phi")) == bool(synthesize(ex2_system, "equality"))


def test_trace_objective(ex2_system):
    cert = synthesize(ex2_system, "phi", objective="trace")
    assert cert and cert.min_margin > 0
    with pytest.raises(InvalidInputError):
        synthesize(ex2_system, objective="volume")


def test_wide_c_synthesis():
    # the state carries an extra stable mode that the partition does not see
    p = fan(np.arange(4) * np.pi / 2)
    C = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    A_blk = []
    for Ai in (A_STIFF, A_SOFT + np.array([[0.0, 0.0], [0.0, -0.5]])) * 2:
        M = -np.eye(3)
        M[:2, :2] = Ai
        A_blk.append(M)
    sysm = ConewiseLinearSystem(tuple(A_blk), C, p)
    for method in ("phi", "equality"):
        cert = synthesize(sysm, method)
        assert cert, method
        rep = verify(sysm, cert, samples=300)
        assert rep.passed, (method, rep.to_dict())
