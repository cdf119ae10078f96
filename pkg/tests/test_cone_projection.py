import math

import numpy as np
import pytest

from pcone.cone_projection import (
    build_degenerate_workspace,
    degenerate_alpha_beta,
    degenerate_normal_kkt,
    degenerate_ratio,
    kkt_branch,
    kkt_pair,
    project,
    project_onto_span,
    split_interior,
    split_one,
    split_tresca_degenerate,
    split_tresca_smooth,
    split_two,
    tresca_q,
)
from pcone.config import BRANCHES
from pcone.errors import (
    CollinearityError,
    DegenerateGradientError,
    ExcludedCaseError,
    MembershipError,
    ValidationError,
)
from pcone.oracle import oracle_kkt_pair
from pcone.sampling import (
    random_deviator,
    random_on_tresca_degenerate,
    random_on_tresca_smooth,
    random_on_von_mises,
    random_sym,
    random_two_plane_cone,
)
from pcone.tensor_core import SymTensor3, dot, identity, outer, spectral
from pcone.yield_domain import YieldDomain, tresca, von_mises

SHEAR_12 = SymTensor3(s12=1.0 / math.sqrt(2.0))
SHEAR_13 = SymTensor3(s13=1.0 / math.sqrt(2.0))


def assert_moreau(split, tau, atol=1e-9):
    scale = max(1.0, tau.norm())
    assert (split.tangent + split.normal).allclose(tau, atol=atol * scale)
    assert abs(dot(split.tangent, split.normal)) <= atol * scale * scale
    assert abs(split.normal.trace()) <= atol * scale


def test_split_interior():
    tau = SymTensor3(1, 2, 3, 4, 5, 6)
    split = split_interior(tau)
    assert split.tangent is tau
    assert split.normal.allclose(SymTensor3())
    assert split.branch == "interior"


def test_split_one():
    g = SymTensor3(1.0, -1.0, 0.0)
    assert split_one(g, -g).normal.allclose(SymTensor3())
    assert split_one(g, SymTensor3(s12=1.0)).normal.allclose(SymTensor3())
    split = split_one(g, g)
    assert split.normal.allclose(g)
    assert split.tangent.allclose(SymTensor3())


def test_split_one_rejects_vanishing_gradient():
    with pytest.raises(DegenerateGradientError):
        split_one(SymTensor3(), SymTensor3(1.0))


def test_split_two_examples():
    # one ray active
    split = split_two(SHEAR_12, SHEAR_13, SHEAR_12 - SHEAR_13)
    assert split.normal.allclose(SHEAR_12)
    # both rays inactive
    assert split_two(SHEAR_12, SHEAR_13, -SHEAR_12 - 2.0 * SHEAR_13).normal.allclose(SymTensor3())
    # interior of the cone
    split = split_two(SHEAR_12, SHEAR_13, SHEAR_12 + SHEAR_13)
    assert split.normal.allclose(SHEAR_12 + SHEAR_13)
    assert split.tangent.allclose(SymTensor3())


def test_split_two_equal_alphas():
    g1 = SymTensor3(1.0, -1.0, 0.0)
    g2 = SymTensor3(0.0, 1.0, -1.0)
    h1, h2 = g1 / g1.norm(), g2 / g2.norm()
    # equal negative alphas make both etas negative and both rays give zero
    assert split_two(g1, g2, -(h1 + h2)).normal.allclose(SymTensor3())
    split = split_two(g1, g2, h1 + h2 + SymTensor3(s12=1.0))
    assert split.normal.allclose(h1 + h2)
    assert_moreau(split, h1 + h2 + SymTensor3(s12=1.0))


def test_split_two_rejects_collinear_gradients():
    with pytest.raises(CollinearityError):
        split_two(SHEAR_12, 3.0 * SHEAR_12, SHEAR_12)


def test_split_tresca_smooth():
    k = 1.3
    sigma = SymTensor3(k, 0.0, -k)
    tau = SymTensor3(1.0, 0.0, -1.0)
    split = split_tresca_smooth(sigma, tau)
    assert split.normal.allclose(tau)
    assert tresca_q(sigma, tau) == pytest.approx(1.0)
    assert tresca_q(sigma, -tau) == 0.0
    assert split.tangent.allclose(SymTensor3())
    assert split_tresca_smooth(sigma, SymTensor3(0.0, 1.0, 0.0)).normal.allclose(SymTensor3())
    with pytest.raises(ExcludedCaseError):
        split_tresca_smooth(SymTensor3(1.0, 1.0, -1.0), tau)


def test_degenerate_workspace_of_diagonal():
    ws = build_degenerate_workspace(SymTensor3(0.5, 0.5, -1.5))
    assert ws.m == 3
    assert abs(abs(ws.v_m[2]) - 1.0) < 1e-12
    gram = np.array([[dot(a, b) for b in ws.basis] for a in ws.basis])
    assert np.allclose(gram, np.eye(3))
    for w in ws.basis:
        assert np.allclose(w.matrix() @ ws.v_m, 0.0, atol=1e-12)
    assert ws.project(identity()).allclose(identity() - outer(ws.v_m), atol=1e-12)


def test_degenerate_workspace_annihilates_isolated_vector(rng):
    sigma = random_on_tresca_degenerate(rng, 1)
    ws = build_degenerate_workspace(sigma)
    assert ws.m == 1
    kappa = ws.project(random_sym(rng))
    assert np.allclose(kappa.matrix() @ ws.v_m, 0.0, atol=1e-10)


def test_degenerate_workspace_rejects_other_spectra():
    with pytest.raises(ExcludedCaseError):
        build_degenerate_workspace(2.0 * identity())
    with pytest.raises(ExcludedCaseError):
        build_degenerate_workspace(SymTensor3(3.0, 1.0, -1.0))


@pytest.mark.parametrize(
    "mu, expected",
    [((1.0, 2.0), (1.0, 2.0, 0.0)), ((-2.0, -2.0), (0.0, 0.0, 0.0)), ((2.0, -1.0), (1.5, 0.0, 0.0))],
)
def test_kkt_pair_examples(mu, expected):
    assert kkt_pair(*mu) == pytest.approx(expected)


def test_kkt_pair_matches_grid_search():
    xs = np.linspace(0.0, 5.0, 501)
    x, y = np.meshgrid(xs, xs, indexing="ij")
    for mu1, mu2 in [(1.0, 2.0), (2.0, -1.0), (-1.0, 2.0), (-2.0, -2.0), (0.3, -0.5)]:
        objective = (x + y - mu1 - mu2) ** 2 + (x - mu1) ** 2 + (y - mu2) ** 2
        i, j = np.unravel_index(np.argmin(objective), objective.shape)
        x0, y0, z0 = kkt_pair(mu1, mu2)
        assert (x0, y0) == pytest.approx((xs[i], xs[j]), abs=1e-2)
        assert z0 == 0.0


def test_kkt_pair_matches_oracle(rng):
    branches = set()
    for _ in range(200):
        mu1, mu2 = rng.normal(size=2)
        branches.add(kkt_branch(mu1, mu2))
        assert kkt_pair(mu1, mu2)[:2] == pytest.approx(oracle_kkt_pair(mu1, mu2), abs=1e-8)
    assert branches == {1, 2, 3, 4}


def test_degenerate_ratio():
    assert degenerate_ratio(1.0, 1.0) == pytest.approx(1.0)
    assert degenerate_ratio(-1.0, -1.0) == 0.0
    assert degenerate_ratio(-1.0, -1.0, sign=-1.0) == pytest.approx(1.0)
    assert degenerate_ratio(0.0, 0.0) == 0.0
    alpha, beta = degenerate_alpha_beta(2.0, -1.0)
    assert alpha == pytest.approx(0.5)
    assert beta == pytest.approx(0.5)


def test_split_tresca_degenerate_examples():
    k, a, c = 1.0, 0.3, 0.5
    sigma = SymTensor3(a, a, a - 2.0 * k)
    tau = c * SymTensor3(1.0, 1.0, -2.0)
    split = split_tresca_degenerate(sigma, tau, k=k)
    assert split.branch == "tresca_degenerate_m3"
    assert split.normal.allclose(tau, atol=1e-12)
    assert split_tresca_degenerate(sigma, -tau).normal.allclose(SymTensor3())
    assert split_tresca_degenerate(sigma, 3.0 * identity()).normal.allclose(SymTensor3())


def test_split_tresca_degenerate_other_edge():
    k, a, c = 1.0, -0.2, 0.7
    sigma = SymTensor3(a + 2.0 * k, a, a)
    tau = c * SymTensor3(2.0, -1.0, -1.0)
    split = split_tresca_degenerate(sigma, tau)
    assert split.branch == "tresca_degenerate_m1"
    assert split.normal.allclose(tau, atol=1e-12)
    assert split_tresca_degenerate(sigma, -tau).normal.allclose(SymTensor3())


def test_split_tresca_degenerate_checks_the_surface():
    with pytest.raises(MembershipError):
        split_tresca_degenerate(SymTensor3(0.3, 0.3, -1.7), SymTensor3(1.0), k=2.0)


def test_kkt_representation_matches_ratio_formula(rng):
    for _ in range(100):
        sigma = random_on_tresca_degenerate(rng, 3)
        tau = random_sym(rng)
        ws = build_degenerate_workspace(sigma, tau)
        expected = split_tresca_degenerate(sigma, tau).normal
        assert degenerate_normal_kkt(ws).allclose(expected, atol=1e-9)


def test_project_dispatches_on_saturation(von_mises_domain, tresca_domain):
    tau = SymTensor3(0.1, 0.2, -0.3, 0.4)
    assert project(von_mises_domain, SymTensor3(s12=0.2), tau).branch == "interior"
    assert project(von_mises_domain, SymTensor3(s12=1.0), tau).branch == "one"
    assert project(tresca_domain, SymTensor3(1.0, 0.2, -1.0), tau).branch == "tresca_smooth"
    assert project(tresca_domain, SymTensor3(1.0, 1.0, -1.0), tau).branch == "tresca_degenerate_m3"
    assert project(tresca_domain, SymTensor3(1.0, -1.0, -1.0), tau).branch == "tresca_degenerate_m1"
    with pytest.raises(MembershipError):
        project(von_mises_domain, SymTensor3(s12=2.0), tau)
    with pytest.raises(ValidationError):
        project(von_mises_domain, SymTensor3(), [1, 2, 3, 4, 5, 6])


def _saturated_cases(rng, n=50):
    for _ in range(n):
        yield YieldDomain([von_mises(1.0)]), random_on_von_mises(rng)
        yield YieldDomain([tresca(1.0)]), random_on_tresca_smooth(rng)
        yield YieldDomain([tresca(1.0)]), random_on_tresca_degenerate(rng, 1)
        yield YieldDomain([tresca(1.0)]), random_on_tresca_degenerate(rng, 3)
        case = random_two_plane_cone(rng)
        yield case.domain, case.sigma


def test_moreau_properties(rng):
    for domain, sigma in _saturated_cases(rng):
        tau = random_sym(rng)
        split = project(domain, sigma, tau)
        assert_moreau(split, tau)
        assert split.branch in BRANCHES
        again = project(domain, sigma, split.tangent)
        assert again.normal.norm() <= 1e-9 * max(1.0, tau.norm())
        assert project(domain, sigma, identity()).tangent.allclose(identity(), atol=1e-9)


def test_positive_homogeneity_with_hydrostatic_shift(rng):
    for domain, sigma in _saturated_cases(rng, n=20):
        tau = random_sym(rng)
        alpha, beta = rng.uniform(0.1, 5.0), rng.normal()
        shifted = project(domain, sigma, alpha * tau + beta * identity()).normal
        assert shifted.allclose(alpha * project(domain, sigma, tau).normal, atol=1e-8 * alpha)


def test_two_plane_subspace_reduction(rng):
    for _ in range(50):
        case = random_two_plane_cone(rng)
        grads = [case.domain.functions[i].gradient(case.sigma) for i in (0, 1)]
        tau = random_deviator(rng)
        direct = project(case.domain, case.sigma, tau).normal
        reduced = project(case.domain, case.sigma, project_onto_span(grads, tau)).normal
        assert direct.allclose(reduced, atol=1e-9)


def test_degenerate_normal_is_cone_shaped(rng):
    for m in (1, 3):
        for _ in range(50):
            sigma = random_on_tresca_degenerate(rng, m)
            normal = split_tresca_degenerate(sigma, random_sym(rng)).normal
            dec = spectral(sigma)
            v_m = dec.vector(m)
            # κ = ±normal restricted to the complement of v_m is positive semidefinite
            kappa = (1.0 if m == 3 else -1.0) * normal
            kappa = kappa - dot(kappa, outer(v_m)) * outer(v_m)
            assert np.all(np.linalg.eigvalsh(kappa.matrix()) >= -1e-9)
            assert np.allclose(kappa.matrix() @ v_m, 0.0, atol=1e-9)
            assert abs(normal.trace()) < 1e-9
