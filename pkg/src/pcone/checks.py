"""
Randomized invariant suites run by ``pcone check``.

Every suite draws from its own PCG64 stream derived from the run seed, tracks the
worst value of each metric against its threshold, and passes when all metrics
stay within ``threshold * tol_scale`` and every coverage requirement holds.
"""
import logging
import math
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from .cone_projection import (
    build_degenerate_workspace,
    degenerate_normal_kkt,
    kkt_branch,
    kkt_pair,
    project,
)
from .config import (
    BRANCHES,
    CHECK_SAMPLES,
    FD_MIN_GAP,
    FD_STEP,
    KKT_BRANCH_MIN_HITS,
    KKT_EDGE_DRAWS,
    ORACLE_SAMPLES,
)
from .constitutive import (
    DriftPolicy,
    MaterialState,
    StrainPath,
    hooke_normal_identity,
    integrate_path,
    max_work_gap,
    rate_split,
    von_mises_rates,
)
from .elasticity import hooke, hooke_inverse, hooke_inverse_young, moduli_from_lame, p_wave_speed
from .oracle import oracle_kkt_pair, oracle_normal_projection
from .sampling import (
    make_rng,
    random_inside,
    random_on_tresca_degenerate,
    random_on_tresca_smooth,
    random_on_von_mises,
    random_sym,
    random_two_plane_cone,
)
from .tensor_core import (
    SymTensor3,
    deviator,
    deviator_eigenvalues_trig,
    dot,
    eigenvalues,
    grad_j2,
    grad_j3,
    identity,
    invariants,
    outer,
)
from .util.registry import CHECK_SUITES
from .util.timing import AverageMeter, SuiteTimer
from .wave_sim_1d import BoundaryCondition, Grid1D, TimeProgram, WaveScenario, run, stable_dt
from .yield_domain import (
    InvariantPolynomial,
    YieldDomain,
    tresca,
    tresca_from_invariants,
    tresca_gradient,
    tresca_surrogate,
    tresca_symmetric_form,
    von_mises,
)

logger = logging.getLogger(__name__)

_UNIT_DIRECTIONS = tuple(SymTensor3.from_voigt(row) for row in np.eye(6))


class SuiteResult(NamedTuple):
    name: str
    passed: bool
    samples: int
    worst: float
    threshold: float
    seconds: float
    detail: str


class Tally(object):
    """Worst value per metric, each with its own threshold, plus coverage requirements."""

    def __init__(self, tol_scale: float = 1.0):
        self.tol_scale = tol_scale
        self.meters: Dict[str, AverageMeter] = {}
        self.thresholds: Dict[str, float] = {}
        self.requirements: List[Tuple[str, bool]] = []
        self.samples = 0

    def update(self, name: str, value: float, threshold: float) -> None:
        if name not in self.meters:
            self.meters[name] = AverageMeter(name)
            self.thresholds[name] = threshold * self.tol_scale
        self.meters[name].update(float(value))

    def require(self, description: str, ok: bool) -> None:
        self.requirements.append((description, bool(ok)))

    def worst_ratio(self) -> float:
        if not self.meters:
            return 0.0
        return max(m.max / self.thresholds[k] for k, m in self.meters.items())

    @property
    def passed(self) -> bool:
        within = all(m.max <= self.thresholds[k] for k, m in self.meters.items())
        return within and all(ok for _, ok in self.requirements)

    def detail(self) -> str:
        parts = [f"{k}={m.max:.3e}/{self.thresholds[k]:.1e}" for k, m in self.meters.items()]
        parts += [f"{d}: {'ok' if ok else 'FAILED'}" for d, ok in self.requirements]
        return "; ".join(parts)


def _oracle_count(samples: int) -> int:
    return min(ORACLE_SAMPLES, max(1, samples // 10))


def _relative(a: SymTensor3, b: SymTensor3, scale: float) -> float:
    return (a - b).norm() / max(scale, 1e-300)


def _saturated_families(rng: np.random.Generator):
    """(label, domain, σ) generators covering every closed-form branch."""

    def von_mises_case():
        k = rng.uniform(0.5, 2.0)
        return YieldDomain([von_mises(k)]), random_on_von_mises(rng, k)

    def tresca_smooth_case():
        k = rng.uniform(0.5, 2.0)
        return YieldDomain([tresca(k)]), random_on_tresca_smooth(rng, k, min_gap=FD_MIN_GAP)

    def tresca_m1_case():
        k = rng.uniform(0.5, 2.0)
        return YieldDomain([tresca(k)]), random_on_tresca_degenerate(rng, 1, k)

    def tresca_m3_case():
        k = rng.uniform(0.5, 2.0)
        return YieldDomain([tresca(k)]), random_on_tresca_degenerate(rng, 3, k)

    def two_case():
        case = random_two_plane_cone(rng)
        return case.domain, case.sigma

    return (
        ("one", von_mises_case),
        ("two", two_case),
        ("tresca_smooth", tresca_smooth_case),
        ("tresca_degenerate_m1", tresca_m1_case),
        ("tresca_degenerate_m3", tresca_m3_case),
    )


@CHECK_SUITES.register_with_name(module_name="tensor_identities")
def check_tensor_identities(rng, samples, tol_scale=1.0) -> Tally:
    tally = Tally(tol_scale)
    for _ in range(samples):
        sigma = random_sym(rng)
        s = deviator(sigma)
        inv = invariants(sigma)
        scale = max(1.0, sigma.norm())
        tally.update("j2", abs(inv.j2 - 0.5 * dot(s, s)) / scale ** 2, 1e-12)
        tally.update("j3", abs(inv.j3 - np.linalg.det(s.matrix())) / scale ** 3, 1e-12)
        exact = np.linalg.eigvalsh(s.matrix())[::-1]
        # arccos loses half the digits next to a repeated eigenvalue
        tally.update("trig_eigenvalues", np.max(np.abs(np.array(deviator_eigenvalues_trig(sigma)) - exact)) / scale, 1e-6)
        f_t = 0.5 * float(exact[0] - exact[2])
        tally.update("tresca_lode_form", abs(tresca_from_invariants(sigma) - f_t) / scale, 1e-6)
        tally.update("tresca_symmetric_form", abs(tresca_symmetric_form(sigma) - f_t) / scale, 1e-12)
        k = f_t * (1.0 + rng.uniform())
        tally.update("tresca_surrogate_sign", max(tresca_surrogate(sigma, k), 0.0) / max(k, 1.0) ** 6, 1e-10)

        moduli = moduli_from_lame(rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0))
        tau = random_sym(rng)
        tally.update("hooke_round_trip", _relative(hooke_inverse(moduli, hooke(moduli, tau)), tau, tau.norm()), 1e-12)
        tally.update(
            "hooke_inverse_forms",
            _relative(hooke_inverse_young(moduli, sigma), hooke_inverse(moduli, sigma), scale),
            1e-12,
        )
        tally.samples += 1
    return tally


def _finite_difference(f: Callable[[SymTensor3], float], sigma: SymTensor3, direction: SymTensor3, h: float) -> float:
    return (f(sigma + h * direction) - f(sigma - h * direction)) / (2.0 * h)


def _random_with_gaps(rng, min_gap: float) -> SymTensor3:
    while True:
        sigma = random_sym(rng)
        lam = eigenvalues(sigma)
        if min(lam[0] - lam[1], lam[1] - lam[2]) >= min_gap:
            return sigma


@CHECK_SUITES.register_with_name(module_name="gradients")
def check_gradients(rng, samples, tol_scale=1.0) -> Tally:
    tally = Tally(tol_scale)
    poly = InvariantPolynomial([[1.0, 2, 0], [0.5, 0, 2], [-0.3, 1, 1]], level=1.0)
    tr = tresca(1.0)
    cases = (
        ("grad_j2", lambda x: invariants(x).j2, grad_j2),
        ("grad_j3", lambda x: invariants(x).j3, grad_j3),
        ("grad_tresca", tr.value, tresca_gradient),
        ("grad_polynomial", poly.value, poly.gradient),
    )
    for _ in range(_oracle_count(samples)):
        sigma = _random_with_gaps(rng, FD_MIN_GAP)
        for name, f, grad in cases:
            g = grad(sigma)
            scale = max(1.0, g.norm())
            err = max(
                abs(_finite_difference(f, sigma, e, FD_STEP) - dot(g, e)) for e in _UNIT_DIRECTIONS
            )
            tally.update(name, err / scale, 1e-6)
        g_t = tresca_gradient(sigma)
        tally.update("tresca_gradient_norm", abs(dot(g_t, g_t) - 0.5), 1e-12)
        tally.samples += 1
    return tally


@CHECK_SUITES.register_with_name(module_name="moreau")
def check_moreau(rng, samples, tol_scale=1.0) -> Tally:
    tally = Tally(tol_scale)
    for label, draw in _saturated_families(rng):
        for _ in range(samples):
            domain, sigma = draw()
            tau = random_sym(rng)
            n_tau = tau.norm()
            split = project(domain, sigma, tau)
            tally.update("reconstruction", _relative(split.tangent + split.normal, tau, n_tau), 1e-10)
            tally.update("orthogonality", abs(dot(split.tangent, split.normal)) / n_tau ** 2, 1e-10)
            tally.update("normal_trace", abs(split.normal.trace()) / n_tau, 1e-10)
            tally.update("idempotence", project(domain, sigma, split.tangent).normal.norm() / n_tau, 1e-10)
            tally.update("identity_in_tangent", project(domain, sigma, identity()).normal.norm(), 1e-10)
            if label.startswith("tresca_degenerate"):
                ws = build_degenerate_workspace(sigma)
                gram = np.array([[dot(a, b) for b in ws.basis] for a in ws.basis])
                tally.update("workspace_orthonormal", np.max(np.abs(gram - np.eye(3))), 1e-12)
                kappa = ws.rebuild(rng.normal(size=3))
                tally.update(
                    "workspace_annihilates",
                    np.linalg.norm(kappa.matrix() @ ws.v_m) / max(kappa.norm(), 1e-300),
                    1e-12,
                )
                # normal = sign·(κ − tr(κ) v_m⊗v_m) with κ ⪰ 0 and κ v_m = 0
                sign = 1.0 if ws.m == 3 else -1.0
                signed = sign * split.normal
                kappa = signed + (-float(ws.v_m @ signed.matrix() @ ws.v_m)) * outer(ws.v_m)
                tally.update("normal_psd", max(-float(np.linalg.eigvalsh(kappa.matrix())[0]), 0.0) / n_tau, 1e-10)
            tally.samples += 1
    return tally


def _swapped(ws):
    """The same edge workspace with its two μ eigenpairs listed in the other order."""
    return ws._replace(mu=ws.mu[::-1], mu_vectors=ws.mu_vectors[:, ::-1])


@CHECK_SUITES.register_with_name(module_name="oracle_equivalence")
def check_oracle_equivalence(rng, samples, tol_scale=1.0) -> Tally:
    tally = Tally(tol_scale)
    seen = set()
    hits = {1: 0, 2: 0, 3: 0, 4: 0}
    n_oracle = _oracle_count(samples)
    for label, draw in _saturated_families(rng):
        edge = label.startswith("tresca_degenerate")
        for i in range(max(n_oracle, KKT_EDGE_DRAWS) if edge else n_oracle):
            domain, sigma = draw()
            tau = random_sym(rng)
            split = project(domain, sigma, tau)
            seen.add(split.branch)
            if i < n_oracle:
                numeric = oracle_normal_projection(domain, sigma, tau, seed=int(rng.integers(2 ** 31)))
                tally.update(f"oracle_{label}", (split.normal - numeric).norm(), 1e-6)
            if edge:
                # the λ1 > λ2 = λ3 edge is solved on the flipped workspace
                sign = 1.0 if label.endswith("m3") else -1.0
                ws = build_degenerate_workspace(sign * sigma, sign * tau)
                for ordered in (ws, _swapped(ws)):
                    hits[kkt_branch(*ordered.mu)] += 1
                    kkt = sign * degenerate_normal_kkt(ordered)
                    tally.update("kkt_representation", (kkt - split.normal).norm() / max(1.0, tau.norm()), 1e-10)
            tally.samples += 1
    for branch in BRANCHES:
        if branch != "interior":
            tally.require(f"branch {branch} exercised", branch in seen)
    for branch, count in hits.items():
        tally.require(f"edge kkt branch {branch} hits {count} >= {KKT_BRANCH_MIN_HITS}", count >= KKT_BRANCH_MIN_HITS)
    return tally


@CHECK_SUITES.register_with_name(module_name="kkt_coverage")
def check_kkt_coverage(rng, samples, tol_scale=1.0) -> Tally:
    tally = Tally(tol_scale)
    hits = {1: 0, 2: 0, 3: 0, 4: 0}
    for _ in range(max(1000, _oracle_count(samples))):
        mu1, mu2 = rng.normal(size=2)
        hits[kkt_branch(mu1, mu2)] += 1
        x0, y0, _ = kkt_pair(mu1, mu2)
        xo, yo = oracle_kkt_pair(mu1, mu2)
        scale = max(1.0, abs(mu1) + abs(mu2))
        tally.update("kkt_vs_oracle", max(abs(x0 - xo), abs(y0 - yo)) / scale, 1e-6)
        tally.samples += 1
    for branch, count in hits.items():
        tally.require(f"branch {branch} hits {count} >= {KKT_BRANCH_MIN_HITS}", count >= KKT_BRANCH_MIN_HITS)
    return tally


@CHECK_SUITES.register_with_name(module_name="constitutive_identities")
def check_constitutive_identities(rng, samples, tol_scale=1.0) -> Tally:
    tally = Tally(tol_scale)
    for label, draw in _saturated_families(rng):
        for _ in range(max(1, samples // 100)):
            domain, sigma = draw()
            moduli = moduli_from_lame(rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0))
            rate = random_sym(rng)
            n_rate = rate.norm()
            h_rate = hooke(moduli, rate)
            split = rate_split(domain, moduli, sigma, rate)
            e, p = split.eps_e_rate, split.eps_p_rate
            tally.update("additive_split", _relative(e + p, rate, n_rate), 1e-12)
            tally.update("split_orthogonality", abs(dot(e, p)) / n_rate ** 2, 1e-10)
            tally.update("split_pythagoras", abs(n_rate ** 2 - dot(e, e) - dot(p, p)) / n_rate ** 2, 1e-10)
            tally.update("plastic_incompressibility", abs(p.trace()) / n_rate, 1e-10)
            tally.update(
                "tangent_of_hooke",
                _relative(split.sigma_rate, project(domain, sigma, h_rate).tangent, max(1.0, h_rate.norm())),
                1e-9,
            )
            tally.update("hooke_normal_identity", hooke_normal_identity(domain, moduli, sigma, rate) / max(1.0, h_rate.norm()), 1e-9)
            tally.update("consistency", abs(split.consistency_residual) / (n_rate * max(1.0, h_rate.norm())), 1e-8)
            if label == "one":
                closed = von_mises_rates(moduli, domain.functions[0].k, sigma, rate, domain.saturation_tol)
                tally.update("von_mises_closed_form", _relative(closed.sigma_rate, split.sigma_rate, max(1.0, h_rate.norm())), 1e-10)
            for _ in range(10):
                star = random_inside(rng, domain)
                tally.update("max_work", max(0.0, -max_work_gap(p, sigma, star)), 1e-8)
            tally.samples += 1
    return tally


def pure_shear_ramp(dt: float, drift: Optional[DriftPolicy] = None, t_end: float = 6.0):
    """Von Mises k = 1, λ = μ = 1, ε̇12 = 0.1 from rest."""
    domain = YieldDomain([von_mises(1.0)])
    moduli = moduli_from_lame(1.0, 1.0)
    path = StrainPath.from_knots([[0.0, [0, 0, 0, 0.1, 0, 0]]], t_end=t_end)
    return integrate_path(domain, moduli, MaterialState(SymTensor3()), path, dt, drift)


def non_proportional_overshoot(dt: float, g: float = 0.1, t_end: float = 2.0) -> float:
    """max(sqrt(J2) − k) when a deviatoric ε̇11 = −ε̇22 = g is applied on top of saturated pure shear."""
    domain = YieldDomain([von_mises(1.0)])
    moduli = moduli_from_lame(1.0, 1.0)
    path = StrainPath.from_knots([[0.0, [g, -g, 0, 0, 0, 0]]], t_end=t_end)
    record = integrate_path(
        domain, moduli, MaterialState(SymTensor3(s12=1.0)), path, dt, DriftPolicy("none", drift_tol=1e-2)
    )
    return max(domain.reporting_violation(state.sigma) for state in record.states)


@CHECK_SUITES.register_with_name(module_name="driver_plateau")
def check_driver_plateau(rng, samples, tol_scale=1.0) -> Tally:
    tally = Tally(tol_scale)
    s12 = pure_shear_ramp(1e-4).final.sigma.s12
    tally.update("plateau_below", max(0.0, (1.0 - 1e-4) - s12), 1e-12)
    tally.update("plateau_above", max(0.0, s12 - (1.0 + 1e-6)), 1e-12)
    coarse = non_proportional_overshoot(1e-3)
    fine = non_proportional_overshoot(5e-4)
    ratio = coarse / fine if fine > 0.0 else math.inf
    tally.update("overshoot_ratio_minus_2", abs(ratio - 2.0), 0.3)
    tally.samples = 3
    logger.debug("plateau σ12=%.9f, overshoot ratio %.4f", s12, ratio)
    return tally


def elastic_front_speed(n_cells: int = 1000, cfl: float = 0.5, v0: float = 0.01) -> Tuple[float, float]:
    """(measured, theoretical) front speed of a velocity step in a bar that never yields."""
    moduli = moduli_from_lame(1.0, 1.0)
    grid = Grid1D(n_cells, 1.0, moduli.rho)
    dt = stable_dt(grid, moduli, cfl)
    c_e = p_wave_speed(moduli)
    scenario = WaveScenario(
        grid=grid,
        moduli=moduli,
        domain=YieldDomain([von_mises(1e6)]),
        left=BoundaryCondition("left", "velocity", TimeProgram.constant(v0)),
        right=BoundaryCondition("right", "free"),
        dt=dt,
        t_end=0.75 / c_e,
        output_stride=10 ** 9,
        gauges=(0.5,),
    )
    speed = run(scenario).measured_speeds()[0.5]
    return (math.nan if speed is None else speed), c_e


PULSE_END = 0.12


@CHECK_SUITES.register_with_name(module_name="wave_speeds")
def check_wave_speeds(rng, samples, tol_scale=1.0) -> Tally:
    tally = Tally(tol_scale)
    measured, c_e = elastic_front_speed()
    tally.update("front_speed_relative_error", abs(measured - c_e) / c_e, 0.02)

    moduli = moduli_from_lame(1.0, 1.0)
    grid = Grid1D(200, 1.0, moduli.rho)
    x = grid.nodes
    grid.velocity[:] = 0.01 * np.exp(-((x - 0.5) / 0.05) ** 2)
    elastic = WaveScenario(
        grid=grid,
        moduli=moduli,
        domain=YieldDomain([von_mises(1e6)]),
        left=BoundaryCondition("left", "free"),
        right=BoundaryCondition("right", "free"),
        dt=stable_dt(grid, moduli, 0.5),
        t_end=1000 * stable_dt(grid, moduli, 0.5),
        output_stride=10 ** 9,
    )
    tally.update("elastic_energy_drift", run(elastic).relative_energy_change(), 5e-3)

    # velocity pulse that stops at PULSE_END; no work is done on the bar afterwards
    pulse = TimeProgram([(0.0, 0.0), (0.02, 0.01), (0.1, 0.01), (PULSE_END, 0.0)])
    dt = stable_dt(grid, moduli, 0.5)
    plastic = WaveScenario(
        grid=Grid1D(200, 1.0, moduli.rho),
        moduli=moduli,
        domain=YieldDomain([von_mises(0.005)]),
        left=BoundaryCondition("left", "velocity", pulse),
        right=BoundaryCondition("right", "free"),
        dt=dt,
        t_end=0.4,
        output_stride=10 ** 9,
    )
    record = run(plastic)
    tally.update("plastic_yield_violation", max(record.max_yield_violation, 0.0), 1e-6)
    tally.update("negative_dissipation", max(0.0, -min(record.dissipation)), 1e-10)
    # at most 1% growth per 1000 steps once the pulse has stopped
    tally.update("energy_rise_after_forcing", record.energy_rise(after=PULSE_END + 2.0 * dt), 1e-5)
    tally.require("plastic flow occurred", record.plastic_cell_steps > 0)
    tally.samples = 3
    return tally


@CHECK_SUITES.register_with_name(module_name="hydrostatic_invariance")
def check_hydrostatic_invariance(rng, samples, tol_scale=1.0) -> Tally:
    tally = Tally(tol_scale)
    for label, draw in _saturated_families(rng):
        for _ in range(_oracle_count(samples)):
            domain, sigma = draw()
            tau = random_sym(rng)
            alpha = rng.uniform(0.1, 3.0)
            beta = rng.normal(scale=3.0)
            lhs = project(domain, sigma, alpha * tau + beta * identity()).normal
            rhs = alpha * project(domain, sigma, tau).normal
            tally.update("positive_homogeneity", _relative(lhs, rhs, max(1.0, alpha * tau.norm())), 1e-10)
            tally.samples += 1

    moduli = moduli_from_lame(1.0, 1.0)
    for criterion in (von_mises(1.0), tresca(1.0)):
        domain = YieldDomain([criterion])
        for _ in range(max(1, samples // 1000)):
            knots = [[float(t), random_sym(rng, 0.2).voigt.tolist()] for t in (0.0, 2.0, 4.0)]
            path = StrainPath.from_knots(knots, t_end=6.0)
            start = random_inside(rng, domain, shrink=0.5)
            shift = rng.normal(scale=5.0) * identity()
            base = integrate_path(domain, moduli, MaterialState(start), path, 1e-2)
            moved = integrate_path(domain, moduli, MaterialState(start + shift), path, 1e-2)
            worst = max(
                (a.eps_p_rate - b.eps_p_rate).norm() for a, b in zip(base.splits, moved.splits)
            )
            tally.update("driver_plastic_rate_shift", worst, 1e-10)
            tally.samples += 1
    return tally


DEFAULT_ORDER = (
    "tensor_identities",
    "gradients",
    "moreau",
    "oracle_equivalence",
    "kkt_coverage",
    "constitutive_identities",
    "driver_plateau",
    "wave_speeds",
    "hydrostatic_invariance",
)


def run_checks(
    seed: int,
    samples: int = CHECK_SAMPLES,
    tol_scale: float = 1.0,
    suites: Optional[Sequence[str]] = None,
    progress: bool = False,
) -> List[SuiteResult]:
    names = list(DEFAULT_ORDER if suites is None else suites)
    for name in names:
        if name not in CHECK_SUITES:
            raise KeyError(f"unknown suite {name!r}; known: {list(DEFAULT_ORDER)}")
    timer = SuiteTimer()
    results = []
    for stream, name in enumerate(tqdm(names, desc="check", disable=not progress)):
        rng = make_rng(seed, DEFAULT_ORDER.index(name) if name in DEFAULT_ORDER else stream)
        timer.clear()
        tally = CHECK_SUITES.build(name, rng, samples, tol_scale)
        result = SuiteResult(
            name=name,
            passed=tally.passed,
            samples=tally.samples,
            worst=tally.worst_ratio(),
            threshold=1.0,
            seconds=timer.timeit(name),
            detail=tally.detail(),
        )
        log = logger.info if result.passed else logger.warning
        log("%-24s %s  worst/threshold=%.3g  (%.1fs)", name, "PASS" if result.passed else "FAIL", result.worst, result.seconds)
        results.append(result)
    return results


def results_frame(results: Sequence[SuiteResult]) -> pd.DataFrame:
    return pd.DataFrame([r._asdict() for r in results], columns=SuiteResult._fields)
