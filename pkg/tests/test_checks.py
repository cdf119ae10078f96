import math

import pytest

from pcone.checks import (
    DEFAULT_ORDER,
    Tally,
    _oracle_count,
    check_oracle_equivalence,
    check_wave_speeds,
    elastic_front_speed,
    non_proportional_overshoot,
    pure_shear_ramp,
    results_frame,
    run_checks,
)
from pcone.config import BRANCHES, KKT_BRANCH_MIN_HITS, KKT_EDGE_DRAWS, ORACLE_SAMPLES
from pcone.constitutive import DriftPolicy
from pcone.sampling import make_rng

FAST_SUITES = (
    "tensor_identities",
    "gradients",
    "moreau",
    "oracle_equivalence",
    "kkt_coverage",
    "constitutive_identities",
)


def test_tally():
    tally = Tally(tol_scale=2.0)
    tally.update("a", 1.0, 1.0)
    tally.update("a", 0.5, 1.0)
    assert tally.passed
    assert tally.worst_ratio() == pytest.approx(0.5)
    tally.require("coverage", False)
    assert not tally.passed
    assert "coverage: FAILED" in tally.detail()


def test_fast_suites_pass():
    results = run_checks(seed=3, samples=200, suites=FAST_SUITES)
    assert [r.name for r in results] == list(FAST_SUITES)
    for r in results:
        assert r.passed, f"{r.name}: {r.detail}"
        assert r.worst <= 1.0
    frame = results_frame(results)
    assert list(frame.columns) == ["name", "passed", "samples", "worst", "threshold", "seconds", "detail"]


def test_suites_are_reproducible():
    first = run_checks(seed=11, samples=100, suites=("moreau", "kkt_coverage"))
    second = run_checks(seed=11, samples=100, suites=("kkt_coverage", "moreau"))
    by_name = {r.name: r.worst for r in second}
    for r in first:
        assert r.worst == by_name[r.name]


def test_tiny_tolerance_scale_fails():
    (result,) = run_checks(seed=0, samples=100, tol_scale=1e-30, suites=("moreau",))
    assert not result.passed
    assert result.worst > 1.0


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_checks(seed=0, samples=10, suites=("nope",))
    assert "wave_speeds" in DEFAULT_ORDER


def test_pure_shear_plateau():
    record = pure_shear_ramp(1e-3, DriftPolicy())
    assert record.final.sigma.s12 == pytest.approx(1.0, abs=1e-4)


def test_overshoot_halves_with_the_step():
    coarse = non_proportional_overshoot(1e-3)
    fine = non_proportional_overshoot(5e-4)
    assert fine > 0.0
    assert coarse / fine == pytest.approx(2.0, abs=0.3)


def test_elastic_front_speed():
    measured, c_e = elastic_front_speed()
    assert c_e == pytest.approx(math.sqrt(3.0))
    assert measured == pytest.approx(c_e, rel=0.02)


def test_oracle_suite_covers_every_edge_kkt_branch():
    tally = check_oracle_equivalence(make_rng(7, 3), samples=20)
    assert tally.passed, tally.detail()
    # two oracle draws for each smooth family, KKT_EDGE_DRAWS for each Tresca edge family
    assert tally.samples == 3 * 2 + 2 * KKT_EDGE_DRAWS
    assert _oracle_count(10 ** 6) == ORACLE_SAMPLES
    edge = [(d, ok) for d, ok in tally.requirements if d.startswith("edge kkt branch")]
    assert [d.split()[3] for d, _ in edge] == ["1", "2", "3", "4"]
    for description, ok in edge:
        assert ok
        assert int(description.split()[5]) >= KKT_BRANCH_MIN_HITS
    assert tally.meters["kkt_representation"].max <= 1e-10
    required = {d for d, _ in tally.requirements}
    assert {f"branch {b} exercised" for b in BRANCHES if b != "interior"} <= required


def test_wave_suite_tracks_energy_after_forcing():
    tally = check_wave_speeds(make_rng(0, 0), samples=1)
    assert tally.passed, tally.detail()
    assert "energy_rise_after_forcing" in tally.meters
    assert tally.meters["energy_rise_after_forcing"].max <= 1e-5
