"""
Scenario files for the ``project``, ``drive`` and ``wave`` commands.

A scenario is a YAML or JSON mapping tagged ``version: "pc/1"``. Unknown keys are
rejected, and every error names the dotted path of the offending field.
"""
import logging
import math
from typing import Any, Iterable, Mapping, NamedTuple, Optional

from .config import CFL_MAX, DRIFT_TOL, SCENARIO_VERSION
from .constitutive import DriftPolicy, MaterialState, StrainPath
from .elasticity import ElasticModuli, moduli_from_mapping, p_wave_speed
from .errors import ScenarioError, ValidationError
from .tensor_core import SymTensor3
from .util.config import ScenarioConfig
from .wave_sim_1d import BoundaryCondition, Grid1D, TimeProgram, WaveScenario, check_cfl, stable_dt
from .yield_domain import YieldDomain, build_domain

logger = logging.getLogger(__name__)

_COMMON = {"version", "seed"}
_DOMAIN = {"criterion", "k", "functions", "saturation_tol", "eig_tol"}

PROJECT_FIELDS = _COMMON | _DOMAIN | {"sigma", "tau", "oracle"}
DRIVE_FIELDS = _COMMON | _DOMAIN | {"moduli", "path", "dt", "drift", "initial"}
WAVE_FIELDS = _COMMON | _DOMAIN | {
    "moduli",
    "grid",
    "bc",
    "forcing",
    "dt",
    "cfl",
    "t_end",
    "output_stride",
    "gauges",
    "arrival_threshold",
    "drift",
    "initial",
}


class ProjectCase(NamedTuple):
    domain: YieldDomain
    sigma: SymTensor3
    tau: SymTensor3
    oracle: bool


class DriveCase(NamedTuple):
    domain: YieldDomain
    moduli: ElasticModuli
    initial: MaterialState
    path: StrainPath
    dt: float
    drift: DriftPolicy


def load_scenario(filename: str, overrides: Optional[Mapping[str, Any]] = None) -> ScenarioConfig:
    cfg = ScenarioConfig.fromfile(filename)
    if overrides:
        cfg.merge_from_dict(overrides)
    logger.debug("scenario %s:\n%s", filename, cfg.pretty_text)
    return cfg


def _major(tag: str) -> str:
    return tag.split(".", 1)[0]


def check_version(doc: Mapping) -> None:
    tag = doc.get("version")
    if tag is None:
        raise ScenarioError(f"missing; expected {SCENARIO_VERSION!r}", field="version")
    if not isinstance(tag, str) or _major(tag) != _major(SCENARIO_VERSION):
        raise ScenarioError(f"unsupported version {tag!r}; expected {SCENARIO_VERSION!r}", field="version")


def check_fields(doc: Mapping, allowed: Iterable[str], required: Iterable[str] = (), prefix: str = "") -> None:
    if not isinstance(doc, Mapping):
        raise ScenarioError(f"expected a mapping, got {doc!r}", field=prefix.rstrip(".") or None)
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ScenarioError(f"unknown field; allowed: {sorted(allowed)}", field=prefix + unknown[0])
    for key in required:
        if key not in doc:
            raise ScenarioError("missing field", field=prefix + key)


def _number(value, field: str, positive: bool = False) -> float:
    if isinstance(value, bool):
        raise ScenarioError(f"expected a number, got {value!r}", field=field)
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ScenarioError(f"expected a number, got {value!r}", field=field)
    if not math.isfinite(value) or (positive and value <= 0.0):
        raise ScenarioError(f"must be {'positive and ' if positive else ''}finite, got {value}", field=field)
    return value


def _tensor(value, field: str) -> SymTensor3:
    if not isinstance(value, (list, tuple)) or len(value) != 6:
        raise ScenarioError(f"expected 6 Voigt components [11, 22, 33, 12, 13, 23], got {value!r}", field=field)
    return SymTensor3.from_voigt([_number(v, f"{field}[{i}]") for i, v in enumerate(value)])


def _domain(doc: Mapping) -> YieldDomain:
    kwargs = {}
    for key in ("saturation_tol", "eig_tol"):
        if key in doc:
            kwargs[key] = _number(doc[key], key, positive=True)
    try:
        return build_domain(doc, **kwargs)
    except ScenarioError:
        raise
    except ValidationError as e:
        raise ScenarioError(str(e).split(": ", 1)[-1], field=e.field) from e


def _moduli(doc: Mapping) -> ElasticModuli:
    if "moduli" not in doc:
        raise ScenarioError("missing field", field="moduli")
    spec = doc["moduli"]
    check_fields(spec, {"lame", "young", "rho"}, required=("rho",), prefix="moduli.")
    try:
        return moduli_from_mapping(spec)
    except ScenarioError:
        raise
    except ValidationError as e:
        field = e.field if e.field and e.field.startswith("moduli") else f"moduli.{e.field or ''}".rstrip(".")
        raise ScenarioError(str(e).split(": ", 1)[-1], field=field) from e


def _drift(doc: Mapping) -> DriftPolicy:
    spec = doc.get("drift", {})
    check_fields(spec, {"kind", "drift_tol"}, prefix="drift.")
    try:
        return DriftPolicy(spec.get("kind", "radial_return"), _number(spec.get("drift_tol", DRIFT_TOL), "drift.drift_tol"))
    except ScenarioError:
        raise
    except ValidationError as e:
        raise ScenarioError(str(e).split(": ", 1)[-1], field=e.field) from e


def _inside(domain: YieldDomain, sigma: SymTensor3, field: str, drift: Optional[DriftPolicy] = None) -> None:
    tol = max(domain.saturation_tol, drift.drift_tol if drift else 0.0)
    gaps = domain.gaps(sigma)
    for i, gap in enumerate(gaps):
        if gap > tol * max(1.0, abs(domain.functions[i].level)):
            raise ScenarioError(f"stress lies outside the yield domain (constraint {i} exceeded by {gap:.3e})", field=field)


def build_project_case(doc: Mapping) -> ProjectCase:
    check_version(doc)
    check_fields(doc, PROJECT_FIELDS, required=("criterion", "sigma", "tau"))
    domain = _domain(doc)
    sigma = _tensor(doc["sigma"], "sigma")
    _inside(domain, sigma, "sigma")
    return ProjectCase(domain, sigma, _tensor(doc["tau"], "tau"), bool(doc.get("oracle", False)))


def build_drive_case(doc: Mapping) -> DriveCase:
    check_version(doc)
    check_fields(doc, DRIVE_FIELDS, required=("criterion", "moduli", "path", "dt"))
    domain = _domain(doc)
    moduli = _moduli(doc)

    path_doc = doc["path"]
    check_fields(path_doc, {"knots", "interpolation", "t_end"}, required=("knots",), prefix="path.")
    t_end = path_doc.get("t_end")
    try:
        path = StrainPath.from_knots(
            path_doc["knots"],
            path_doc.get("interpolation", "constant"),
            None if t_end is None else _number(t_end, "path.t_end"),
        )
    except ScenarioError:
        raise
    except ValidationError as e:
        raise ScenarioError(str(e).split(": ", 1)[-1], field=e.field) from e

    drift = _drift(doc)
    initial_doc = doc.get("initial", {})
    check_fields(initial_doc, {"sigma", "t"}, prefix="initial.")
    sigma = _tensor(initial_doc["sigma"], "initial.sigma") if "sigma" in initial_doc else SymTensor3()
    _inside(domain, sigma, "initial.sigma", drift)
    initial = MaterialState(sigma, t=_number(initial_doc.get("t", 0.0), "initial.t"))
    return DriveCase(domain, moduli, initial, path, _number(doc["dt"], "dt", positive=True), drift)


def _program(value, field: str, interpolation: str = "linear") -> TimeProgram:
    try:
        return TimeProgram.from_spec(value, interpolation, field_name=field)
    except ScenarioError:
        raise
    except ValidationError as e:
        raise ScenarioError(str(e).split(": ", 1)[-1], field=field) from e


def _boundary(bc_doc: Mapping, side: str) -> BoundaryCondition:
    spec = bc_doc.get(side, {"kind": "free"})
    prefix = f"bc.{side}."
    check_fields(spec, {"kind", "value"}, required=("kind",), prefix=prefix)
    kind = spec["kind"]
    if kind == "free" and "value" in spec:
        raise ScenarioError("a free end takes no value", field=prefix + "value")
    if kind in ("velocity", "traction") and "value" not in spec:
        raise ScenarioError("missing field", field=prefix + "value")
    try:
        return BoundaryCondition(side, kind, _program(spec.get("value"), prefix + "value"))
    except ScenarioError:
        raise
    except ValidationError as e:
        raise ScenarioError(str(e).split(": ", 1)[-1], field=prefix + "kind") from e


def build_wave_scenario(doc: Mapping) -> WaveScenario:
    check_version(doc)
    check_fields(doc, WAVE_FIELDS, required=("criterion", "moduli", "grid", "t_end"))
    domain = _domain(doc)
    moduli = _moduli(doc)

    grid_doc = doc["grid"]
    check_fields(grid_doc, {"n_cells", "length"}, required=("n_cells",), prefix="grid.")
    n_cells = grid_doc["n_cells"]
    if isinstance(n_cells, bool) or not isinstance(n_cells, int) or n_cells < 1:
        raise ScenarioError(f"must be a positive integer, got {n_cells!r}", field="grid.n_cells")
    grid = Grid1D(n_cells, _number(grid_doc.get("length", 1.0), "grid.length", positive=True), moduli.rho)

    drift = _drift(doc)
    initial_doc = doc.get("initial", {})
    check_fields(initial_doc, {"stress", "velocity"}, prefix="initial.")
    if "stress" in initial_doc:
        stress = _tensor(initial_doc["stress"], "initial.stress")
        _inside(domain, stress, "initial.stress", drift)
        grid.stress[:] = stress.voigt
    if "velocity" in initial_doc:
        grid.velocity[:] = _number(initial_doc["velocity"], "initial.velocity")

    bc_doc = doc.get("bc", {})
    check_fields(bc_doc, {"left", "right"}, prefix="bc.")
    left = _boundary(bc_doc, "left")
    right = _boundary(bc_doc, "right")

    forcing = doc.get("forcing", {})
    check_fields(forcing, {"body_force"}, prefix="forcing.")
    body_force = _program(forcing.get("body_force", 0.0), "forcing.body_force", interpolation="constant")

    if ("dt" in doc) == ("cfl" in doc):
        raise ScenarioError("give exactly one of dt and cfl", field="dt")
    if "cfl" in doc:
        cfl = _number(doc["cfl"], "cfl", positive=True)
        if cfl > CFL_MAX:
            raise ScenarioError(f"must not exceed {CFL_MAX}, got {cfl}", field="cfl")
        dt = stable_dt(grid, moduli, cfl)
    else:
        dt = _number(doc["dt"], "dt", positive=True)
        check_cfl(grid, moduli, dt)

    stride = doc.get("output_stride", 1)
    if isinstance(stride, bool) or not isinstance(stride, int) or stride < 1:
        raise ScenarioError(f"must be a positive integer, got {stride!r}", field="output_stride")
    gauges = doc.get("gauges", [0.5])
    if not isinstance(gauges, (list, tuple)) or not gauges:
        raise ScenarioError(f"expected a non-empty list of fractions, got {gauges!r}", field="gauges")
    gauges = tuple(_number(p, f"gauges[{i}]") for i, p in enumerate(gauges))
    for i, p in enumerate(gauges):
        if not 0.0 <= p <= 1.0:
            raise ScenarioError(f"must lie in [0, 1], got {p}", field=f"gauges[{i}]")
    threshold = doc.get("arrival_threshold")

    scenario = WaveScenario(
        grid=grid,
        moduli=moduli,
        domain=domain,
        left=left,
        right=right,
        dt=dt,
        t_end=_number(doc["t_end"], "t_end", positive=True),
        output_stride=stride,
        body_force=body_force,
        drift=drift,
        gauges=gauges,
        arrival_threshold=None if threshold is None else _number(threshold, "arrival_threshold", positive=True),
    )
    logger.info(
        "wave scenario: %d cells, dx=%g, dt=%g (c_e=%g), %d steps",
        grid.n_cells, grid.dx, dt, p_wave_speed(moduli), scenario.n_steps,
    )
    return scenario
