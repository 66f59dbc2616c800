"""Declarative problem files: the JSON document that ties a space, code molds,
environment bindings, a build command, a launcher, and a metric together.

See README.md for the full grammar. Validation happens at load time and is
strict: every env binding and mold marker must resolve against the space, an
energy or EDP metric needs a report source, and for cluster launchers every
possible thread-count value must already satisfy the launcher's divisibility
rules (the launcher re-validates at plan time regardless).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import mold as mold_mod
from .forest import ForestParams
from .launch import LaunchError, LaunchSpec, validate_thread_count
from .mold import MoldFile
from .search import AcquisitionSettings
from .space import Configuration, Parameter, ParamSpace

METRICS = ("runtime", "energy", "edp")
EVALUATOR_KINDS = ("simulated", "live")

_METRIC_KIND = {"runtime": "runtime_s", "energy": "node_energy_J", "edp": "edp_Js"}

THREADS_ENV = "OMP_NUM_THREADS"


class ProblemError(ValueError):
    """Problem file failed to parse or validate; message carries the location."""


@dataclass(frozen=True)
class Problem:
    name: str
    evaluator_kind: str
    space: ParamSpace
    molds: tuple[MoldFile, ...]
    env_bindings: dict[str, str]
    build_command: str | None
    launch: LaunchSpec
    executable: str
    metric: str
    geopm_report_glob: str | None
    timeout_s: float | None
    thread_scale: int
    forest: ForestParams
    acquisition: AcquisitionSettings
    base_dir: Path

    def metric_kind(self) -> str:
        return _METRIC_KIND[self.metric]

    def thread_param(self) -> str | None:
        return self.env_bindings.get(THREADS_ENV)

    def thread_count(self, config: Configuration) -> int:
        """Thread count for launcher synthesis: the OMP_NUM_THREADS-bound
        parameter's value times the problem's thread scale. Nominal 1 when
        unbound or when the local shell (which has no placement arguments)
        is the target."""
        name = self.thread_param()
        if name is None or self.launch.kind == "local_shell":
            return 1
        return self.thread_scale * int(config[name])


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ProblemError(f"{where}: missing required key {key!r}")
    return doc[key]


def _parse_space(doc: dict, where: str) -> ParamSpace:
    params = []
    for i, p in enumerate(_require(doc, "parameters", where)):
        loc = f"{where}.parameters[{i}]"
        try:
            params.append(
                Parameter(
                    name=_require(p, "name", loc),
                    kind=_require(p, "kind", loc),
                    values=tuple(_require(p, "values", loc)),
                    default=_require(p, "default", loc),
                )
            )
        except ValueError as exc:
            raise ProblemError(f"{loc}: {exc}") from None
    try:
        return ParamSpace(parameters=tuple(params), seed=int(doc.get("seed", 0)))
    except ValueError as exc:
        raise ProblemError(f"{where}: {exc}") from None


def load_problem(path: Path) -> Problem:
    """Parse and validate a problem file. Raises ProblemError with the file,
    JSON line (for syntax errors), or key path (for semantic errors)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemError(f"{path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    try:
        return problem_from_dict(doc, base_dir=path.parent)
    except ProblemError as exc:
        raise ProblemError(f"{path}: {exc}") from None


def problem_from_dict(doc: dict, base_dir: Path) -> Problem:
    name = _require(doc, "name", "problem")
    evaluator_kind = doc.get("evaluator", "live")
    if evaluator_kind not in EVALUATOR_KINDS:
        raise ProblemError(f"evaluator: must be one of {EVALUATOR_KINDS}, got {evaluator_kind!r}")
    space = _parse_space(_require(doc, "space", "problem"), "space")

    metric = doc.get("metric", "runtime")
    if metric not in METRICS:
        raise ProblemError(f"metric: must be one of {METRICS}, got {metric!r}")

    molds = tuple(
        MoldFile(source=_require(m, "source", f"molds[{i}]"), destination=_require(m, "destination", f"molds[{i}]"))
        for i, m in enumerate(doc.get("molds", []))
    )
    env_bindings = dict(doc.get("env_bindings", {}))

    launch_doc = doc.get("launch", {})
    try:
        launch = LaunchSpec(
            kind=launch_doc.get("kind", "local_shell"),
            nodes=int(launch_doc.get("nodes", 1)),
            ranks_per_node=int(launch_doc.get("ranks_per_node", 1)),
            cores_per_rank=int(launch_doc.get("cores_per_rank", 42)),
            exe_template=launch_doc.get("exe_template", "{exe}"),
        )
    except LaunchError as exc:
        raise ProblemError(f"launch: {exc}") from None

    forest_doc = doc.get("forest", {})
    try:
        forest = ForestParams(
            n_trees=int(forest_doc.get("n_trees", 50)),
            min_samples_leaf=int(forest_doc.get("min_samples_leaf", 1)),
            max_features=forest_doc.get("max_features"),
            bootstrap=bool(forest_doc.get("bootstrap", True)),
            seed=int(forest_doc.get("seed", space.seed)),
        )
    except ValueError as exc:
        raise ProblemError(f"forest: {exc}") from None

    acq_doc = doc.get("acquisition", {})
    try:
        acquisition = AcquisitionSettings(
            kappa=float(acq_doc.get("kappa", 1.96)),
            n_initial_random=int(acq_doc.get("n_initial_random", 10)),
            n_candidates_per_ask=int(acq_doc.get("n_candidates_per_ask", 512)),
        )
    except ValueError as exc:
        raise ProblemError(f"acquisition: {exc}") from None

    timeout_s = doc.get("timeout_s")
    if timeout_s is not None:
        timeout_s = float(timeout_s)
        if timeout_s <= 0:
            raise ProblemError("timeout_s: must be positive when set")

    problem = Problem(
        name=name,
        evaluator_kind=evaluator_kind,
        space=space,
        molds=molds,
        env_bindings=env_bindings,
        build_command=doc.get("build_command"),
        launch=launch,
        executable=doc.get("executable", ""),
        metric=metric,
        geopm_report_glob=doc.get("geopm_report_glob"),
        timeout_s=timeout_s,
        thread_scale=int(doc.get("thread_scale", 1)),
        forest=forest,
        acquisition=acquisition,
        base_dir=Path(base_dir),
    )
    _validate(problem)
    return problem


def _validate(problem: Problem) -> None:
    if problem.thread_scale < 1:
        raise ProblemError("thread_scale: must be >= 1")

    try:
        mold_mod.validate_bindings(problem.env_bindings, problem.space)
    except mold_mod.MoldError as exc:
        raise ProblemError(f"env_bindings: {exc}") from None

    # Mold markers must all name space parameters; checked against the sources now
    # so a bad mold fails at load time instead of mid-search.
    names = set(problem.space.names)
    for m in problem.molds:
        src = problem.base_dir / m.source
        try:
            markers = mold_mod.scan_markers(src.read_text())
        except OSError as exc:
            raise ProblemError(f"molds: {exc}") from None
        unknown = markers - names
        if unknown:
            raise ProblemError(f"molds: {src} references unknown parameters {sorted(unknown)}")

    if problem.metric in ("energy", "edp"):
        if problem.launch.kind == "local_shell" and not problem.geopm_report_glob:
            raise ProblemError(
                "metric: energy/edp with local_shell requires geopm_report_glob"
            )
        if problem.launch.kind not in ("geopm_aprun", "local_shell"):
            raise ProblemError(
                f"metric: energy/edp requires launcher geopm_aprun or local_shell, got {problem.launch.kind!r}"
            )

    if problem.evaluator_kind == "live" and problem.launch.kind != "local_shell":
        thread_param = problem.thread_param()
        if thread_param is None:
            raise ProblemError(
                f"launch: kind {problem.launch.kind!r} needs an {THREADS_ENV} env binding"
            )
        parameter = problem.space.parameter(thread_param)
        for value in parameter.values:
            try:
                n = problem.thread_scale * int(value)
            except ValueError:
                raise ProblemError(
                    f"space: thread parameter {thread_param!r} has non-integer value {value!r}"
                ) from None
            try:
                validate_thread_count(problem.launch.kind, n)
            except LaunchError as exc:
                raise ProblemError(f"space: thread value {value!r}: {exc}") from None

    if problem.evaluator_kind == "live" and not problem.executable:
        raise ProblemError("executable: required for live problems")


def problem_to_dict(problem: Problem) -> dict:
    """Serialize back to the problem-file shape (round-trips through
    problem_from_dict)."""
    return {
        "name": problem.name,
        "evaluator": problem.evaluator_kind,
        "space": {
            "seed": problem.space.seed,
            "parameters": [
                {"name": p.name, "kind": p.kind, "values": list(p.values), "default": p.default}
                for p in problem.space.parameters
            ],
        },
        "molds": [{"source": m.source, "destination": m.destination} for m in problem.molds],
        "env_bindings": dict(problem.env_bindings),
        "build_command": problem.build_command,
        "launch": {
            "kind": problem.launch.kind,
            "nodes": problem.launch.nodes,
            "ranks_per_node": problem.launch.ranks_per_node,
            "cores_per_rank": problem.launch.cores_per_rank,
            "exe_template": problem.launch.exe_template,
        },
        "executable": problem.executable,
        "metric": problem.metric,
        "geopm_report_glob": problem.geopm_report_glob,
        "timeout_s": problem.timeout_s,
        "thread_scale": problem.thread_scale,
        "forest": {
            "n_trees": problem.forest.n_trees,
            "min_samples_leaf": problem.forest.min_samples_leaf,
            "max_features": problem.forest.max_features,
            "bootstrap": problem.forest.bootstrap,
            "seed": problem.forest.seed,
        },
        "acquisition": {
            "kappa": problem.acquisition.kappa,
            "n_initial_random": problem.acquisition.n_initial_random,
            "n_candidates_per_ask": problem.acquisition.n_candidates_per_ask,
        },
    }
