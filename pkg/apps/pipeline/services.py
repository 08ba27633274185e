import json
import logging
from collections.abc import Callable
from dataclasses import dataclass, field

from apps.common.errors import CapExceededError, PipelineError, PreconditionError
from apps.contour.conditions import ConditionReport, check_conditions, satisfy_valence
from apps.contour.iet import Circle, IETSpec, extend_by_pmax, induced_iet
from apps.contour.orders import CyclicOrders, assign_orders, search_orders
from apps.contour.substitution import (
    ContourSpectrum,
    ContourSub,
    contour_iterates,
    contour_spectrum,
    contour_substitution,
)
from apps.geometry.algebra import EigenData, eigen_data, pisot_check
from apps.geometry.embedding import count_crossings, embed_patch
from apps.geometry.points import domain_exchange_step, rauzy_cloud, strong_coincidence
from apps.pipeline.config import ADJACENCY, PipelineConfig
from apps.pipeline.render import circle_scene, cloud_scene, dual_scene, to_svg, tree_scene
from apps.singular.analysis import SingularAnalysis, analyze_singular
from apps.singular.rays import special_rays
from apps.substitutions.automaton import build_automaton, p_extreme
from apps.substitutions.core import Substitution
from apps.trees.covering import adjacency_covering, prune
from apps.trees.export import patch_to_dot, rule_as_dict
from apps.trees.metric import branch_point_expansions, distance_matrix, refine_simplicial
from apps.trees.rule import build_tree_substitution, iterate
from apps.trees.tiles import TreeSubRule, is_tree, quotient

logger = logging.getLogger("apps.pipeline")


@dataclass
class PipelineResult:
    command: str
    report: dict
    artifacts: dict[str, str] = field(default_factory=dict)


def envelope(command: str, config: PipelineConfig, body: dict, error: PipelineError | None = None) -> dict:
    """The common head of every report: what ran, on which configuration, and whether a cap stopped it."""
    report = {
        "command": command,
        "source": config.source,
        "digest": config.digest(),
        "caps": config.caps.as_dict(),
        "caps_hit": error.cap if isinstance(error, CapExceededError) else None,
    }
    if error is not None:
        report["error"] = error.as_dict()
    report.update(body)
    return report


def _substitution_head(substitution: Substitution) -> dict:
    return {"rules": substitution.render(), "letters": list(substitution.alphabet.names)}


def analyze(config: PipelineConfig, render: bool = False) -> PipelineResult:
    substitution = config.substitution
    automaton = build_automaton(substitution)
    body = {
        "substitution": _substitution_head(substitution),
        "primitive": substitution.is_primitive,
        "incidence": [[int(value) for value in row] for row in substitution.incidence.tolist()],
        "pisot": pisot_check(substitution).as_dict(),
        "automaton": [edge.as_dict(substitution) for edge in automaton.edges],
    }
    if substitution.is_primitive:
        p_min, p_max = p_extreme(automaton)
        body["p_min"] = [path.as_dict(substitution) for path in p_min]
        body["p_max"] = [path.as_dict(substitution) for path in p_max]
        body["strong_coincidence"] = strong_coincidence(substitution, config.caps).as_dict(substitution)
    return PipelineResult("analyze", envelope("analyze", config, body))


def singular(config: PipelineConfig, render: bool = False) -> PipelineResult:
    substitution = config.substitution
    analysis = analyze_singular(substitution, config.caps, gate=False)
    body = analysis.as_dict()
    if analysis.report.parageometric:
        try:
            rays = special_rays(substitution, config.caps, list(analysis.classes))
            body["special_rays"] = [ray.as_dict(substitution) for ray in rays]
        except CapExceededError as error:
            logger.warning(f"Special rays not certified: {error}")
            body["special_rays"] = None
    return PipelineResult("singular", envelope("singular", config, body))


def tree_rule(config: PipelineConfig, analysis: SingularAnalysis | None = None) -> TreeSubRule:
    """The refined tree substitution, pruned or covered as configured; refuses non-parageometric input."""
    analysis = analysis or analyze_singular(config.substitution, config.caps)
    rule = refine_simplicial(build_tree_substitution(analysis), config.caps)
    if config.prune:
        rule = prune(rule)
    elif config.cover == ADJACENCY:
        rule = adjacency_covering(rule, eigen_data(config.substitution), config.caps)
    return rule


def tree(config: PipelineConfig, render: bool = False) -> PipelineResult:
    rule = tree_rule(config)
    iterates = []
    patch = rule.initial
    for times in range(config.iterations + 1):
        if times:
            patch = iterate(rule, patch, times=1, check=False)
        iterates.append({"n": times, "tiles": len(patch), "tree": is_tree(quotient(rule.prototiles, patch))})
    body = {"rule": rule_as_dict(rule), "distances": distance_matrix(rule).as_dict(rule), "iterates": iterates}
    return PipelineResult("tree", envelope("tree", config, body), {"patch.dot": patch_to_dot(rule, patch)})


def embed(config: PipelineConfig, render: bool = False) -> PipelineResult:
    substitution = config.substitution
    eigen = eigen_data(substitution)
    rule = tree_rule(config)
    expansions = branch_point_expansions(rule) if rule.covering is None else None
    verdicts = []
    patch, embedding = rule.initial, None
    for times in range(1, config.iterations + 1):
        patch = iterate(rule, patch, times=1, check=False)
        embedding = embed_patch(rule, patch, eigen, expansions)
        verdicts.append(
            {
                "n": times,
                "tree": embedding.tree,
                "coincidences": len(embedding.coincidences),
                "mismatches": len(embedding.mismatches),
                "crossings": count_crossings(embedding, eigen),
            }
        )
        logger.info(f"Embedded iterate {times}: {'tree' if embedding.tree else 'loop'}")
    artifacts = {}
    if render and embedding is not None:
        title = f"{config.source or 'substitution'}, iterate {config.iterations}"
        artifacts["tree.svg"] = to_svg(tree_scene(rule, patch, embedding, eigen, config.render, title), config.render)
    body = {"covering": rule.covering is not None, "verdicts": verdicts}
    return PipelineResult("embed", envelope("embed", config, body), artifacts)


@dataclass
class ContourStage:
    rule: TreeSubRule
    eigen: EigenData
    orders: CyclicOrders
    conditions: ConditionReport
    contour: ContourSub
    spectrum: ContourSpectrum


def _orders(config: PipelineConfig, rule: TreeSubRule, eigen: EigenData) -> tuple[CyclicOrders, ConditionReport]:
    """Explicit orders must pass the conditions; planar orders fall back to a search when they do not."""
    if config.orders_data is not None:
        orders = assign_orders(rule, mode="explicit", data=config.orders_data)
        report = check_conditions(rule, orders)
        if not report.passed:
            raise PreconditionError("The given cyclic orders fail the conditions", conditions=report.as_dict())
        return orders, report
    try:
        orders = assign_orders(rule, mode="planar", eigen=eigen)
        report = check_conditions(rule, orders)
        if report.passed:
            return orders, report
        logger.warning(f"Planar orders fail {[result.name for result in report.results if not result.passed]}")
    except PreconditionError as error:
        logger.warning(f"Planar orders are not available: {error}")
    orders = search_orders(rule, lambda candidate: check_conditions(rule, candidate).passed, config.caps)
    return orders, check_conditions(rule, orders)


def contour_stage(config: PipelineConfig) -> ContourStage:
    eigen = eigen_data(config.substitution)
    rule = tree_rule(config)
    if rule.covering is None:
        rule = satisfy_valence(rule, config.caps)
    orders, conditions = _orders(config, rule, eigen)
    contour = contour_substitution(rule, orders)
    return ContourStage(rule, eigen, orders, conditions, contour, contour_spectrum(contour, eigen))


def _contour_body(stage: ContourStage) -> dict:
    return {
        "conditions": stage.conditions.as_dict(),
        "orders": stage.orders.as_dict(stage.rule),
        "contour": stage.contour.as_dict(),
        "spectrum": stage.spectrum.as_dict(stage.contour),
    }


def contour(config: PipelineConfig, render: bool = False) -> PipelineResult:
    stage = contour_stage(config)
    lengths = [
        {"n": times, "arcs": len(contour_iterates(stage.contour, times))} for times in range(config.iterations + 1)
    ]
    artifacts = {
        "chi.txt": stage.contour.substitution.render() + "\n",
        "chi_dual.txt": stage.contour.dual_substitution.render() + "\n",
        "orders.json": json.dumps(stage.orders.as_dict(stage.rule), indent=2, sort_keys=True) + "\n",
    }
    body = _contour_body(stage) | {"iterates": lengths}
    return PipelineResult("contour", envelope("contour", config, body), artifacts)


def iet(config: PipelineConfig, render: bool = False) -> PipelineResult:
    stage = contour_stage(config)
    circle: Circle = extend_by_pmax(stage.contour, stage.spectrum, stage.eigen)
    rotation: IETSpec = induced_iet(circle, stage.eigen, caps=config.caps)
    body = _contour_body(stage) | {"extended": circle.contour.as_dict(), "iet": rotation.as_dict()}
    artifacts = {
        "chi.txt": stage.contour.substitution.render() + "\n",
        "chi_extended.txt": circle.contour.substitution.render() + "\n",
        "iet.json": json.dumps(rotation.as_dict(), indent=2, sort_keys=True) + "\n",
    }
    if render:
        artifacts["circle.svg"] = to_svg(circle_scene(rotation, config.render), config.render)
    return PipelineResult("iet", envelope("iet", config, body), artifacts)


def exchange_exits(substitution: Substitution, length: int) -> int:
    """Points of the cloud that the domain exchange moves out of it; only the maximal paths may do so."""
    cloud = rauzy_cloud(substitution, length)
    points = {point for point, _ in cloud}
    return sum(domain_exchange_step(point, letter) not in points for point, letter in cloud)


def render_cloud(config: PipelineConfig, render: bool = True) -> PipelineResult:
    substitution = config.substitution
    eigen = eigen_data(substitution)
    scene = cloud_scene(substitution, eigen, config.iterations, config.render)
    body = {
        "substitution": _substitution_head(substitution),
        "points": len(scene),
        "exchange_exits": exchange_exits(substitution, config.iterations),
    }
    artifacts = {"cloud.svg": to_svg(scene, config.render)}
    return PipelineResult("render_cloud", envelope("render_cloud", config, body), artifacts)


def render_dual(config: PipelineConfig, render: bool = True) -> PipelineResult:
    substitution = config.substitution
    eigen = eigen_data(substitution)
    scene = dual_scene(substitution, eigen, config.iterations, config.render)
    body = {"substitution": _substitution_head(substitution), "faces": len(scene)}
    artifacts = {"dual.svg": to_svg(scene, config.render)}
    return PipelineResult("render_dual", envelope("render_dual", config, body), artifacts)


COMMANDS: dict[str, Callable[[PipelineConfig, bool], PipelineResult]] = {
    "analyze": analyze,
    "singular": singular,
    "tree": tree,
    "embed": embed,
    "contour": contour,
    "iet": iet,
    "render_cloud": render_cloud,
    "render_dual": render_dual,
}


def run_command(command: str, config: PipelineConfig, render: bool = False) -> PipelineResult:
    if command not in COMMANDS:
        raise PreconditionError(f"Unknown command {command!r}")
    logger.info(f"Running {command} on {config.source or 'inline rules'} ({config.digest()[:12]})")
    return COMMANDS[command](config, render)
