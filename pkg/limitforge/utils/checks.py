"""
Named acceptance experiments.

Each check runs a small, seeded experiment end to end and returns a result
envelope {"success", "id", "passed", "details", "table"}; `table` is a pandas
DataFrame (or None) the CLI writes as CSV.
"""

import logging
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from limitforge.utils.algebra import (
    connection_submatrix,
    goodman_certificate,
    goodman_target,
    inequality_battery,
    kernel_test,
    labeled_basis,
    labeled_path,
    perfect_matchings,
    psd_rank_check,
    square_sum_unlabel,
)
from limitforge.utils.energy import (
    cut_hom_sandwich,
    ground_state_energy,
    maxcut,
    mcut_hom_gap,
    mmcut,
    rmcut_hom_gap,
)
from limitforge.utils.errors import InfeasibleBalanceError, LimitForgeError, UnknownNameError
from limitforge.utils.generators import generate
from limitforge.utils.graph_core import QuantumGraph, SimpleGraph, WeightedGraph, named_graph
from limitforge.utils.graphon import StepGraphon, builtin, graph_step, random_step_graphon, t_graphon
from limitforge.utils.homcount import (
    cycle_spectrum,
    density,
    fast_density,
    hom_weighted,
    supergraphs,
    transform,
)
from limitforge.utils.regularity import SamplingOracle, build_reps, maxcut_pipeline, regularity_quality, voronoi_partition
from limitforge.utils.sampling import limit_target_mc, quasirandom_battery, rho, rho_from_s, sampling_lemma_harness
from limitforge.utils.state import DensityKind, EstimationMethod, GraphFamily, Mode, TransformDirection

logger = logging.getLogger(__name__)


@dataclass
class CheckOutcome:
    passed: bool
    details: Dict[str, Any]
    table: Optional[pd.DataFrame] = None


CHECKS: Dict[str, Callable[[int], CheckOutcome]] = {}
DESCRIPTIONS: Dict[str, str] = {}


def register(check_id: str, description: str):
    def wrap(fn: Callable[[int], CheckOutcome]) -> Callable[[int], CheckOutcome]:
        CHECKS[check_id] = fn
        DESCRIPTIONS[check_id] = description
        return fn
    return wrap


def _random_graph(rng: np.random.Generator, n_min: int, n_max: int) -> SimpleGraph:
    n = int(rng.integers(n_min, n_max + 1))
    return generate(GraphFamily.ER, seed=int(rng.integers(1 << 31)), n=n, p=float(rng.random()))


def _small_graphs(max_nodes: int) -> List[SimpleGraph]:
    """One graph per isomorphism class, 1..max_nodes nodes."""
    return [f.base.as_simple() for f in labeled_basis(0, max_nodes)]


@register("embedding", "t(F, G) equals t(F, W_G) for small F and random G")
def check_embedding(seed: int) -> CheckOutcome:
    rng = np.random.default_rng(seed)
    patterns = _small_graphs(4)
    worst = 0.0
    for _ in range(100):
        g = _random_graph(rng, 1, 7)
        w = graph_step(g)
        for f in patterns:
            worst = max(worst, abs(density(DensityKind.T, f, g) - t_graphon(f, w)[0]))
    return CheckOutcome(worst <= 1e-12, {"max_difference": worst, "patterns": len(patterns), "graphs": 100})


@register("inclusion-exclusion", "t_inj and t_ind vectors agree with direct counts through the supergraph lattice")
def check_inclusion_exclusion(seed: int) -> CheckOutcome:
    rng = np.random.default_rng(seed)
    worst = 0.0
    graphs = [_random_graph(rng, 4, 7) for _ in range(10)]
    for f in _small_graphs(4):
        lattice = supergraphs(f)
        for g in graphs:
            inj = np.array([density(DensityKind.T_INJ, s, g) for s in lattice])
            ind = np.array([density(DensityKind.T_IND, s, g) for s in lattice])
            worst = max(worst,
                        float(np.abs(transform(TransformDirection.INJ_FROM_IND, ind, f) - inj).max()),
                        float(np.abs(transform(TransformDirection.IND_FROM_INJ, inj, f) - ind).max()))
    return CheckOutcome(worst <= 1e-12, {"max_difference": worst})


@register("cycle-spectrum", "hom(C_k, G) equals the k-th eigenvalue power sum")
def check_cycle_spectrum(seed: int) -> CheckOutcome:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        g = _random_graph(rng, 1, 50)
        k = int(rng.integers(3, 9))
        worst = max(worst, cycle_spectrum(g, k)["relative_difference"])
    return CheckOutcome(worst <= 1e-6, {"max_relative_difference": worst})


@register("uniform-attachment", "uniform attachment graphs approach 1 - max(x, y)")
def check_uniform_attachment(seed: int) -> CheckOutcome:
    g = generate(GraphFamily.UNIFORM_ATTACHMENT, seed=seed, n=3000)
    edge = fast_density(named_graph("K2"), g)
    triangle = fast_density(named_graph("K3"), g)
    target, target_err = limit_target_mc(GraphFamily.UNIFORM_ATTACHMENT, "K3", samples=400000, seed=seed + 1)
    passed = abs(edge - 1 / 3) <= 0.02 and abs(triangle - target) <= 0.02
    return CheckOutcome(passed, {"t_K2": edge, "t_K3": triangle, "t_K3_limit": target,
                                 "t_K3_limit_stderr": target_err})


@register("prefix-attachment", "prefix attachment triangle density matches its true limit, not the naive guess")
def check_prefix_attachment(seed: int) -> CheckOutcome:
    replicates = 5
    values = np.array([fast_density(named_graph("K3"),
                                    generate(GraphFamily.PREFIX_ATTACHMENT, seed=seed + r, n=2000))
                       for r in range(replicates)])
    empirical = float(values.mean())
    empirical_err = float(values.std(ddof=1) / np.sqrt(replicates))
    limit, limit_err = t_graphon(named_graph("K3"), builtin("pfx_limit"), EstimationMethod.MC, samples=400000, seed=seed + 11)
    naive, naive_err = t_graphon(named_graph("K3"), builtin("pfx_naive"), EstimationMethod.MC, samples=400000, seed=seed + 13)
    sigma_limit = float(np.hypot(empirical_err, limit_err))
    sigma_naive = float(np.hypot(empirical_err, naive_err))
    passed = abs(empirical - limit) <= 4 * sigma_limit and abs(empirical - naive) > 4 * sigma_naive
    return CheckOutcome(passed, {"t_K3": empirical, "stderr": empirical_err, "limit": limit, "naive": naive,
                                 "sigma_limit": sigma_limit, "sigma_naive": sigma_naive})


@register("quasirandom", "Paley graphs pass the quasirandom battery; complete bipartite graphs fail it")
def check_quasirandom(seed: int) -> CheckOutcome:
    paley = quasirandom_battery(generate(GraphFamily.PALEY, p=1009), 0.5, seed=seed)
    bipartite = quasirandom_battery(generate(GraphFamily.COMPLETE_BIPARTITE, a=200, b=200), 0.5, seed=seed)
    c4 = bipartite[bipartite["measure"] == "C4 ratio"].iloc[0]
    passed = bool(paley["passed"].all()) and c4["value"] >= 1.5 and not c4["passed"]
    table = pd.concat([paley.assign(graph="paley(1009)"), bipartite.assign(graph="K_200,200")], ignore_index=True)
    return CheckOutcome(passed, {"paley_max_deviation": float(paley["deviation"].max()),
                                 "bipartite_c4_ratio": float(c4["value"])}, table)


@register("weak-regularity", "pipeline partitions satisfy d_cut(G, G_P) <= (4 eps)^(1/4)")
def check_weak_regularity(seed: int, seeds: int = 50) -> CheckOutcome:
    epsilon = 0.3
    bound = (4 * epsilon) ** 0.25
    rows = []
    for name, builder in (("er", lambda s: generate(GraphFamily.ER, seed=s, n=22, p=0.5)),
                          ("planted", lambda s: generate(GraphFamily.PLANTED_PARTITION, seed=s, sizes=[11, 11],
                                                         p_in=0.9, p_out=0.1))):
        for s in range(seed, seed + seeds):
            g = builder(s)
            oracle = SamplingOracle(g, seed=s)
            reps = build_reps(oracle, epsilon, s)
            partition = voronoi_partition(oracle, reps, epsilon, seed=s + 1)
            quality = regularity_quality(g, partition, seed=s)
            rows.append({"graph": name, "seed": s, "classes": partition.size, "d_cut": quality.cut_distance,
                         "exact": quality.exact, "within": quality.cut_distance <= bound})
    table = pd.DataFrame(rows)
    rates = table.groupby("graph")["within"].mean().to_dict()
    return CheckOutcome(all(r >= 0.9 for r in rates.values()), {"bound": bound, "rates": rates}, table)


@register("maxcut-pipeline", "sampled max-cut estimates track brute force")
def check_maxcut_pipeline(seed: int, seeds: int = 20) -> CheckOutcome:
    epsilon = 0.2
    bipartite = maxcut_pipeline(SamplingOracle(generate(GraphFamily.COMPLETE_BIPARTITE, a=50, b=50), seed=seed),
                                epsilon, seed)
    families = (("planted", lambda s: generate(GraphFamily.PLANTED_PARTITION, seed=s, sizes=[10, 10],
                                               p_in=0.1, p_out=0.9)),
                ("er", lambda s: generate(GraphFamily.ER, seed=s, n=20, p=0.5)))
    rows = []
    for name, builder in families:
        for s in range(seed, seed + seeds):
            g = builder(s)
            exact = maxcut(g, Mode.EXACT).value
            try:
                estimate = maxcut_pipeline(SamplingOracle(g, seed=s), epsilon, s).estimate
            except LimitForgeError as e:
                logger.warning(f"⚠️ pipeline failed on {name} seed {s}: {e}")
                estimate = float("nan")
            rows.append({"graph": name, "seed": s, "exact": exact, "estimate": estimate,
                         "within": bool(abs(estimate - exact) <= 0.05)})
    table = pd.DataFrame(rows)
    rates = table.groupby("graph")["within"].mean().to_dict()
    passed = bipartite.estimate >= 0.24 and all(r >= 0.9 for r in rates.values())
    return CheckOutcome(passed, {"bipartite_estimate": bipartite.estimate, "within_rates": rates}, table)


@register("energy", "cut/hom sandwiches and multiway gaps")
def check_energy(seed: int) -> CheckOutcome:
    rng = np.random.default_rng(seed)
    graphs = [g for g in _small_graphs(5)] + [_random_graph(rng, 8, 8) for _ in range(200)]
    sandwich_ok = all(cut_hom_sandwich(g)["holds"] for g in graphs)
    betas = [np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([[0.5, 1.0, 0.2], [1.0, 0.0, 0.7], [0.2, 0.7, 0.3]])]
    h = WeightedGraph(np.ones(2), np.array([[0.0, 1.0], [1.0, 0.2]]))
    rows = []
    for i in range(30):
        g = _random_graph(rng, 4, 7 if i % 2 else 8)
        for beta in betas:
            gap = mcut_hom_gap(g, beta)
            rows.append({"relation": f"mcut-hom q={beta.shape[0]}", "n": g.n, "gap": gap["gap"],
                         "bound": gap["bound"], "constant": gap["constant"],
                         "holds": -1e-12 <= gap["gap"] <= gap["bound"] + 1e-12})
            ground = ground_state_energy(g, beta).value
            flipped = mmcut(g, -beta).value
            rows.append({"relation": f"ground-state q={beta.shape[0]}", "n": g.n, "gap": ground + flipped,
                         "bound": 0.0, "constant": 0.0, "holds": abs(ground + flipped) <= 1e-12})
        try:
            gap = rmcut_hom_gap(g, h)
        except InfeasibleBalanceError:
            continue
        rows.append({"relation": "rmcut-hom", "n": g.n, "gap": gap["gap"], "bound": gap["bound"],
                     "constant": gap["constant"], "holds": -1e-12 <= gap["gap"] <= gap["bound"] + 1e-12})
    table = pd.DataFrame(rows)
    constants = table.groupby("relation")["constant"].max().to_dict()
    return CheckOutcome(sandwich_ok and bool(table["holds"].all()),
                        {"sandwich_graphs": len(graphs), "sandwich_holds": sandwich_ok, "constants": constants},
                        table)


@register("algebra", "Goodman certificate, reflection positivity of hom(., K3), matching kernel")
def check_algebra(seed: int) -> CheckOutcome:
    goodman = square_sum_unlabel(goodman_certificate()) == goodman_target()
    k3 = WeightedGraph.from_graph(named_graph("K3"))
    basis = labeled_basis(2, 4)
    m = connection_submatrix(lambda f: hom_weighted(f, k3), 2, basis)
    report = psd_rank_check(m.matrix)
    x = QuantumGraph.of(labeled_path(4)) - QuantumGraph.of(labeled_path(2))
    in_kernel = kernel_test(perfect_matchings, x, basis)
    passed = goodman and report.is_psd and report.rank <= 9 and in_kernel
    return CheckOutcome(passed, {"goodman_reduces": goodman, "basis_size": m.size, "psd": report.is_psd,
                                 "min_eigenvalue": report.min_eigenvalue, "rank": report.rank,
                                 "pm_kernel": in_kernel})


@register("inequalities", "classical density inequalities on random step graphons")
def check_inequalities(seed: int) -> CheckOutcome:
    rng = np.random.default_rng(seed)
    violations = 0
    worst: Dict[str, float] = {}
    for _ in range(1000):
        table = inequality_battery(random_step_graphon(rng))
        violations += int(table["violated"].fillna(False).astype(bool).sum())
        for row in table.itertuples():
            worst[row.inequality] = min(worst.get(row.inequality, np.inf), row.margin)
    turan = StepGraphon([0.5, 0.5], [[0.0, 1.0], [1.0, 0.0]])
    goodman_row = inequality_battery(turan).set_index("inequality").loc["goodman"]
    equality = abs(goodman_row["margin"]) <= 1e-12
    return CheckOutcome(violations == 0 and equality,
                        {"violations": violations, "min_margins": worst, "turan_goodman_margin": goodman_row["margin"]})


@register("rho-reconstruction", "neighbourhood distributions rebuilt from degree-constrained counts")
def check_rho_reconstruction(seed: int) -> CheckOutcome:
    rng = np.random.default_rng(seed)
    mismatches = 0
    rows = []
    for i in range(50):
        n = int(rng.integers(2, 13))
        g = generate(GraphFamily.RANDOM_BOUNDED_DEGREE, seed=seed + i, n=n, d=3)
        r = 1 + i % 2
        direct = {c: p for c, p in rho(g, r, 3).probabilities.items() if p}
        rebuilt = {c: p for c, p in rho_from_s(g, r, 3).probabilities.items() if p}
        same = direct == rebuilt
        mismatches += int(not same)
        rows.append({"instance": i, "n": n, "r": r, "classes": len(direct), "match": same})
    return CheckOutcome(mismatches == 0, {"instances": 50, "mismatches": mismatches}, pd.DataFrame(rows))


@register("sampling-lemmas", "sampled subgraphs stay close in cut distance")
def check_sampling_lemmas(seed: int) -> CheckOutcome:
    g = generate(GraphFamily.ER, seed=seed, n=20, p=0.5)
    h = generate(GraphFamily.ER, seed=seed + 1, n=20, p=0.5)
    table = sampling_lemma_harness(g, 16, 200, seed, h=h)
    return CheckOutcome(bool((table["violation_rate"] == 0).all()),
                        {"max_deviation": table.set_index("lemma")["max_deviation"].to_dict()}, table)


def list_checks() -> pd.DataFrame:
    return pd.DataFrame([{"id": k, "description": DESCRIPTIONS[k]} for k in CHECKS])


def run_check(check_id: str, seed: int = 0) -> Dict[str, Any]:
    """Run one named check and wrap it in a result envelope."""
    if check_id not in CHECKS:
        raise UnknownNameError(f"unknown check '{check_id}'; known: {', '.join(CHECKS)}")
    logger.info(f"🔄 Running check {check_id} (seed={seed})")
    started = time.perf_counter()
    outcome = CHECKS[check_id](seed)
    elapsed = time.perf_counter() - started
    if outcome.passed:
        logger.info(f"✅ {check_id} passed in {elapsed:.1f}s")
    else:
        logger.error(f"❌ {check_id} failed in {elapsed:.1f}s: {outcome.details}")
    return {"success": True, "id": check_id, "passed": outcome.passed, "seconds": elapsed,
            "details": outcome.details, "table": outcome.table}
