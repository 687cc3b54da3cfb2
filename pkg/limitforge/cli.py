"""
Command-line entry point.

Every command writes CSV (tables) or JSON (documents) to --out, or to stdout
when --out is omitted. Stochastic commands refuse to run without --seed.

Exit codes: 0 success, 1 failure (including a failed check), 2 usage error,
3 size bound exceeded.
"""

import argparse
import hashlib
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd

from limitforge import __version__
from limitforge.utils import algebra, checks, cutmetric, energy, graphon, homcount, sampling
from limitforge.utils.config import get_settings, override_settings
from limitforge.utils.errors import LimitForgeError, SizeBoundExceeded, UnknownNameError
from limitforge.utils.generators import STOCHASTIC_FAMILIES, generate
from limitforge.utils.graph_core import (
    NAMED_GRAPHS,
    SimpleGraph,
    WeightedGraph,
    format_edge_list,
    named_graph,
    read_edge_list,
    read_weighted_graph,
)
from limitforge.utils.regularity import SamplingOracle, maxcut_pipeline
from limitforge.utils.state import (
    CountKind,
    DensityKind,
    DistanceMetric,
    EstimationMethod,
    GraphFamily,
    Mode,
    PartitionVariant,
    SampleKind,
    SparseKind,
)
from limitforge.workflow import run_regularity

logger = logging.getLogger(__name__)

EXIT_USAGE = 2


class UsageError(Exception):
    """Bad flag combination detected after parsing."""


# ---------------------------------------------------------------------------
# inputs and outputs
# ---------------------------------------------------------------------------

def source_hash() -> str:
    """sha256 over the package sources, in path order."""
    root = Path(__file__).resolve().parent
    digest = hashlib.sha256()
    for path in sorted(root.rglob("*.py")):
        digest.update(path.relative_to(root).as_posix().encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()


def _parse_value(text: str) -> Any:
    if "/" in text:
        return [_parse_value(part) for part in text.split("/")]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_family_spec(spec: str) -> Dict[str, Any]:
    """"paley:p=13" or "er:n=100,p=0.3" (sizes as 10/10)."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"family parameter '{item}' is not key=value")
        params[key.strip().replace("-", "_")] = _parse_value(value.strip())
    return {"family": name, "params": params}


def load_graph(text: str, seed: Optional[int]) -> SimpleGraph:
    """Edge-list file, named small graph, or family spec."""
    path = Path(text)
    if path.is_file():
        return read_edge_list(path).as_simple()
    if text in NAMED_GRAPHS:
        return named_graph(text)
    if ":" in text or text in {f.value for f in GraphFamily}:
        spec = parse_family_spec(text)
        family = GraphFamily(spec["family"]) if spec["family"] in {f.value for f in GraphFamily} else None
        if family is None:
            raise UnknownNameError(f"unknown graph family '{spec['family']}'")
        if family in STOCHASTIC_FAMILIES and seed is None:
            raise UsageError(f"family '{family.value}' is random; pass --seed")
        return generate(family, seed=seed, **spec["params"])
    raise UsageError(f"'{text}' is neither a file, a named graph nor a family spec")


def load_graphon(text: str) -> graphon.Graphon:
    """Step graphon JSON file, or builtin name with optional params ("constant:p=0.3")."""
    path = Path(text)
    if path.is_file():
        return graphon.StepGraphon.from_json(path.read_text())
    spec = parse_family_spec(text)
    return graphon.builtin(spec["family"], **spec["params"])


def load_matrix(text: str) -> np.ndarray:
    """JSON matrix inline ("[[0,1],[1,0]]") or from a file."""
    path = Path(text)
    raw = path.read_text() if path.is_file() else text
    try:
        return np.array(json.loads(raw), dtype=float)
    except (json.JSONDecodeError, ValueError) as e:
        raise UsageError(f"cannot read matrix from '{text}': {e}") from e


def load_weighted(text: str) -> WeightedGraph:
    path = Path(text)
    if path.is_file():
        return read_weighted_graph(path)
    return WeightedGraph.from_json(text)


def emit(data: Union[pd.DataFrame, Dict[str, Any], str], out: Optional[str]) -> None:
    """Write a table as CSV, a dict as sorted JSON, a string verbatim."""
    if isinstance(data, pd.DataFrame):
        text = data.to_csv(index=False, lineterminator="\n")
    elif isinstance(data, dict):
        text = json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n"
    else:
        text = data
    if out:
        Path(out).write_text(text)
        logger.info(f"✅ Wrote {out}")
    else:
        sys.stdout.write(text)


def _json_default(value: Any) -> Any:
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, pd.DataFrame):
        return value.to_dict(orient="records")
    return str(value)


def _require_seed(args: argparse.Namespace, why: str) -> int:
    if args.seed is None:
        raise UsageError(f"{why} is stochastic; pass --seed")
    return args.seed


# ---------------------------------------------------------------------------
# command handlers
# ---------------------------------------------------------------------------

GENERATOR_FLAGS = ("n", "p", "r", "a", "b", "d", "sizes", "p_in", "p_out")


def cmd_generate(args: argparse.Namespace) -> int:
    family = GraphFamily(args.family)
    if family in STOCHASTIC_FAMILIES:
        _require_seed(args, f"family '{family.value}'")
    params = {k: getattr(args, k) for k in GENERATOR_FLAGS if getattr(args, k) is not None}
    if "sizes" in params:
        params["sizes"] = [int(s) for s in params["sizes"].split(",")]
    g = generate(family, seed=args.seed, **params)
    emit(format_edge_list(g), args.out)
    return 0


def cmd_count(args: argparse.Namespace) -> int:
    f, g = load_graph(args.F, args.seed), load_graph(args.G, args.seed)
    value = homcount.count(CountKind(args.kind), f, g)
    emit(pd.DataFrame([{"kind": args.kind, "F": args.F, "G": args.G, "count": value}]), args.out)
    return 0


def cmd_density(args: argparse.Namespace) -> int:
    f, g = load_graph(args.F, args.seed), load_graph(args.G, args.seed)
    row: Dict[str, Any] = {"kind": args.kind, "F": args.F, "G": args.G}
    if args.kind in {k.value for k in SparseKind}:
        row.update(value=homcount.s_density(SparseKind(args.kind), f, g), stderr=0.0, exact="")
    elif args.samples:
        seed = _require_seed(args, "sampled density")
        value, stderr = homcount.sampled_density(DensityKind(args.kind), f, g, args.samples, seed)
        row.update(value=value, stderr=stderr, exact="")
    else:
        value = homcount.density_exact(DensityKind(args.kind), f, g)
        row.update(value=float(value), stderr=0.0, exact=str(value))
    emit(pd.DataFrame([row]), args.out)
    return 0


def cmd_graphon(args: argparse.Namespace) -> int:
    w = load_graphon(args.W)
    if args.sample_n:
        seed = _require_seed(args, "W-random sampling")
        emit(format_edge_list(graphon.w_random(args.sample_n, w, seed).graph), args.out)
        return 0
    if args.validate:
        emit({"success": True, "graphon": args.W, **graphon.validate_graphon(w, seed=args.seed or 0)}, args.out)
        return 0
    method = EstimationMethod(args.method)
    seed = _require_seed(args, "Monte Carlo density") if method is EstimationMethod.MC else args.seed
    rows = []
    for name in args.F.split(","):
        f = load_graph(name, seed)
        est = graphon.t_ind_graphon if args.induced else graphon.t_graphon
        value, stderr = est(f, w, method, samples=args.samples, seed=seed)
        rows.append({"W": args.W, "F": name, "induced": args.induced, "value": value, "stderr": stderr})
    emit(pd.DataFrame(rows), args.out)
    return 0


def cmd_dist(args: argparse.Namespace) -> int:
    g, h = load_graph(args.G, args.seed), load_graph(args.H, args.seed)
    metric = DistanceMetric(args.metric)
    mode = Mode(args.mode)
    if mode is not Mode.EXACT or metric is DistanceMetric.DELTA:
        _require_seed(args, f"{metric.value} distance in {mode.value} mode")
    seed = args.seed or 0
    row: Dict[str, Any] = {"metric": metric.value, "G": args.G, "H": args.H}
    if metric is DistanceMetric.CUT:
        result = cutmetric.d_cut_aligned(g, h, mode, seed=seed)
        row.update(value=result.value, lower=result.value, upper=result.value, exact=result.exact)
    elif metric is DistanceMetric.DELTA_HAT:
        result = cutmetric.delta_hat(g, h, mode, seed=seed)
        row.update(value=result.value, lower=None, upper=result.value, exact=result.exact)
    elif metric is DistanceMetric.DELTA:
        bracket = cutmetric.delta_cut(g, h, factor=args.factor, seed=seed)
        row.update(value=bracket.upper, lower=bracket.lower, upper=bracket.upper, exact=bracket.upper_exact)
    else:
        result = cutmetric.d_sample(g, h, args.kmax, mode, trials=args.trials, seed=seed)
        row.update(value=result.value, lower=result.value, upper=result.value + result.truncation_error,
                   exact=mode is Mode.EXACT)
    emit(pd.DataFrame([row]), args.out)
    return 0


def cmd_regularity(args: argparse.Namespace) -> int:
    seed = _require_seed(args, "regularity")
    backing = load_graphon(args.W) if args.W else load_graph(args.G, seed)
    if args.maxcut_only:
        estimate = maxcut_pipeline(SamplingOracle(backing, seed=seed), args.epsilon, seed)
        emit({"success": True, **estimate.to_dict(), "representatives": len(estimate.representatives)}, args.out)
        return 0
    report = run_regularity(backing, args.epsilon, seed)
    emit(report, args.out)
    return 0 if report["success"] else 1


def cmd_energy(args: argparse.Namespace) -> int:
    g = load_graph(args.G, args.seed)
    quantity = args.quantity
    mode = Mode(args.mode)
    if mode is not Mode.EXACT:
        _require_seed(args, f"{quantity} in {mode.value} mode")
    seed = args.seed or 0
    row: Dict[str, Any] = {"quantity": quantity, "G": args.G}
    if quantity == "maxcut":
        result = energy.maxcut(g, mode, seed=seed)
        row.update(value=result.value, exact=result.exact, witness=" ".join(map(str, result.witness)))
    elif quantity == "mmcut":
        result = energy.mmcut(g, load_matrix(args.beta), mode, seed=seed)
        row.update(value=result.value, exact=result.exact, witness=" ".join(map(str, result.assignment)))
    elif quantity in ("rmcut", "right") and not args.H:
        raise UsageError(f"{quantity} needs --H")
    elif quantity == "rmcut":
        result = energy.rmcut(g, load_weighted(args.H), mode, seed=seed)
        row.update(value=result.value, exact=result.exact, witness=" ".join(map(str, result.assignment)))
    elif quantity in ("partition", "free-energy"):
        method = EstimationMethod(args.method)
        if method is EstimationMethod.MC:
            _require_seed(args, "Monte Carlo partition function")
        pf = energy.partition_functions(g, load_matrix(args.beta), PartitionVariant(args.variant), method,
                                        samples=args.samples, seed=args.seed)
        row.update(value=pf.log_z if quantity == "partition" else pf.free_energy, log_z=pf.log_z,
                   free_energy=pf.free_energy, stderr=pf.log_z_stderr, exact=pf.exact)
    elif quantity == "ground":
        result = energy.ground_state_energy(g, load_matrix(args.beta))
        row.update(value=result.value, exact=result.exact, witness=" ".join(map(str, result.assignment)))
    elif quantity == "sandwich":
        row.update(energy.cut_hom_sandwich(g))
    else:
        row.update(energy.right_quantities(g, load_weighted(args.H)))
    emit(pd.DataFrame([row]), args.out)
    return 0


def _parameter(name: str):
    """'pm' or 'hom:<graph>' as a multigraph parameter."""
    if name == "pm":
        return algebra.perfect_matchings
    kind, _, target = name.partition(":")
    if kind != "hom" or not target:
        raise UsageError(f"unknown parameter '{name}'; use pm or hom:<graph>")
    h = WeightedGraph.from_graph(load_graph(target, None))
    return lambda f: homcount.hom_weighted(f, h)


def cmd_algebra(args: argparse.Namespace) -> int:
    if args.action == "verify-certificate":
        result = algebra.verify_certificate(algebra.load_certificate(Path(args.path)))
        emit(result, args.out)
        return 0 if result["success"] else 1
    if args.action == "goodman":
        emit(algebra.certificate_to_json(algebra.goodman_certificate(), algebra.goodman_target(),
                                         name="goodman") + "\n", args.out)
        return 0
    basis = algebra.labeled_basis(args.k, args.max_nodes)
    m = algebra.connection_submatrix(_parameter(args.parameter), args.k, basis, simple=args.simple)
    report = algebra.psd_rank_check(m.matrix)
    emit({"success": True, "parameter": args.parameter, "k": args.k, "basis_size": m.size,
          "psd": report.is_psd, "min_eigenvalue": report.min_eigenvalue, "rank": report.rank,
          "matrix": m.matrix}, args.out)
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    g = load_graph(args.G, args.seed)
    mode = Mode(args.mode)
    seed = _require_seed(args, "empirical sampling") if mode is Mode.EMPIRICAL else args.seed
    if SampleKind(args.kind) is SampleKind.SUBGRAPH:
        dist = sampling.sigma(g, args.k, mode, trials=args.trials, seed=seed)
    elif args.from_counts:
        dist = sampling.rho_from_s(g, args.r, args.d)
    else:
        dist = sampling.rho(g, args.r, args.d, mode, trials=args.trials, seed=seed)
    emit(dist.to_frame(), args.out)
    return 0


def cmd_converge(args: argparse.Namespace) -> int:
    seed = _require_seed(args, "convergence")
    sizes = [int(s) for s in args.sizes.split(",")]
    table = sampling.convergence_diagnostic(GraphFamily(args.family), sizes, args.F.split(","), seed,
                                            replicates=args.replicates, samples=args.samples)
    emit(table, args.out)
    return 0


def cmd_battery(args: argparse.Namespace) -> int:
    if args.kind == "quasirandom":
        seed = _require_seed(args, "quasirandom battery")
        g = load_graph(args.G, seed)
        table = sampling.quasirandom_battery(g, args.p, tolerance=args.tolerance, alpha=args.alpha, seed=seed)
    else:
        target = load_graphon(args.W) if args.W else load_graph(args.G, args.seed)
        if isinstance(target, graphon.Graphon) and not isinstance(target, graphon.StepGraphon):
            _require_seed(args, "Monte Carlo inequality battery")
        sidorenko = load_graph(args.sidorenko, None) if args.sidorenko else None
        table = algebra.inequality_battery(target, sidorenko, samples=args.samples, seed=args.seed or 0)
    emit(table, args.out)
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    if args.list_checks:
        emit(checks.list_checks(), args.out)
        return 0
    check_id = args.check_id or args.check
    if not check_id:
        raise UsageError("name a check id (see --list-checks)")
    if check_id not in checks.CHECKS:
        raise UsageError(f"unknown check '{check_id}' (see --list-checks)")
    result = checks.run_check(check_id, seed=args.seed if args.seed is not None else 0)
    table = result.pop("table")
    if args.out and table is not None:
        emit(table, args.out)
    emit(result, None if args.out is None or table is not None else args.out)
    return 0 if result["passed"] else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common_flags(default: Any) -> argparse.ArgumentParser:
    """Shared flags; subcommands use SUPPRESS so they do not reset values given before the command."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=default, help="seed for stochastic commands")
    common.add_argument("--out", default=default, help="output file (stdout when omitted)")
    common.add_argument("--threads", type=int, default=default, help="worker cap; results do not depend on it")
    common.add_argument("--log-level", default=default, help="DEBUG, INFO, WARNING, ERROR")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="limitforge", description="Graph limits toolkit",
                                     parents=[_common_flags(None)])
    parser.add_argument("--version", action="store_true", help="print version and source hash")
    parser.add_argument("--paper-check", "--check", dest="check", default=None, metavar="ID",
                        help="run a named acceptance check")
    parser.add_argument("--list-checks", action="store_true", help="list acceptance check ids")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("generate", parents=[common], help="write a generated graph as an edge list")
    p.add_argument("--family", required=True, choices=[f.value for f in GraphFamily])
    for flag in GENERATOR_FLAGS:
        kind = str if flag == "sizes" else (int if flag in ("n", "r", "a", "b", "d") else float)
        p.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=kind, default=None)
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("count", parents=[common], help="hom / inj / ind counts")
    p.add_argument("--kind", default="hom", choices=[k.value for k in CountKind])
    p.add_argument("--F", required=True)
    p.add_argument("--G", required=True)
    p.set_defaults(handler=cmd_count)

    p = sub.add_parser("density", parents=[common], help="t, t_inj, t_ind and sparse densities")
    p.add_argument("--kind", default="t", choices=[k.value for k in DensityKind] + [k.value for k in SparseKind])
    p.add_argument("--F", required=True)
    p.add_argument("--G", required=True)
    p.add_argument("--samples", type=int, default=None, help="estimate from random maps instead of counting")
    p.set_defaults(handler=cmd_density)

    p = sub.add_parser("graphon", parents=[common], help="graphon densities and W-random graphs")
    p.add_argument("--W", required=True, help="builtin name (name:key=value) or step graphon JSON")
    p.add_argument("--F", default="K2", help="comma-separated patterns")
    p.add_argument("--method", default="exact", choices=[m.value for m in EstimationMethod])
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--induced", action="store_true")
    p.add_argument("--sample-n", type=int, default=None, help="write a W-random graph on this many nodes")
    p.add_argument("--validate", action="store_true")
    p.set_defaults(handler=cmd_graphon)

    p = sub.add_parser("dist", parents=[common], help="cut distances")
    p.add_argument("--metric", default="cut", choices=[m.value for m in DistanceMetric])
    p.add_argument("--G", required=True)
    p.add_argument("--H", required=True)
    p.add_argument("--mode", default="exact", choices=[Mode.EXACT.value, Mode.HEURISTIC.value, Mode.EMPIRICAL.value])
    p.add_argument("--factor", type=int, default=1)
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--trials", type=int, default=20000)
    p.set_defaults(handler=cmd_dist)

    p = sub.add_parser("regularity", parents=[common], help="weak regularity run")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--G")
    source.add_argument("--W")
    p.add_argument("--epsilon", type=float, default=0.3)
    p.add_argument("--maxcut-only", action="store_true")
    p.set_defaults(handler=cmd_regularity)

    p = sub.add_parser("energy", parents=[common], help="cuts, multiway cuts, partition functions")
    p.add_argument("quantity", choices=["maxcut", "mmcut", "rmcut", "partition", "free-energy", "ground",
                                        "sandwich", "right"])
    p.add_argument("--G", required=True)
    p.add_argument("--beta", default="[[0,1],[1,0]]", help="J / beta matrix as JSON (inline or file)")
    p.add_argument("--H", default=None, help="weighted graph JSON (inline or file)")
    p.add_argument("--mode", default="exact", choices=[Mode.EXACT.value, Mode.LOCAL.value])
    p.add_argument("--variant", default="hard", choices=[v.value for v in PartitionVariant])
    p.add_argument("--method", default="exact", choices=[m.value for m in EstimationMethod])
    p.add_argument("--samples", type=int, default=None)
    p.set_defaults(handler=cmd_energy)

    p = sub.add_parser("algebra", parents=[common], help="certificates and connection matrices")
    p.add_argument("action", choices=["verify-certificate", "goodman", "connmatrix"])
    p.add_argument("path", nargs="?", default=None)
    p.add_argument("--parameter", default="hom:K3")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--max-nodes", type=int, default=4)
    p.add_argument("--simple", action="store_true", help="collapse parallel edges in products")
    p.set_defaults(handler=cmd_algebra)

    p = sub.add_parser("sample", parents=[common], help="subgraph and neighbourhood sample distributions")
    p.add_argument("--G", required=True)
    p.add_argument("--kind", default="subgraph", choices=[k.value for k in SampleKind])
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--mode", default="exact", choices=[Mode.EXACT.value, Mode.EMPIRICAL.value])
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--from-counts", action="store_true", help="rebuild rho from degree-constrained counts")
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("converge", parents=[common], help="density convergence table")
    p.add_argument("--family", required=True, choices=[f.value for f in GraphFamily])
    p.add_argument("--sizes", required=True, help="comma-separated sizes")
    p.add_argument("--F", default="K2", help="comma-separated patterns")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--samples", type=int, default=100000)
    p.set_defaults(handler=cmd_converge)

    p = sub.add_parser("battery", parents=[common], help="quasirandom or inequality battery")
    p.add_argument("kind", choices=["quasirandom", "inequalities"])
    p.add_argument("--G", default=None)
    p.add_argument("--W", default=None)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--tolerance", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--sidorenko", default=None, help="bipartite graph reported against t(K2)^|E|")
    p.add_argument("--samples", type=int, default=None)
    p.set_defaults(handler=cmd_battery)

    p = sub.add_parser("check", parents=[common], help="run a named acceptance check")
    p.add_argument("check_id", nargs="?", default=None)
    p.add_argument("--list-checks", action="store_true")
    p.set_defaults(handler=cmd_check, check=None)

    return parser


def configure_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=getattr(logging, (level or get_settings().log_level).upper(), logging.INFO),
        format='[%(asctime)s] %(levelname)s %(message)s',
        stream=sys.stderr,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        override_settings(threads=args.threads, log_level=args.log_level)
    except ValueError as e:
        parser.error(str(e))
    configure_logging(args.log_level)

    if args.version:
        print(f"limitforge {__version__} {source_hash()[:16]}")
        return 0
    if args.check or (args.list_checks and not args.command):
        args.check_id = None
        handler = cmd_check
    elif getattr(args, "handler", None) is not None:
        handler = args.handler
    else:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    try:
        return handler(args)
    except UsageError as e:
        parser.error(str(e))
    except SizeBoundExceeded as e:
        logger.error(f"❌ {e}")
        print(json.dumps(e.to_result(), sort_keys=True, default=_json_default), file=sys.stderr)
        return e.exit_code
    except LimitForgeError as e:
        logger.error(f"❌ {e}")
        print(json.dumps(e.to_result(), sort_keys=True, default=_json_default), file=sys.stderr)
        return e.exit_code
    return 1
