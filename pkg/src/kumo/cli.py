"""Command-line orchestrator for the full pipeline.

Subcommands: propose, gen-seed, gen-tasks, gen-book, eval, golden,
analyze, split-env, serve, score. All randomness is controlled by --seed;
machine-readable output goes to --out (or --out-dir). Exit codes: 0 on
success, 1 on usage errors, 2 on runtime failures.

Without --llm pointing at an endpoint config file, LLM-backed stages run
against the deterministic in-process mock endpoint, which makes the whole
pipeline hermetic and reproducible.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from . import __version__
from .agents import OracleAgent, RandomAgent
from .analysis import (
    build_domain_graph,
    connected_components,
    louvain,
    modularity,
    split_environment,
    structure_signature,
)
from .envmodel import (
    DomainProposal,
    SeedConfig,
    parse_seed_config,
    serialize_seed_config,
)
from .errors import DuplicateEnvironment, KumoError
from .llmgen import (
    CannedPipelineTransport,
    ChatClient,
    LLMAgent,
    generate_seed_config,
    load_endpoint_config,
    propose_domains,
    render_plain_book,
    revise_knowledge_book,
    write_knowledge_book,
)
from .metrics import aggregate, reports_to_csv, reports_to_table
from .oracle import golden_trajectory, optimal_action_count, write_golden_jsonl
from .registry import EnvironmentRegistry
from .simulator import create_session, run_episode
from .taskgen import GenParams, generate_tasks, read_task_bundle, write_task_bundle
from .trajlog import load_trajectories, store_trajectories

MOCK_EPOCH = "1970-01-01T00:00:00Z"


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise UsageError(message)


def _make_client(args) -> tuple[ChatClient, dict]:
    """Chat client plus provenance stamp for generated artifacts."""
    if getattr(args, "llm", None):
        config = load_endpoint_config(args.llm)
        client = ChatClient.for_endpoint(config)
        from datetime import datetime, timezone

        stamp = {
            "model": config.model_for("seed"),
            "seed": args.seed,
            "created_at": datetime.now(timezone.utc).isoformat(),
        }
        return client, stamp
    client = ChatClient(CannedPipelineTransport(seed=args.seed))
    return client, {"model": "mock", "seed": args.seed, "created_at": MOCK_EPOCH}


def _load_config(args) -> SeedConfig:
    if getattr(args, "config", None):
        return parse_seed_config(Path(args.config).read_text(encoding="utf-8"))
    if getattr(args, "env", None):
        registry = EnvironmentRegistry(args.registry)
        return registry.load(args.env)
    raise UsageError("one of --config or --env/--registry is required")


def _write_text(path: str | None, text: str):
    if path and path != "-":
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_books(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    books = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            doc = json.loads(line)
            books[doc["task_id"]] = doc["book"]
    return books


# -- subcommands -------------------------------------------------------------

def cmd_propose(args) -> int:
    client, _ = _make_client(args)
    proposals = propose_domains(client, args.n)
    payload = [
        {"Goal": p.goal, "Truths": p.truths_desc, "Actions": p.actions_desc}
        for p in proposals
    ]
    _write_text(args.out, json.dumps(payload, indent=2, ensure_ascii=False) + "\n")
    return 0


def _proposal_from_args(args) -> DomainProposal:
    if args.proposal:
        doc = json.loads(Path(args.proposal).read_text(encoding="utf-8"))
        if isinstance(doc, list):
            doc = doc[args.index]
        return DomainProposal(
            goal=doc["Goal"], truths_desc=doc["Truths"], actions_desc=doc["Actions"]
        )
    if args.goal and args.truths_desc and args.actions_desc:
        return DomainProposal(args.goal, args.truths_desc, args.actions_desc)
    raise UsageError("provide --proposal FILE or all of --goal/--truths-desc/--actions-desc")


def cmd_gen_seed(args) -> int:
    client, stamp = _make_client(args)
    proposal = _proposal_from_args(args)
    cfg = generate_seed_config(client, proposal, provenance=stamp)
    _write_text(args.out, serialize_seed_config(cfg))
    if args.register:
        registry = EnvironmentRegistry(args.registry)
        registry.register(proposal, cfg)
        print(f"registered {cfg.domain_name}", file=sys.stderr)
    return 0


def cmd_gen_tasks(args) -> int:
    cfg = _load_config(args)
    params = GenParams(
        n_truth=args.truths,
        n_action=args.actions,
        n_valid=args.valid,
        count=args.count,
        rng_seed=args.seed,
        max_resamples=args.max_resamples,
    )
    tasks = generate_tasks(cfg, params)
    write_task_bundle(args.out, cfg, params, tasks)
    print(f"wrote {len(tasks)} tasks to {args.out}", file=sys.stderr)
    return 0


def cmd_gen_book(args) -> int:
    cfg = _load_config(args)
    _, tasks = read_task_bundle(args.tasks)
    client = None
    if not args.symbolic:
        client, _ = _make_client(args)
    lines = []
    for task in tasks:
        if args.symbolic:
            book = render_plain_book(cfg.rule_out_map(task.truths, task.actions))
            entry = {"task_id": task.task_id, "book": book, "revised": False}
        else:
            book = write_knowledge_book(client, cfg, task)
            entry = {"task_id": task.task_id, "book": book, "revised": False}
            if args.revise:
                verdict = revise_knowledge_book(client, cfg, task, book)
                if not verdict.passed:
                    entry["book"] = verdict.revised_book
                    entry["revised"] = True
        lines.append(json.dumps(entry, ensure_ascii=False))
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_golden(args) -> int:
    cfg = _load_config(args)
    _, tasks = read_task_bundle(args.tasks)
    out = []
    for task in tasks:
        rng = random.Random(f"golden:{args.seed}:{task.task_id}") if args.sample_ties else None
        out.append(golden_trajectory(cfg, task, rng))
    write_golden_jsonl(args.out, out)
    print(f"wrote {len(out)} golden trajectories to {args.out}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    _, tasks = read_task_bundle(args.tasks)
    books = _load_books(args.books)
    llm_client = None
    if args.agent == "llm":
        llm_client, _ = _make_client(args)

    trajectories = []
    for task in tasks:
        book = books.get(task.task_id) or render_plain_book(
            cfg.rule_out_map(task.truths, task.actions)
        )
        for run in range(args.runs):
            if args.agent == "oracle":
                agent = OracleAgent.for_task(cfg, task)
            elif args.agent == "random":
                agent = RandomAgent(task, seed=f"{args.seed}:{run}")
            else:
                agent = LLMAgent(llm_client)
            counter = iter(range(10_000_000))
            session = create_session(
                task, book, cfg=cfg, clock=lambda c=counter: float(next(c))
            )
            traj = run_episode(session, agent, tags={
                "domain": task.domain,
                "difficulty": task.params.difficulty,
                "run": str(run),
            })
            trajectories.append(traj)
    store_trajectories(args.out, trajectories)
    print(f"wrote {len(trajectories)} trajectories to {args.out}", file=sys.stderr)
    return 0


def _optimal_lookup(args) -> dict[str, float] | None:
    if not getattr(args, "tasks", None):
        return None
    cfg = _load_config(args)
    _, tasks = read_task_bundle(args.tasks)
    return {task.task_id: optimal_action_count(cfg, task) for task in tasks}


def cmd_score(args) -> int:
    trajectories, skipped = load_trajectories(args.trajs)
    if skipped:
        print(f"skipped {skipped} corrupt record(s)", file=sys.stderr)
    if not trajectories:
        print("no trajectories to score", file=sys.stderr)
        return 2
    if args.dedupe_sets:
        rng = random.Random(f"dedupe:{args.seed}")
        by_slot: dict[tuple, list] = {}
        for traj in trajectories:
            key = (traj.tags.get("task_set", ""), traj.tags.get("slot", traj.task_id))
            by_slot.setdefault(key, []).append(traj)
        trajectories = [rng.choice(group) for group in by_slot.values()]
    optimal = _optimal_lookup(args)
    group_keys = [k for k in args.group_by.split(",") if k]
    reports = aggregate(trajectories, optimal, group_keys)
    csv_text = reports_to_csv(reports)
    if args.out:
        _write_text(args.out, csv_text)
    print(reports_to_table(reports))
    if args.figures:
        from .reporting import score_report_figure

        Path(args.figures).mkdir(parents=True, exist_ok=True)
        score_report_figure(reports, Path(args.figures) / "scores.png")
        print(f"wrote {Path(args.figures) / 'scores.png'}", file=sys.stderr)
    return 0


def cmd_analyze(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    graph = build_domain_graph(cfg)
    components = connected_components(cfg)
    partition = louvain(graph, rng_seed=args.seed) if graph.m else None

    (out_dir / "edges.txt").write_text(
        "".join(f"{u}\t{v}\n" for u, v in graph.edges), encoding="utf-8"
    )
    comm_lines = ["node,community"]
    if partition is not None:
        comm_lines += [f"{n},{partition.communities[n]}" for n in graph.nodes]
    else:
        comm_lines += [f"{n},0" for n in graph.nodes]
    (out_dir / "communities.csv").write_text("\n".join(comm_lines) + "\n", encoding="utf-8")

    q = partition.q if partition is not None else 0.0
    n_comm = len(set(partition.communities.values())) if partition is not None else len(graph.nodes)
    (out_dir / "analysis.csv").write_text(
        "domain,nodes,edges,components,modularity,communities\n"
        f"{cfg.domain_name},{len(graph.nodes)},{graph.m},{len(components)},{q:.6f},{n_comm}\n",
        encoding="utf-8",
    )

    from .reporting import domain_graph_figure, optimal_count_histogram

    domain_graph_figure(
        graph, partition, out_dir / "domain_graph.png",
        seed=args.seed, title=cfg.domain_name,
    )

    if args.tasks:
        _, tasks = read_task_bundle(args.tasks)
        rows = ["task_id,signature,optimal"]
        values = []
        for task in tasks:
            value = optimal_action_count(cfg, task)
            values.append(value)
            rows.append(f"{task.task_id},{structure_signature(cfg, task)},{value:.6f}")
        (out_dir / "tasks.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
        optimal_count_histogram(
            values, out_dir / "optimal_hist.png",
            title=f"{cfg.domain_name}: optimal action counts",
        )
    print(f"analysis written to {out_dir}", file=sys.stderr)
    return 0


def cmd_split_env(args) -> int:
    cfg = _load_config(args)
    first, second = split_environment(cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for half in (first, second):
        path = out_dir / f"{half.domain_name}.json"
        path.write_text(serialize_seed_config(half), encoding="utf-8")
        print(f"{half.domain_name}: {len(half.truths)} truths, "
              f"{len(half.actions)} actions -> {path}", file=sys.stderr)
    return 0


def cmd_serve(args) -> int:
    from .service import DataStore, create_app

    root = args.data_dir or os.environ.get("KUMO_DATA_DIR")
    if not root:
        raise UsageError("--data-dir or KUMO_DATA_DIR is required")
    store = DataStore(
        root,
        service_seed=args.seed,
        quality_thresholds={
            "min_median_latency": args.quality_latency,
            "chance_margin": args.quality_margin,
        },
    )
    for spec in args.participant or []:
        pid, _, token = spec.partition(":")
        if not token:
            raise UsageError(f"--participant must be id:token, got {spec!r}")
        store.add_participant(pid, token)
    if args.bootstrap_mock:
        client = ChatClient(CannedPipelineTransport(seed=args.seed))
        have = set(store.registry.names())
        needed = args.bootstrap_mock - len(have)
        if needed > 0:
            proposals = propose_domains(client, args.bootstrap_mock)
            for proposal in proposals:
                cfg = generate_seed_config(
                    client, proposal,
                    provenance={"model": "mock", "seed": args.seed,
                                "created_at": MOCK_EPOCH},
                )
                if cfg.domain_name in have:
                    continue
                try:
                    store.registry.register(proposal, cfg)
                    have.add(cfg.domain_name)
                except DuplicateEnvironment:
                    pass
        print(f"registry holds {len(store.registry.names())} environment(s)",
              file=sys.stderr)

    import uvicorn

    uvicorn.run(create_app(store), host=args.host, port=args.port, log_level="warning")
    return 0


# -- parser ----------------------------------------------------------------

def build_parser() -> Parser:
    parser = Parser(prog="kumo", description=__doc__)
    parser.add_argument("--version", action="version", version=f"kumo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, llm=False, config=False):
        p.add_argument("--seed", type=int, default=0, help="controls all randomness")
        if llm:
            p.add_argument("--llm", help="endpoint config JSON; omit for the mock")
        if config:
            p.add_argument("--config", help="seed config JSON file")
            p.add_argument("--env", help="registered environment name")
            p.add_argument("--registry", default="registry", help="registry directory")

    p = sub.add_parser("propose", help="propose game domains")
    common(p, llm=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_propose)

    p = sub.add_parser("gen-seed", help="generate a seed config from a proposal")
    common(p, llm=True)
    p.add_argument("--proposal", help="proposal JSON file (object or list)")
    p.add_argument("--index", type=int, default=0, help="entry when --proposal is a list")
    p.add_argument("--goal")
    p.add_argument("--truths-desc")
    p.add_argument("--actions-desc")
    p.add_argument("--out", default="-")
    p.add_argument("--register", action="store_true")
    p.add_argument("--registry", default="registry")
    p.set_defaults(func=cmd_gen_seed)

    p = sub.add_parser("gen-tasks", help="synthesize a task bundle")
    common(p, config=True)
    p.add_argument("--truths", type=int, required=True)
    p.add_argument("--actions", type=int, required=True)
    p.add_argument("--valid", type=int, default=1)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--max-resamples", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_tasks)

    p = sub.add_parser("gen-book", help="write knowledge books for a bundle")
    common(p, llm=True, config=True)
    p.add_argument("--tasks", required=True, help="task bundle JSONL")
    p.add_argument("--revise", action="store_true", help="audit and revise each book")
    p.add_argument("--symbolic", action="store_true",
                   help="deterministic plain rendering, no model involved")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_book)

    p = sub.add_parser("golden", help="export optimal-play trajectories")
    common(p, config=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--sample-ties", action="store_true",
                   help="sample uniformly among equal-value best actions")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_golden)

    p = sub.add_parser("eval", help="run an agent over a bundle")
    common(p, llm=True, config=True)
    p.add_argument("--tasks", required=True)
    p.add_argument("--agent", choices=["oracle", "random", "llm"], required=True)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--books", help="books JSONL from gen-book")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("score", help="aggregate trajectories into a report")
    common(p, config=True)
    p.add_argument("--trajs", required=True)
    p.add_argument("--tasks", help="bundle for optimal action counts")
    p.add_argument("--group-by", default="model,domain,difficulty")
    p.add_argument("--dedupe-sets", action="store_true",
                   help="keep one record per task-set slot (service logs)")
    p.add_argument("--out")
    p.add_argument("--figures", help="directory for report figures")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("analyze", help="domain graph, communities, task structure")
    common(p, config=True)
    p.add_argument("--tasks", help="optional bundle for signatures and optimal counts")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("split-env", help="split a domain along connected components")
    common(p, config=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_split_env)

    p = sub.add_parser("serve", help="run the human-experiment play service")
    common(p)
    p.add_argument("--data-dir", help="defaults to KUMO_DATA_DIR")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--participant", action="append",
                   help="id:token to add before serving (repeatable)")
    p.add_argument("--bootstrap-mock", type=int, default=0,
                   help="register this many mock environments if missing")
    p.add_argument("--quality-latency", type=float, default=2.0,
                   help="median per-turn seconds below which play looks rushed")
    p.add_argument("--quality-margin", type=float, default=0.0,
                   help="slack above chance accuracy for the quality screen")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return args.func(args) or 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (KumoError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
