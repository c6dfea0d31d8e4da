"""Command-line entry points for the offline pipeline and the HTTP server.

Subcommands mirror the pipeline order: ``ingest``, ``build-graph``,
``gen-corpus``, ``train``, ``evaluate``, ``sweep-pw``, ``recommend``,
``serve``. Exit codes: 0 success, 1 validation error, 2 I/O error.

Defaults can be preloaded from a JSON config file given via ``--config``
or the ``FLOWREC_CONFIG`` environment variable; explicit flags win.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import evaluate as eval_mod
from .corpus import PwConfig, ServiceToken
from .embed import TrainConfig, load_model, save_model, train
from .errors import FlowrecError
from .ingest import load_repository
from .recommend import Session, recommend_top_k
from .server import ServiceState, serve_forever
from .wskg import build_wskg, load_edge_list, save_edge_list

__all__ = ["AppConfig", "main"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2

CONFIG_ENV_VAR = "FLOWREC_CONFIG"


@dataclasses.dataclass
class AppConfig:
    repo_path: str | None = None
    model_path: str | None = None
    graph_path: str | None = None
    strategy: str = "pw"
    dedupe: bool = False
    pw: PwConfig = dataclasses.field(default_factory=PwConfig)
    train: TrainConfig = dataclasses.field(default_factory=TrainConfig)
    eval: eval_mod.EvalConfig = dataclasses.field(default_factory=eval_mod.EvalConfig)
    listen_address: str = "127.0.0.1:8080"
    default_k: int = 5

    @classmethod
    def from_file(cls, path: str | Path) -> "AppConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        pw = PwConfig(
            walk_length=doc.get("pw", {}).get("walkLength", 5),
            walks_per_vertex=doc.get("pw", {}).get("walksPerVertex", 10),
            rng_seed=doc.get("pw", {}).get("rngSeed", 0),
        )
        tr = doc.get("train", {})
        train_cfg = TrainConfig(
            window=tr.get("window", 3),
            dim=tr.get("dim", 50),
            epochs=tr.get("epochs", 5),
            initial_learning_rate=tr.get("initialLearningRate", 0.025),
            final_learning_rate=tr.get("finalLearningRate", 1e-4),
            rng_seed=tr.get("rngSeed", 1),
            deterministic=tr.get("deterministic", True),
        )
        ev = doc.get("eval", {})
        eval_cfg = eval_mod.EvalConfig(
            train_fraction=ev.get("trainFraction", 0.8),
            k_values=tuple(ev.get("kValues", (3, 5, 10))),
            split_seed=ev.get("splitSeed", 0),
            strategy=doc.get("strategy", "pw"),
            dedupe=doc.get("dedupe", False),
            pw=pw,
            train=train_cfg,
        )
        return cls(
            repo_path=doc.get("repoPath"),
            model_path=doc.get("modelPath"),
            graph_path=doc.get("graphPath"),
            strategy=doc.get("strategy", "pw"),
            dedupe=doc.get("dedupe", False),
            pw=pw,
            train=train_cfg,
            eval=eval_cfg,
            listen_address=doc.get("listenAddress", "127.0.0.1:8080"),
            default_k=doc.get("defaultK", 5),
        )


class _Parser(argparse.ArgumentParser):
    """argparse variant exiting with status 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _build_parser() -> _Parser:
    parser = _Parser(prog="flowrec", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--config",
        help=f"JSON config file (also read from ${CONFIG_ENV_VAR})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a workflow directory and report")
    p.add_argument("directory")

    p = sub.add_parser("build-graph", help="build the knowledge graph edge list")
    p.add_argument("--repo", help="workflow directory")
    p.add_argument("--out", help="edge-list output path")

    p = sub.add_parser("gen-corpus", help="generate the sequence corpus")
    p.add_argument("--graph", help="edge-list input path")
    p.add_argument("--strategy", choices=eval_mod.STRATEGIES)
    p.add_argument("--dedup", action="store_true", default=None)
    p.add_argument("--walk-len", type=int, help="max walk length (pw)")
    p.add_argument("--walks-per-vertex", type=int, help="walks per vertex (pw)")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-paths-per-start", type=int, help="dfs safety cap")
    p.add_argument("--out", help="corpus output path")

    p = sub.add_parser("train", help="train embeddings on a corpus file")
    p.add_argument("--corpus", help="corpus input path")
    p.add_argument("--out", help="model output path")
    p.add_argument("--window", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float, help="initial learning rate")
    p.add_argument("--final-lr", type=float)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("evaluate", help="run the evaluation protocol")
    p.add_argument("--repo")
    p.add_argument("--strategy", choices=eval_mod.STRATEGIES)
    p.add_argument("--dedup", action="store_true", default=None)
    p.add_argument("--k", type=int, action="append", help="cutoff (repeatable)")
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--walk-len", type=int)
    p.add_argument("--walks-per-vertex", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--seed", type=int, help="seeds the split, walks, and training")
    p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("sweep-pw", help="grid sweep over walk length and count")
    p.add_argument("--repo")
    p.add_argument("--l", dest="l_values", type=int, action="append", required=True)
    p.add_argument("--theta", dest="theta_values", type=int, action="append", required=True)
    p.add_argument("--k", type=int, action="append")
    p.add_argument("--epochs", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="CSV output path (stdout otherwise)")

    p = sub.add_parser("recommend", help="rank next services for a session file")
    p.add_argument("--model")
    p.add_argument("--graph")
    p.add_argument("--session-file", required=True,
                   help='JSON: {"selected": ["tokenKey", ...]}')
    p.add_argument("--k", type=int)

    p = sub.add_parser("serve", help="run the HTTP recommendation API")
    p.add_argument("--model")
    p.add_argument("--graph")
    p.add_argument("--listen", help="host:port")

    return parser


def _load_config(args) -> AppConfig:
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    return AppConfig.from_file(path) if path else AppConfig()


def _pick(flag, fallback):
    return flag if flag is not None else fallback


def _pw_from_args(args, cfg: AppConfig) -> PwConfig:
    return PwConfig(
        walk_length=_pick(getattr(args, "walk_len", None), cfg.pw.walk_length),
        walks_per_vertex=_pick(
            getattr(args, "walks_per_vertex", None), cfg.pw.walks_per_vertex
        ),
        rng_seed=_pick(getattr(args, "seed", None), cfg.pw.rng_seed),
    )


def _train_from_args(args, cfg: AppConfig) -> TrainConfig:
    return TrainConfig(
        window=_pick(getattr(args, "window", None), cfg.train.window),
        dim=_pick(getattr(args, "dim", None), cfg.train.dim),
        epochs=_pick(getattr(args, "epochs", None), cfg.train.epochs),
        initial_learning_rate=_pick(
            getattr(args, "lr", None), cfg.train.initial_learning_rate
        ),
        final_learning_rate=_pick(
            getattr(args, "final_lr", None), cfg.train.final_learning_rate
        ),
        rng_seed=_pick(getattr(args, "seed", None), cfg.train.rng_seed),
        deterministic=cfg.train.deterministic,
    )


def _require(value, what: str) -> str:
    if not value:
        raise FlowrecError(f"{what} is required (flag or config file)")
    return value


def _cmd_ingest(args, cfg: AppConfig) -> int:
    result = load_repository(args.directory)
    print(f"loaded {result.loaded} workflows, skipped {len(result.skipped)}")
    for name, reason in result.skipped:
        print(f"  skipped {name}: {reason}")
    repo = result.repository
    print(f"services: {len(repo.service_catalog)}, links: {repo.total_links()}")
    return EXIT_OK


def _cmd_build_graph(args, cfg: AppConfig) -> int:
    repo_dir = _require(args.repo or cfg.repo_path, "--repo")
    out = _require(args.out or cfg.graph_path, "--out")
    result = load_repository(repo_dir)
    graph = build_wskg(result.repository)
    save_edge_list(graph, out)
    print(f"wrote {len(graph.edges)} edges over {len(graph.services)} services to {out}")
    return EXIT_OK


def _cmd_gen_corpus(args, cfg: AppConfig) -> int:
    graph_path = _require(args.graph or cfg.graph_path, "--graph")
    strategy = _pick(args.strategy, cfg.strategy)
    out = _require(args.out, "--out")
    graph = load_edge_list(graph_path)
    if strategy == "dfs":
        generated = corpus_mod.generate_dfs(
            graph, max_paths_per_start=args.max_paths_per_start
        )
    elif strategy == "bfs":
        generated = corpus_mod.generate_bfs(graph)
    else:
        generated = corpus_mod.generate_pw(graph, _pw_from_args(args, cfg))
    if _pick(args.dedup, cfg.dedupe):
        generated = corpus_mod.dedupe(generated)
    corpus_mod.save_corpus(generated, out)
    print(
        f"wrote {len(generated.sequences)} sequences "
        f"({len(generated.vocabulary)} tokens) to {out}"
    )
    return EXIT_OK


def _cmd_train(args, cfg: AppConfig) -> int:
    corpus_path = _require(args.corpus, "--corpus")
    out = _require(args.out or cfg.model_path, "--out")
    loaded = corpus_mod.load_corpus(corpus_path)
    model = train(loaded, _train_from_args(args, cfg))
    save_model(model, out)
    print(f"trained {len(model.vocab)} x {model.dim} model, saved to {out}")
    return EXIT_OK


def _cmd_evaluate(args, cfg: AppConfig) -> int:
    repo_dir = _require(args.repo or cfg.repo_path, "--repo")
    result = load_repository(repo_dir)
    seed = getattr(args, "seed", None)
    eval_cfg = eval_mod.EvalConfig(
        train_fraction=_pick(args.train_fraction, cfg.eval.train_fraction),
        k_values=tuple(args.k) if args.k else cfg.eval.k_values,
        split_seed=_pick(seed, cfg.eval.split_seed),
        strategy=_pick(args.strategy, cfg.strategy),
        dedupe=_pick(args.dedup, cfg.dedupe),
        pw=_pw_from_args(args, cfg),
        train=_train_from_args(args, cfg),
    )
    report = eval_mod.run_evaluation(result.repository, eval_cfg)
    payload = report.to_json()
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)
    _print_metric_table(report)
    return EXIT_OK


def _print_metric_table(report: eval_mod.MetricsReport) -> None:
    print(f"cases: {report.case_count} "
          f"(dropped: {report.dropped_anchor} anchor, {report.dropped_truth} truth)",
          file=sys.stderr)
    header = f"{'K':>4} {'PRE':>8} {'REC':>8} {'F1':>8} {'VMRR':>8}"
    print(header, file=sys.stderr)
    for k, m in sorted(report.metrics.items()):
        print(
            f"{k:>4} {m.precision:>8.4f} {m.recall:>8.4f} "
            f"{m.f1:>8.4f} {m.vmrr:>8.4f}",
            file=sys.stderr,
        )


def _cmd_sweep_pw(args, cfg: AppConfig) -> int:
    repo_dir = _require(args.repo or cfg.repo_path, "--repo")
    result = load_repository(repo_dir)
    seed = getattr(args, "seed", None)
    base = dataclasses.replace(
        cfg.eval,
        split_seed=_pick(seed, cfg.eval.split_seed),
        pw=_pw_from_args(args, cfg),
        train=_train_from_args(args, cfg),
    )
    cells = eval_mod.sweep_pw(
        result.repository,
        args.l_values,
        args.theta_values,
        tuple(args.k) if args.k else cfg.eval.k_values,
        base=base,
    )
    csv_text = eval_mod.sweep_to_csv(cells)
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        print(f"wrote {len(cells)} cells to {args.out}")
    else:
        print(csv_text, end="")
    return EXIT_OK


def _cmd_recommend(args, cfg: AppConfig) -> int:
    model_path = _require(args.model or cfg.model_path, "--model")
    graph_path = _require(args.graph or cfg.graph_path, "--graph")
    model = load_model(model_path)
    graph = load_edge_list(graph_path)
    doc = json.loads(Path(args.session_file).read_text(encoding="utf-8"))
    selected = doc.get("selected")
    if not isinstance(selected, list) or not all(isinstance(s, str) for s in selected):
        raise FlowrecError("session file must contain {\"selected\": [tokenKey, ...]}")
    session = Session(selected=[ServiceToken.from_key(k) for k in selected])
    entries = recommend_top_k(model, graph, session, _pick(args.k, cfg.default_k))
    print(json.dumps([e.to_dict() for e in entries], indent=2))
    return EXIT_OK


def _cmd_serve(args, cfg: AppConfig) -> int:
    model_path = _require(args.model or cfg.model_path, "--model")
    graph_path = _require(args.graph or cfg.graph_path, "--graph")
    state = ServiceState(default_k=cfg.default_k)
    state.attach(load_model(model_path), load_edge_list(graph_path))
    listen = args.listen or cfg.listen_address
    host, _, port_text = listen.rpartition(":")
    if not host or not port_text.isdigit():
        raise FlowrecError(f"--listen must be host:port, got {listen!r}")
    serve_forever(state, host, int(port_text))
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "build-graph": _cmd_build_graph,
    "gen-corpus": _cmd_gen_corpus,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "sweep-pw": _cmd_sweep_pw,
    "recommend": _cmd_recommend,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        return _COMMANDS[args.command](args, cfg)
    except FlowrecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
