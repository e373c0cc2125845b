"""Command line interface: corpus evaluation, system comparison, a
line-delimited-JSON reward service for RL trainers, and the GRPO simulator.

Exit codes: 0 on success, 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import socketserver
import sys
from pathlib import Path

from . import docmetrics
from .corpusio import read_corpus, scan_corpus, write_report
from .errors import InvalidReference, StructEvalError
from .grposim import CandidatePool, TrainConfig, run_training
from .rewards import RewardSpec, component_scores, scale_component
from .stats import BootstrapConfig, resample_pvalue
from .textmetrics import BleuConfig, ChrfConfig

EXIT_OK = 0
EXIT_USAGE = 2


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _parse_metrics(raw: str | None) -> tuple[str, ...] | None:
    if raw is None:
        return None
    return tuple(m.strip() for m in raw.split(",") if m.strip())


def _bleu_config(args) -> BleuConfig:
    return BleuConfig(tokenizer=args.tokenizer)


def _thread_count(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("STRUCTEVAL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


class _Record:
    __slots__ = ("id", "hypothesis", "reference")

    def __init__(self, doc_id: str, hypothesis: str, reference: str) -> None:
        self.id = doc_id
        self.hypothesis = hypothesis
        self.reference = reference


def _load_eval_records(args):
    """Corpus records from --corpus, --hyp/--ref, or --hyp-dir/--ref-dir."""
    if args.corpus:
        records, diagnostics = scan_corpus(args.corpus)
        if diagnostics:
            for line in diagnostics:
                print(f"error: {args.corpus}: {line}", file=sys.stderr)
            return None
        return records
    if args.hyp and args.ref:
        hyp = Path(args.hyp).read_text(encoding="utf-8")
        ref = Path(args.ref).read_text(encoding="utf-8")
        return [_Record(Path(args.hyp).name, hyp, ref)]
    if args.hyp_dir and args.ref_dir:
        hyp_dir, ref_dir = Path(args.hyp_dir), Path(args.ref_dir)
        names = sorted(p.name for p in ref_dir.iterdir() if p.is_file())
        records = []
        missing = [n for n in names if not (hyp_dir / n).is_file()]
        if missing:
            for name in missing:
                print(f"error: no hypothesis file for {name!r}", file=sys.stderr)
            return None
        for name in names:
            records.append(
                _Record(
                    name,
                    (hyp_dir / name).read_text(encoding="utf-8"),
                    (ref_dir / name).read_text(encoding="utf-8"),
                )
            )
        return records
    print(
        "error: provide --corpus, or --hyp with --ref, or --hyp-dir with --ref-dir",
        file=sys.stderr,
    )
    return None


def cmd_eval(args) -> int:
    records = _load_eval_records(args)
    if records is None:
        return EXIT_USAGE
    report = docmetrics.evaluate_corpus(
        records,
        _parse_metrics(args.metrics),
        strucauc_k=args.strucauc_k,
        chrf_config=ChrfConfig(),
        bleu_config=_bleu_config(args),
        compare_attributes=args.attrs == "on",
        threads=_thread_count(args),
    )
    data = write_report(report, args.format)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    return EXIT_OK


def cmd_compare(args) -> int:
    baseline, diag_b = scan_corpus(args.baseline)
    system, diag_s = scan_corpus(args.system)
    problems = [f"{args.baseline}: {d}" for d in diag_b]
    problems += [f"{args.system}: {d}" for d in diag_s]
    if problems:
        for line in problems:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_USAGE
    system_by_id = {r.id: r for r in system}
    baseline_ids = [r.id for r in baseline]
    if set(baseline_ids) != set(system_by_id) or len(baseline_ids) != len(system):
        return _fail("baseline and system corpora must contain the same record ids")
    system = [system_by_id[i] for i in baseline_ids]

    # Exclude documents whose reference fails to parse on either side, so
    # both resamplers see the same document universe.
    from .xmltree import parse_document

    keep = [
        i
        for i in range(len(baseline))
        if parse_document(baseline[i].reference).is_valid
        and parse_document(system[i].reference).is_valid
    ]
    baseline = [baseline[i] for i in keep]
    system = [system[i] for i in keep]
    if len(baseline) < 2:
        return _fail("need at least 2 documents with valid references to compare")

    metrics = _parse_metrics(args.metrics) or docmetrics.METRICS
    config = BootstrapConfig(trials=args.trials, seed=args.seed)
    shared = dict(
        strucauc_k=args.strucauc_k,
        bleu_config=_bleu_config(args),
        compare_attributes=args.attrs == "on",
    )
    print("metric\tbaseline\tsystem\tp_value")
    for metric in metrics:
        n_b, full_b, fn_b = docmetrics.metric_resampler(baseline, metric, **shared)
        n_s, full_s, fn_s = docmetrics.metric_resampler(system, metric, **shared)
        p = resample_pvalue(n_b, fn_b, fn_s, config)
        print(f"{metric}\t{full_b:.4f}\t{full_s:.4f}\t{p:.6f}")
    return EXIT_OK


def _serve_response(line: str, args) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        return {"id": None, "error": f"invalid JSON: {exc.msg}"}
    if not isinstance(obj, dict):
        return {"id": None, "error": "request is not a JSON object"}
    request_id = obj.get("id")
    hypothesis = obj.get("hypothesis")
    reference = obj.get("reference")
    if not isinstance(hypothesis, str) or not isinstance(reference, str):
        return {"id": request_id, "error": "hypothesis and reference must be strings"}
    names = obj.get("rewards", ["treesim"])
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        return {"id": request_id, "error": "rewards must be a list of names"}
    try:
        spec = RewardSpec(
            components=tuple(names),
            bleu_config=_bleu_config(args),
            compare_attributes=args.attrs == "on",
        )
        native = component_scores(hypothesis, reference, spec)
    except StructEvalError as exc:
        return {"id": request_id, "error": str(exc)}
    total = sum(scale_component(name, value) for name, value in native.items())
    return {"id": request_id, "scores": native, "total": total}


def _serve_stream(instream, outstream, args) -> None:
    for line in instream:
        if not line.strip():
            continue
        response = _serve_response(line, args)
        outstream.write(json.dumps(response, ensure_ascii=False) + "\n")
        outstream.flush()


def cmd_serve(args) -> int:
    if args.listen:
        host, _, port_text = args.listen.rpartition(":")
        try:
            port = int(port_text)
        except ValueError:
            return _fail(f"invalid --listen address: {args.listen!r}")

        class Handler(socketserver.StreamRequestHandler):
            def handle(self) -> None:
                reader = (raw.decode("utf-8") for raw in self.rfile)

                class _Out:
                    def write(inner, text: str) -> None:
                        self.wfile.write(text.encode("utf-8"))

                    def flush(inner) -> None:
                        self.wfile.flush()

                _serve_stream(reader, _Out(), args)

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        try:
            server = Server((host or "127.0.0.1", port), Handler)
        except OSError as exc:
            return _fail(f"cannot bind {args.listen!r}: {exc}")
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
        return EXIT_OK
    try:
        _serve_stream(sys.stdin, sys.stdout, args)
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        lines = Path(args.pool).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        return _fail(str(exc))
    candidates: list[str] = []
    reference: str | None = None
    source_id = "pool"
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            return _fail(f"{args.pool}: line {line_no}: invalid JSON ({exc.msg})")
        if not isinstance(obj, dict) or "role" not in obj or "document" not in obj:
            return _fail(
                f"{args.pool}: line {line_no}: expected fields 'role' and 'document'"
            )
        if obj["role"] == "reference":
            reference = obj["document"]
            source_id = str(obj.get("id", source_id))
        elif obj["role"] == "candidate":
            candidates.append(obj["document"])
        else:
            return _fail(f"{args.pool}: line {line_no}: unknown role {obj['role']!r}")
    if reference is None:
        return _fail("pool contains no reference document")
    if len(candidates) < 2:
        return _fail("pool needs at least 2 candidate documents")
    spec = RewardSpec(
        components=_parse_metrics(args.reward) or ("treesim",),
        bleu_config=_bleu_config(args),
        compare_attributes=args.attrs == "on",
    )
    try:
        pool = CandidatePool.from_documents(source_id, candidates, reference, spec)
    except InvalidReference as exc:
        return _fail(str(exc))
    config = TrainConfig(
        k=args.k,
        learning_rate=args.lr,
        beta=args.beta,
        steps=args.steps,
        seed=args.seed,
    )
    trace = run_training(pool, config)
    out = sys.stdout
    for stats in trace.stats:
        out.write(
            json.dumps(
                {
                    "step": stats.step,
                    "mean_reward": stats.mean_reward,
                    "kl": stats.kl,
                    "entropy": stats.entropy,
                }
            )
            + "\n"
        )
    out.write(
        json.dumps(
            {
                "final_probs": trace.final_policy.probs().tolist(),
                "rewards": list(pool.rewards),
            }
        )
        + "\n"
    )
    out.flush()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="structeval",
        description="Structure-aware evaluation and rewards for XML document translation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p) -> None:
        p.add_argument("--tokenizer", choices=("whitespace", "character"),
                       default="whitespace", help="Content/XML-BLEU tokenizer")
        p.add_argument("--attrs", choices=("on", "off"), default="on",
                       help="compare attributes in XML-Match (default on)")

    p_eval = sub.add_parser("eval", help="score a corpus")
    p_eval.add_argument("--corpus", help="JSONL corpus with id/hypothesis/reference")
    p_eval.add_argument("--hyp", help="single hypothesis document file")
    p_eval.add_argument("--ref", help="single reference document file")
    p_eval.add_argument("--hyp-dir", help="directory of hypothesis documents")
    p_eval.add_argument("--ref-dir", help="directory of reference documents")
    p_eval.add_argument("--metrics", help="comma-separated metric names (default: all)")
    p_eval.add_argument("--strucauc-k", type=float, default=5.0)
    p_eval.add_argument("--format", choices=("json", "tsv"), default="json")
    p_eval.add_argument("--out", help="write the report here instead of stdout")
    p_eval.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: STRUCTEVAL_THREADS or all cores)")
    add_shared(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_cmp = sub.add_parser("compare", help="bootstrap significance between two systems")
    p_cmp.add_argument("--baseline", required=True)
    p_cmp.add_argument("--system", required=True)
    p_cmp.add_argument("--metrics", help="comma-separated metric names (default: all)")
    p_cmp.add_argument("--trials", type=int, default=1000)
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.add_argument("--strucauc-k", type=float, default=5.0)
    add_shared(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_serve = sub.add_parser("serve", help="reward service over NDJSON")
    p_serve.add_argument("--stdio", action="store_true", default=True,
                         help="serve on stdin/stdout (default)")
    p_serve.add_argument("--listen", help="serve on TCP host:port instead of stdio")
    add_shared(p_serve)
    p_serve.set_defaults(func=cmd_serve)

    p_sim = sub.add_parser("simulate", help="GRPO training on a candidate pool")
    p_sim.add_argument("--pool", required=True,
                       help="JSONL pool of candidate/reference documents")
    p_sim.add_argument("--reward", default="treesim",
                       help="comma-separated reward components")
    p_sim.add_argument("--k", type=int, default=8, help="samples per step")
    p_sim.add_argument("--beta", type=float, default=0.01, help="KL coefficient")
    p_sim.add_argument("--lr", type=float, default=0.1, help="learning rate")
    p_sim.add_argument("--steps", type=int, default=200)
    p_sim.add_argument("--seed", type=int, default=0)
    add_shared(p_sim)
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        return _fail(str(exc))
    except StructEvalError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
