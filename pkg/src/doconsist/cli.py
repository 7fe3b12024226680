"""Unified command-line entry point.

Subcommands: gen-data, train, eval, sweep, verify-abstraction, llm-loop,
grad-check. Values come from a JSON config file where one is accepted;
command-line flags override file values, which override built-in
defaults. Exit codes: 0 success, 1 usage error, 2 runtime failure,
3 grad-check acceptance failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import abstraction, metrics
from .data import DatasetSpec, load_dataset, sample_dataset, save_dataset
from .gradcheck import DEFAULT_TOL, grad_check_cells
from .learner import LearnerParams, TrainConfig, TrainReport, evaluate_params, train
from .llmloop import (
    HttpOracle,
    LabelOracle,
    MockOracle,
    MockOracleConfig,
    dialogue_from_json_dict,
    run_loop,
)
from .sweep import ExperimentConfig, atomic_write_text, run_sweep


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _read_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _write_json(path: str, doc) -> None:
    atomic_write_text(path, json.dumps(doc))


def _csv_path(json_path: str) -> str:
    return json_path[:-5] + ".csv" if json_path.endswith(".json") else json_path + ".csv"


def _cmd_gen_data(args) -> int:
    spec = DatasetSpec.from_json_dict(_read_json(args.spec))
    if args.seed is not None:
        spec = DatasetSpec.from_json_dict({**spec.to_json_dict(), "seed": args.seed})
    save_dataset(sample_dataset(spec), args.out)
    return 0


def _train_config(args) -> TrainConfig:
    doc = _read_json(args.config) if args.config else {}
    if args.seed is not None:
        doc["seed"] = args.seed
    return TrainConfig.from_json_dict(doc)


def _cmd_train(args) -> int:
    dataset = load_dataset(args.data)
    cfg = _train_config(args)
    report = train(dataset, cfg)
    _write_json(args.out, report.to_json_dict())
    atomic_write_text(_csv_path(args.out), "\n".join(report.epoch_csv_lines()) + "\n")
    return 0


def _cmd_eval(args) -> int:
    report = TrainReport.from_json_dict(_read_json(args.report))
    dataset = load_dataset(args.data)
    test = dataset.split_samples("test")
    rep = metrics.eval_report_from_metrics(evaluate_params(report.params, test))
    _write_json(args.out, rep.to_json_dict())
    atomic_write_text(_csv_path(args.out), "\n".join(rep.csv_lines()) + "\n")
    return 0


def _cmd_sweep(args) -> int:
    doc = _read_json(args.config)
    if args.workers is not None:
        doc["workers"] = args.workers
    if args.out is not None:
        doc["out_dir"] = args.out
    if args.seed is not None:
        doc.setdefault("train", {})["seed"] = args.seed
    run_sweep(ExperimentConfig.from_json_dict(doc))
    return 0


def _cmd_verify_abstraction(args) -> int:
    result = abstraction.ccc_agreement(
        n_vars=args.n, trials=args.trials, n_draws=args.draws, seed=args.seed
    )
    a, b = abstraction.mediated_pair()
    fig7 = {
        "arity1": abstraction.min_distinguishing_arity(a, b, max_arity=1)
        or "not_distinguishable",
        "arity2": abstraction.min_distinguishing_arity(a, b, max_arity=2),
    }
    doc = {**{k: v for k, v in result.items() if k != "rows"}, "fig7_pair": fig7}
    doc["rows"] = result["rows"]
    _write_json(args.out, doc)
    print(f"agreement {result['agreement']}/{result['trials']}; fig7 pair: "
          f"arity1={fig7['arity1']} arity2={fig7['arity2']}")
    return 0


def _cmd_llm_loop(args) -> int:
    doc = _read_json(args.dialogues)
    results = []
    for idx, ddoc in enumerate(doc["dialogues"]):
        dialogue = dialogue_from_json_dict(ddoc)
        if args.oracle in ("mock", "label"):
            if dialogue.truth is None:
                raise ValueError(f"dialogue {idx} lacks truth, required for {args.oracle}")
            cfg = MockOracleConfig(
                hidden_truth=dialogue.truth,
                flip_prob=args.flip_prob,
                correction_prob=args.correction_prob,
                seed=args.seed + idx,
            )
            oracle = (LabelOracle if args.oracle == "label" else MockOracle)(dialogue, cfg)
        else:
            oracle = HttpOracle()
        final, trace = run_loop(dialogue, oracle, max_iters=args.max_iters, arity=args.arity)
        results.append(
            {
                "dialogue_index": idx,
                "final": final.to_json_dict(),
                "f1_trace": [rec["f1"] for rec in trace],
                "iterations": trace,
            }
        )
    _write_json(args.out, {"results": results})
    return 0


def _cmd_grad_check(args) -> int:
    cells = grad_check_cells(step=args.step, tol=args.tol, seed=args.seed or 0)
    for cell in cells:
        status = "PASS" if cell["passed"] else "FAIL"
        print(
            f"[{status}] distance={cell['distance']} arity={cell['arity']} "
            f"shared={cell['shared_augmentation']} max_rel_error={cell['max_rel_error']:.3e}"
        )
    if args.out:
        _write_json(args.out, {"cells": cells})
    return 0 if all(c["passed"] for c in cells) else 3


def build_parser() -> _Parser:
    parser = _Parser(prog="doconsist")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic indefinite dataset")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=_cmd_gen_data)

    p = sub.add_parser("train", help="train the SSL learner")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a training report on the test split")
    p.add_argument("--report", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("sweep", help="run a restartable grid sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("verify-abstraction", help="causal consistency condition checks")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--draws", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_verify_abstraction)

    p = sub.add_parser("llm-loop", help="iterative intervention-feedback loop")
    p.add_argument("--dialogues", required=True)
    p.add_argument("--oracle", choices=("mock", "label", "http"), default="mock")
    p.add_argument("--max-iters", type=int, default=8)
    p.add_argument("--arity", type=int, default=2)
    p.add_argument("--flip-prob", type=float, default=0.3)
    p.add_argument("--correction-prob", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_llm_loop)

    p = sub.add_parser("grad-check", help="finite-difference gradient verification")
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_grad_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.fn(args)
    except Exception as exc:  # runtime failures map to exit code 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
