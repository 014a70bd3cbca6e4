"""Command line interface: a thin client over the service operations.

Every option can come from a ``key = value`` config file (--config) or from
flags; flags win. By default the selected operation runs in-process through
the same functions the HTTP endpoints use; with --server URL the CLI posts
the request to a running service instead and prints its JSON reply.

Exit codes: 0 success, 1 invalid configuration, 2 numeric failure (including
a failed gradient check), 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import RunConfig, build_config, parse_config_file
from .errors import ConfigError, NumericError


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); keep exit-code contract
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="icelearn", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--mode", choices=["gen-data", "train", "grad-check", "eval", "sweep-s", "serve"])
    p.add_argument("--data", help="dataset CSV path")
    p.add_argument("--eval-data", dest="eval_data", help="held-out dataset CSV path")
    p.add_argument("--checkpoint", help="checkpoint manifest path (eval mode)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--num-classes", dest="num_classes", type=int)
    p.add_argument("--per-class", dest="per_class", type=int)
    p.add_argument("--input-dim", dest="input_dim", type=int)
    p.add_argument("--cluster-std", dest="cluster_std", type=float)
    p.add_argument("--disjoint-classes", dest="disjoint_classes", choices=["on", "off"])
    p.add_argument("--classes-per-batch", dest="classes_per_batch", type=int)
    p.add_argument("--samples-per-class", dest="samples_per_class", type=int)
    p.add_argument("--scale-s", dest="scale_s", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int)
    p.add_argument("--embed-dim", dest="embed_dim", type=int)
    p.add_argument("--eval-every", dest="eval_every", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--grad-mode", dest="grad_mode", choices=["exact", "reweighted"])
    p.add_argument("--anchor-grad", dest="anchor_grad", choices=["on", "off"])
    p.add_argument("--k-values", dest="k_values", help="comma separated, e.g. 1,2,4,8")
    p.add_argument("--s-list", dest="s_list", help="comma separated, e.g. 1,16,64")
    p.add_argument("--corrupt", choices=["on", "off"], help="grad-check negative control")
    p.add_argument("--server", help="base URL of a running service; run remotely instead of in-process")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    return p


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {
        key: value
        for key, value in vars(args).items()
        if key not in ("config", "server") and value is not None
    }
    return build_config(file_values, overrides)


def _run_local(config: RunConfig) -> int:
    # Imported lazily so --help stays fast.
    from .train import run_eval, run_gen_data, run_grad_check, run_sweep, run_train

    if config.mode == "gen-data":
        result = run_gen_data(config)
        print(f"wrote {result.rows} rows ({result.num_classes} classes, dim {result.input_dim}) to {result.path}")
        return 0
    if config.mode == "train":
        result = run_train(config)
        print(f"trained {result.iterations} iterations")
        print(f"final_loss={result.final_loss:.17g} recall_at_1={result.final_recall_at_1:.6f}")
        print(f"metrics: {result.metrics_path}")
        print(f"checkpoint: {result.checkpoint_manifest}")
        return 0
    if config.mode == "grad-check":
        result = run_grad_check(config)
        for report in result.reports:
            print(f"{report.name}: max_rel_error={report.max_rel_error:.3e}")
            if report.row_errors is not None:
                for row, err in enumerate(report.row_errors):
                    print(f"  row {row}: rel_error={err:.3e}")
        status = "PASS" if result.passed else "FAIL"
        print(f"{status} (tolerance {result.tolerance:g})")
        return 0 if result.passed else 2
    if config.mode == "eval":
        result = run_eval(config)
        for k, r in zip(result.report.k_values, result.report.recall_at_k):
            print(f"recall@{k} = {r:.6f}")
        if result.path:
            print(f"report: {result.path}")
        return 0
    if config.mode == "sweep-s":
        result = run_sweep(config)
        for row in result.rows:
            print(
                f"s={row.scale:g} recall_at_1={row.recall_at_1:.6f} "
                f"recall_at_2={row.recall_at_2:.6f} final_loss={row.final_loss:.17g}"
            )
        print(f"report: {result.path}")
        return 0
    if config.mode == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=config.host, port=config.port)
        return 0
    raise ConfigError("--mode is required (gen-data, train, grad-check, eval, sweep-s, serve)")


def _run_remote(config: RunConfig, server: str) -> int:
    import httpx

    base = server.rstrip("/")
    if config.mode == "gen-data":
        path, body = "/data/generate", {
            "num_classes": config.num_classes,
            "per_class": config.per_class,
            "input_dim": config.input_dim,
            "cluster_std": config.cluster_std,
            "seed": config.seed,
            "out": config.out,
        }
    elif config.mode == "train":
        path, body = "/train", config.model_dump(mode="json")
    elif config.mode == "grad-check":
        path, body = "/grad-check", config.model_dump(mode="json")
    elif config.mode == "eval":
        path, body = "/eval", {
            "checkpoint": config.checkpoint,
            "data": config.data,
            "k_values": config.k_values,
            "out": config.out,
        }
    elif config.mode == "sweep-s":
        path, body = "/sweep", config.model_dump(mode="json")
    else:
        raise ConfigError(f"mode {config.mode!r} cannot run against a server")

    response = httpx.post(base + path, json=body, timeout=600.0)
    payload = response.json()
    print(json.dumps(payload, indent=2))
    if response.status_code == 200:
        if config.mode == "grad-check" and not payload.get("passed", False):
            return 2
        return 0
    if response.status_code == 400:
        return 1
    if response.status_code == 422:
        # Request-validation errors carry a list detail; numeric failures a string.
        return 1 if isinstance(payload.get("detail"), list) else 2
    return 3


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _config_from_args(args)
        if args.server:
            return _run_remote(config, args.server)
        return _run_local(config)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
