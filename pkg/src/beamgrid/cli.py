"""Command-line client for the experiment service.

Every subcommand speaks HTTP to the FastAPI app: in-process by default, or to
a running server via --server.  Machine-readable CSV and output paths go to
stdout, progress and diagnostics to stderr.  Exit codes: 0 success, 1 usage
error, 2 runtime failure.
"""

from __future__ import annotations

import os

# Worker-parallelism cap must land in the BLAS env before numpy loads.
_threads = os.environ.get("BEAMGRID_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import asyncio
import csv
import sys

import httpx

CSV_FIELDS = ("value", "split", "b", "atrr", "n")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of exiting with code 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class _InProcessTransport(httpx.BaseTransport):
    """Sync httpx transport that drives the ASGI app directly."""

    def __init__(self, app):
        self._transport = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        async def _run():
            response = await self._transport.handle_async_request(request)
            content = await response.aread()
            return response, content

        response, content = asyncio.run(_run())
        return httpx.Response(response.status_code, headers=response.headers,
                              content=content)


def make_client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server.rstrip("/"), timeout=None)
    from .service.app import create_app
    return httpx.Client(transport=_InProcessTransport(create_app()),
                        base_url="http://beamgrid.local", timeout=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="beamgrid", description=__doc__)
    parser.add_argument("--server", metavar="URL",
                        help="base URL of a running service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="key = value config file")
        p.add_argument("--preset", choices=("desk", "paper"), default="desk")
        p.add_argument("--seed", type=int)
        p.add_argument("--network", choices=("vdban", "vdban_mini", "saba"))
        p.add_argument("--epochs", type=int)

    p = sub.add_parser("gen-data", help="build a dataset container")
    common(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--out", required=True, metavar="PATH")

    p = sub.add_parser("train", help="run a full experiment (train + evaluate)")
    common(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--b-max", type=int)
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--dataset", metavar="PATH", help="reuse an existing container")

    p = sub.add_parser("eval", help="score a checkpoint on a container's test split")
    p.add_argument("--checkpoint", required=True, metavar="PATH")
    p.add_argument("--dataset", required=True, metavar="PATH")
    p.add_argument("--b-max", type=int, default=5)

    p = sub.add_parser("sweep-sigma", help="location-error sweep of a checkpoint")
    common(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--checkpoint", required=True, metavar="PATH")
    p.add_argument("--sigma-list", metavar="CSV", help="comma-separated sigmas in meters")
    p.add_argument("--b-max", type=int)

    p = sub.add_parser("flops", help="forward-pass FLOPs table")
    p.add_argument("--network", choices=("vdban", "vdban_mini", "saba"))

    p = sub.add_parser("inspect", help="print a binary file's header and check it")
    p.add_argument("path", metavar="PATH")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8340)

    return parser


def _collect_config(args) -> dict[str, str]:
    from .pipeline import parse_config_file

    kv: dict[str, str] = {}
    if getattr(args, "config", None):
        kv.update(parse_config_file(args.config))
    if getattr(args, "seed", None) is not None:
        kv["seed"] = str(args.seed)
    if getattr(args, "samples", None) is not None:
        kv["n_samples"] = str(args.samples)
    if getattr(args, "network", None):
        kv["network"] = args.network
        if args.network == "saba":
            kv.setdefault("feature", "sa-vector")
    if getattr(args, "epochs", None) is not None:
        kv["train.epochs"] = str(args.epochs)
    if getattr(args, "b_max", None) is not None:
        kv["b_max"] = str(args.b_max)
    if getattr(args, "sigma_list", None):
        kv["sigma_list"] = args.sigma_list
    return kv


def _check(response: httpx.Response) -> dict:
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise RuntimeError(f"service error {response.status_code}: {detail}")
    return response.json()


def _print_rows(rows) -> None:
    writer = csv.DictWriter(sys.stdout, fieldnames=CSV_FIELDS)
    writer.writeheader()
    for row in rows:
        writer.writerow({"value": row["value"], "split": row["split"], "b": row["b"],
                         "atrr": "" if row["atrr"] is None else row["atrr"],
                         "n": row["n"]})


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _cmd_gen_data(client, args) -> int:
    body = {"out": args.out, "config": _collect_config(args), "preset": args.preset}
    _progress(f"building {body['config'].get('n_samples', 'default')} samples ...")
    payload = _check(client.post("/datasets", json=body))
    _progress(f"n={payload['n_samples']} classes={payload['classes']} "
              f"los_fraction={payload['los_fraction']:.3f} "
              f"splits={payload['split_counts']}")
    print(payload["path"])
    return 0


def _cmd_train(client, args) -> int:
    body = {"out_dir": args.out, "config": _collect_config(args), "preset": args.preset,
            "dataset": args.dataset}
    _progress("running experiment (dataset -> train -> evaluate) ...")
    payload = _check(client.post("/experiments", json=body))
    for e, (loss, acc) in enumerate(zip(payload["history"]["train_loss"],
                                        payload["history"]["val_accuracy"])):
        _progress(f"epoch {e}: train_loss={loss:.4f} val_top1={acc:.3f}")
    _progress(f"checkpoint: {payload['checkpoint_path']}")
    _progress(f"dataset: {payload['dataset_path']}")
    _progress(f"history csv: {payload['history_csv_path']}")
    _progress(f"digest: {payload['digest']}")
    _print_rows(payload["rows"])
    return 0


def _cmd_eval(client, args) -> int:
    body = {"checkpoint": args.checkpoint, "dataset": args.dataset, "b_max": args.b_max}
    payload = _check(client.post("/evaluations", json=body))
    _progress(f"top1_accuracy={payload['top1_accuracy']:.3f} "
              f"excluded={payload['n_excluded']}")
    _print_rows(payload["rows"])
    return 0


def _cmd_sweep(client, args) -> int:
    body = {"checkpoint": args.checkpoint, "config": _collect_config(args),
            "preset": args.preset}
    if args.sigma_list:
        body["sigmas"] = [float(s) for s in args.sigma_list.split(",")]
    if args.b_max is not None:
        body["b_max"] = args.b_max
    _progress("sweeping location error ...")
    payload = _check(client.post("/sweeps/sigma", json=body))
    _print_rows(payload["rows"])
    return 0


def _cmd_flops(client, args) -> int:
    params = {"network": args.network} if args.network else None
    payload = _check(client.get("/flops", params=params))
    writer = csv.writer(sys.stdout)
    writer.writerow(["network", "input_shape", "flops"])
    for row in payload["rows"]:
        writer.writerow([row["network"], row["input_shape"], row["flops"]])
    return 0


def _cmd_inspect(client, args) -> int:
    payload = _check(client.post("/inspect", json={"path": args.path}))
    writer = csv.writer(sys.stdout)
    writer.writerow(["field", "value"])
    writer.writerow(["format", payload["format"]])
    for key in sorted(payload["fields"]):
        writer.writerow([key, payload["fields"][key]])
    return 0


def _cmd_serve(args) -> int:
    import uvicorn
    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1

    if args.command == "serve":
        return _cmd_serve(args)

    handlers = {
        "gen-data": _cmd_gen_data,
        "train": _cmd_train,
        "eval": _cmd_eval,
        "sweep-sigma": _cmd_sweep,
        "flops": _cmd_flops,
        "inspect": _cmd_inspect,
    }
    try:
        with make_client(args.server) as client:
            return handlers[args.command](client, args)
    except (RuntimeError, OSError, httpx.HTTPError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
