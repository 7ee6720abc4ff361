"""Command-line front end.

Every command builds a config mapping from an optional YAML/JSON file
plus flag overrides, validates it into the corresponding model, and runs
it through the HTTP service: in-process by default, or against a remote
server with --server.  Exit codes: 0 success, 2 config error, 3
numerical failure, 1 anything else.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import yaml

from .errors import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, ConfigError, exit_code_for


def load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at the top level")
    return data


def apply_overrides(data: dict, sets: list[str]) -> dict:
    """Apply dotted key=value overrides; values parse as YAML scalars."""
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key.path=value")
        key, _, raw = item.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"override {item!r} has an empty key")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"override value {raw!r} is not valid YAML: {exc}") from exc
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            nxt = node.get(part)
            if not isinstance(nxt, dict):
                nxt = {}
                node[part] = nxt
            node = nxt
        node[parts[-1]] = value
    return data


class Client:
    """Minimal request wrapper over the in-process app or a remote server."""

    def __init__(self, server: str | None):
        if server is None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient
            from .service import create_app

            self._client = TestClient(create_app())
        else:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=None)

    def post(self, path: str, payload: dict):
        return self._client.post(path, json=payload)


def _fail(response) -> int:
    try:
        body = response.json()
    except ValueError:
        body = {"detail": response.text}
    detail = body.get("detail", "request failed")
    kind = body.get("kind")
    print(f"error: {detail}", file=sys.stderr)
    if 400 <= response.status_code < 500:
        return EXIT_CONFIG
    if kind == "numerical":
        return EXIT_NUMERICAL
    return 1


def _write_out(out: str | None, text: str):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {out}: {exc}") from exc
    print(f"wrote {out}")


def _events_jsonl(events: list[dict]) -> str:
    return "\n".join(json.dumps(e, sort_keys=True) for e in events) + "\n"


def _run_request(args, path: str, payload: dict, on_success) -> int:
    client = Client(args.server)
    response = client.post(path, payload)
    if response.status_code != 200:
        return _fail(response)
    on_success(response.json())
    return EXIT_OK


def _payload(args, direct: dict) -> dict:
    data = load_config_file(args.config)
    apply_overrides(data, args.set or [])
    for key, value in direct.items():
        if value is not None:
            apply_overrides(data, [f"{key}={json.dumps(value)}"])
    return data


def cmd_ingest(args) -> int:
    payload = _payload(args, {
        "train_path": args.train_path, "test_path": args.test_path,
        "out": args.out, "out_test": args.out_test,
    })
    return _run_request(args, "/datasets/ingest", payload,
                        lambda body: print(json.dumps(body, indent=2, sort_keys=True)))


def cmd_train(args) -> int:
    payload = _payload(args, {
        "train.method": args.method, "train.sigma": args.sigma, "out": args.out,
    })
    return _run_request(args, "/train", payload,
                        lambda body: print(json.dumps(body, indent=2, sort_keys=True)))


def cmd_deletion_study(args) -> int:
    payload = _payload(args, {})
    return _run_request(args, "/experiments/deletion-study", payload,
                        lambda body: _write_out(args.out, body["csv"]))


def cmd_tradeoff(args) -> int:
    payload = _payload(args, {
        "train.method": args.method, "axis": args.axis,
    })
    return _run_request(args, "/experiments/tradeoff", payload,
                        lambda body: _write_out(args.out, body["csv"]))


def cmd_pipeline(args) -> int:
    payload = _payload(args, {
        "train.method": args.method, "audit_threshold": args.audit_threshold,
    })

    def emit(body):
        _write_out(args.out, _events_jsonl(body["events"]))
        if body.get("audit") is not None:
            print(json.dumps(body["audit"], sort_keys=True))

    return _run_request(args, "/pipelines", payload, emit)


def cmd_audit(args) -> int:
    payload = _payload(args, {
        "train.method": args.method, "audit_threshold": args.threshold,
    })
    if payload.get("audit_threshold") is None:
        raise ConfigError("audit needs a threshold: set --threshold or audit_threshold")

    def emit(body):
        text = json.dumps(body["audit"], indent=2, sort_keys=True) + "\n"
        if args.out is not None:
            _write_out(args.out, text)
        else:
            sys.stdout.write(text)

    return _run_request(args, "/pipelines", payload, emit)


def cmd_serve(args) -> int:
    try:
        import uvicorn
    except ImportError as exc:
        raise ConfigError("serving needs the uvicorn package installed") from exc
    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ulbench",
        description="Benchmark harness for certifiable unlearning of "
                    "L2-regularized logistic regression",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML or JSON config file")
        p.add_argument("--set", action="append", metavar="KEY.PATH=VALUE",
                       help="override a config value (repeatable)")
        p.add_argument("--server", help="run against this server URL instead of in-process")

    p = sub.add_parser("ingest", help="convert libsvm text into normalized caches")
    common(p)
    p.add_argument("--train-path")
    p.add_argument("--test-path")
    p.add_argument("--out", help="output cache path for the training split")
    p.add_argument("--out-test", help="output cache path for the test split")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("train", help="train one model and save weights")
    common(p)
    p.add_argument("--method", choices=["fisher", "influence", "deltagrad"])
    p.add_argument("--sigma", type=float)
    p.add_argument("--out", help="output weights path (.npz)")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("deletion-study",
                       help="retrain-from-scratch accuracy across deletion distributions")
    common(p)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(fn=cmd_deletion_study)

    p = sub.add_parser("tradeoff", help="sigma/tau/volume sweep with unlearn and retrain")
    common(p)
    p.add_argument("--method", choices=["fisher", "influence", "deltagrad"])
    p.add_argument("--axis", choices=["cert-eff", "effec-eff", "effec-cert"])
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(fn=cmd_tradeoff)

    p = sub.add_parser("pipeline", help="replay a deletion stream through the lifecycle")
    common(p)
    p.add_argument("--method", choices=["fisher", "influence", "deltagrad"])
    p.add_argument("--audit-threshold", type=float)
    p.add_argument("--out", help="JSONL event log path (default stdout)")
    p.set_defaults(fn=cmd_pipeline)

    p = sub.add_parser("audit", help="run a lifecycle and report the measured disparity")
    common(p)
    p.add_argument("--method", choices=["fisher", "influence", "deltagrad"])
    p.add_argument("--threshold", type=float)
    p.add_argument("--out", help="JSON output path (default stdout)")
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # noqa: BLE001 - boundary maps everything to exit codes
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
