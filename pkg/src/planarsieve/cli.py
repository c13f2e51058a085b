"""Command line front end; a thin client over the HTTP service.

Without --server the app is driven in-process; with --server the same
requests go over the network.  Exit codes: 0 all checks passed, 1 a check
or internal cross-check failed, 2 configuration problem.
"""

import argparse
import sys
import warnings
from pathlib import Path

from . import io as psio


class CliConfigError(Exception):
    pass


class CliRunError(Exception):
    pass


class _Client:
    def __init__(self, server=None):
        if server:
            import httpx
            self._http = httpx.Client(base_url=server, timeout=None)
        else:
            # some fastapi/starlette pairings warn on this import; keep the
            # noise out of CLI stderr
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service.app import app
            self._http = TestClient(app)

    def post(self, path, payload) -> dict:
        try:
            resp = self._http.post(path, json=payload)
        except Exception as exc:
            raise CliRunError(f"request failed: {exc}") from None
        if resp.status_code == 200:
            return resp.json()
        message, kind = self._detail(resp)
        if resp.status_code == 422:
            raise CliConfigError(message)
        if kind == "assertion":
            raise CliRunError(message)
        raise CliRunError(f"server error {resp.status_code}: {message}")

    @staticmethod
    def _detail(resp):
        try:
            detail = resp.json().get("detail")
        except Exception:
            return resp.text, None
        if isinstance(detail, dict):
            return detail.get("message", str(detail)), detail.get("error")
        return str(detail), None


def _load_config_arg(args) -> dict:
    if args.config is None:
        cfg = {}
    else:
        try:
            cfg = psio.load_json(args.config)
        except FileNotFoundError:
            raise CliConfigError(f"config file not found: {args.config}")
        except psio.FormatError as exc:
            raise CliConfigError(str(exc))
        if not isinstance(cfg, dict):
            raise CliConfigError("config root must be a JSON object")
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    return cfg


def _write_report(args, report) -> None:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        psio.write_json(out / "report.json", report)


def _write_artifacts(args, artifacts) -> None:
    if not args.out:
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for payload in artifacts:
        psio.write_signal(out / payload["name"], psio.payload_signal(payload))


def _cmd_verify(args) -> int:
    client = _Client(args.server)
    resp = client.post("/verify", {"config": _load_config_arg(args),
                                   "parallel": args.parallel})
    report = resp["report"]
    agg = report["aggregate"]
    _write_report(args, report)
    print(f"verify: theorem {agg['theorem_passed']}/{agg['theorem_cases']}, "
          f"uncertainty {agg['uncertainty_passed']}/{agg['uncertainty_cases']}, "
          f"oracle cross-checks {agg['oracle_checked']}")
    return 0 if agg["all_passed"] else 1


def _cmd_recover(args) -> int:
    client = _Client(args.server)
    resp = client.post("/recover", {"config": _load_config_arg(args),
                                    "mode": args.mode,
                                    "parallel": args.parallel})
    report = resp["report"]
    agg = report["aggregate"]
    _write_report(args, report)
    _write_artifacts(args, resp["artifacts"])
    print(f"recover[{args.mode}]: guarantees {agg['guarantees_held']}/"
          f"{agg['condition_ok']} (cases {agg['cases']}, "
          f"converged {agg['converged']})")
    return 0 if agg["all_guarantees_hold"] else 1


def _cmd_density(args) -> int:
    client = _Client(args.server)
    resp = client.post("/density", {"config": _load_config_arg(args)})
    report = resp["report"]
    _write_report(args, report)
    for opt in report["optima"]:
        print(f"density: mask {opt['mask']} best R {opt['r_star']:g} "
              f"bound {opt['bound_star']:.6g}")
    return 0


def _cmd_corpus(args) -> int:
    client = _Client(args.server)
    resp = client.post("/corpus", {"config": _load_config_arg(args)})
    report = resp["report"]
    _write_report(args, report)
    _write_artifacts(args, resp["artifacts"])
    print(f"corpus: {report['aggregate']['count']} signals"
          + (f" written to {args.out}" if args.out else ""))
    return 0


def _cmd_plotdata(args) -> int:
    if not args.out:
        raise CliConfigError("plotdata requires --out")
    payload = {"kind": args.kind, "mode": args.mode, "parallel": args.parallel}
    if args.report:
        try:
            payload["report"] = psio.load_json(args.report)
        except FileNotFoundError:
            raise CliConfigError(f"report file not found: {args.report}")
        except psio.FormatError as exc:
            raise CliConfigError(str(exc))
    else:
        if args.config is None:
            raise CliConfigError("plotdata needs --report or --config")
        payload["config"] = _load_config_arg(args)
    client = _Client(args.server)
    resp = client.post("/plotdata", payload)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(resp["files"].items()):
        (out / name).write_text(text)
    print(f"plotdata: wrote {len(resp['files'])} files to {out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON file")
    common.add_argument("--out", help="output directory for reports/artifacts")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    common.add_argument("--parallel", type=int, default=1,
                        help="worker processes for case evaluation")
    common.add_argument("--server", default=None,
                        help="service URL (default: run in-process)")

    parser = argparse.ArgumentParser(
        prog="planarsieve",
        description="Planar concentration checks and L1 recovery for "
                    "time-frequency representations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common],
                       help="run concentration-bound checks over a corpus")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("recover", parents=[common],
                       help="run L1 denoising or inpainting experiments")
    p.add_argument("--mode", choices=("denoise", "inpaint"),
                   default="denoise")
    p.set_defaults(func=_cmd_recover)

    p = sub.add_parser("density", parents=[common],
                       help="sweep planar density and bound against R")
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("corpus", parents=[common],
                       help="generate the deterministic signal corpus")
    p.set_defaults(func=_cmd_corpus)

    p = sub.add_parser("plotdata", parents=[common],
                       help="emit CSV tables from a report or a fresh run")
    p.add_argument("--report", help="existing report.json to flatten")
    p.add_argument("--kind", choices=("verify", "recover", "density"),
                   default="verify")
    p.add_argument("--mode", choices=("denoise", "inpaint"),
                   default="denoise")
    p.set_defaults(func=_cmd_plotdata)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except CliConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CliRunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
