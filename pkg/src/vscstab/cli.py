"""Command-line interface: a thin client over the HTTP service.

By default the service app is mounted in-process, so the CLI works without a
running server; --server points the same client at a remote instance. Output
files arrive rendered in the response payload and are written verbatim,
keeping local and remote runs byte-identical.

Exit codes: 0 success, 2 unstable verdict or failed verification,
64 usage/configuration errors, 69 server unreachable.
"""
from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

import httpx

from .config import ConfigDict, default_config, parse_config
from .params import ConfigurationError

EX_USAGE = 64
EX_UNAVAILABLE = 69

COMMAND_PATHS = {
    "bode": "/analyze/bode",
    "nyquist": "/analyze/nyquist",
    "passivity": "/analyze/passivity",
    "marginal": "/analyze/marginal",
    "measure": "/sim/measure",
    "simulate": "/sim/simulate",
    "verify": "/verify",
}

COMMAND_HELP = {
    "bode": "loop impedance frequency responses (accurate and reduced)",
    "nyquist": "classic and generalized Nyquist verdicts with loci",
    "passivity": "real-axis crossings of the loop impedance",
    "marginal": "bisect the PLL bandwidth to the stability boundary",
    "measure": "perturbation-injection impedance sweep in the simulator",
    "simulate": "time-domain scenario run with spectrum report",
    "verify": "cross-model and simulation consistency checks",
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would collide with the
    # unstable-verdict exit code
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self.exit_with(message))

    @staticmethod
    def exit_with(message: str) -> int:
        print(f"error: {message}", file=sys.stderr)
        return EX_USAGE


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vscstab",
                     description="Sequence-domain impedance models and "
                                 "stability analyses of a grid-tied "
                                 "voltage-source converter.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in COMMAND_HELP.items():
        p = sub.add_parser(name, help=blurb, description=blurb)
        p.add_argument("--config", metavar="PATH",
                       help="config file (section.key = value lines)")
        p.add_argument("--set", metavar="SECTION.KEY=VALUE", action="append",
                       default=[], dest="overrides",
                       help="override one config entry (repeatable)")
        p.add_argument("--out", metavar="DIR",
                       help="directory for output files "
                            "(default: output.dir from the config)")
        p.add_argument("--server", metavar="URL",
                       help="run against a remote service instead of "
                            "in-process")
    return parser


def _jsonable(cfg: ConfigDict) -> dict:
    return {sec: {k: (str(v) if isinstance(v, complex) else v)
                  for k, v in keys.items()}
            for sec, keys in cfg.items()}


def _client(server: Optional[str]) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # sync in-process client over the ASGI app; no server needed
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service.app import app
    return TestClient(app)


def _summarize(payload: dict) -> List[str]:
    cmd = payload.get("command", "")
    lines = []
    if cmd == "nyquist":
        for model, v in payload["verdicts"].items():
            word = "stable" if v["stable"] else "unstable"
            enc = ", ".join(f"{k}={n}" for k, n in v["encirclements"].items())
            lines.append(f"{v['criterion']} {model}: {word} ({enc})")
    elif cmd == "passivity":
        for model in ("accurate", "reduced"):
            c = payload["crossings"][model]
            word = "stable" if c["stable"] else "unstable"
            n = sum(len(c[seq]) for seq in ("positive", "negative"))
            lines.append(f"passivity {model}: {word} ({n} crossings)")
    elif cmd == "marginal":
        lines.append(f"marginal PLL bandwidth: "
                     f"{payload['boundary_pll_bw_hz']:.3f} Hz "
                     f"({payload['iterations']} bisections)")
        for r in payload["resonances"]:
            lines.append(f"  resonance at {r['f_hz']:.3f} Hz, "
                         f"Re = {r['re_ohm']:.4f} ohm")
    elif cmd == "measure":
        n = len(payload["points"])
        lines.append(f"measured {n} points; worst errors "
                     f"{payload['worst_mag_err_pct']:.2f} % magnitude, "
                     f"{payload['worst_phase_err_deg']:.2f} deg phase")
        for skip in payload["skipped"]:
            lines.append(f"  skipped {skip['f_dq_hz']:g} Hz "
                         f"{skip['sequence']}: {skip['reason']}")
    elif cmd == "simulate":
        lines.append(f"scenario {payload['scenario']}: "
                     f"{payload['boundedness']}")
        if payload["diverged"]:
            lines.append(f"  hard divergence at t = "
                         f"{payload['t_diverged']:.3f} s")
        for p in payload["peaks"][:3]:
            lines.append(f"  peak {p['f_hz']:.2f} Hz, "
                         f"{p['magnitude_pu']:.3e} pu")
    elif cmd == "verify":
        for c in payload["checks"]:
            word = "pass" if c["passed"] else "FAIL"
            lines.append(f"{word}  {c['name']}: {c['value']:.3e} "
                         f"(tol {c['tol']:g})")
    elif cmd == "bode":
        lines.append(f"wrote {len(payload['files'])} response tables")
    return lines


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EX_USAGE

    try:
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                cfg = parse_config(fh.read())
        else:
            cfg = default_config()
    except ConfigurationError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return EX_USAGE
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EX_USAGE

    body = {"config": _jsonable(cfg), "overrides": list(args.overrides)}
    try:
        with _client(args.server) as client:
            resp = client.post(COMMAND_PATHS[args.command], json=body)
    except httpx.HTTPError as exc:
        print(f"error: service unreachable: {exc}", file=sys.stderr)
        return EX_UNAVAILABLE

    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail")
        except ValueError:
            detail = resp.text
        print(f"error: {detail}", file=sys.stderr)
        return EX_USAGE

    payload = resp.json()
    out_dir = args.out if args.out else str(cfg["output"]["dir"])
    os.makedirs(out_dir, exist_ok=True)
    for name, content in sorted(payload.get("files", {}).items()):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
        print(f"wrote {path}")
    for line in _summarize(payload):
        print(line)
    return int(payload.get("exit_code", 0))


if __name__ == "__main__":
    sys.exit(main())
