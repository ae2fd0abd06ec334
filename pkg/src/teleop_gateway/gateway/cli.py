"""Command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
import threading

from ..errors import StartupError
from .app import serve
from .config import GatewayConfig, apply_overrides, load_config


def _read_keys(keyboard) -> None:
    """Raw-mode stdin reader feeding the keyboard baseline source."""
    import termios
    import tty

    fd = sys.stdin.fileno()
    old = termios.tcgetattr(fd)
    try:
        tty.setcbreak(fd)
        while True:
            ch = sys.stdin.read(1)
            if not ch or ch == "\x03":  # Ctrl-C
                break
            keyboard.press(ch)
    finally:
        termios.tcsetattr(fd, termios.TCSADRAIN, old)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teleop-gateway",
        description="Teleoperation gateway: phone head tracking, pedal navigation, "
        "leader arms, built-in simulator, VR video feedback.",
    )
    parser.add_argument("--host", default=None, help="bind address (default 0.0.0.0)")
    parser.add_argument("--port", type=int, default=None, help="listen port (default 8443)")
    parser.add_argument("--tls-cert", dest="tls_cert", default=None, help="TLS certificate PEM")
    parser.add_argument("--tls-key", dest="tls_key", default=None, help="TLS private key PEM")
    parser.add_argument(
        "--self-signed",
        action="store_true",
        help="generate an ephemeral self-signed certificate (development only)",
    )
    parser.add_argument("--mode", choices=["sim", "hardware"], default=None)
    parser.add_argument("--config", default=None, help="YAML config file")
    parser.add_argument("--record", dest="record_dir", default=None, help="episode output directory")
    parser.add_argument(
        "--pedal-script",
        dest="pedal_script",
        default=None,
        help="JSON pedal event script (implies a simulated pedal source)",
    )
    parser.add_argument("--client-dir", dest="client_dir", default=None, help="operator client assets")
    parser.add_argument(
        "--keyboard",
        action="store_true",
        help="enable the discrete step-control baseline on stdin "
        "(w/a/s/d translate, q/e rotate, i/j/k/l head)",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )

    try:
        cfg = load_config(args.config) if args.config else GatewayConfig()
        cfg = apply_overrides(
            cfg,
            host=args.host,
            port=args.port,
            tls_cert=args.tls_cert,
            tls_key=args.tls_key,
            mode=args.mode,
            record_dir=args.record_dir,
            pedal_script=args.pedal_script,
            client_dir=args.client_dir,
        )
        if args.self_signed:
            cfg.self_signed = True
        if args.keyboard:
            cfg.keyboard = True
        if args.pedal_script and cfg.pedal_source == "none":
            cfg.pedal_source = "simulated"

        if cfg.keyboard and sys.stdin.isatty():
            from .app import build_gateway

            prebuilt = build_gateway(cfg)
            threading.Thread(
                target=_read_keys, args=(prebuilt[0].keyboard,), daemon=True
            ).start()
            serve(cfg, prebuilt=prebuilt)
        else:
            serve(cfg)
    except StartupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
