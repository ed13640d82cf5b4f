"""Command-line entry point.

    voicekex run --scenario table1 --mode symbolic
    voicekex cards list
    voicekex vectors --out vectors/

Exit codes: 0 when every verdict matches the scenario file's expectations,
1 on a mismatch, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from pathlib import Path

from voicekex.cards import CARDS_ENV, CardFileError, CardStore, USER_ID_LEN
from voicekex.harness import ConfigError, Suite, run_suite
from voicekex.sas import WordListError, default_wordlist
from voicekex.vectors import emit_vectors

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG = 0, 1, 2
DEFAULT_STORE = "voicekex_cards.txt"


def bundled_scenario(name: str) -> str | None:
    res = resources.files("voicekex.data").joinpath("scenarios", f"{name}.json")
    return res.read_text("utf-8") if res.is_file() else None


def load_suite(ref: str) -> Suite:
    path = Path(ref)
    if path.is_file():
        text = path.read_text("utf-8")
    else:
        text = bundled_scenario(path.stem if path.suffix == ".json" else ref)
        if text is None:
            raise ConfigError(f"scenario file not found: {ref}")
    return Suite.from_json(text)


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _hex_id(text: str) -> bytes:
    try:
        raw = bytes.fromhex(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected hex") from None
    if len(raw) != USER_ID_LEN:
        raise argparse.ArgumentTypeError(f"user id must be {USER_ID_LEN} bytes")
    return raw


def _hex_key(text: str) -> bytes:
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected hex") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 too, but keep it explicit
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="voicekex", description="Voice-channel key exchange simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a scenario file and report verdicts")
    run.add_argument("--scenario", required=True, help="path to a JSON scenario file, or a bundled name such as table1")
    run.add_argument("--mode", choices=("symbolic", "concrete", "both"))
    run.add_argument("--seed", type=_u64)
    run.add_argument("--trials", type=_positive)
    run.add_argument("--out", help="write the full report here instead of stdout")

    cards = sub.add_parser("cards", help="manage the virtual-card store")
    cards.add_argument("--store", help=f"card file (default: ${CARDS_ENV} or ./{DEFAULT_STORE})")
    csub = cards.add_subparsers(dest="cards_command", required=True, parser_class=_Parser)
    inst = csub.add_parser("install")
    inst.add_argument("user_id", type=_hex_id)
    inst.add_argument("vk", type=_hex_key)
    rev = csub.add_parser("revoke")
    rev.add_argument("user_id", type=_hex_id)
    csub.add_parser("list")

    vec = sub.add_parser("vectors", help="write golden-vector files")
    vec.add_argument("--out", default="vectors")
    return p


def _cmd_run(args: argparse.Namespace) -> int:
    default_wordlist()  # fail early if the bundled word list is damaged
    suite = load_suite(args.scenario)
    modes = ["symbolic", "concrete"] if args.mode == "both" else [args.mode]
    texts, ok = [], True
    for mode in modes:
        report = run_suite(suite, mode=mode, seed=args.seed, trials=args.trials)
        ok = ok and report.meets_expectation
        texts.append(report.to_text())
    text = "\n".join(texts) + f"\nverdict: {'match' if ok else 'MISMATCH'}\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"report written to {args.out}; verdict: {'match' if ok else 'MISMATCH'}")
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_MISMATCH


def _cmd_cards(args: argparse.Namespace) -> int:
    store = CardStore(args.store or os.environ.get(CARDS_ENV) or DEFAULT_STORE)
    if args.cards_command == "install":
        print(store.install(args.user_id, args.vk))
    elif args.cards_command == "revoke":
        print(store.revoke(args.user_id))
    else:
        for card in store:
            print(f"{card.user_id.hex()} {bytes(card.vk).hex()} {card.installed_at}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "cards":
            return _cmd_cards(args)
        for path in emit_vectors(args.out):
            print(path)
        return EXIT_OK
    except (ConfigError, CardFileError, WordListError) as exc:
        print(f"voicekex: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"voicekex: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
