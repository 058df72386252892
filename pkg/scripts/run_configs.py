"""Run every experiment config in configs/ through the CLI and tabulate the exit codes."""

import argparse
import sys
from pathlib import Path

from rtnlab.cli import main as cli_main

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", default=str(ROOT / "configs"))
    ap.add_argument("--out", default=str(ROOT / "out"))
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    status = {}
    for path in sorted(Path(args.configs).glob("*.toml")) + sorted(Path(args.configs).glob("*.json")):
        command = "predict" if path.stem == "mp" else "run"
        out = Path(args.out) / path.stem
        print(f"== {path.name} ({command})", flush=True)
        status[path.name] = cli_main([command, "--config", str(path), "--out", str(out), "--threads", str(args.threads)])
    print()
    for name, code in status.items():
        print(f"{name:24s} exit {code}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
