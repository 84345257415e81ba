"""
Terminal output helpers.
  - Errors get a red [Error] prefix when stdout is a TTY
  - Status lines are dimmed
  - Report tables are printed as aligned plain text
"""
from __future__ import annotations

import sys
from typing import Sequence

_ANSI = sys.stdout.isatty()

_RESET  = "\033[0m"  if _ANSI else ""
_DIM    = "\033[2m"  if _ANSI else ""
_RED    = "\033[31m" if _ANSI else ""
_CYAN   = "\033[36m" if _ANSI else ""
_BOLD   = "\033[1m"  if _ANSI else ""


def print_error(message: str) -> None:
    print(f"\n{_RED}[Error]{_RESET} {message}\n", file=sys.stderr)


def print_status(message: str) -> None:
    print(f"{_DIM}[{message}]{_RESET}")


def print_stage(stage: str, detail: str = "") -> None:
    label = f"→ {stage}"
    if detail:
        label += f" ({detail})"
    print(f"{_CYAN}  [{label}]{_RESET}")


def print_banner(version: str, out_dir: str) -> None:
    print(f"\n{_BOLD}wildreid {version}{_RESET}")
    print(f"Output: {out_dir}")
    print()


def format_table(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    cells = [[str(h) for h in header]] + [["NA" if c is None else str(c) for c in r] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = []
    for n, row in enumerate(cells):
        lines.append("  ".join(c.rjust(w) if n else c.ljust(w) for c, w in zip(row, widths)))
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def print_table(header: Sequence[str], rows: Sequence[Sequence[object]], title: str = "") -> None:
    if title:
        print(f"\n{_BOLD}{title}{_RESET}")
    print(format_table(header, rows))
    print()
