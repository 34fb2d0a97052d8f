"""One-line identity reports shared by the checkers and the command line."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional


@dataclass
class Ident:
    name: str
    ok: bool
    degree: Optional[int] = None
    detail: str = ""

    def line(self) -> str:
        parts = ["IDENT", self.name]
        if self.degree is not None:
            parts.append(f"degree<={self.degree}")
        parts.append("OK" if self.ok else "FAIL")
        if not self.ok and self.detail:
            parts.append(self.detail)
        return " ".join(parts)

    def __str__(self):
        return self.line()


def all_ok(idents: Iterable[Ident]) -> bool:
    return all(i.ok for i in idents)
