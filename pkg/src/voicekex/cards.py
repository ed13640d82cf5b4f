"""Virtual-card store: peers' signature verification keys, keyed by user id.

On disk a store is one text file with a record per line::

    <hex user_id> <hex verification key> <logical timestamp>

Writes go to a temporary file that is renamed over the original.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

USER_ID_LEN = 16
CARDS_ENV = "VOICEKEX_CARDS"


class CardFileError(ValueError):
    pass


@dataclass(frozen=True)
class Card:
    user_id: bytes
    vk: Any
    installed_at: int


def _check_id(user_id: bytes) -> bytes:
    if not isinstance(user_id, (bytes, bytearray)) or len(user_id) != USER_ID_LEN:
        raise ValueError("user_id must be 16 bytes")
    return bytes(user_id)


class CardStore:
    """Last-writer-wins map from user id to card.

    ``path`` is optional; an in-memory store never touches the file system.
    """

    def __init__(self, path: str | Path | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self._cards: dict[bytes, Card] = {}
        self._clock = 0
        if self.path is not None and self.path.exists():
            self._load()

    def install(self, user_id: bytes, vk: Any) -> str:
        user_id = _check_id(user_id)
        self._clock += 1
        replaced = user_id in self._cards
        self._cards[user_id] = Card(user_id, vk, self._clock)
        self._persist()
        return "replaced" if replaced else "ok"

    def revoke(self, user_id: bytes) -> str:
        user_id = _check_id(user_id)
        if self._cards.pop(user_id, None) is None:
            return "absent"
        self._clock += 1
        self._persist()
        return "ok"

    def lookup(self, user_id: bytes) -> Any | None:
        card = self._cards.get(bytes(user_id))
        return None if card is None else card.vk

    def snapshot(self) -> dict[bytes, Any]:
        return {uid: c.vk for uid, c in self._cards.items()}

    def __iter__(self) -> Iterator[Card]:
        return iter(sorted(self._cards.values(), key=lambda c: c.installed_at))

    def __len__(self) -> int:
        return len(self._cards)

    def __contains__(self, user_id: object) -> bool:
        return user_id in self._cards

    # -- persistence --------------------------------------------------
    def _load(self) -> None:
        assert self.path is not None
        for lineno, line in enumerate(self.path.read_text("ascii").splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split()
            try:
                uid_hex, vk_hex, ts = parts
                card = Card(_check_id(bytes.fromhex(uid_hex)), bytes.fromhex(vk_hex), int(ts))
            except ValueError as exc:
                raise CardFileError(f"{self.path}:{lineno}: malformed card record") from exc
            self._cards[card.user_id] = card
            self._clock = max(self._clock, card.installed_at)

    def _persist(self) -> None:
        if self.path is None:
            return
        lines = []
        for card in self:
            if not isinstance(card.vk, (bytes, bytearray)):
                raise CardFileError("only byte-string keys can be persisted")
            lines.append(f"{card.user_id.hex()} {bytes(card.vk).hex()} {card.installed_at}\n")
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".cards-")
        try:
            with os.fdopen(fd, "w", encoding="ascii") as fh:
                fh.writelines(lines)
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
