"""Rendering, parsing and vocal comparison of the 16-bit SAS."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

SAS_BITS = 16
SAS_MAX = (1 << SAS_BITS) - 1


class ParseError(ValueError):
    pass


class WordListError(ValueError):
    pass


class PolicyViolation(RuntimeError):
    """A SAS comparison was skipped although the policy mandates it."""


class SASObligation(enum.Enum):
    OPTIONAL = "optional"
    MANDATORY = "mandatory"


class VerificationOutcome(enum.Enum):
    MATCH = "match"
    MISMATCH = "mismatch"
    SKIPPED = "skipped"


@dataclass(frozen=True)
class WordList:
    even_words: tuple[str, ...]
    odd_words: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.even_words) != 256 or len(self.odd_words) != 256:
            raise WordListError("each list needs exactly 256 words")
        for w in self.even_words + self.odd_words:
            if not w or w != w.strip().lower() or not re.fullmatch(r"[a-z]+", w):
                raise WordListError(f"bad word {w!r}")
        if len(set(self.even_words)) != 256 or len(set(self.odd_words)) != 256:
            raise WordListError("duplicate words in a list")
        if set(self.even_words) & set(self.odd_words):
            raise WordListError("even and odd lists must be disjoint")
        object.__setattr__(self, "_even_index", {w: i for i, w in enumerate(self.even_words)})
        object.__setattr__(self, "_odd_index", {w: i for i, w in enumerate(self.odd_words)})

    @classmethod
    def from_text(cls, text: str) -> "WordList":
        lines = text.splitlines()
        if lines and lines[-1] == "":
            lines.pop()
        if len(lines) != 512:
            raise WordListError(f"expected 512 lines, found {len(lines)}")
        return cls(tuple(lines[:256]), tuple(lines[256:]))

    @classmethod
    def load(cls, path: str | Path | None = None) -> "WordList":
        """Load a word-list file; the bundled PGP word list by default."""
        if path is None:
            text = resources.files("voicekex.data").joinpath("pgp_words.txt").read_text("utf-8")
        else:
            try:
                text = Path(path).read_text("utf-8")
            except OSError as exc:
                raise WordListError(f"cannot read word list: {exc}") from exc
        return cls.from_text(text)

    def to_text(self) -> str:
        return "\n".join(self.even_words + self.odd_words) + "\n"


_DEFAULT: WordList | None = None


def default_wordlist() -> WordList:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = WordList.load()
    return _DEFAULT


def _check(s: int) -> int:
    if not isinstance(s, int) or not 0 <= s <= SAS_MAX:
        raise ValueError(f"SAS value out of range: {s!r}")
    return s


def render_digits(s: int) -> str:
    return f"{_check(s):05d}"


def render_words(s: int, wl: WordList | None = None) -> tuple[str, str]:
    wl = wl or default_wordlist()
    _check(s)
    return wl.even_words[s >> 8], wl.odd_words[s & 0xFF]


def parse_rendering(text: str, wl: WordList | None = None) -> int:
    """Inverse of :func:`render_digits` or :func:`render_words`.

    Word input tolerates case and surrounding or repeated whitespace.
    Word order is significant: the even word must come first.
    """
    stripped = text.strip()
    if re.fullmatch(r"[0-9]+", stripped):
        if len(stripped) != 5:
            raise ParseError(f"expected 5 digits, got {len(stripped)}")
        value = int(stripped)
        if value > SAS_MAX:
            raise ParseError(f"{value} exceeds 16 bits")
        return value
    wl = wl or default_wordlist()
    words = stripped.lower().split()
    if len(words) != 2:
        raise ParseError(f"expected two words, got {len(words)}")
    hi = wl._even_index.get(words[0])  # type: ignore[attr-defined]
    lo = wl._odd_index.get(words[1])  # type: ignore[attr-defined]
    if hi is None or lo is None:
        raise ParseError(f"unknown or misplaced word in {text!r}")
    return (hi << 8) | lo


def vocal_compare(local, peer_utterance, policy: SASObligation) -> VerificationOutcome:
    """Compare the local SAS with what the peer said.

    ``peer_utterance`` of ``None`` means the user chose to skip the check,
    which is a fault when ``policy`` is mandatory.
    """
    if peer_utterance is None:
        if policy is SASObligation.MANDATORY:
            raise PolicyViolation("SAS comparison is mandatory for this session")
        return VerificationOutcome.SKIPPED
    return VerificationOutcome.MATCH if local == peer_utterance else VerificationOutcome.MISMATCH
