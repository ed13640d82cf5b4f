"""Simulated transports.

The data channel loses, duplicates, delays and corrupts frames under a
seeded generator.  The voice channel delivers SAS utterances verbatim and
lets the adversary read, but not alter, them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True)
class ChannelConfig:
    drop_prob: float = 0.0
    bit_error_rate: float = 0.0
    dup_prob: float = 0.0
    max_delay_ticks: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("drop_prob", "bit_error_rate", "dup_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.max_delay_ticks < 0:
            raise ValueError("max_delay_ticks must be >= 0")

    @property
    def lossless(self) -> bool:
        return not (self.drop_prob or self.bit_error_rate or self.dup_prob or self.max_delay_ticks)

    def frame_corruption_prob(self, nbytes: int) -> float:
        return 1.0 - (1.0 - self.bit_error_rate) ** (8 * nbytes)

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown channel fields: {sorted(unknown)}")
        return cls(**d)


def make_rng(cfg: ChannelConfig) -> np.random.Generator:
    return np.random.default_rng(cfg.seed)


def _corrupt(frame: bytes, ber: float, rng: np.random.Generator) -> bytes:
    nbits = 8 * len(frame)
    flips = rng.random(nbits) < ber
    if not flips.any():
        return frame
    mask = np.packbits(flips)  # MSB-first within each byte
    return bytes(np.frombuffer(frame, dtype=np.uint8) ^ mask)


def transmit(cfg: ChannelConfig, rng: np.random.Generator, frame_bytes: bytes) -> list[tuple[int, bytes]]:
    """Push one frame through the channel; returns (delay_ticks, bytes) copies."""
    if not frame_bytes:
        raise ValueError("cannot transmit an empty frame")
    if cfg.lossless:
        return [(0, bytes(frame_bytes))]
    if cfg.drop_prob and rng.random() < cfg.drop_prob:
        return []
    copies = 2 if cfg.dup_prob and rng.random() < cfg.dup_prob else 1
    out = []
    for _ in range(copies):
        data = _corrupt(frame_bytes, cfg.bit_error_rate, rng) if cfg.bit_error_rate else bytes(frame_bytes)
        delay = int(rng.integers(0, cfg.max_delay_ticks + 1)) if cfg.max_delay_ticks else 0
        out.append((delay, data))
    return out


@dataclass(frozen=True)
class Utterance:
    speaker: bytes
    sas: Any


@dataclass
class VoiceAuthChannel:
    """Authenticated, non-secret channel for reading the SAS aloud.

    There is deliberately no operation that edits a queued utterance; the
    adversary only gets :meth:`tap`.
    """

    _queue: list[Utterance] = field(default_factory=list)

    def announce(self, speaker: bytes, sas: Any) -> Utterance:
        u = Utterance(bytes(speaker), sas)
        self._queue.append(u)
        return u

    def heard_from(self, speaker: bytes) -> Any | None:
        for u in reversed(self._queue):
            if u.speaker == speaker:
                return u.sas
        return None

    def tap(self) -> tuple[Utterance, ...]:
        return tuple(self._queue)


def voice_announce(ch: VoiceAuthChannel, speaker: bytes, sas: Any) -> tuple[Any, Utterance]:
    """Announce ``sas``; returns (what the peer hears, what the adversary sees)."""
    u = ch.announce(speaker, sas)
    return u.sas, u
