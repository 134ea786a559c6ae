"""
Bit-metered channel between protocol parties.

Every payload is a string of '0'/'1' characters; the length of that string is
the cost. Parties are plain closures driven by one control thread, so a run is
fully deterministic and its transcript can be replayed bit for bit.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from utils.errors import SchemaError
from utils.serialization import require

_BITS = frozenset("01")


@dataclass(frozen=True)
class Message:
    sender: str
    bits: str

    def to_dict(self) -> Dict[str, str]:
        return {"from": self.sender, "bits": self.bits}


@dataclass
class Transcript:
    """Ordered messages plus the declared output of the run"""

    messages: List[Message] = field(default_factory=list)
    output: Any = None

    @property
    def total_bits(self) -> int:
        return sum(len(m.bits) for m in self.messages)

    @property
    def rounds(self) -> int:
        """Number of maximal runs of consecutive messages from one sender"""
        count = 0
        previous = None
        for m in self.messages:
            if m.sender != previous:
                count += 1
                previous = m.sender
        return count

    def to_dict(self) -> Dict[str, Any]:
        return {
            "messages": [m.to_dict() for m in self.messages],
            "total_bits": self.total_bits,
            "rounds": self.rounds,
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "Transcript":
        try:
            messages = [Message(str(m["from"]), str(m["bits"])) for m in require(document, "messages")]
        except (KeyError, TypeError) as e:
            raise SchemaError(f"malformed transcript message: {e}") from e
        for m in messages:
            if not set(m.bits) <= _BITS:
                raise SchemaError(f"message from {m.sender!r} has non-binary payload")
        transcript = cls(messages, document.get("output"))
        declared = document.get("total_bits")
        if declared is not None and declared != transcript.total_bits:
            raise SchemaError(f"transcript declares {declared} bits but carries {transcript.total_bits}")
        return transcript

    def summary(self) -> Dict[str, int]:
        return {"total_bits": self.total_bits, "rounds": self.rounds, "messages": len(self.messages)}


class Channel:
    """
    Records every message sent between named parties.

    `seed` is the public random string shared by all parties; the protocols in
    this package are deterministic and never draw from it.
    """

    def __init__(self, parties: Sequence[str] = ("A", "B"), seed: Optional[int] = None):
        self.parties = tuple(parties)
        self.seed = seed
        self._messages: List[Message] = []

    def send(self, sender: str, bits: str) -> str:
        """Append a message and hand the payload to the receiver(s)"""
        if sender not in self.parties:
            raise ValueError(f"unknown party {sender!r}; channel parties are {self.parties}")
        if not set(bits) <= _BITS:
            raise ValueError(f"payload must be a bit string, got {bits!r}")
        self._messages.append(Message(sender, bits))
        return bits

    def public_rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    @property
    def total_bits(self) -> int:
        return sum(len(m.bits) for m in self._messages)

    def transcript(self, output: Any = None) -> Transcript:
        return Transcript(list(self._messages), output)

    @classmethod
    def replay(cls, transcript: Transcript) -> Transcript:
        """Push a transcript's messages through a fresh channel and return the rebuilt record"""
        parties = tuple(dict.fromkeys(m.sender for m in transcript.messages)) or ("A", "B")
        channel = cls(parties)
        for m in transcript.messages:
            channel.send(m.sender, m.bits)
        return channel.transcript(transcript.output)


def bits_for(count: int) -> int:
    """Width of a fixed-size index into `count` items (0 when there is at most one)"""
    if count <= 1:
        return 0
    return int(math.ceil(math.log2(count)))


def encode_uint(value: int, width: int) -> str:
    if value < 0 or value >= (1 << width):
        raise ValueError(f"{value} does not fit in {width} bits")
    return format(value, f"0{width}b") if width else ""


def decode_uint(bits: str) -> int:
    return int(bits, 2) if bits else 0


def quantize(value: float, bits: int) -> int:
    """Nearest level k of k / (2^bits - 1) for a value in [0,1]"""
    top = (1 << bits) - 1
    return int(np.clip(np.rint(float(value) * top), 0, top))


def quantize_up(value: float, bits: int) -> int:
    """Smallest level whose value is >= the input (values above 1 saturate)"""
    top = (1 << bits) - 1
    return int(np.clip(math.ceil(float(value) * top), 0, top))


def dequantize(level: int, bits: int) -> float:
    return level / ((1 << bits) - 1)


def encode_levels(values: Sequence[float], bits: int) -> str:
    return "".join(encode_uint(quantize(v, bits), bits) for v in values)


def decode_levels(payload: str, bits: int) -> np.ndarray:
    if len(payload) % bits:
        raise ValueError(f"payload length {len(payload)} is not a multiple of {bits}")
    return np.array(
        [dequantize(decode_uint(payload[i : i + bits]), bits) for i in range(0, len(payload), bits)],
        dtype=float,
    )
