"""The bit-limited messaging layer between players and referee.

Each of n players holds one symbol from a D-ary alphabet and may send a
single b-bit message, chosen without seeing anyone else's message.  When
2**b >= D the symbol fits in the message (passthrough).  Otherwise the
alphabet is split into parts of at most 2**b - 1 symbols, players are
assigned parts cyclically, and each player reports either "not mine" (0) or
the local index of their symbol inside their part.  The referee scans
batches of g consecutive players covering all parts, picks one player per
batch uniformly with private randomness, and accepts the batch only if that
player reported a symbol.  Accepted symbols are exactly i.i.d. from the
players' distribution: P(pick i, report a) = (1/g) p(a) for a in part i, so
summing over the disjoint parts gives p(a)/g regardless of the partition.
The cost is yield: about one accepted symbol per g**2 players.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ProtocolError


@dataclass(frozen=True)
class ChannelBudget:
    """Per-player message bits and the symbol alphabet size."""

    bits: int
    alphabet_size: int

    def __post_init__(self):
        if self.bits < 1 or self.alphabet_size < 1:
            raise ValueError("need bits >= 1 and alphabet_size >= 1")


@dataclass(frozen=True)
class PartAssignment:
    """Static split of the alphabet into parts, assigned cyclically.

    Part p covers symbols [p * part_size, min((p+1) * part_size, D)); player
    i is responsible for part i mod group_size.  ``passthrough`` means no
    split is needed (2**b >= D).
    """

    budget: ChannelBudget
    passthrough: bool
    group_size: int
    part_size: int

    def part_bounds(self, part: int) -> tuple[int, int]:
        lo = part * self.part_size
        return lo, min(lo + self.part_size, self.budget.alphabet_size)


def assign_parts(alphabet_size: int, bits: int) -> PartAssignment:
    budget = ChannelBudget(bits=bits, alphabet_size=alphabet_size)
    if (1 << bits) >= alphabet_size:
        return PartAssignment(budget=budget, passthrough=True, group_size=1,
                              part_size=alphabet_size)
    part_size = (1 << bits) - 1
    group = -(-alphabet_size // part_size)  # ceil
    return PartAssignment(budget=budget, passthrough=False, group_size=group,
                          part_size=part_size)


def player_message(symbol: int, player_index: int,
                   assignment: PartAssignment) -> int:
    """The b-bit message of one player; deterministic in (symbol, index)."""
    if symbol < 0 or symbol >= assignment.budget.alphabet_size:
        raise ValueError(f"symbol {symbol} outside alphabet")
    if assignment.passthrough:
        return int(symbol)
    part = player_index % assignment.group_size
    lo, hi = assignment.part_bounds(part)
    if lo <= symbol < hi:
        return int(symbol - lo + 1)
    return 0


def player_messages(symbols: np.ndarray, assignment: PartAssignment) -> np.ndarray:
    symbols = np.asarray(symbols, dtype=np.int64)
    if np.any(symbols < 0) or np.any(symbols >= assignment.budget.alphabet_size):
        raise ValueError("symbol outside alphabet")
    if assignment.passthrough:
        return symbols.copy()
    parts = np.arange(len(symbols), dtype=np.int64) % assignment.group_size
    lo = parts * assignment.part_size
    hi = np.minimum(lo + assignment.part_size, assignment.budget.alphabet_size)
    mine = (symbols >= lo) & (symbols < hi)
    return np.where(mine, symbols - lo + 1, 0)


@dataclass
class Transcript:
    """Ordered b-bit messages from the players, plus protocol metadata.

    Message i is a function of sample i and the static assignment only;
    appending enforces the bit budget.
    """

    assignment: PartAssignment
    messages: list = field(default_factory=list)

    @property
    def mode(self) -> str:
        return "passthrough" if self.assignment.passthrough else "exact_rejection"

    def append(self, message: int) -> None:
        if not (0 <= message < (1 << self.assignment.budget.bits)) and not (
                self.assignment.passthrough
                and 0 <= message < self.assignment.budget.alphabet_size):
            raise ProtocolError(
                f"message {message} exceeds the {self.assignment.budget.bits}-bit budget")
        self.messages.append(int(message))

    def extend(self, messages) -> None:
        arr = np.asarray(messages, dtype=np.int64)
        limit = (self.assignment.budget.alphabet_size if self.assignment.passthrough
                 else (1 << self.assignment.budget.bits))
        if np.any(arr < 0) or np.any(arr >= limit):
            raise ProtocolError("message exceeds the bit budget")
        self.messages.extend(int(m) for m in arr)

    def __len__(self) -> int:
        return len(self.messages)


def build_transcript(symbols: np.ndarray, assignment: PartAssignment) -> Transcript:
    """Run every player's (noninteractive, deterministic) encoder."""
    transcript = Transcript(assignment=assignment)
    transcript.extend(player_messages(symbols, assignment))
    return transcript


@dataclass(frozen=True)
class SimReport:
    """Symbols the referee reconstituted, and how many."""

    symbols: np.ndarray
    mode: str
    batches: int = 0

    @property
    def yield_count(self) -> int:
        return len(self.symbols)


def referee_simulate(transcript: Transcript, assignment: PartAssignment,
                     rng: np.random.Generator) -> SimReport:
    """Reconstitute i.i.d. symbols from the transcript.

    Passthrough returns every symbol.  Otherwise, one uniformly chosen
    player per batch of ``group_size`` consecutive players is inspected
    with the referee's private randomness; a nonzero message decodes to a
    symbol, a zero message rejects the batch.
    """
    if transcript.assignment is not assignment and transcript.assignment != assignment:
        raise ProtocolError("transcript was produced under a different assignment")
    msgs = np.asarray(transcript.messages, dtype=np.int64)
    if assignment.passthrough:
        return SimReport(symbols=msgs.copy(), mode="passthrough")
    g = assignment.group_size
    n_batches = len(msgs) // g
    if n_batches == 0:
        return SimReport(symbols=np.empty(0, dtype=np.int64),
                         mode="exact_rejection", batches=0)
    batched = msgs[: n_batches * g].reshape(n_batches, g)
    picks = rng.integers(0, g, size=n_batches)
    chosen = batched[np.arange(n_batches), picks]
    accepted = chosen > 0
    # player at offset `picks` inside an aligned batch holds part `picks`
    symbols = picks[accepted] * assignment.part_size + chosen[accepted] - 1
    return SimReport(symbols=symbols.astype(np.int64), mode="exact_rejection",
                     batches=n_batches)


def expected_yield(n: int, alphabet_size: int, bits: int,
                   mode: str = "exact_rejection") -> int:
    """Deterministic yield estimate used for planning.

    ``ideal`` and passthrough give n; exact rejection gives one expected
    accept per group of g players across floor(n/g) batches, rounded down.
    """
    if mode == "ideal":
        return n
    assignment = assign_parts(alphabet_size, bits)
    if assignment.passthrough:
        return n
    g = assignment.group_size
    return (n // g) // g


def dump_transcript(transcript: Transcript, path) -> None:
    """Text dump: one JSON header line, then one integer per line."""
    a = transcript.assignment
    header = {
        "n": len(transcript),
        "b": a.budget.bits,
        "D": a.budget.alphabet_size,
        "g": a.group_size,
        "mode": transcript.mode,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for m in transcript.messages:
            fh.write(f"{m}\n")


def load_transcript(path) -> Transcript:
    with open(path) as fh:
        header = json.loads(fh.readline())
        assignment = assign_parts(header["D"], header["b"])
        if assignment.group_size != header["g"]:
            raise ProtocolError("header group size does not match (D, b)")
        transcript = Transcript(assignment=assignment)
        transcript.extend([int(line) for line in fh if line.strip()])
    if len(transcript) != header["n"]:
        raise ProtocolError("message count does not match header")
    return transcript
