"""Standard MIDI File reading and writing for monophonic single-line melodies.

Reads SMF format 0 and 1, emits format 0 only. Durations and onsets are exact
rationals in quarter-note units so triplet and sextuplet values (1/3, 1/6, 2/3)
survive round trips without float drift.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

# SMF constants
_HEADER_MAGIC = b"MThd"
_TRACK_MAGIC = b"MTrk"
_META_TEMPO = 0x51
_META_END_OF_TRACK = 0x2F
MAX_DIVISION = 0x7FFF  # division field is 15 bits
DEFAULT_TEMPO = 120
WRITE_VELOCITY = 64


class MidiError(Exception):
    """Base for all MIDI read/write failures."""


class MidiParseError(MidiError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class EmptyTrackError(MidiError):
    """No track in the file contains any note events."""


class TickResolutionError(MidiError):
    """A duration or onset is not representable at the chosen time division."""


@dataclass(frozen=True)
class NoteEvent:
    """One monophonic note or rest.

    pitch is a MIDI note number 0..127, or None for a rest. duration and
    onset are exact rationals in quarter-note units.
    """

    pitch: int | None
    duration: Fraction
    onset: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "duration", Fraction(self.duration))
        object.__setattr__(self, "onset", Fraction(self.onset))
        if self.pitch is not None and not 0 <= int(self.pitch) <= 127:
            raise ValueError(f"pitch {self.pitch} outside MIDI range 0..127")
        if self.duration <= 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.onset < 0:
            raise ValueError(f"onset must be nonnegative, got {self.onset}")

    @property
    def is_rest(self) -> bool:
        return self.pitch is None

    @property
    def end(self) -> Fraction:
        return self.onset + self.duration

    @classmethod
    def rest(cls, duration, onset=Fraction(0)) -> "NoteEvent":
        return cls(None, duration, onset)


@dataclass(frozen=True)
class MidiDocument:
    """A monophonic melody plus the timing context needed to serialize it.

    tempo is an integer BPM; the tempo meta event stores round(60e6 / bpm)
    microseconds per quarter, and integer BPM is the largest tempo family
    that survives that encoding exactly.

    Adjacent rests are merged at construction: an SMF byte stream carries no
    message at a rest-to-rest boundary, so the merged form is the only one
    that can round-trip.
    """

    time_division: int
    tempo: int
    events: tuple[NoteEvent, ...]

    def __post_init__(self):
        object.__setattr__(self, "events", _merge_adjacent_rests(self.events))
        if not 1 <= self.time_division <= MAX_DIVISION:
            raise ValueError(f"time division {self.time_division} outside 1..{MAX_DIVISION}")
        # round(60e6 / bpm) must fit the 3-byte tempo meta payload, so bpm >= 4
        if not (isinstance(self.tempo, int) and 4 <= self.tempo <= 60_000_000):
            raise ValueError(f"tempo must be an integer BPM in 4..60000000, got {self.tempo!r}")
        cursor = Fraction(0)
        for ev in self.events:
            if ev.onset != cursor:
                raise ValueError(
                    f"events must be contiguous from onset 0: expected onset {cursor}, got {ev.onset}"
                )
            if (ev.duration * self.time_division).denominator != 1:
                raise TickResolutionError(
                    f"duration {ev.duration} of event at onset {ev.onset} "
                    f"is not a whole number of ticks at division {self.time_division}"
                )
            cursor = ev.end

    @property
    def total_quarters(self) -> Fraction:
        return self.events[-1].end if self.events else Fraction(0)


def _merge_adjacent_rests(events: Sequence[NoteEvent]) -> tuple[NoteEvent, ...]:
    merged: list[NoteEvent] = []
    for ev in events:
        if ev.is_rest and merged and merged[-1].is_rest and merged[-1].end == ev.onset:
            merged[-1] = NoteEvent(None, merged[-1].duration + ev.duration, merged[-1].onset)
        else:
            merged.append(ev)
    return tuple(merged)


def lcm_time_division(events: Iterable[NoteEvent]) -> int:
    """Smallest ticks-per-quarter making every duration and onset integral."""
    division = 1
    for ev in events:
        division = math.lcm(division, ev.duration.denominator, ev.onset.denominator)
        if division > MAX_DIVISION:
            raise TickResolutionError(
                f"time division {division} overflows the 15-bit SMF field (max {MAX_DIVISION})"
            )
    return division


def encode_vlq(value: int) -> bytes:
    """Variable-length quantity: 7 data bits per byte, MSB marks continuation."""
    if value < 0:
        raise ValueError("variable-length quantity must be nonnegative")
    out = bytearray([value & 0x7F])
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def fail(self, message: str):
        raise MidiParseError(message, self.pos)

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            self.fail(f"unexpected end of file, wanted {n} bytes")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def byte(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def vlq(self) -> int:
        value = 0
        for _ in range(4):
            b = self.byte()
            value = (value << 7) | (b & 0x7F)
            if not b & 0x80:
                return value
        self.fail("variable-length quantity longer than 4 bytes")


# data byte counts per channel-event high nibble
_CHANNEL_DATA_BYTES = {0x8: 2, 0x9: 2, 0xA: 2, 0xB: 2, 0xC: 1, 0xD: 1, 0xE: 2}


def _parse_track(reader: _Reader, length: int):
    """One MTrk body -> (notes [(on_tick, off_tick, pitch)], first tempo mpqn or None, end tick)."""
    end_pos = reader.pos + length
    tick = 0
    running_status = None
    tempo_mpqn = None
    open_notes: dict[int, int] = {}
    notes: list[tuple[int, int, int]] = []

    def close(pitch: int, at: int):
        start = open_notes.pop(pitch, None)
        if start is not None and at > start:
            notes.append((start, at, pitch))

    while reader.pos < end_pos:
        tick += reader.vlq()
        status = reader.byte()
        if status < 0x80:
            if running_status is None:
                reader.fail("data byte without running status")
            status = running_status
            reader.pos -= 1
        if status == 0xFF:
            running_status = None
            meta_type = reader.byte()
            meta_len = reader.vlq()
            payload = reader.take(meta_len)
            if meta_type == _META_END_OF_TRACK:
                break
            if meta_type == _META_TEMPO and tempo_mpqn is None:
                if meta_len != 3:
                    reader.fail(f"tempo meta event length {meta_len}, expected 3")
                tempo_mpqn = int.from_bytes(payload, "big")
        elif status in (0xF0, 0xF7):
            running_status = None
            reader.take(reader.vlq())
        else:
            running_status = status
            kind = status >> 4
            if kind not in _CHANNEL_DATA_BYTES:
                reader.fail(f"unknown status byte 0x{status:02X}")
            payload = reader.take(_CHANNEL_DATA_BYTES[kind])
            if kind == 0x9 and payload[1] > 0:
                pitch = payload[0]
                if pitch in open_notes:
                    close(pitch, tick)  # retrigger truncates the sounding note
                open_notes[pitch] = tick
            elif kind == 0x8 or (kind == 0x9 and payload[1] == 0):
                close(payload[0], tick)
    for pitch in list(open_notes):
        close(pitch, tick)
    reader.pos = end_pos
    return notes, tempo_mpqn, tick


def _monophonic(notes: list[tuple[int, int, int]]) -> list[tuple[int, int, int]]:
    """Resolve overlaps by truncating the earlier note at the later onset."""
    result: list[tuple[int, int, int]] = []
    for start, end, pitch in sorted(notes, key=lambda n: n[0]):
        while result and result[-1][1] > start:
            prev_start, _, prev_pitch = result.pop()
            if prev_start < start:
                result.append((prev_start, start, prev_pitch))
                break
        result.append((start, end, pitch))
    return result


def read_midi(data: bytes) -> MidiDocument:
    """Parse an SMF byte string into the first non-empty note track.

    Overlapping notes are truncated at the next onset, gaps become rests,
    and a trailing gap before end-of-track is kept as a final rest.
    """
    reader = _Reader(data)
    if reader.take(4) != _HEADER_MAGIC:
        reader.pos = 0
        reader.fail("missing MThd header")
    header_len = reader.u32()
    if header_len < 6:
        reader.fail(f"header chunk length {header_len}, expected at least 6")
    fmt = reader.u16()
    n_tracks = reader.u16()
    division = reader.u16()
    reader.take(header_len - 6)
    if fmt not in (0, 1):
        reader.fail(f"unsupported SMF format {fmt}")
    if division & 0x8000:
        reader.fail("SMPTE time division is not supported")
    if division == 0:
        reader.fail("time division must be positive")

    tempo_mpqn = None
    note_track = None
    track_end = 0
    for _ in range(n_tracks):
        if reader.pos >= len(reader.data):
            break
        magic = reader.take(4)
        length = reader.u32()
        if magic != _TRACK_MAGIC:
            reader.take(length)  # skip alien chunk
            continue
        if reader.pos + length > len(reader.data):
            reader.fail(f"track chunk length {length} overruns file")
        notes, mpqn, end_tick = _parse_track(reader, length)
        if tempo_mpqn is None and mpqn is not None:
            tempo_mpqn = mpqn
        if note_track is None and notes:
            note_track = notes
            track_end = end_tick
    if note_track is None:
        raise EmptyTrackError("no track contains note events")

    tempo = DEFAULT_TEMPO if tempo_mpqn in (None, 0) else max(4, round(60_000_000 / tempo_mpqn))
    events: list[NoteEvent] = []
    cursor = 0
    for start, end, pitch in _monophonic(note_track):
        if start > cursor:
            events.append(NoteEvent(None, Fraction(start - cursor, division), Fraction(cursor, division)))
        events.append(NoteEvent(pitch, Fraction(end - start, division), Fraction(start, division)))
        cursor = end
    if track_end > cursor:
        events.append(NoteEvent(None, Fraction(track_end - cursor, division), Fraction(cursor, division)))
    return MidiDocument(time_division=division, tempo=tempo, events=tuple(events))


def write_midi(doc: MidiDocument) -> bytes:
    """Emit SMF format 0: tempo meta, contiguous note on/off pairs, end-of-track.

    Rests emit no messages; their time passes through delta-times, and the
    end-of-track event is stamped at the document's total end so trailing
    rests survive a round trip.
    """
    division = doc.time_division

    def ticks(value: Fraction, ev: NoteEvent) -> int:
        scaled = value * division
        if scaled.denominator != 1:
            raise TickResolutionError(
                f"event (pitch={ev.pitch}, duration={ev.duration}, onset={ev.onset}) "
                f"is not representable at division {division}"
            )
        return int(scaled)

    track = bytearray()
    mpqn = round(60_000_000 / doc.tempo)
    track += encode_vlq(0) + bytes([0xFF, _META_TEMPO, 0x03]) + mpqn.to_bytes(3, "big")
    cursor = 0
    for ev in doc.events:
        if ev.is_rest:
            continue
        on = ticks(ev.onset, ev)
        off = ticks(ev.end, ev)
        track += encode_vlq(on - cursor) + bytes([0x90, ev.pitch, WRITE_VELOCITY])
        track += encode_vlq(off - on) + bytes([0x80, ev.pitch, 0])
        cursor = off
    total = ticks(doc.total_quarters, doc.events[-1]) if doc.events else 0
    track += encode_vlq(total - cursor) + bytes([0xFF, _META_END_OF_TRACK, 0x00])

    header = _HEADER_MAGIC + struct.pack(">IHHH", 6, 0, 1, division)
    return header + _TRACK_MAGIC + struct.pack(">I", len(track)) + bytes(track)
