import random
from fractions import Fraction

from jazzgen.midi_io import read_midi
from jazzgen.synthetic import (
    BLUES_PITCH_CLASSES,
    DURATIONS,
    SEED_NOTES,
    TEMPO,
    make_phrase,
    make_seed_phrase,
    write_corpus,
    write_seeds,
)
from jazzgen.tokenizer import tokenize


def test_phrase_fills_twelve_bars_exactly():
    events = make_phrase(random.Random("t1"))
    assert sum(e.duration for e in events) == Fraction(48)
    assert events[0].onset == 0
    for prev, cur in zip(events, events[1:]):
        assert cur.onset == prev.end


def test_phrase_durations_from_pool_except_final_truncation():
    events = make_phrase(random.Random("t2"))
    for event in events[:-1]:
        assert event.duration in DURATIONS
    last = events[-1]
    assert last.duration in DURATIONS or last.end == Fraction(48)


def test_phrase_pitches_on_blues_scale_in_range():
    events = make_phrase(random.Random("t3"))
    pitched = [e for e in events if not e.is_rest]
    assert pitched
    for event in pitched:
        assert event.pitch % 12 in BLUES_PITCH_CLASSES
        assert 48 <= event.pitch <= 84


def test_phrase_never_emits_adjacent_rests():
    for trial in range(10):
        events = make_phrase(random.Random(f"t4:{trial}"))
        for prev, cur in zip(events, events[1:]):
            assert not (prev.is_rest and cur.is_rest)


def test_seed_phrase_is_sixteen_pitched_notes():
    events = make_seed_phrase(random.Random("t5"))
    assert len(events) == SEED_NOTES
    assert all(not e.is_rest for e in events)
    assert len(tokenize(events)) == SEED_NOTES


def test_write_corpus_is_deterministic(tmp_path):
    a = write_corpus(tmp_path / "a", seed=5)
    b = write_corpus(tmp_path / "b", seed=5)
    assert [p.name for p in a] == [p.name for p in b]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_write_corpus_seed_changes_output(tmp_path):
    a = write_corpus(tmp_path / "a", seed=5, n_files=1)
    b = write_corpus(tmp_path / "b", seed=6, n_files=1)
    assert a[0].read_bytes() != b[0].read_bytes()


def test_corpus_files_round_trip(tmp_path):
    paths = write_corpus(tmp_path, seed=0)
    assert len(paths) == 20
    for path in paths:
        doc = read_midi(path.read_bytes())
        assert doc.tempo == TEMPO
        assert sum(e.duration for e in doc.events) == Fraction(48)


def test_seed_files_tokenize_to_sixteen(tmp_path):
    paths = write_seeds(tmp_path, seed=0)
    assert len(paths) == 8
    for path in paths:
        doc = read_midi(path.read_bytes())
        assert len(tokenize(doc.events)) == 16
