"""JSONL record store: keyed resume, byte-identical reruns, CSV tables."""

import json

import pytest

from morphoplast.records import (
    RecordWriter,
    make_header,
    provenance_comment,
    read_csv,
    read_records,
    record_key,
    write_csv,
)

HEADER = make_header("sweep", "deadbeefcafef00d", seed=7)


def sample_record(i=0, eta=-0.01):
    return {
        "network_id": f"net{i}",
        "env": "cartpole",
        "eta": eta,
        "lambda": 0.001,
        "mode": "plastic",
        "rewards": [10.0 + i, 20.0],
    }


def test_record_key_fields():
    assert record_key(sample_record(3)) == ("net3", "cartpole", -0.01, 0.001, "plastic")


def test_writer_appends_and_dedupes(tmp_path):
    path = tmp_path / "records.jsonl"
    with RecordWriter(path, HEADER) as writer:
        assert writer.append(sample_record(0)) is True
        assert writer.append(sample_record(1)) is True
        assert writer.append(sample_record(0)) is False  # same key: skipped
        assert len(writer) == 2
    header, records = read_records(path)
    assert header["kind"] == "sweep"
    assert [r["network_id"] for r in records] == ["net0", "net1"]


def test_rerun_is_byte_identical(tmp_path):
    path = tmp_path / "records.jsonl"

    def run():
        with RecordWriter(path, HEADER) as writer:
            for i in range(4):
                writer.append(sample_record(i))
        return path.read_bytes()

    first = run()
    second = run()  # resume: every key already present
    assert first == second


def test_resume_skips_existing_keys(tmp_path):
    path = tmp_path / "records.jsonl"
    with RecordWriter(path, HEADER) as writer:
        writer.append(sample_record(0))
    with RecordWriter(path, HEADER) as writer:
        assert writer.append(sample_record(0)) is False
        assert writer.append(sample_record(1)) is True
    _, records = read_records(path)
    assert len(records) == 2


def test_header_mismatch_rejected(tmp_path):
    path = tmp_path / "records.jsonl"
    with RecordWriter(path, HEADER):
        pass
    other = make_header("sweep", "0123456789abcdef", seed=7)
    with pytest.raises(ValueError, match="header"):
        RecordWriter(path, other)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    with pytest.raises(ValueError, match="empty"):
        read_records(path)


def test_unsupported_schema_rejected(tmp_path):
    path = tmp_path / "future.jsonl"
    path.write_text(json.dumps({"schema": 99, "kind": "sweep"}) + "\n")
    with pytest.raises(ValueError, match="schema"):
        read_records(path)


def test_records_have_stable_serialisation(tmp_path):
    path = tmp_path / "records.jsonl"
    with RecordWriter(path, HEADER) as writer:
        writer.append({"network_id": "n", "env": "e", "eta": 0.5,
                       "lambda": 0.0, "mode": "plastic", "z": 1, "a": 2})
    line = path.read_text().splitlines()[1]
    assert line.index('"a"') < line.index('"z"')  # sorted keys
    assert " " not in line


def test_custom_key_fn(tmp_path):
    path = tmp_path / "k.jsonl"
    with RecordWriter(path, HEADER, key_fn=lambda r: r["idx"]) as writer:
        assert writer.append({"idx": 1, "payload": "x"})
        assert not writer.append({"idx": 1, "payload": "different"})
    _, records = read_records(path)
    assert records == [{"idx": 1, "payload": "x"}]


def test_csv_round_trip(tmp_path):
    path = tmp_path / "table.csv"
    rows = [
        {"stratum": "Weak", "n": 3, "delta": 1.5},
        {"stratum": "Perfect", "n": 1, "delta": ""},
    ]
    write_csv(path, ("stratum", "n", "delta"), rows, HEADER)
    provenance, back = read_csv(path)
    assert provenance == provenance_comment(HEADER)
    assert "config_hash=deadbeefcafef00d" in provenance
    assert back[0]["stratum"] == "Weak"
    assert back[1]["delta"] == ""


def test_csv_requires_provenance(tmp_path):
    path = tmp_path / "bare.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="provenance"):
        read_csv(path)
