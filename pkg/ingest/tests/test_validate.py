import json

from womd_ingest.cli import main
from womd_ingest.convert import convert
from womd_ingest.validate import validate_file

from fixtures import driving_scenario, write_sample_tfrecord


def converted_file(tmp_path):
    source = tmp_path / "sample.tfrecord"
    write_sample_tfrecord(source, [driving_scenario("rec-a"), driving_scenario("rec-b")])
    out = tmp_path / "out.jsonl"
    convert([str(source)], str(out))
    return out


def test_converter_output_is_clean(tmp_path):
    out = converted_file(tmp_path)
    report = validate_file(out)
    assert report.ok
    assert report.lines_checked == 2


def test_truncated_line_reported_with_number(tmp_path):
    out = converted_file(tmp_path)
    text = out.read_text().splitlines()
    text[1] = text[1][:40]  # chop mid-JSON
    out.write_text("\n".join(text) + "\n")
    report = validate_file(out)
    assert not report.ok
    assert report.findings[0][0] == 2
    assert "invalid JSON" in report.findings[0][1]


def test_corrupted_lane_norm_flagged(tmp_path):
    out = converted_file(tmp_path)
    lines = [json.loads(line) for line in out.read_text().splitlines()]
    lines[0]["lane_vectors"][0][2] = 1.5
    lines[0]["lane_vectors"][0][3] = 0.0
    out.write_text("\n".join(json.dumps(line) for line in lines) + "\n")
    report = validate_file(out)
    assert any("not unit" in message for _, message in report.findings)


def test_wrong_lengths_flagged(tmp_path):
    out = tmp_path / "bad.jsonl"
    out.write_text(json.dumps({"id": "x", "history": [[0.0] * 9] * 10,
                               "future": [[0.0, 0.0]] * 20, "lane_vectors": []}) + "\n")
    report = validate_file(out)
    assert any("history" in message for _, message in report.findings)


def test_cli_validate_exit_codes(tmp_path, capsys):
    out = converted_file(tmp_path)
    assert main(["validate", str(out)]) == 0
    assert "ok" in capsys.readouterr().out

    bad = tmp_path / "bad.jsonl"
    bad.write_text("{\"id\": 3}\n")
    assert main(["validate", str(bad)]) == 1
    assert main(["validate", str(tmp_path / "missing.jsonl")]) == 2
