import json
import math

import pytest

from womd_ingest import womd
from womd_ingest.cli import main
from womd_ingest.convert import convert

from fixtures import driving_scenario, scenario_bytes, state_bytes, track_bytes, write_sample_tfrecord


@pytest.fixture()
def sample_file(tmp_path):
    path = tmp_path / "sample.tfrecord"
    write_sample_tfrecord(
        path,
        [
            driving_scenario("rec-a", n_steps=60, heading=0.3),
            driving_scenario("rec-b", n_steps=45, heading=-1.2, speed=5.0,
                             current_time_index=20),
        ],
    )
    return str(path)


def read_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


class TestParse:
    def test_scenario_fields_round_trip(self, sample_file):
        from womd_ingest.tfrecord import read_records

        parsed = womd.parse_scenario(read_records(sample_file)[0])
        assert parsed.scenario_id == "rec-a"
        assert parsed.sdc_track_index == 1
        assert parsed.current_time_index == 10
        assert len(parsed.sdc_states) == 60
        assert parsed.sdc_object_type == womd.OBJECT_TYPE_VEHICLE
        assert len(parsed.lane_polylines) == 2
        assert parsed.timestamps[:3] == [0.0, 0.1, 0.2]

    def test_lane_direction_samples_are_unit(self, sample_file):
        from womd_ingest.tfrecord import read_records

        parsed = womd.parse_scenario(read_records(sample_file)[0])
        s0 = parsed.sdc_states[10]
        rows = womd.lane_direction_samples(parsed.lane_polylines, (s0.x, s0.y), 50.0)
        assert rows
        for _, _, dx, dy in rows:
            assert abs(math.hypot(dx, dy) - 1.0) < 1e-9


class TestConvert:
    def test_emits_valid_windows(self, sample_file, tmp_path):
        out = tmp_path / "out.jsonl"
        manifest = convert([sample_file], str(out))
        lines = read_lines(out)
        assert manifest.scenarios_emitted == 2 == len(lines)
        assert manifest.records_scanned == 2
        for line in lines:
            assert len(line["history"]) == 11
            assert all(len(row) == 9 for row in line["history"])
            assert len(line["future"]) == 20
            assert line["lane_vectors"]

    def test_anchor_is_current_time_index(self, sample_file, tmp_path):
        out = tmp_path / "out.jsonl"
        convert([sample_file], str(out))
        ids = [line["id"] for line in read_lines(out)]
        assert ids == ["rec-a@10", "rec-b@20"]

    def test_limit(self, sample_file, tmp_path):
        out = tmp_path / "out.jsonl"
        manifest = convert([sample_file], str(out), limit=1)
        assert manifest.scenarios_emitted == 1
        assert len(read_lines(out)) == 1

    def test_stride_multiplies_windows(self, sample_file, tmp_path):
        out = tmp_path / "out.jsonl"
        manifest = convert([sample_file], str(out), stride=10)
        ids = [line["id"] for line in read_lines(out)]
        # rec-a: anchors 10,20,30 (60 steps); rec-b: 10,20 (45 steps)
        assert ids == ["rec-a@10", "rec-a@20", "rec-a@30", "rec-b@10", "rec-b@20"]
        assert manifest.scenarios_emitted == 5

    def test_deterministic_bytes(self, sample_file, tmp_path):
        out_a, out_b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        convert([sample_file], str(out_a))
        convert([sample_file], str(out_b))
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_skip_reasons(self, tmp_path):
        records = [
            driving_scenario("bad-window", invalid_steps=(15,)),  # future invalid
            driving_scenario("short", n_steps=25),  # 10 + 20 needs 31 steps
            scenario_bytes("no-sdv", [], sdc_index=0, current_time_index=10,
                           lanes=[], n_steps=40),
            driving_scenario("early-anchor", current_time_index=5),
        ]
        path = tmp_path / "mixed.tfrecord"
        write_sample_tfrecord(path, records)
        out = tmp_path / "out.jsonl"
        manifest = convert([str(path)], str(out))
        assert manifest.scenarios_emitted == 0
        assert manifest.skipped == {
            "invalid-state": 1,
            "short-future": 1,
            "no-sdv-track": 1,
            "short-history": 1,
        }
        assert manifest.records_scanned == 4

    def test_unreadable_file_reported_per_file(self, tmp_path):
        missing = tmp_path / "nope.tfrecord"
        garbled = tmp_path / "garbled.tfrecord"
        garbled.write_bytes(b"not a tfrecord at all")
        out = tmp_path / "out.jsonl"
        manifest = convert([str(missing), str(garbled)], str(out))
        assert set(manifest.file_errors) == {str(missing), str(garbled)}
        assert manifest.scenarios_emitted == 0

    def test_yaw_rate_sources(self, tmp_path):
        # constant heading but rotating velocity vector: the two flags disagree
        n = 40
        states = []
        for step in range(n):
            angle = 0.05 * step
            states.append(
                state_bytes(x=10.0 + step, y=0.0, vx=5 * math.cos(angle),
                            vy=5 * math.sin(angle), heading=0.7)
            )
        record = scenario_bytes(
            "spin", [track_bytes(1, 1, states)], sdc_index=0, current_time_index=12,
            lanes=[], n_steps=n,
        )
        path = tmp_path / "spin.tfrecord"
        write_sample_tfrecord(path, [record])
        out_h = tmp_path / "h.jsonl"
        out_v = tmp_path / "v.jsonl"
        convert([str(path)], str(out_h), yaw_rate_source="heading-diff")
        convert([str(path)], str(out_v), yaw_rate_source="velocity-diff")
        rate_h = read_lines(out_h)[0]["history"][5][5]
        rate_v = read_lines(out_v)[0]["history"][5][5]
        assert rate_h == pytest.approx(0.0, abs=1e-6)
        assert rate_v == pytest.approx(0.5, abs=1e-2)

    def test_cli_convert_writes_manifest(self, sample_file, tmp_path, capsys):
        out = tmp_path / "out.jsonl"
        manifest_path = tmp_path / "manifest.json"
        code = main(["convert", "--in", sample_file, "--out", str(out),
                     "--manifest", str(manifest_path)])
        assert code == 0
        payload = json.loads(manifest_path.read_text())
        assert payload["scenarios_emitted"] == 2
        assert payload["tool_version"]
        stdout = capsys.readouterr().out
        assert '"scenarios_emitted": 2' in stdout
