"""Tests for artifact tables and the run manifest digest."""

import json

from ddnm import artifacts


def make_manifest(**kw):
    base = dict(
        command="backtest",
        config_text="rho = 0.3\n",
        input_digest="abc123",
        seed=7,
        version="0.1.0",
    )
    base.update(kw)
    return artifacts.RunManifest(**base)


class TestDigest:
    def test_ignores_timings(self):
        a = make_manifest()
        b = make_manifest()
        b.timings["fit_seconds"] = 123.4
        assert artifacts.manifest_digest(a) == artifacts.manifest_digest(b)

    def test_sensitive_to_core_fields(self):
        base = artifacts.manifest_digest(make_manifest())
        assert artifacts.manifest_digest(make_manifest(seed=8)) != base
        assert artifacts.manifest_digest(make_manifest(config_text="rho = 0.4\n")) != base
        assert artifacts.manifest_digest(make_manifest(input_digest="def")) != base
        assert artifacts.manifest_digest(make_manifest(command="fit")) != base

    def test_digest_is_hex_and_stable(self):
        d = artifacts.manifest_digest(make_manifest())
        assert len(d) == 64
        int(d, 16)
        assert d == artifacts.manifest_digest(make_manifest())


class TestWriters:
    def test_table_layout(self, tmp_path):
        p = tmp_path / "t.csv"
        artifacts.write_table(p, "deadbeef", ["date", "x"], [["2005-01-03", 0.1], ["2005-01-04", 2]])
        lines = p.read_text().splitlines()
        assert lines[0] == "# manifest: deadbeef"
        assert lines[1] == "date,x"
        assert lines[2] == "2005-01-03,0.1"
        assert lines[3] == "2005-01-04,2"

    def test_rewrite_is_byte_identical(self, tmp_path):
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        rows = [["r", 1 / 3, -0.25], ["s", 1e-9, 12.0]]
        artifacts.write_table(p1, "d", ["k", "u", "v"], rows)
        artifacts.write_table(p2, "d", ["k", "u", "v"], rows)
        assert p1.read_bytes() == p2.read_bytes()

    def test_float_cells_round_trip(self, tmp_path):
        p = tmp_path / "t.csv"
        artifacts.write_table(p, "d", ["v"], [[1 / 3]])
        body = p.read_text().splitlines()[2]
        assert float(body) == 1 / 3

    def test_manifest_json(self, tmp_path):
        man = make_manifest()
        man.timings["total_seconds"] = 1.5
        p = tmp_path / "manifest.json"
        artifacts.write_manifest(man, p)
        blob = json.loads(p.read_text())
        assert blob["digest"] == artifacts.manifest_digest(man)
        assert blob["seed"] == 7
        assert blob["timings"]["total_seconds"] == 1.5
        assert blob["config_text"] == "rho = 0.3\n"

    def test_input_digest_tracks_file_content(self, tmp_path):
        f = tmp_path / "x.csv"
        f.write_text("date,A\n2005-01-03,1.0\n")
        d1 = artifacts.input_digest(f)
        f.write_text("date,A\n2005-01-03,2.0\n")
        d2 = artifacts.input_digest(f)
        assert d1 != d2
        assert len(d1) == 64
