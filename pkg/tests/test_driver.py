import json
import math
import re
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from diskpack.analysis import RATTLER
from diskpack.cli import main
from diskpack.core import Configuration, Square, dispersion, validity_violations
from diskpack.errors import AllRestartsFailed, ParseError, VersionError
from diskpack.io import RecordStore, dumps, load_packing, loads, save_packing
from diskpack.phase1 import Phase1Params
from diskpack.phase2 import identify_bonds
from diskpack.pipeline import RunSpec, multi_restart, result_from
from diskpack.render import svg_document

CORNERS = np.array([(1, 1), (1, -1), (-1, 1), (-1, -1)], float)


def corner_result():
    cfg = Configuration(CORNERS, 1.0, Square(4))
    return result_from(cfg, identify_bonds(cfg), {"seed": 1, "restart": 0})


@pytest.fixture(scope="module")
def four():
    return multi_restart(RunSpec(4, restarts=5, base_seed=0))


class TestMultiRestart:
    def test_four(self, four):
        assert four.best.m >= 1 - 1e-9
        assert len(four.trace) == 5
        assert four.best.m == max(r.m for r in four.trace)

    def test_two(self):
        out = multi_restart(RunSpec(2, restarts=3))
        assert out.best.m == pytest.approx(math.sqrt(2), abs=1e-9)

    def test_more_restarts_never_worse(self):
        one = multi_restart(RunSpec(7, restarts=1, base_seed=3)).best.m
        ten = multi_restart(RunSpec(7, restarts=10, base_seed=3)).best.m
        assert ten >= one

    def test_parallel_matches_serial(self):
        spec = RunSpec(6, restarts=4, base_seed=11)
        a, b = multi_restart(spec), multi_restart(spec, workers=2)
        assert dumps(a.best) == dumps(b.best)
        assert [r.m for r in a.trace] == [r.m for r in b.trace]

    def test_all_failed(self):
        spec = RunSpec(30, restarts=2, phase1=Phase1Params(init_box_side=6.0))
        with pytest.raises(AllRestartsFailed):
            multi_restart(spec)

    def test_rejects_zero_restarts(self):
        with pytest.raises(ValueError):
            RunSpec(4, restarts=0)

    def test_provenance(self, four):
        prov = four.best.provenance
        assert {"seed", "restart", "version", "phase1_sweeps", "phase2_events"} <= prov.keys()
        assert prov["seed"] == prov["restart"]


class TestPackingFile:
    def test_round_trip(self, four):
        back = loads(dumps(four.best))
        assert np.array_equal(back.configuration.centers, four.best.configuration.centers)
        assert back.configuration.radius == four.best.configuration.radius
        assert back.configuration.region == four.best.configuration.region
        assert back.m == four.best.m
        assert back.bond_graph.disk_edges == four.best.bond_graph.disk_edges
        assert back.bond_graph.wall_edges == four.best.bond_graph.wall_edges
        assert back.labels == four.best.labels
        assert back.provenance == four.best.provenance

    @pytest.mark.parametrize("shape", ["circle", "triangle", "rectangle"])
    def test_round_trip_other_regions(self, shape):
        res = multi_restart(RunSpec(5, shape=shape)).best
        back = loads(dumps(res))
        assert np.array_equal(back.configuration.centers, res.configuration.centers)
        assert back.configuration.region == res.configuration.region

    def test_file_on_disk(self, tmp_path, four):
        p = tmp_path / "x.pack"
        save_packing(four.best, p)
        assert dumps(load_packing(p)) == p.read_text()

    def test_truncated(self, four):
        text = dumps(four.best)
        with pytest.raises(ParseError, match=r"line \d+"):
            loads("\n".join(text.splitlines()[:12]))

    def test_garbage_line(self, four):
        lines = dumps(four.best).splitlines()
        lines[9] = "3 1.0 notanumber"
        with pytest.raises(ParseError, match="line 10"):
            loads("\n".join(lines))

    def test_version(self, four):
        with pytest.raises(VersionError):
            loads(dumps(four.best).replace("diskpack-packing 1", "diskpack-packing 2", 1))

    def test_overlap_loads_then_fails_validity(self):
        res = corner_result()
        res.configuration.centers[0] -= 0.1
        back = loads(dumps(res))
        assert validity_violations(back.configuration)

    def test_m_consistent_with_centers(self, four):
        back = loads(dumps(four.best))
        assert dispersion(back.configuration) == pytest.approx(back.m, abs=1e-12)


class TestRecordStore:
    def test_never_regresses(self, tmp_path, four):
        store = RecordStore(tmp_path)
        assert store.insert(four.best)
        worse = replace(four.best, m=four.best.m - 0.1)
        assert not store.insert(worse)
        tie = replace(four.best, m=four.best.m + 1e-13)
        assert not store.insert(tie)
        kept = store.get("square", 4)
        assert kept.m == four.best.m and "timestamp" in kept.provenance

    def test_improvement_replaces(self, tmp_path):
        store = RecordStore(tmp_path)
        a = multi_restart(RunSpec(7, restarts=1, base_seed=0)).best
        b = multi_restart(RunSpec(7, restarts=1, base_seed=1)).best
        low, high = sorted((a, b), key=lambda r: r.m)
        store.insert(low)
        if high.m > low.m + 1e-12:
            assert store.insert(high)
        assert store.get("square", 7).m == high.m
        assert store.get("square", 8) is None


class TestRender:
    def test_corners(self):
        doc = svg_document(corner_result())
        assert doc.count('class="disk') == 4
        assert doc.count('class="bond"') == 12
        assert doc.count('class="disk anchored"') == 4
        for k in range(1, 5):
            assert f">{k}</text>" in doc
        assert "n = 4, m = 1, bonds = 12" in doc
        assert 'version="1.1"' in doc

    def test_single_disk(self):
        cfg = Configuration(np.zeros((1, 2)), 1.0, Square(2))
        doc = svg_document(result_from(cfg, identify_bonds(cfg), {}))
        assert doc.count('class="disk') == 1 and doc.count('class="bond"') == 4
        loose = Configuration(np.zeros((1, 2)), 1.0, Square(3))
        doc = svg_document(result_from(loose, identify_bonds(loose), {}))
        assert doc.count('class="bond"') == 0 and 'class="disk rattler"' in doc

    def test_rattler_white(self):
        cfg = Configuration(np.array([(-1, -1), (1, -1), (0, 1.5)]), 1.0, Square(6))
        res = result_from(cfg, identify_bonds(cfg), {})
        assert res.labels[2] == RATTLER
        assert re.search(r'class="disk rattler"[^>]*fill="#ffffff"', svg_document(res))

    def test_bond_dot_positions(self):
        doc = svg_document(corner_result())
        dots = re.findall(r'class="bond" cx="([\d.]+)" cy="([\d.]+)"', doc)
        # 1000 viewport, 5% margin, half extent 2: one unit is 225 px
        assert ("500.000", "275.000") in dots  # midpoint of disks at (1, 1) and (-1, 1)
        assert ("950.000", "275.000") in dots  # right wall foot of the disk at (1, 1)


class TestCli:
    def test_pack_analyze_verify_render(self, tmp_path, capsys):
        out = tmp_path / "four.pack"
        assert main(["pack", "--n", "4", "--restarts", "3", "--seed", "7", "--out", str(out)]) == 0
        assert load_packing(out).m >= 1 - 1e-9

        assert main(["analyze", str(out)]) == 0
        text = capsys.readouterr().out
        assert "bonds: 12" in text and "rattlers: 0" in text
        assert re.search(r"mirror symmetry: (vertical|horizontal|diagonal|antidiagonal)", text)

        assert main(["verify", str(out)]) == 0
        assert main(["render", str(out), "--out", str(tmp_path / "four.svg")]) == 0
        assert (tmp_path / "four.svg").read_text().count('class="bond"') == 12

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.pack", tmp_path / "b.pack"
        args = ["pack", "--n", "9", "--restarts", "2", "--seed", "5"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_verify_corrupted(self, tmp_path, capsys):
        res = corner_result()
        res.configuration.centers[0] -= 0.1
        p = tmp_path / "bad.pack"
        save_packing(res, p)
        assert main(["verify", str(p)]) == 2
        text = capsys.readouterr().out
        assert "overlap" in text and "verify: FAIL" in text

    def test_usage_error(self, capsys):
        assert main(["pack", "--n", "four"]) == 1
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "usage"

    def test_parse_error(self, tmp_path, capsys):
        p = tmp_path / "t.pack"
        p.write_text("diskpack-packing 1\nn 4\n")
        assert main(["analyze", str(p)]) == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "parse_error" and "line" in err["message"]

    def test_bench(self, capsys):
        assert main(["bench", "--n", "6", "--restarts", "1"]) == 0
        text = capsys.readouterr().out
        assert "digits-vs-time" in text

    def test_console_script(self, tmp_path):
        out = subprocess.run([sys.executable, "-m", "diskpack.cli", "--version"],
                             capture_output=True, text=True)
        assert out.returncode == 0 and "diskpack" in out.stdout
