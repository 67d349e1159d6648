"""Model loading, serialization round-trips, and topology validation."""

import json
from collections import deque

import pytest

from feedersim.model import (
    Bus,
    DanglingReferenceError,
    ModelError,
    ParseError,
    SchemaVersionError,
    apply_switching,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
    validate_radiality,
)

from conftest import case_path


def bfs_reachable(model, skip_edges=()) -> set:
    """Independent reachability oracle over energized edges."""
    adj = {}
    for e in model.edges():
        if not e.energized or e.id in skip_edges:
            continue
        adj.setdefault(e.from_bus, []).append(e.to_bus)
        adj.setdefault(e.to_bus, []).append(e.from_bus)
    seen = {model.source.bus}
    q = deque([model.source.bus])
    while q:
        b = q.popleft()
        for nb in adj.get(b, ()):
            if nb not in seen:
                seen.add(nb)
                q.append(nb)
    return seen


class TestLoadModel:
    def test_minimal_two_bus(self, case2_model):
        assert len(case2_model.buses) == 2
        assert len(case2_model.segments) == 1
        assert case2_model.segments[0].phases == "ABC"

    def test_dangling_bus_reference(self):
        doc = json.loads(case_path("case2_balanced.json").read_text())
        doc["segments"][0]["to_bus"] = "nowhere"
        with pytest.raises(DanglingReferenceError):
            model_from_dict(doc)

    def test_dangling_conductor_reference(self):
        doc = json.loads(case_path("case2_balanced.json").read_text())
        doc["segments"][0]["phase_wires"]["A"] = "999 XX"
        with pytest.raises(DanglingReferenceError):
            model_from_dict(doc)

    def test_schema_version_mismatch(self):
        doc = json.loads(case_path("case2_balanced.json").read_text())
        doc["schema_version"] = "tsds-model/99"
        with pytest.raises(SchemaVersionError):
            model_from_dict(doc)

    def test_parse_error_reports_line(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{\n "schema_version": "tsds-model/1",\n broken\n}')
        with pytest.raises(ParseError, match="line 3"):
            load_model(bad)

    def test_schema_violation_reports_field(self):
        doc = json.loads(case_path("case2_balanced.json").read_text())
        doc["segments"][0]["length_miles"] = -1.0
        with pytest.raises(ParseError, match="length_miles"):
            model_from_dict(doc)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError, match="cannot read"):
            load_model(tmp_path / "absent.json")

    def test_synthetic_240_node_counts(self, tmp_path):
        from feedersim.timeseries import SynthParams, synth_feeder

        model, _ = synth_feeder(SynthParams(seed=5))
        path = tmp_path / "synth.json"
        save_model(model, path)
        loaded = load_model(path)
        primary = [b for b in loaded.buses if b.nominal_ll_voltage == 13800.0]
        assert len(primary) == 240
        # feeder roots: energized edges leaving the regulated bus
        head = loaded.substation_transformer.to_bus
        roots = [e for e in loaded.edges()
                 if e.energized and head in (e.from_bus, e.to_bus)
                 and e.kind != "substation_transformer"]
        assert len(roots) == 3
        # traversal oracle agrees with the stored bus set
        assert bfs_reachable(loaded) == {b.id for b in loaded.buses}


class TestRoundTrip:
    @pytest.mark.parametrize("name", [
        "case2_balanced.json", "case4_unbalanced.json", "case_xfmr.json",
    ])
    def test_case_files(self, name, tmp_path):
        model = load_model(case_path(name))
        out = tmp_path / "again.json"
        save_model(model, out)
        assert load_model(out) == model

    def test_synthetic(self, small_synth, tmp_path):
        model, _ = small_synth
        out = tmp_path / "synth.json"
        save_model(model, out)
        assert load_model(out) == model

    def test_dict_round_trip_is_stable(self, case4_model):
        doc = model_to_dict(case4_model)
        assert model_to_dict(model_from_dict(doc)) == doc


class TestInvariants:
    def test_duplicate_bus_ids_rejected(self):
        doc = json.loads(case_path("case2_balanced.json").read_text())
        doc["buses"].append(dict(doc["buses"][0]))
        with pytest.raises(ModelError, match="duplicate"):
            model_from_dict(doc)

    def test_bus_phase_validation(self):
        with pytest.raises(ValueError):
            Bus("b", "", 13800.0)
        with pytest.raises(ValueError):
            Bus("b", "AD", 13800.0)
        with pytest.raises(ModelError):
            Bus("b", "A", -5.0)
        assert Bus("b", "CBA", 13800.0).phases == "ABC"

    def test_segment_phases_subset_of_endpoints(self):
        doc = json.loads(case_path("case4_unbalanced.json").read_text())
        # b2 only carries AC; a B-phase wire on L2 must be rejected
        doc["segments"][1]["phase_wires"]["B"] = "1/0 ACSR"
        doc["geometries"][1]["positions"]["B"] = [2.5, 29.0]
        with pytest.raises(ModelError, match="phase B"):
            model_from_dict(doc)

    def test_duplicate_customer_rejected(self):
        doc = json.loads(case_path("case_xfmr.json").read_text())
        doc["load_points"][1]["customer_ids"].append("m1")
        with pytest.raises(ModelError, match="m1"):
            model_from_dict(doc)

    def test_tree_edge_count(self, small_synth):
        model, _ = small_synth
        energized = [e for e in model.edges() if e.energized]
        reached = bfs_reachable(model)
        assert len(energized) == len(reached) - 1  # one source root

    def test_load_point_bus_matches_transformer(self):
        doc = json.loads(case_path("case_xfmr.json").read_text())
        doc["load_points"][0]["bus"] = "f1t"
        doc["load_points"][0]["phases"] = "B"
        with pytest.raises(ModelError, match="secondary"):
            model_from_dict(doc)


class TestRadiality:
    def test_clean_tree_empty_report(self, small_synth):
        model, _ = small_synth
        assert validate_radiality(model).empty()

    def test_case_files_clean(self, case2_model, case4_model, xfmr_model):
        for m in (case2_model, case4_model, xfmr_model):
            assert validate_radiality(m).empty()

    def test_closing_tie_creates_one_cycle(self, small_synth):
        model, _ = small_synth
        tie = next(s for s in model.switches if s.normal_state == "open")
        updated, report = apply_switching(model, tie.id, "closed")
        assert len(report.cycles) == 1
        assert updated == model  # rejected, original returned

    def test_opening_head_islands_downstream(self, small_synth):
        model, _ = small_synth
        updated, report = apply_switching(model, "brk_A", "open")
        assert updated != model
        assert len(report.islands) == 1
        expected = {b.id for b in model.buses} - bfs_reachable(updated)
        assert set(report.islands[0]) == expected
        assert all(b.startswith("A") for b in report.islands[0])

    def test_reclose_restores_clean_report(self, small_synth):
        model, _ = small_synth
        opened, _ = apply_switching(model, "brk_A", "open")
        reclosed, report = apply_switching(opened, "brk_A", "closed")
        assert report.empty()
        assert reclosed == model

    def test_idempotent_close(self, small_synth):
        model, _ = small_synth
        same, report = apply_switching(model, "brk_A", "closed")
        assert same is model
        assert report.empty()

    def test_unknown_switch(self, small_synth):
        model, _ = small_synth
        with pytest.raises(DanglingReferenceError):
            apply_switching(model, "no-such-switch", "open")

    def test_phase_containment_violation_detected(self):
        doc = json.loads(case_path("case4_unbalanced.json").read_text())
        # b3 claims phases AB but its supply segment only delivers B
        for b in doc["buses"]:
            if b["id"] == "b3":
                b["phases"] = "AB"
        report = validate_radiality(model_from_dict(doc))
        assert any("b3" in v for v in report.phase_violations)

    def test_validate_exit_contract(self, small_synth):
        model, _ = small_synth
        report = validate_radiality(model)
        assert report.entries() == []
