"""Synthetic system generator: determinism, structure, and calibration."""

import numpy as np
import pytest

from feedersim.model import model_to_dict, validate_radiality
from feedersim.timeseries import SynthParams, synth_feeder
from feedersim.timeseries.synth import (
    TRANSFORMER_CATALOG_1PH,
    TRANSFORMER_CATALOG_3PH,
)


class TestDeterminism:
    def test_same_seed_bit_identical(self):
        p = SynthParams(seed=9, primary_nodes=40, customers=120)
        m1, d1 = synth_feeder(p)
        m2, d2 = synth_feeder(p)
        assert model_to_dict(m1) == model_to_dict(m2)
        assert list(d1) == list(d2)
        for mid in d1:
            assert np.array_equal(d1[mid].kwh, d2[mid].kwh)

    def test_different_seed_differs(self):
        m1, d1 = synth_feeder(SynthParams(seed=9, primary_nodes=40, customers=120))
        m2, d2 = synth_feeder(SynthParams(seed=10, primary_nodes=40, customers=120))
        assert model_to_dict(m1) != model_to_dict(m2)
        first = sorted(d1)[0]
        assert not np.array_equal(d1[first].kwh, d2[first].kwh)


@pytest.fixture(scope="module")
def full():
    return synth_feeder(SynthParams(seed=5))


class TestStructure:

    def test_radial_by_construction(self, full):
        model, _ = full
        assert validate_radiality(model).empty()

    def test_primary_node_count(self, full):
        model, _ = full
        primary = [b for b in model.buses if b.nominal_ll_voltage == 13800.0]
        assert len(primary) == 240

    def test_customer_count(self, full):
        model, _ = full
        total = sum(len(lp.customer_ids) for lp in model.load_points)
        assert total == 1120

    def test_switch_inventory(self, full):
        model, _ = full
        nc = [s for s in model.switches if s.normal_state == "closed"]
        no = [s for s in model.switches if s.normal_state == "open"]
        assert len(nc) == 6
        assert len(no) == 3
        assert len(model.switches) == 9

    def test_capacitors_on_feeders_b_and_c(self, full):
        model, _ = full
        assert len(model.capacitors) == 2
        assert {c.id for c in model.capacitors} == {"cap_B", "cap_C"}
        for cap in model.capacitors:
            assert cap.kvar == 50.0
            assert cap.connection == "gwye"
            assert cap.state == "on"
            assert cap.bus.startswith(cap.id[-1])

    def test_three_feeders(self, full):
        model, _ = full
        heads = [s for s in model.switches if s.id.startswith("brk_")]
        assert len(heads) == 3
        assert all(s.from_bus == "bus1" for s in heads)

    def test_transformer_ratings_from_catalog(self, full):
        model, _ = full
        for tr in model.transformers:
            catalog = (TRANSFORMER_CATALOG_3PH if tr.phases == "ABC"
                       else TRANSFORMER_CATALOG_1PH)
            assert tr.rating_kva in catalog
            r, x = catalog[tr.rating_kva]
            assert (tr.r_pct, tr.x_pct) == (r, x)

    def test_every_customer_mapped_once(self, full):
        model, _ = full
        seen = set()
        for lp in model.load_points:
            for c in lp.customer_ids:
                assert c not in seen
                seen.add(c)
        assert len(seen) == 1120

    def test_substation_and_regulator(self, full):
        model, _ = full
        st = model.substation_transformer
        assert st.rating_kva == 10000.0
        assert st.connection == "delta-gwye"
        assert (st.hi_ll_voltage, st.lo_ll_voltage) == (69000.0, 13800.0)
        reg = st.regulator
        assert (reg.setpoint_v120, reg.bandwidth_v120) == (123.0, 2.0)
        assert (reg.vmax_v120, reg.vmin_v120) == (129.0, 110.0)
        assert reg.steps == 16
        assert reg.winding_kv == 7.9674
        assert reg.winding_kva == 3500.0

    def test_source_sequence_impedances(self, full):
        model, _ = full
        assert model.source.z1 == complex(4.5426, 10.5274)
        assert model.source.z0 == complex(7.3655, 24.5046)

    def test_mixed_construction(self, full):
        model, _ = full
        kinds = {s.construction for s in model.segments}
        assert kinds == {"overhead", "underground"}

    def test_phase_balanced_customers(self, full):
        model, _ = full
        per_phase = {p: 0 for p in "ABC"}
        for lp in model.load_points:
            n = len(lp.customer_ids)
            for p in lp.phases:
                per_phase[p] += n / len(lp.phases)
        counts = sorted(per_phase.values())
        assert counts[-1] - counts[0] < 0.25 * counts[-1]


@pytest.fixture(scope="module")
def meters():
    _, data = synth_feeder(SynthParams(seed=5, primary_nodes=40, customers=120))
    return data


class TestLoadShapes:

    def test_all_samples_clean(self, meters):
        for s in meters.values():
            assert np.all(s.flags == 0)
            assert np.all(s.kwh >= 0)
            assert np.all(np.isfinite(s.kwh))

    def test_seasonal_humps(self, meters):
        total = sum(s.kwh for s in meters.values())
        daily = total.reshape(365, 24).sum(axis=1)
        january = daily[:31].mean()
        april = daily[90:120].mean()
        july = daily[181:212].mean()
        october = daily[273:304].mean()
        assert january > april * 1.15
        assert july > april * 1.1
        assert january > october * 1.15

    def test_peak_near_rating(self):
        model, meters = synth_feeder(SynthParams(seed=5))
        total_kw = sum(s.kwh for s in meters.values())
        peak_mw = total_kw.max() / 1000.0
        assert 5.8 <= peak_mw <= 9.8  # substation adds losses on top
