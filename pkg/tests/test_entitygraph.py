import datetime as dt

import pytest

from amlworkbench.dates import MalformedRecordError
from amlworkbench.entitygraph import (
    RelationEdge,
    SchemaError,
    add_doc_ids,
    build_edge_list,
    join_relations,
    make_doc_id,
    read_edges,
    relation_duration,
    resolve_entities,
    write_edges,
)
from amlworkbench.synthbank import CorpusConfig, generate_corpus


# -- independent oracles ------------------------------------------------------


def month_span_oracle(start: dt.date, end: dt.date) -> int:
    """Whole months via day-overflow anniversaries (independent derivation)."""
    months = 0
    while True:
        total = start.month - 1 + months + 1
        y = start.year + total // 12
        m = total % 12 + 1
        anniversary = dt.date(y, m, 1) + dt.timedelta(days=start.day - 1)
        if anniversary <= end:
            months += 1
        else:
            return months


def nested_loop_plcr(parties, links, customers, risk):
    rows = []
    for p in parties:
        for l in links:
            if (p["bank_id"], p["related_party_id"]) != (
                l["bank_id"], l["related_party_id"],
            ):
                continue
            for c in customers:
                if (l["bank_id"], l["customer_id"]) != (
                    c["bank_id"], c["customer_id"],
                ):
                    continue
                matches = [
                    r for r in risk
                    if (r["bank_id"], r["customer_id"])
                    == (c["bank_id"], c["customer_id"])
                ]
                rows.append((p, l, c, matches[0] if matches else None))
    return rows


class TestDocId:
    def test_individual_prefix(self):
        assert make_doc_id("P1234", None) == "individual_P1234"

    def test_company_prefix(self):
        assert make_doc_id(None, "C77") == "company_C77"

    def test_both_absent_errors(self):
        with pytest.raises(MalformedRecordError):
            make_doc_id(None, None)
        with pytest.raises(MalformedRecordError):
            make_doc_id("", "  ")

    def test_both_present_errors(self):
        with pytest.raises(MalformedRecordError):
            make_doc_id("P1", "C1")

    def test_normalization_pass(self):
        assert make_doc_id(" p12 ", None, normalize=True) == "individual_p12"
        assert make_doc_id(" p12 ", None, normalize=False) == "individual_ p12 "


class TestResolve:
    def test_shared_doc_shares_entity(self):
        rows = [{"doc_id": d} for d in ["A", "B", "A", "C", "B"]]
        resolved, count = resolve_entities(rows)
        assert count == 3
        assert resolved[0]["entity_id"] == resolved[2]["entity_id"]
        assert resolved[1]["entity_id"] == resolved[4]["entity_id"]
        assert resolved[0]["entity_id"] != resolved[1]["entity_id"]

    def test_empty_table(self):
        resolved, count = resolve_entities([])
        assert resolved == [] and count == 0

    def test_hash_set_oracle_on_synthetic_parties(self):
        corpus, _ = generate_corpus(
            CorpusConfig.from_scale(0.002, seed=3, planted_collecting=3,
                                    planted_layered=3)
        )
        parties = add_doc_ids(corpus.parties)
        _, count = resolve_entities(parties)
        assert count == len({p["doc_id"] for p in parties})

    def test_noise_switch_exercises_normalization(self):
        # injected identifier noise splits entities unless the
        # trim/casefold pass is enabled
        cfg = CorpusConfig.from_scale(0.005, seed=201, planted_collecting=3,
                                      planted_layered=3, inject_noise=True)
        corpus, _ = generate_corpus(cfg)
        noisy = [c for c in corpus.customers if c["id_doc_number"].startswith(" ")]
        assert noisy, "noise switch produced no dirty identifiers"
        raw, n_raw = resolve_entities(add_doc_ids(corpus.customers))
        norm, n_norm = resolve_entities(add_doc_ids(corpus.customers, normalize=True))
        assert n_norm < n_raw

    def test_idempotent_and_permutation_stable_count(self):
        rows = [{"doc_id": d} for d in ["X", "Y", "X", "Z", "Y", "Q"]]
        once, n1 = resolve_entities(rows)
        twice, n2 = resolve_entities(once)
        assert n1 == n2 == 4
        assert [r["entity_id"] for r in once] == [r["entity_id"] for r in twice]
        _, n3 = resolve_entities(list(reversed(rows)))
        assert n3 == n1


class TestRelationDuration:
    def test_two_years(self):
        assert relation_duration("2017-01-15", "2019-01-15", "2020-01-01") == 24

    def test_same_day_zero(self):
        assert relation_duration("2018-03-03", "2018-03-03", "2020-01-01") == 0

    def test_open_ended_uses_corpus_end(self):
        start = dt.date(2018, 1, 1)
        assert relation_duration(start, None, start + dt.timedelta(days=45)) == 1
        assert relation_duration(start, "", start + dt.timedelta(days=45)) == 1

    def test_start_after_end_errors(self):
        with pytest.raises(MalformedRecordError):
            relation_duration("2019-01-01", "2018-01-01", "2020-01-01")

    def test_calendar_oracle_randomized(self):
        import numpy as np

        rng = np.random.Generator(np.random.PCG64(17))
        base = dt.date(1970, 1, 1)
        for _ in range(500):
            s = base + dt.timedelta(days=int(rng.integers(0, 20000)))
            e = s + dt.timedelta(days=int(rng.integers(0, 20000)))
            assert relation_duration(s, e, e) == month_span_oracle(s, e), (s, e)


class TestJoin:
    def _mini_tables(self):
        parties = [{
            "bank_id": "1", "related_party_id": "RP1", "entity_id": "E000001",
        }]
        links = [{
            "bank_id": "1", "related_party_id": "RP1", "customer_id": "CU1",
            "relation_start_date": "2017-01-01", "relation_end_date": "2018-01-01",
        }]
        customers = [{
            "bank_id": "1", "customer_id": "CU1", "entity_id": "E000009",
        }]
        return parties, links, customers

    def test_left_join_keeps_row_without_risk(self):
        parties, links, customers = self._mini_tables()
        rows = list(join_relations(parties, links, customers, []))
        assert len(rows) == 1
        assert rows[0]["fincrime_risk_exit"] is None
        assert rows[0]["party_entity_id"] == "E000001"
        assert rows[0]["customer_entity_id"] == "E000009"

    def test_customer_linked_via_two_parties_gives_two_rows(self):
        parties = [
            {"bank_id": "1", "related_party_id": "RP1", "entity_id": "E1"},
            {"bank_id": "1", "related_party_id": "RP2", "entity_id": "E2"},
        ]
        links = [
            {"bank_id": "1", "related_party_id": "RP1", "customer_id": "CU1",
             "relation_start_date": "2017-01-01", "relation_end_date": ""},
            {"bank_id": "1", "related_party_id": "RP2", "customer_id": "CU1",
             "relation_start_date": "2017-02-01", "relation_end_date": ""},
        ]
        customers = [{"bank_id": "1", "customer_id": "CU1", "entity_id": "E9"}]
        rows = list(join_relations(parties, links, customers, []))
        assert len(rows) == 2

    def test_missing_key_columns(self):
        with pytest.raises(SchemaError):
            list(join_relations([{"bank_id": "1"}], [], [], []))

    def test_nested_loop_oracle_on_synthetic_corpus(self):
        corpus, _ = generate_corpus(
            CorpusConfig.from_scale(0.00125, seed=5, planted_collecting=3,
                                    planted_layered=3)
        )
        customers = add_doc_ids(corpus.customers)
        customers, _ = resolve_entities(customers)
        parties = add_doc_ids(corpus.parties)
        parties, _ = resolve_entities(parties)
        rows = list(
            join_relations(parties, corpus.links, customers, corpus.risk)
        )
        oracle = nested_loop_plcr(parties, corpus.links, customers, corpus.risk)
        assert len(rows) == len(oracle)


class TestEdgeList:
    def test_tuple_shape(self):
        plcr = [{
            "bank_id": "3", "party_entity_id": "E1", "customer_entity_id": "E9",
            "relation_start_date": "2016-01-10", "relation_end_date": "2018-01-10",
            "fincrime_risk_exit": None,
        }]
        edges, stats, flags = build_edge_list(plcr, "2019-01-01")
        assert edges == [RelationEdge("E1", "3__E9", 24)]
        assert stats.nodes == 2 and stats.edges == 1
        assert flags == {"E1": False, "3__E9": False}

    def test_same_pair_via_two_banks_keeps_both(self):
        plcr = [
            {"bank_id": "3", "party_entity_id": "E1", "customer_entity_id": "E9",
             "relation_start_date": "2016-01-10", "relation_end_date": "2018-01-10",
             "fincrime_risk_exit": None},
            {"bank_id": "5", "party_entity_id": "E1", "customer_entity_id": "E9",
             "relation_start_date": "2016-01-10", "relation_end_date": "2018-01-10",
             "fincrime_risk_exit": None},
        ]
        edges, stats, _ = build_edge_list(plcr, "2019-01-01")
        assert len(edges) == 2
        assert {e.id2 for e in edges} == {"3__E9", "5__E9"}

    def test_exact_duplicate_triple_dropped(self):
        row = {
            "bank_id": "3", "party_entity_id": "E1", "customer_entity_id": "E9",
            "relation_start_date": "2016-01-10", "relation_end_date": "2018-01-10",
            "fincrime_risk_exit": None,
        }
        edges, _, _ = build_edge_list([row, dict(row)], "2019-01-01")
        assert len(edges) == 1

    def test_same_pair_different_weight_kept(self):
        rows = [
            {"bank_id": "3", "party_entity_id": "E1", "customer_entity_id": "E9",
             "relation_start_date": "2016-01-10", "relation_end_date": "2018-01-10",
             "fincrime_risk_exit": None},
            {"bank_id": "3", "party_entity_id": "E1", "customer_entity_id": "E9",
             "relation_start_date": "2016-01-10", "relation_end_date": "2016-06-10",
             "fincrime_risk_exit": None},
        ]
        edges, _, _ = build_edge_list(rows, "2019-01-01")
        assert len(edges) == 2

    def test_empty(self):
        edges, stats, flags = build_edge_list([], "2019-01-01")
        assert edges == [] and stats.nodes == 0 and stats.edges == 0

    def test_bank_qualifier_sides_and_degree_sum(self):
        corpus, _ = generate_corpus(
            CorpusConfig.from_scale(0.002, seed=9, planted_collecting=3,
                                    planted_layered=3)
        )
        customers, _ = resolve_entities(add_doc_ids(corpus.customers))
        parties, _ = resolve_entities(add_doc_ids(corpus.parties))
        plcr = join_relations(parties, corpus.links, customers, corpus.risk)
        edges, stats, _ = build_edge_list(plcr, corpus.corpus_end)
        assert edges, "expected a nonempty relation graph"
        for e in edges:
            assert "__" not in e.id1
            assert "__" in e.id2
            assert e.id1 != e.id2
            assert e.weight >= 0
        assert sum(stats.degree_map.values()) == 2 * stats.edges
        # brute-force node/edge counts
        triples = set()
        nodes = set()
        for e in edges:
            triples.add(e)
            nodes.update([e.id1, e.id2])
        assert stats.edges == len(triples)
        assert stats.nodes == len(nodes)

    def test_tsv_roundtrip(self, tmp_path):
        edges = [RelationEdge("E1", "3__E9", 24), RelationEdge("E2", "5__E9", 0)]
        path = tmp_path / "edges.tsv"
        write_edges(path, edges)
        assert read_edges(path) == edges
