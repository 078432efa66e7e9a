import hashlib
from pathlib import Path

import pytest

from amlworkbench.dates import month_span
from amlworkbench.detectors import weekly_bins
from amlworkbench.synthbank import (
    ConfigError,
    CorpusBuilder,
    CorpusConfig,
    generate_corpus,
    load_corpus,
    plant_collecting_network,
    plant_layered_network,
    write_corpus,
)


SMALL = dict(planted_collecting=5, planted_layered=8)


def small_config(seed=11, **overrides):
    return CorpusConfig.from_scale(0.0025, seed=seed, **{**SMALL, **overrides})


@pytest.fixture(scope="module")
def small_corpus():
    return generate_corpus(small_config())


class TestVolumetrics:
    def test_scaled_account_counts(self):
        cfg = CorpusConfig.from_scale(0.01, seed=1)
        assert [c for _, c in cfg.banks] == [2730, 1770, 1540, 1470, 950, 740]
        assert sum(c for _, c in cfg.banks) == 9200

    def test_rows_match_config(self, small_corpus):
        corpus, _ = small_corpus
        cfg = small_config()
        total = sum(c for _, c in cfg.banks)
        assert len(corpus.customers) == total
        assert len(corpus.accounts) == total
        assert len(corpus.risk) == total

    def test_company_fraction(self, small_corpus):
        corpus, _ = small_corpus
        companies = sum(1 for c in corpus.customers if c["company_registration_id"])
        assert 0.05 <= companies / len(corpus.customers) <= 0.15

    def test_banned_fraction_realistic(self, small_corpus):
        corpus, truth = small_corpus
        banned = sum(1 for r in corpus.risk if r["fincrime_risk_exit"])
        assert banned >= len(truth.banned_entities) > 0
        assert banned / len(corpus.risk) < 0.02


class TestIntegrity:
    def test_referential_integrity(self, small_corpus):
        corpus, _ = small_corpus
        party_keys = {(p["bank_id"], p["related_party_id"]) for p in corpus.parties}
        customer_keys = {(c["bank_id"], c["customer_id"]) for c in corpus.customers}
        for link in corpus.links:
            assert (link["bank_id"], link["related_party_id"]) in party_keys
            assert (link["bank_id"], link["customer_id"]) in customer_keys
        account_ids = {a["account_id"] for a in corpus.accounts}
        for t in corpus.transactions:
            assert t["src_account"] in account_ids
            assert t["dst_account"] in account_ids
        for a in corpus.accounts:
            assert (a["bank_id"], a["customer_id"]) in customer_keys

    def test_risk_one_row_per_customer(self, small_corpus):
        corpus, _ = small_corpus
        risk_keys = [(r["bank_id"], r["customer_id"]) for r in corpus.risk]
        customer_keys = [(c["bank_id"], c["customer_id"]) for c in corpus.customers]
        assert sorted(risk_keys) == sorted(customer_keys)

    def test_parties_hold_individuals_only(self, small_corpus):
        corpus, _ = small_corpus
        for p in corpus.parties:
            assert p["id_doc_number"]
            assert not p["company_registration_id"]

    def test_degree_and_duration_bounds(self, small_corpus):
        corpus, _ = small_corpus
        per_party: dict[str, int] = {}
        doc_of = {
            (p["bank_id"], p["related_party_id"]): p["id_doc_number"]
            for p in corpus.parties
        }
        for link in corpus.links:
            doc = doc_of[(link["bank_id"], link["related_party_id"])]
            per_party[doc] = per_party.get(doc, 0) + 1
            end = link["relation_end_date"] or corpus.corpus_end
            assert month_span(link["relation_start_date"], end) <= 600
        assert max(per_party.values()) <= 32

    def test_ground_truth_sets_disjoint(self, small_corpus):
        _, truth = small_corpus
        assert not truth.collecting_accounts & truth.layered_accounts


class TestPlantedPatterns:
    def test_collector_lifespans_and_senders(self, small_corpus):
        corpus, truth = small_corpus
        cfg = small_config()
        assert len(truth.collecting_accounts) == cfg.planted_collecting
        accounts = corpus.account_index()
        banned_keys = {
            (r["bank_id"], r["customer_id"])
            for r in corpus.risk if r["fincrime_risk_exit"]
        }
        banned_accounts = {
            a["account_id"] for a in corpus.accounts
            if (a["bank_id"], a["customer_id"]) in banned_keys
        }
        for aid in truth.collecting_accounts:
            acct = accounts[aid]
            assert acct["close_date"] is not None
            assert month_span(acct["open_date"], acct["close_date"]) <= 8
            senders = {
                t["src_account"] for t in corpus.transactions
                if t["dst_account"] == aid and t["src_account"] in banned_accounts
            }
            assert len(senders) >= 3

    def test_layered_touch_collectors_and_stay_low(self, small_corpus):
        corpus, truth = small_corpus
        cfg = small_config()
        assert len(truth.layered_accounts) == cfg.planted_layered
        for aid in truth.layered_accounts:
            partners = {
                t["dst_account"] for t in corpus.transactions
                if t["src_account"] == aid
            } | {
                t["src_account"] for t in corpus.transactions
                if t["dst_account"] == aid
            }
            assert partners & truth.collecting_accounts
        weekly = weekly_bins(corpus.transactions, corpus.accounts,
                             corpus.corpus_start)
        by_account = {}
        for agg in weekly:
            by_account.setdefault(agg.account_id, []).append(agg)
        for aid in truth.layered_accounts:
            for agg in by_account[aid]:
                if agg.inbound_sum > 0:
                    assert agg.end_balance <= 0.2 * agg.inbound_sum

    def test_plant_zero_is_noop(self):
        corpus, truth = generate_corpus(
            small_config(planted_collecting=0, planted_layered=0)
        )
        assert not truth.collecting_accounts
        assert not truth.layered_accounts

    def test_layered_requires_collectors(self):
        cfg = small_config(planted_collecting=0, planted_layered=0)
        builder = CorpusBuilder(cfg)
        builder.build_pools()
        builder.build_customers()
        builder.build_parties()
        builder.build_links()
        builder.build_background_traffic()
        with pytest.raises(ConfigError):
            plant_layered_network(builder, 3)

    def test_incremental_plant_on_loaded_corpus(self, tmp_path):
        cfg = small_config(planted_collecting=0, planted_layered=0)
        corpus, truth = generate_corpus(cfg)
        write_corpus(corpus, truth, cfg, tmp_path)
        corpus2, truth2, _ = load_corpus(tmp_path)
        builder = CorpusBuilder.from_corpus(corpus2, truth2, cfg)
        delta = plant_collecting_network(builder, 2)
        assert len(delta.collecting_accounts) == 2
        assert truth2.collecting_accounts == delta.collecting_accounts

    def test_infeasible_config_rejected(self):
        with pytest.raises(ConfigError):
            CorpusConfig(banks=[("1", 20)], planted_collecting=50).validate()
        with pytest.raises(ConfigError):
            CorpusConfig(banks=[], seed=1).validate()


class TestDeterminismAndIO:
    def _tree_hash(self, root: Path) -> str:
        digest = hashlib.sha256()
        for p in sorted(root.rglob("*")):
            if p.is_file():
                digest.update(p.relative_to(root).as_posix().encode())
                digest.update(p.read_bytes())
        return digest.hexdigest()

    def test_byte_identical_rerun(self, tmp_path):
        cfg = small_config(seed=21)
        for sub in ("a", "b"):
            corpus, truth = generate_corpus(small_config(seed=21))
            write_corpus(corpus, truth, cfg, tmp_path / sub)
        assert self._tree_hash(tmp_path / "a") == self._tree_hash(tmp_path / "b")

    def test_different_seed_differs(self, tmp_path):
        for seed, sub in ((1, "a"), (2, "b")):
            cfg = small_config(seed=seed)
            corpus, truth = generate_corpus(cfg)
            write_corpus(corpus, truth, cfg, tmp_path / sub)
        assert self._tree_hash(tmp_path / "a") != self._tree_hash(tmp_path / "b")

    def test_roundtrip(self, tmp_path, small_corpus):
        corpus, truth = small_corpus
        cfg = small_config()
        write_corpus(corpus, truth, cfg, tmp_path)
        corpus2, truth2, manifest = load_corpus(tmp_path)
        assert len(corpus2.customers) == len(corpus.customers)
        assert len(corpus2.transactions) == len(corpus.transactions)
        assert truth2.to_dict() == truth.to_dict()
        assert manifest["seed"] == cfg.seed
        # loaded amounts reparse exactly
        for a, b in zip(corpus.transactions[:50], corpus2.transactions[:50]):
            assert a["amount_cents"] == b["amount_cents"]
