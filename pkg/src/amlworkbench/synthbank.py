"""Labeled synthetic multi-bank corpus generator.

Produces the relational tables of a six-bank retail scenario (CUSTOMERS,
LINK, PARTIES, RISK, plus ACCOUNTS and TRANSACTIONS) with two planted
laundering patterns as ground truth:

* collecting networks: short-lived accounts that aggregate transfers from
  several customers later banned for financial crime;
* layered networks: pass-through accounts that forward almost everything
  they receive within the week and also touch a collecting account.

Generation is fully deterministic per seed (PCG64) and the CSV output is
byte-stable, so identical configs reproduce identical corpora.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .dates import add_months, day_offset, parse_date

# Full-scale accounts per bank for the six-bank scenario; configs are usually
# built by scaling these down (see CorpusConfig.from_scale).
FULL_SCALE_ACCOUNTS = [273_000, 177_000, 154_000, 147_000, 95_000, 74_000]
BANK_NAMES = {
    "1": "Meridian Trust",
    "2": "Crowngate Bank",
    "3": "Northbridge Savings",
    "4": "Atlas Mutual",
    "5": "Pennine Direct",
    "6": "Harbourstone",
}
DEFAULT_NATIONALITY_MIX = [
    ("UK", 0.812),
    ("PL", 0.012),
    ("RO", 0.006),
    ("IN", 0.005),
    ("DE", 0.055),
    ("FR", 0.055),
    ("ES", 0.055),
]

_FIRST_NAMES = [
    "Alice", "Bilal", "Carmen", "Daniel", "Elena", "Farid", "Grace", "Henryk",
    "Ioana", "Jack", "Kavita", "Liam", "Maria", "Nadia", "Oliver", "Priya",
    "Quentin", "Rosa", "Stefan", "Tara", "Umar", "Vera", "Wojciech", "Yusuf",
]
_LAST_NAMES = [
    "Adams", "Bennett", "Castillo", "Dabrowski", "Evans", "Fischer", "Garcia",
    "Hughes", "Ionescu", "Jones", "Kaur", "Lewis", "Moreau", "Novak", "Owens",
    "Patel", "Quinn", "Rossi", "Singh", "Turner", "Ursu", "Vogel", "Walsh",
]
_COMPANY_STEMS = [
    "Apex", "Borealis", "Cedar", "Delta", "Ellington", "Fairway", "Granite",
    "Horizon", "Ivory", "Juniper", "Keystone", "Lattice", "Monarch", "Nimbus",
    "Orchard", "Pinnacle", "Quarry", "Redwood", "Summit", "Thicket",
]
_COMPANY_SUFFIXES = ["Ltd", "Holdings", "Trading", "Logistics", "Consulting"]

CUSTOMER_COLUMNS = [
    "bank_id", "bank_name", "customer_id", "id_doc_number",
    "company_registration_id", "name", "nationality",
]
LINK_COLUMNS = [
    "bank_id", "bank_name", "customer_id", "related_party_id",
    "relation_start_date", "relation_end_date",
]
PARTY_COLUMNS = [
    "bank_id", "bank_name", "customer_id", "id_doc_number",
    "company_registration_id", "related_party_id",
]
RISK_COLUMNS = [
    "bank_id", "bank_name", "customer_id", "fincrime_risk_exit",
    "black_list", "aml_flag",
]
ACCOUNT_COLUMNS = ["account_id", "customer_id", "bank_id", "open_date", "close_date"]
TRANSACTION_COLUMNS = ["txn_id", "src_account", "dst_account", "amount", "timestamp"]

MAX_PARTY_LINKS = 32
MAX_RELATION_MONTHS = 600


class ConfigError(ValueError):
    """Invalid or infeasible corpus configuration."""


@dataclass
class CorpusConfig:
    banks: list[tuple[str, int]]
    months: int = 24
    corpus_start: date = date(2017, 1, 1)
    fraction_companies: float = 0.10
    nationality_mix: list[tuple[str, float]] = field(
        default_factory=lambda: list(DEFAULT_NATIONALITY_MIX)
    )
    accounts_per_individual: float = 4.6
    party_fraction: float = 0.07
    banned_fraction: float = 0.003
    planted_collecting: int = 20
    planted_layered: int = 30
    collecting_window_months: int = 8
    passthrough_ratio: float = 0.2
    active_account_fraction: float = 0.7
    mean_txns_per_account: float = 8.0
    inject_noise: bool = False
    seed: int = 0

    @classmethod
    def from_scale(cls, scale: float, **overrides) -> "CorpusConfig":
        banks = [
            (str(i + 1), max(1, round(n * scale)))
            for i, n in enumerate(FULL_SCALE_ACCOUNTS)
        ]
        return cls(banks=banks, **overrides)

    @property
    def corpus_end(self) -> date:
        return add_months(self.corpus_start, self.months)

    def validate(self) -> None:
        if not self.banks:
            raise ConfigError("at least one bank is required")
        if any(count <= 0 for _, count in self.banks):
            raise ConfigError("account counts must be positive")
        if self.months < 1:
            raise ConfigError("months must be >= 1")
        for name, value in [
            ("fraction_companies", self.fraction_companies),
            ("banned_fraction", self.banned_fraction),
            ("active_account_fraction", self.active_account_fraction),
        ]:
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.planted_collecting < 0 or self.planted_layered < 0:
            raise ConfigError("planted counts must be nonnegative")
        total = sum(count for _, count in self.banks)
        # every planted pattern needs its own dormant account plus sender pool
        if (self.planted_collecting + self.planted_layered) * 3 + 10 > total:
            raise ConfigError("planted count exceeds available accounts")

    def to_dict(self) -> dict:
        return {
            "banks": [[b, c] for b, c in self.banks],
            "months": self.months,
            "corpus_start": self.corpus_start.isoformat(),
            "fraction_companies": self.fraction_companies,
            "nationality_mix": [[n, w] for n, w in self.nationality_mix],
            "accounts_per_individual": self.accounts_per_individual,
            "party_fraction": self.party_fraction,
            "banned_fraction": self.banned_fraction,
            "planted_collecting": self.planted_collecting,
            "planted_layered": self.planted_layered,
            "collecting_window_months": self.collecting_window_months,
            "passthrough_ratio": self.passthrough_ratio,
            "active_account_fraction": self.active_account_fraction,
            "mean_txns_per_account": self.mean_txns_per_account,
            "inject_noise": self.inject_noise,
            "seed": self.seed,
        }


@dataclass
class GroundTruth:
    collecting_accounts: set[str] = field(default_factory=set)
    layered_accounts: set[str] = field(default_factory=set)
    banned_entities: set[str] = field(default_factory=set)

    def merge(self, other: "GroundTruth") -> None:
        self.collecting_accounts |= other.collecting_accounts
        self.layered_accounts |= other.layered_accounts
        self.banned_entities |= other.banned_entities

    def to_dict(self) -> dict:
        return {
            "collecting_accounts": sorted(self.collecting_accounts),
            "layered_accounts": sorted(self.layered_accounts),
            "banned_entities": sorted(self.banned_entities),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GroundTruth":
        return cls(
            collecting_accounts=set(data.get("collecting_accounts", [])),
            layered_accounts=set(data.get("layered_accounts", [])),
            banned_entities=set(data.get("banned_entities", [])),
        )


@dataclass
class BankCorpus:
    corpus_start: date
    corpus_end: date
    customers: list[dict] = field(default_factory=list)
    links: list[dict] = field(default_factory=list)
    parties: list[dict] = field(default_factory=list)
    risk: list[dict] = field(default_factory=list)
    accounts: list[dict] = field(default_factory=list)
    transactions: list[dict] = field(default_factory=list)

    def account_index(self) -> dict[str, dict]:
        return {a["account_id"]: a for a in self.accounts}

    def risk_index(self) -> dict[tuple[str, str], dict]:
        return {(r["bank_id"], r["customer_id"]): r for r in self.risk}

    def customer_index(self) -> dict[tuple[str, str], dict]:
        return {(c["bank_id"], c["customer_id"]): c for c in self.customers}

    def accounts_with_transactions(self) -> set[str]:
        touched = set()
        for t in self.transactions:
            touched.add(t["src_account"])
            touched.add(t["dst_account"])
        return touched


def _choice_weighted(rng, items, weights):
    total = sum(weights)
    probs = [w / total for w in weights]
    idx = rng.choice(len(items), p=probs)
    return items[int(idx)]


def _cents_lognormal(rng, mean_log: float, sigma: float) -> int:
    amount = float(rng.lognormal(mean_log, sigma))
    return max(1, int(round(amount * 100)))


def _person_name(rng) -> str:
    first = _FIRST_NAMES[int(rng.integers(0, len(_FIRST_NAMES)))]
    last = _LAST_NAMES[int(rng.integers(0, len(_LAST_NAMES)))]
    return f"{first} {last}"


def _company_name(rng) -> str:
    stem = _COMPANY_STEMS[int(rng.integers(0, len(_COMPANY_STEMS)))]
    suffix = _COMPANY_SUFFIXES[int(rng.integers(0, len(_COMPANY_SUFFIXES)))]
    return f"{stem} {suffix}"


class CorpusBuilder:
    """Mutable generation session: corpus, ground truth, RNG, and link caps.

    generate_corpus drives a fresh session; from_corpus wraps an existing
    corpus (e.g. loaded from disk) so patterns can be planted incrementally.
    """

    def __init__(self, config: CorpusConfig):
        config.validate()
        self.config = config
        self.rng = np.random.Generator(np.random.PCG64(config.seed))
        self.corpus = BankCorpus(
            corpus_start=config.corpus_start, corpus_end=config.corpus_end
        )
        self.truth = GroundTruth()
        self.txn_seq = 0
        # per-individual doc -> total relation links (global 0..32 cap)
        self.party_link_load: dict[str, int] = {}
        self.customer_link_count: dict[tuple[str, str], int] = {}
        self.linked_pairs: set[tuple[str, str, str]] = set()
        self.bank_parties: dict[str, list[dict]] = {}
        self.active_ids: list[str] = []

    def counterparty_pool(self) -> list[str]:
        """Accounts usable as benign counterparties for planted flows."""
        planted = self.truth.collecting_accounts | self.truth.layered_accounts
        pool = [a for a in self.active_ids if a not in planted]
        if pool:
            return pool
        return [
            a["account_id"]
            for a in self.corpus.accounts
            if a["account_id"] not in planted
        ]

    @classmethod
    def from_corpus(
        cls,
        corpus: BankCorpus,
        truth: GroundTruth,
        config: CorpusConfig,
    ) -> "CorpusBuilder":
        builder = cls.__new__(cls)
        builder.config = config
        builder.rng = np.random.Generator(np.random.PCG64(config.seed))
        builder.corpus = corpus
        builder.truth = truth
        builder.txn_seq = len(corpus.transactions)
        builder.party_link_load = {}
        builder.customer_link_count = {}
        builder.linked_pairs = set()
        builder.bank_parties = {}
        builder.active_ids = sorted(corpus.accounts_with_transactions())
        party_doc = {
            (p["bank_id"], p["related_party_id"]): p["id_doc_number"]
            for p in corpus.parties
        }
        for p in corpus.parties:
            builder.bank_parties.setdefault(p["bank_id"], []).append(p)
        for link in corpus.links:
            key = (link["bank_id"], link["customer_id"], link["related_party_id"])
            builder.linked_pairs.add(key)
            doc = party_doc.get((link["bank_id"], link["related_party_id"]), "")
            builder.party_link_load[doc] = builder.party_link_load.get(doc, 0) + 1
            ck = (link["bank_id"], link["customer_id"])
            builder.customer_link_count[ck] = (
                builder.customer_link_count.get(ck, 0) + 1
            )
        return builder

    # -- entity pools --------------------------------------------------------

    def build_pools(self):
        cfg = self.config
        total = sum(count for _, count in cfg.banks)
        n_individual_rows = total - round(total * cfg.fraction_companies)
        n_individuals = max(1, round(n_individual_rows / cfg.accounts_per_individual))
        n_companies = max(1, round(total * cfg.fraction_companies / 1.5))
        nats = [n for n, _ in cfg.nationality_mix]
        weights = [w for _, w in cfg.nationality_mix]
        self.individuals = [
            {
                "id_doc_number": f"P{i + 1:07d}",
                "name": _person_name(self.rng),
                "nationality": _choice_weighted(self.rng, nats, weights),
            }
            for i in range(n_individuals)
        ]
        self.companies = [
            {
                "company_registration_id": f"CR{i + 1:06d}",
                "name": _company_name(self.rng),
                "nationality": "UK",
            }
            for i in range(n_companies)
        ]

    # -- customers / risk / accounts ------------------------------------------

    def build_customers(self):
        cfg = self.config
        span_days = (cfg.corpus_end - cfg.corpus_start).days
        for bank_id, count in cfg.banks:
            bank_name = BANK_NAMES.get(bank_id, f"Bank {bank_id}")
            n_comp = round(count * cfg.fraction_companies)
            n_ind = count - n_comp
            # individuals repeat (several accounts per bank and across banks);
            # the pool size fixes the mean accounts-per-individual ratio
            ind_idx = self.rng.integers(0, len(self.individuals), size=n_ind)
            comp_idx = self.rng.choice(
                len(self.companies),
                size=min(n_comp, len(self.companies)),
                replace=False,
            )
            holders = [("individual", int(i)) for i in ind_idx]
            holders += [("company", int(i)) for i in comp_idx]
            for seq, (kind, pool_idx) in enumerate(holders, start=1):
                customer_id = f"CU{seq:06d}"
                if kind == "individual":
                    person = self.individuals[pool_idx]
                    id_doc, reg_id = person["id_doc_number"], ""
                    name, nat = person["name"], person["nationality"]
                else:
                    comp = self.companies[pool_idx]
                    id_doc, reg_id = "", comp["company_registration_id"]
                    name, nat = comp["name"], comp["nationality"]
                if cfg.inject_noise and id_doc and self.rng.random() < 0.01:
                    id_doc = " " + id_doc.lower()
                self.corpus.customers.append(
                    {
                        "bank_id": bank_id,
                        "bank_name": bank_name,
                        "customer_id": customer_id,
                        "id_doc_number": id_doc,
                        "company_registration_id": reg_id,
                        "name": name,
                        "nationality": nat,
                    }
                )
                self.corpus.risk.append(
                    {
                        "bank_id": bank_id,
                        "bank_name": bank_name,
                        "customer_id": customer_id,
                        "fincrime_risk_exit": False,
                        "black_list": False,
                        "aml_flag": False,
                    }
                )
                # one account per customer row; most open well before the span
                open_offset = int(self.rng.integers(-1800, max(1, span_days - 30)))
                open_date = cfg.corpus_start + timedelta(days=open_offset)
                close_date = None
                if self.rng.random() < 0.15:
                    close_date = open_date + timedelta(
                        days=int(self.rng.integers(30, 1200))
                    )
                    if close_date > cfg.corpus_end:
                        close_date = cfg.corpus_end
                self.corpus.accounts.append(
                    {
                        "account_id": f"{bank_id}-AC{seq:06d}",
                        "customer_id": customer_id,
                        "bank_id": bank_id,
                        "open_date": open_date,
                        "close_date": close_date,
                    }
                )

    # -- related parties and links ----------------------------------------------

    def build_parties(self):
        cfg = self.config
        for bank_id, count in cfg.banks:
            bank_name = BANK_NAMES.get(bank_id, f"Bank {bank_id}")
            n_parties = max(3, round(count * cfg.party_fraction))
            idx = self.rng.choice(
                len(self.individuals),
                size=min(n_parties, len(self.individuals)),
                replace=False,
            )
            bank_customers = [
                c for c in self.corpus.customers if c["bank_id"] == bank_id
            ]
            rows = []
            for seq, pool_idx in enumerate(idx, start=1):
                person = self.individuals[int(pool_idx)]
                anchor = bank_customers[int(self.rng.integers(0, len(bank_customers)))]
                row = {
                    "bank_id": bank_id,
                    "bank_name": bank_name,
                    "customer_id": anchor["customer_id"],
                    "id_doc_number": person["id_doc_number"],
                    "company_registration_id": "",
                    "related_party_id": f"RP{seq:06d}",
                }
                rows.append(row)
                self.corpus.parties.append(row)
            self.bank_parties[bank_id] = rows

    def _add_link(self, bank_id: str, customer_id: str, party_row: dict) -> bool:
        doc = party_row["id_doc_number"]
        if self.party_link_load.get(doc, 0) >= MAX_PARTY_LINKS:
            return False
        key = (bank_id, customer_id, party_row["related_party_id"])
        if key in self.linked_pairs:
            return False
        cfg = self.config
        back_days = int(self.rng.integers(0, MAX_RELATION_MONTHS * 30))
        start = cfg.corpus_end - timedelta(days=back_days)
        if self.rng.random() < 0.5:
            end = start + timedelta(days=int(self.rng.integers(0, back_days + 1)))
            end_str = end.isoformat()
        else:
            end_str = ""
        self.corpus.links.append(
            {
                "bank_id": bank_id,
                "bank_name": BANK_NAMES.get(bank_id, f"Bank {bank_id}"),
                "customer_id": customer_id,
                "related_party_id": party_row["related_party_id"],
                "relation_start_date": start.isoformat(),
                "relation_end_date": end_str,
            }
        )
        self.linked_pairs.add(key)
        self.party_link_load[doc] = self.party_link_load.get(doc, 0) + 1
        ck = (bank_id, customer_id)
        self.customer_link_count[ck] = self.customer_link_count.get(ck, 0) + 1
        return True

    def build_links(self):
        for customer in self.corpus.customers:
            bank_id = customer["bank_id"]
            parties = self.bank_parties.get(bank_id, [])
            if not parties:
                continue
            if self.rng.random() >= 0.2:
                continue
            for _ in range(1 + int(self.rng.integers(0, 3))):
                party = parties[int(self.rng.integers(0, len(parties)))]
                self._add_link(bank_id, customer["customer_id"], party)

    def boost_customer_links(self, bank_id: str, customer_id: str):
        """Densify a banned customer's neighbourhood; criminal networks are
        highly connected by construction."""
        parties = self.bank_parties.get(bank_id, [])
        if not parties:
            return
        target = min(
            MAX_PARTY_LINKS,
            self.customer_link_count.get((bank_id, customer_id), 0)
            + 8 + int(self.rng.integers(0, 9)),
        )
        attempts = 0
        while (
            self.customer_link_count.get((bank_id, customer_id), 0) < target
            and attempts < 200
        ):
            party = parties[int(self.rng.integers(0, len(parties)))]
            self._add_link(bank_id, customer_id, party)
            attempts += 1

    # -- transactions --------------------------------------------------------

    def add_transaction(self, src: str, dst: str, cents: int, when) -> dict:
        self.txn_seq += 1
        row = {
            "txn_id": f"T{self.txn_seq:08d}",
            "src_account": src,
            "dst_account": dst,
            "amount_cents": cents,
            "timestamp": when,
        }
        self.corpus.transactions.append(row)
        return row

    def build_background_traffic(self):
        # traffic stays within the active subset so the rest of the book is
        # genuinely dormant (planting needs untouched accounts)
        cfg = self.config
        accounts = self.corpus.accounts
        n_active = round(len(accounts) * cfg.active_account_fraction)
        active_idx = self.rng.choice(len(accounts), size=n_active, replace=False)
        span_days = (cfg.corpus_end - cfg.corpus_start).days
        ids = [a["account_id"] for a in accounts]
        self.active_ids = [ids[i] for i in sorted(int(i) for i in active_idx)]
        for src in self.active_ids:
            for _ in range(int(self.rng.poisson(cfg.mean_txns_per_account))):
                dst = self.active_ids[
                    int(self.rng.integers(0, len(self.active_ids)))
                ]
                if dst == src:
                    continue
                self.add_transaction(
                    src,
                    dst,
                    _cents_lognormal(self.rng, 4.0, 1.0),
                    day_offset(
                        cfg.corpus_start,
                        int(self.rng.integers(0, span_days)),
                        int(self.rng.integers(0, 86400)),
                    ),
                )

    # -- planted-pattern support ------------------------------------------------

    def eligible_dormant_accounts(self) -> list[dict]:
        touched = self.corpus.accounts_with_transactions()
        planted = self.truth.collecting_accounts | self.truth.layered_accounts
        return [
            a
            for a in self.corpus.accounts
            if a["account_id"] not in touched and a["account_id"] not in planted
        ]

    def mark_banned(self, bank_id: str, customer_id: str, boost: bool = True) -> str:
        risk = self.corpus.risk_index().get((bank_id, customer_id))
        if risk is None:
            raise ConfigError(f"no risk row for ({bank_id}, {customer_id})")
        risk["fincrime_risk_exit"] = True
        customer = self.corpus.customer_index()[(bank_id, customer_id)]
        if customer["id_doc_number"]:
            entity = "individual_" + customer["id_doc_number"].strip().casefold()
        else:
            entity = "company_" + customer["company_registration_id"].strip().casefold()
        self.truth.banned_entities.add(entity)
        if boost:
            self.boost_customer_links(bank_id, customer_id)
        return entity


def plant_collecting_network(
    builder: CorpusBuilder,
    count: int,
    window_months: int = 8,
    min_senders: int = 3,
) -> GroundTruth:
    """Plant collector accounts: short-lived, fed by banned customers.

    Each collector account is re-dated to live at most window_months and
    receives one transfer from each of >= min_senders distinct accounts whose
    owners are flagged fincrime_risk_exit. Returns the ground-truth delta.
    """
    delta = GroundTruth()
    if count == 0:
        return delta
    cfg = builder.config
    rng = builder.rng
    dormant = builder.eligible_dormant_accounts()
    # a small shared pool: the criminal networks feeding the entry points
    pool_size = max(min_senders, min(len(dormant) - count, count // 2 + 5))
    if len(dormant) < count + pool_size:
        raise ConfigError("insufficient eligible accounts for collecting plants")
    collectors = dormant[:count]
    sender_pool = dormant[count:count + pool_size]
    for acct in sender_pool:
        entity = builder.mark_banned(acct["bank_id"], acct["customer_id"])
        delta.banned_entities.add(entity)
    span_days = (cfg.corpus_end - cfg.corpus_start).days
    window_days = window_months * 30
    for acct in collectors:
        life_days = int(rng.integers(45, min(200, window_days - 20)))
        open_offset = int(rng.integers(0, max(1, span_days - life_days - 1)))
        open_date = cfg.corpus_start + timedelta(days=open_offset)
        acct["open_date"] = open_date
        acct["close_date"] = open_date + timedelta(days=life_days)
        n_senders = min(min_senders + int(rng.integers(0, 3)), len(sender_pool))
        picks = rng.choice(len(sender_pool), size=n_senders, replace=False)
        for p in sorted(int(i) for i in picks):
            sender = sender_pool[p]
            builder.add_transaction(
                sender["account_id"],
                acct["account_id"],
                _cents_lognormal(rng, 6.0, 0.8),
                day_offset(
                    cfg.corpus_start,
                    open_offset + int(rng.integers(0, life_days)),
                    int(rng.integers(0, 86400)),
                ),
            )
        delta.collecting_accounts.add(acct["account_id"])
        # collector owners stay unflagged: they are the unknowns to discover
    builder.truth.merge(delta)
    return delta


def plant_layered_network(
    builder: CorpusBuilder,
    count: int,
    passthrough_ratio: float = 0.2,
) -> GroundTruth:
    """Plant pass-through accounts connected to the collecting networks.

    Every planted account transacts at least once with a collector and ends
    each active week holding at most half of passthrough_ratio times that
    week's inbound sum (the margin keeps detection threshold-safe).
    """
    delta = GroundTruth()
    if count == 0:
        return delta
    if not builder.truth.collecting_accounts:
        raise ConfigError("no criminal accounts exist to connect to")
    cfg = builder.config
    rng = builder.rng
    dormant = builder.eligible_dormant_accounts()
    if len(dormant) < count:
        raise ConfigError("insufficient eligible accounts for layered plants")
    accounts_by_id = builder.corpus.account_index()
    collectors = sorted(builder.truth.collecting_accounts)
    retain_ratio = passthrough_ratio / 2.0
    span_days = (cfg.corpus_end - cfg.corpus_start).days
    planted_now = set(a["account_id"] for a in dormant[:count])
    pool = [a for a in builder.counterparty_pool() if a not in planted_now]
    for acct in dormant[:count]:
        collector_id = collectors[int(rng.integers(0, len(collectors)))]
        collector = accounts_by_id[collector_id]
        open_days = max(0, (parse_date(collector["open_date"]) - cfg.corpus_start).days)
        # align to 7-day ledger bins: inbound and sweep must share a bin
        first_day = -(-open_days // 7) * 7
        balance = 0
        for w in range(4 + int(rng.integers(0, 6))):
            week_start = first_day + w * 7
            if week_start + 6 >= span_days:
                break
            inbound_total = 0
            if w == 0:
                cents = _cents_lognormal(rng, 6.5, 0.5)
                builder.add_transaction(
                    collector_id,
                    acct["account_id"],
                    cents,
                    day_offset(cfg.corpus_start, week_start,
                               int(rng.integers(0, 43200))),
                )
                inbound_total += cents
            for _ in range(1 + int(rng.integers(0, 2))):
                sender = pool[int(rng.integers(0, len(pool)))]
                if sender == acct["account_id"]:
                    continue
                cents = _cents_lognormal(rng, 6.0, 0.6)
                builder.add_transaction(
                    sender,
                    acct["account_id"],
                    cents,
                    day_offset(cfg.corpus_start,
                               week_start + int(rng.integers(0, 3)),
                               int(rng.integers(0, 86400))),
                )
                inbound_total += cents
            if inbound_total == 0:
                continue
            retain = int(inbound_total * retain_ratio)
            outbound_total = balance + inbound_total - retain
            balance = retain
            dst = pool[int(rng.integers(0, len(pool)))]
            while dst == acct["account_id"]:
                dst = pool[int(rng.integers(0, len(pool)))]
            builder.add_transaction(
                acct["account_id"],
                dst,
                outbound_total,
                day_offset(cfg.corpus_start,
                           week_start + 4 + int(rng.integers(0, 3)),
                           int(rng.integers(0, 86400))),
            )
        delta.layered_accounts.add(acct["account_id"])
    builder.truth.merge(delta)
    return delta


def _sprinkle_secondary_flags(builder: CorpusBuilder):
    for risk in builder.corpus.risk:
        banned = risk["fincrime_risk_exit"]
        risk["black_list"] = bool(builder.rng.random() < (0.30 if banned else 0.01))
        risk["aml_flag"] = bool(builder.rng.random() < (0.40 if banned else 0.02))


def generate_corpus(config: CorpusConfig) -> tuple[BankCorpus, GroundTruth]:
    """Build a full corpus with planted patterns; deterministic per seed."""
    builder = CorpusBuilder(config)
    builder.build_pools()
    builder.build_customers()
    builder.build_parties()
    builder.build_links()
    builder.build_background_traffic()
    plant_collecting_network(
        builder, config.planted_collecting, config.collecting_window_months
    )
    plant_layered_network(builder, config.planted_layered, config.passthrough_ratio)
    # independent banned sample on top of the planted sender owners
    target_banned = round(len(builder.corpus.customers) * config.banned_fraction)
    already = sum(1 for r in builder.corpus.risk if r["fincrime_risk_exit"])
    extra = max(0, target_banned - already)
    if extra:
        acct_index = builder.corpus.account_index()
        planted_owner_keys = {
            (acct_index[aid]["bank_id"], acct_index[aid]["customer_id"])
            for aid in builder.truth.collecting_accounts
            | builder.truth.layered_accounts
        }
        candidates = [
            r for r in builder.corpus.risk
            if not r["fincrime_risk_exit"]
            and (r["bank_id"], r["customer_id"]) not in planted_owner_keys
        ]
        picks = builder.rng.choice(
            len(candidates), size=min(extra, len(candidates)), replace=False
        )
        for p in sorted(int(i) for i in picks):
            row = candidates[p]
            builder.mark_banned(row["bank_id"], row["customer_id"])
    _sprinkle_secondary_flags(builder)
    return builder.corpus, builder.truth


# -- CSV layout -----------------------------------------------------------------


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, date):
        return value.isoformat()
    return str(value)


def _write_table(path: Path, columns: list[str], rows, transform=None):
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if transform:
                row = transform(row)
            writer.writerow([_format_value(row.get(c)) for c in columns])


def _txn_csv_row(row: dict) -> dict:
    cents = row["amount_cents"]
    out = dict(row)
    out["amount"] = f"{cents // 100}.{cents % 100:02d}"
    out["timestamp"] = row["timestamp"].isoformat(sep=" ")
    return out


def write_corpus(
    corpus: BankCorpus,
    truth: GroundTruth,
    config: CorpusConfig,
    out_dir: str | Path,
) -> Path:
    """Write per-bank CSV tables, the ground-truth file, and the manifest.

    Output is byte-stable for a fixed config (no wallclock anywhere).
    Returns the manifest path.
    """
    out = Path(out_dir)
    (out / "tables").mkdir(parents=True, exist_ok=True)
    bank_ids = [b for b, _ in config.banks]
    files: dict[str, dict[str, str]] = {}
    per_bank = [
        ("customers", CUSTOMER_COLUMNS, corpus.customers, None),
        ("link", LINK_COLUMNS, corpus.links, None),
        ("parties", PARTY_COLUMNS, corpus.parties, None),
        ("risk", RISK_COLUMNS, corpus.risk, None),
        ("accounts", ACCOUNT_COLUMNS, corpus.accounts, None),
    ]
    for name, columns, rows, transform in per_bank:
        files[name] = {}
        for bank_id in bank_ids:
            rel = f"tables/bank{bank_id}_{name}.csv"
            bank_rows = [r for r in rows if r["bank_id"] == bank_id]
            _write_table(out / rel, columns, bank_rows, transform)
            files[name][bank_id] = rel
    files["transactions"] = {}
    acct_bank = {a["account_id"]: a["bank_id"] for a in corpus.accounts}
    for bank_id in bank_ids:
        rel = f"tables/bank{bank_id}_transactions.csv"
        rows = [
            t for t in corpus.transactions
            if acct_bank[t["src_account"]] == bank_id
        ]
        _write_table(out / rel, TRANSACTION_COLUMNS, rows, _txn_csv_row)
        files["transactions"][bank_id] = rel

    truth_rel = "ground_truth.json"
    (out / truth_rel).write_text(
        json.dumps(truth.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    manifest = {
        "kind": "corpus",
        "seed": config.seed,
        "config": config.to_dict(),
        "corpus_start": corpus.corpus_start.isoformat(),
        "corpus_end": corpus.corpus_end.isoformat(),
        "files": files,
        "ground_truth": truth_rel,
        "notes": {
            "background_traffic": (
                "poisson arrivals with log-normal amounts; a stand-in shape, "
                "not calibrated to any real ledger"
            ),
            "rng": "PCG64",
        },
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest_path


def load_manifest(run_dir: str | Path) -> dict:
    path = Path(run_dir) / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"no manifest.json under {run_dir}")
    return json.loads(path.read_text(encoding="utf-8"))


def _read_csv(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def load_corpus(run_dir: str | Path) -> tuple[BankCorpus, GroundTruth, dict]:
    """Read a written corpus back; inverse of write_corpus."""
    run = Path(run_dir)
    manifest = load_manifest(run)
    corpus = BankCorpus(
        corpus_start=parse_date(manifest["corpus_start"]),
        corpus_end=parse_date(manifest["corpus_end"]),
    )
    buckets = {
        "customers": corpus.customers,
        "link": corpus.links,
        "parties": corpus.parties,
        "risk": corpus.risk,
        "accounts": corpus.accounts,
        "transactions": corpus.transactions,
    }
    for table, bucket in buckets.items():
        for _, rel in sorted(manifest["files"][table].items()):
            bucket.extend(_read_csv(run / rel))
    for row in corpus.risk:
        for col in ("fincrime_risk_exit", "black_list", "aml_flag"):
            row[col] = row[col] == "true"
    for row in corpus.transactions:
        units, _, frac = row["amount"].partition(".")
        row["amount_cents"] = int(units) * 100 + int((frac + "00")[:2])
    truth = GroundTruth.from_dict(
        json.loads((run / manifest["ground_truth"]).read_text(encoding="utf-8"))
    )
    return corpus, truth, manifest
