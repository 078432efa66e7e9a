"""Rule-based laundering detectors over accounts and weekly ledgers.

Two schemes are covered:

* collecting: accounts opened and closed within a bounded number of months
  that received transfers from several distinct accounts owned by customers
  flagged fincrime_risk_exit;
* layered: accounts that transacted with a confirmed criminal account and
  end every active week (any inbound) holding at most a fixed fraction of
  that week's inbound sum.

All money amounts are integer cents, so weekly ledgers and the conservation
property are exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable

from .dates import MalformedRecordError, month_span, parse_timestamp, week_index


class IngestionError(ValueError):
    """A transaction references an account that does not exist."""


@dataclass
class WeeklyAggregate:
    account_id: str
    week_index: int
    inbound_count: int = 0
    outbound_count: int = 0
    inbound_sum: int = 0
    outbound_sum: int = 0
    end_balance: int = 0


@dataclass
class DetectionReport:
    detector: str
    params: dict
    flagged: list[str]
    precision: float | None = None
    recall: float | None = None
    status: str = "ok"
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "detector": self.detector,
            "params": self.params,
            "flagged": self.flagged,
            "metrics": {"precision": self.precision, "recall": self.recall},
            "status": self.status,
            **({"extras": self.extras} if self.extras else {}),
        }


def _txn_cents(txn: dict) -> int:
    cents = txn.get("amount_cents")
    if cents is None:
        units, _, frac = str(txn["amount"]).partition(".")
        cents = int(units) * 100 + int((frac + "00")[:2])
    return int(cents)


def detect_collecting(
    accounts: Iterable[dict],
    risk: Iterable[dict],
    transactions: Iterable[dict],
    window_months: int = 8,
    min_criminal_senders: int = 3,
) -> DetectionReport:
    """Flag short-lived accounts fed by several banned customers.

    An account qualifies when it was opened and closed within window_months
    (whole calendar months) and received transfers from at least
    min_criminal_senders distinct accounts owned by fincrime_risk_exit
    customers.
    """
    banned_customers = {
        (r["bank_id"], r["customer_id"])
        for r in risk
        if r["fincrime_risk_exit"] in (True, "true")
    }
    banned_accounts = set()
    short_lived = set()
    for acct in accounts:
        if (acct["bank_id"], acct["customer_id"]) in banned_customers:
            banned_accounts.add(acct["account_id"])
        close = acct.get("close_date")
        if close in (None, ""):
            continue
        if month_span(acct["open_date"], close) <= window_months:
            short_lived.add(acct["account_id"])
    senders: dict[str, set[str]] = {}
    for txn in transactions:
        dst = txn["dst_account"]
        if dst in short_lived and txn["src_account"] in banned_accounts:
            senders.setdefault(dst, set()).add(txn["src_account"])
    flagged = sorted(
        aid for aid, srcs in senders.items() if len(srcs) >= min_criminal_senders
    )
    return DetectionReport(
        detector="collecting",
        params={
            "window_months": window_months,
            "min_criminal_senders": min_criminal_senders,
        },
        flagged=flagged,
    )


def weekly_bins(
    transactions: Iterable[dict],
    accounts: Iterable[dict],
    corpus_start: date,
) -> list[WeeklyAggregate]:
    """Aggregate the ledger into per-account 7-day bins from corpus start.

    Every transaction lands in exactly one (account, week) bin on each side;
    end_balance is the running balance (from zero) after the last movement
    of that week. Unknown accounts raise IngestionError.
    """
    known = {a["account_id"] for a in accounts}
    rows = []
    for txn in transactions:
        for side in ("src_account", "dst_account"):
            if txn[side] not in known:
                raise IngestionError(f"transaction references unknown account {txn[side]}")
        rows.append((parse_timestamp(txn["timestamp"]), txn["txn_id"], txn))
    rows.sort(key=lambda r: (r[0], r[1]))
    bins: dict[tuple[str, int], WeeklyAggregate] = {}
    balance: dict[str, int] = {}

    def _bin(account: str, week: int) -> WeeklyAggregate:
        key = (account, week)
        agg = bins.get(key)
        if agg is None:
            agg = WeeklyAggregate(account_id=account, week_index=week)
            bins[key] = agg
        return agg

    for ts, _txn_id, txn in rows:
        week = week_index(ts, corpus_start)
        cents = _txn_cents(txn)
        src, dst = txn["src_account"], txn["dst_account"]
        balance[src] = balance.get(src, 0) - cents
        agg = _bin(src, week)
        agg.outbound_count += 1
        agg.outbound_sum += cents
        agg.end_balance = balance[src]
        balance[dst] = balance.get(dst, 0) + cents
        agg = _bin(dst, week)
        agg.inbound_count += 1
        agg.inbound_sum += cents
        agg.end_balance = balance[dst]
    return [bins[key] for key in sorted(bins)]


def detect_layered(
    weekly: list[WeeklyAggregate],
    criminal_accounts: set[str],
    transactions: Iterable[dict],
    ratio: float = 0.2,
) -> DetectionReport:
    """Flag pass-through accounts connected to confirmed criminal accounts.

    Candidates have at least one transfer to or from a criminal account and
    are not criminal themselves; a candidate is flagged when every active
    week (inbound > 0) ends with balance <= ratio * that week's inbound sum.
    """
    params = {"ratio": ratio}
    if not criminal_accounts:
        return DetectionReport(
            detector="layered",
            params=params,
            flagged=[],
            status="warning: empty criminal account set",
        )
    candidates: set[str] = set()
    for txn in transactions:
        src, dst = txn["src_account"], txn["dst_account"]
        if src in criminal_accounts and dst not in criminal_accounts:
            candidates.add(dst)
        elif dst in criminal_accounts and src not in criminal_accounts:
            candidates.add(src)
    flagged = []
    by_account: dict[str, list[WeeklyAggregate]] = {}
    for agg in weekly:
        by_account.setdefault(agg.account_id, []).append(agg)
    for account in sorted(candidates):
        ok = True
        for agg in by_account.get(account, []):
            if agg.inbound_sum <= 0:
                continue
            if agg.end_balance > ratio * agg.inbound_sum:
                ok = False
                break
        if ok:
            flagged.append(account)
    return DetectionReport(detector="layered", params=params, flagged=flagged)


def score(report: DetectionReport, truth: set[str]) -> tuple[float, float]:
    """Set precision and recall of a report against ground truth.

    Empty edge cases: no flags means no false positives (precision 1 when
    truth is also empty, else undefined-as-0 only when flags exist); empty
    truth gives recall 1.
    """
    flagged = set(report.flagged)
    hits = len(flagged & truth)
    precision = hits / len(flagged) if flagged else (1.0 if not truth else 0.0)
    recall = hits / len(truth) if truth else 1.0
    report.precision = precision
    report.recall = recall
    return precision, recall


def write_report(report: DetectionReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def load_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
