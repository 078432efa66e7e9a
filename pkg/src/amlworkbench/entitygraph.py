"""Entity resolution and relation-graph construction.

Pipeline: derive a document id per row (individual or company identifier with
a type prefix), assign entity ids by exact doc-id match within each table,
join PARTIES-LINK-CUSTOMERS-RISK, and emit one weighted edge per joined row:

    id1 = party-side entity id (global across banks)
    id2 = bank id + "__" + customer-side entity id (per-bank node)
    weight = relation duration in whole months

The same person therefore appears as a single party-side node but as separate
customer-side nodes per bank. LINK, CUSTOMERS, and RISK are held in hash
indexes; PARTIES streams through the join one row at a time.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

from .dates import MalformedRecordError, month_span, parse_date
from .synthbank import load_manifest

BANK_SEPARATOR = "__"


class SchemaError(ValueError):
    """A table is missing join-key columns."""


class RelationEdge(NamedTuple):
    id1: str
    id2: str
    weight: int


def make_doc_id(
    id_doc_number: str | None,
    company_registration_id: str | None,
    normalize: bool = False,
    context: str | None = None,
) -> str:
    """Build the typed document id for a row.

    Exactly one of the two identifiers must be present (non-blank); rows
    carrying both or neither are malformed. The optional normalization pass
    (trim + casefold) absorbs injected typo noise; it is off by default.
    """
    raw_doc = id_doc_number or ""
    raw_reg = company_registration_id or ""
    doc = raw_doc.strip()
    reg = raw_reg.strip()
    if bool(doc) == bool(reg):
        what = "both" if doc else "neither"
        where = f" ({context})" if context else ""
        raise MalformedRecordError(
            f"{what} of id_doc_number/company_registration_id present{where}"
        )
    if normalize:
        return f"individual_{doc.casefold()}" if doc else f"company_{reg.casefold()}"
    return f"individual_{raw_doc}" if doc else f"company_{raw_reg}"


def add_doc_ids(rows: Iterable[dict], normalize: bool = False) -> list[dict]:
    """Attach a doc_id column; rows are returned in input order."""
    out = []
    for i, row in enumerate(rows):
        row = dict(row)
        row["doc_id"] = make_doc_id(
            row.get("id_doc_number"),
            row.get("company_registration_id"),
            normalize=normalize,
            context=f"row {i}",
        )
        out.append(row)
    return out


def resolve_entities(
    rows: Iterable[dict], doc_column: str = "doc_id"
) -> tuple[list[dict], int]:
    """Assign entity ids by exact doc-id equality, first occurrence first.

    Two rows share an entity id iff they share a doc id. Returns the rows
    (with an entity_id column) and the distinct-entity count.
    """
    assignment: dict[str, str] = {}
    out = []
    for row in rows:
        row = dict(row)
        doc = row[doc_column]
        ent = assignment.get(doc)
        if ent is None:
            ent = f"E{len(assignment) + 1:06d}"
            assignment[doc] = ent
        row["entity_id"] = ent
        out.append(row)
    return out, len(assignment)


def relation_duration(
    start_date: str | date,
    end_date: str | date | None,
    corpus_end_date: str | date,
) -> int:
    """Whole calendar months of a relation; open-ended ones run to corpus end."""
    end = end_date if end_date not in (None, "") else corpus_end_date
    return month_span(start_date, end)


def _require_columns(row: dict, columns: list[str], table: str) -> None:
    missing = [c for c in columns if c not in row]
    if missing:
        raise SchemaError(f"{table} lacks key columns: {', '.join(missing)}")


def join_relations(
    parties: Iterable[dict],
    links: Iterable[dict],
    customers: Iterable[dict],
    risk: Iterable[dict],
) -> Iterator[dict]:
    """Stream the three-stage join.

    Inner joins PARTIES-LINK on (bank_id, related_party_id) and then
    LINK-CUSTOMERS on (bank_id, customer_id); RISK joins left, so rows
    without a risk record carry None risk fields. PARTIES streams; the other
    tables are indexed up front.
    """
    link_index: dict[tuple[str, str], list[dict]] = {}
    first = True
    for row in links:
        if first:
            _require_columns(row, ["bank_id", "related_party_id", "customer_id"], "LINK")
            first = False
        link_index.setdefault(
            (row["bank_id"], row["related_party_id"]), []
        ).append(row)
    customer_index: dict[tuple[str, str], list[dict]] = {}
    first = True
    for row in customers:
        if first:
            _require_columns(row, ["bank_id", "customer_id", "entity_id"], "CUSTOMERS")
            first = False
        customer_index.setdefault(
            (row["bank_id"], row["customer_id"]), []
        ).append(row)
    risk_index: dict[tuple[str, str], dict] = {}
    for row in risk:
        risk_index[(row["bank_id"], row["customer_id"])] = row

    first = True
    for party in parties:
        if first:
            _require_columns(
                party, ["bank_id", "related_party_id", "entity_id"], "PARTIES"
            )
            first = False
        key = (party["bank_id"], party["related_party_id"])
        for link in link_index.get(key, []):
            ckey = (link["bank_id"], link["customer_id"])
            for customer in customer_index.get(ckey, []):
                risk_row = risk_index.get(ckey)
                yield {
                    "bank_id": link["bank_id"],
                    "related_party_id": party["related_party_id"],
                    "customer_id": link["customer_id"],
                    "party_entity_id": party["entity_id"],
                    "customer_entity_id": customer["entity_id"],
                    "relation_start_date": link["relation_start_date"],
                    "relation_end_date": link.get("relation_end_date") or None,
                    "fincrime_risk_exit": (
                        risk_row["fincrime_risk_exit"] if risk_row else None
                    ),
                    "black_list": risk_row["black_list"] if risk_row else None,
                    "aml_flag": risk_row["aml_flag"] if risk_row else None,
                }


@dataclass
class GraphStats:
    nodes: int
    edges: int
    degree_map: dict[str, int]

    def degree_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for d in self.degree_map.values():
            hist[d] = hist.get(d, 0) + 1
        return dict(sorted(hist.items()))


def build_edge_list(
    plcr_rows: Iterable[dict],
    corpus_end_date: str | date,
) -> tuple[list[RelationEdge], GraphStats, dict[str, bool]]:
    """Edges from joined rows, dropping exact-duplicate (id1, id2, weight)
    triples; same pair with a different weight or bank stays.

    Also returns per-node undirected degrees and the customer-side fincrime
    flags (a party-side node is never flagged directly).
    """
    edges: list[RelationEdge] = []
    seen: set[RelationEdge] = set()
    degree: dict[str, int] = {}
    flags: dict[str, bool] = {}
    for row in plcr_rows:
        weight = relation_duration(
            row["relation_start_date"], row["relation_end_date"], corpus_end_date
        )
        id1 = row["party_entity_id"]
        id2 = f"{row['bank_id']}{BANK_SEPARATOR}{row['customer_entity_id']}"
        edge = RelationEdge(id1, id2, weight)
        flagged = row["fincrime_risk_exit"] in (True, "true")
        flags[id1] = flags.get(id1, False)
        flags[id2] = flags.get(id2, False) or flagged
        if edge in seen:
            continue
        seen.add(edge)
        edges.append(edge)
        degree[id1] = degree.get(id1, 0) + 1
        degree[id2] = degree.get(id2, 0) + 1
    stats = GraphStats(nodes=len(degree), edges=len(edges), degree_map=degree)
    return edges, stats, flags


# -- run-directory interface ------------------------------------------------------


def _stream_csv(path: Path) -> Iterator[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        yield from csv.DictReader(fh)


def _load_table(run: Path, manifest: dict, table: str) -> Iterator[dict]:
    for _, rel in sorted(manifest["files"][table].items()):
        yield from _stream_csv(run / rel)


def build_graph_from_run(run_dir: str | Path, normalize: bool = False) -> dict:
    """Resolve, join, and write edges.tsv / graph_stats.json / nodes.json.

    Returns a summary dict {nodes, edges, party_entities, customer_entities}.
    """
    run = Path(run_dir)
    manifest = load_manifest(run)
    corpus_end = parse_date(manifest["corpus_end"])

    customers = add_doc_ids(_load_table(run, manifest, "customers"), normalize)
    customers, n_customer_entities = resolve_entities(customers)
    parties = add_doc_ids(_load_table(run, manifest, "parties"), normalize)
    parties, n_party_entities = resolve_entities(parties)
    plcr = join_relations(
        parties,
        _load_table(run, manifest, "link"),
        customers,
        _load_table(run, manifest, "risk"),
    )
    edges, stats, flags = build_edge_list(plcr, corpus_end)

    write_edges(run / "edges.tsv", edges)
    (run / "graph_stats.json").write_text(
        json.dumps(
            {
                "nodes": stats.nodes,
                "edges": stats.edges,
                "party_entities": n_party_entities,
                "customer_entities": n_customer_entities,
                "degree_histogram": {
                    str(k): v for k, v in stats.degree_histogram().items()
                },
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    nodes_payload = {
        node: {"degree": stats.degree_map[node], "fincrime": bool(flags[node])}
        for node in sorted(stats.degree_map)
    }
    (run / "nodes.json").write_text(
        json.dumps(nodes_payload, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return {
        "nodes": stats.nodes,
        "edges": stats.edges,
        "party_entities": n_party_entities,
        "customer_entities": n_customer_entities,
    }


def write_edges(path: str | Path, edges: Iterable[RelationEdge]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for e in edges:
            fh.write(f"{e.id1}\t{e.id2}\t{e.weight}\n")


def read_edges(path: str | Path) -> list[RelationEdge]:
    edges = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            id1, id2, weight = line.split("\t")
            edges.append(RelationEdge(id1, id2, int(weight)))
    return edges
