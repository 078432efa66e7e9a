"""Calendar helpers shared by the generator, graph builder, and detectors."""

from __future__ import annotations

from datetime import date, datetime, timedelta


class MalformedRecordError(ValueError):
    """A record violates an ordering or schema precondition."""


def parse_date(value: str | date) -> date:
    if isinstance(value, date) and not isinstance(value, datetime):
        return value
    if isinstance(value, datetime):
        return value.date()
    return date.fromisoformat(value)


def parse_timestamp(value: str | datetime) -> datetime:
    if isinstance(value, datetime):
        return value
    return datetime.fromisoformat(value)


def add_months(d: date, months: int) -> date:
    """Shift a date by whole months, clamping the day into the target month."""
    y, m = divmod(d.year * 12 + (d.month - 1) + months, 12)
    m += 1
    # clamp to month length (e.g. Jan 31 + 1 month -> Feb 28)
    for day in (d.day, 30, 29, 28):
        try:
            return date(y, m, day)
        except ValueError:
            continue
    raise AssertionError("unreachable")


def month_span(start: date | str, end: date | str) -> int:
    """Whole calendar months between two dates, floored.

    Raises MalformedRecordError when end precedes start.
    """
    s = parse_date(start)
    e = parse_date(end)
    if e < s:
        raise MalformedRecordError(f"end date {e} precedes start date {s}")
    months = (e.year - s.year) * 12 + (e.month - s.month)
    if e.day < s.day:
        months -= 1
    return months


def week_index(ts: datetime | str, corpus_start: date) -> int:
    """0-based 7-day bin from the corpus start date."""
    t = parse_timestamp(ts)
    return (t.date() - corpus_start).days // 7


def day_offset(corpus_start: date, days: int, seconds: int = 0) -> datetime:
    base = datetime(corpus_start.year, corpus_start.month, corpus_start.day)
    return base + timedelta(days=days, seconds=seconds)
