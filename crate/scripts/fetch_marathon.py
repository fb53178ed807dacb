#!/usr/bin/env python3
"""Build a (year, minutes) CSV of marathon winning times for `poswave denoise`.

Reads an HTML champions page (downloaded with --url or saved locally and
passed with --html), or a CSV with year and h:mm:ss columns (--csv). Every
table row holding a four-digit year and an h:mm:ss time is a candidate; the
first table with such rows is used unless --table says otherwise.
"""

import argparse
import csv
import re
import sys
import urllib.request
from html.parser import HTMLParser

DEFAULT_URL = "https://www.baa.org/races/boston-marathon/results/champions"
YEAR = re.compile(r"^(18|19|20)\d\d$")
TIME = re.compile(r"^(\d{1,2}):(\d{2}):(\d{2})(?:\.\d+)?$")


class Tables(HTMLParser):
    def __init__(self):
        super().__init__()
        self.tables, self.row, self.cell, self.depth = [], None, None, 0

    def handle_starttag(self, tag, attrs):
        if tag == "table":
            self.depth += 1
            self.tables.append([])
        elif tag == "tr" and self.depth:
            self.row = []
        elif tag in ("td", "th") and self.row is not None:
            self.cell = []

    def handle_endtag(self, tag):
        if tag == "table":
            self.depth = max(0, self.depth - 1)
        elif tag == "tr" and self.row is not None:
            self.tables[-1].append(self.row)
            self.row = None
        elif tag in ("td", "th") and self.cell is not None:
            self.row.append(" ".join("".join(self.cell).split()))
            self.cell = None

    def handle_data(self, data):
        if self.cell is not None:
            self.cell.append(data)


def minutes(text):
    m = TIME.match(text.strip())
    if not m:
        return None
    h, mm, ss = (int(g) for g in m.groups())
    return 60 * h + mm + ss / 60


def extract(rows):
    out = {}
    for row in rows:
        year = next((c for c in row if YEAR.match(c.strip())), None)
        t = next((minutes(c) for c in row if minutes(c) is not None), None)
        if year and t is not None:
            out.setdefault(int(year), t)
    return out


def main():
    p = argparse.ArgumentParser(description=__doc__)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--url", default=None, help=f"page to download (default {DEFAULT_URL})")
    src.add_argument("--html", help="saved HTML page")
    src.add_argument("--csv", help="CSV with a year column and an h:mm:ss time column")
    p.add_argument("--table", type=int, default=None, help="index of the HTML table to use")
    p.add_argument("--from-year", type=int, default=1953)
    p.add_argument("--to-year", type=int, default=2016)
    p.add_argument("--out", default="-", help="output CSV path (default stdout)")
    args = p.parse_args()

    if args.csv:
        with open(args.csv, newline="", encoding="utf-8") as f:
            found = extract(list(csv.reader(f)))
    else:
        if args.html:
            with open(args.html, encoding="utf-8") as f:
                page = f.read()
        else:
            req = urllib.request.Request(args.url or DEFAULT_URL, headers={"User-Agent": "Mozilla/5.0"})
            with urllib.request.urlopen(req, timeout=30) as r:
                page = r.read().decode("utf-8", errors="replace")
        parser = Tables()
        parser.feed(page)
        candidates = [extract(t) for t in parser.tables]
        if args.table is not None:
            found = candidates[args.table]
        else:
            found = next((c for c in candidates if c), {})

    years = [y for y in sorted(found) if args.from_year <= y <= args.to_year]
    if not years:
        sys.exit("no (year, time) rows found; save the page and pass --html, or convert it to --csv")
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="", encoding="utf-8")
    w = csv.writer(out)
    w.writerow(["year", "minutes"])
    for y in years:
        w.writerow([y, f"{found[y]:.4f}"])
    if out is not sys.stdout:
        out.close()
    print(f"{len(years)} rows, {years[0]}-{years[-1]}", file=sys.stderr)


if __name__ == "__main__":
    main()
