"""Synthetic CFPB-format data with planted structure.

The generator is a designed benchmark, not a model of the real database:

* ``timely_response`` follows an XOR-style interaction between "large
  company" and "popular product" (both visible through frequency encoding),
  so no linear score in the encoded features can rank it well.
* ``company_response`` is drawn from a planted table conditioned on product
  and issue.
* narratives mix planted topic word lists with stopwords and ``XXXX``
  redaction masks.
"""
from __future__ import annotations

import csv
import datetime as dt
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArtifactIoError
from .ingest import CANONICAL_FIELDS, RESPONSE_CATEGORIES, SchemaSpec, csv_header

PRODUCTS = (
    "Credit reporting, credit repair services, or other personal consumer reports",
    "Debt collection",
    "Mortgage",
    "Credit card or prepaid card",
    "Checking or savings account",
    "Student loan",
    "Vehicle loan or lease",
    "Money transfer, virtual currency, or money service",
    "Payday loan, title loan, or personal loan",
    "Bank account or service",
    "Consumer Loan",
    "Prepaid card",
)

STATES = (
    "AL AK AZ AR CA CO CT DE DC FL GA HI ID IL IN IA KS KY LA ME MD MA MI MN MS "
    "MO MT NE NV NH NJ NM NY NC ND OH OK OR PA RI SC SD TN TX UT VT VA WA WV WI WY PR"
).split()

# planted narrative topics; words are disjoint across topics
TOPIC_WORDS = (
    ("credit", "report", "bureau", "inquiry", "dispute", "equifax", "transunion", "experian", "score", "inaccurate"),
    ("debt", "collector", "collection", "owe", "harass", "calls", "validation", "agency", "letter", "verify"),
    ("mortgage", "escrow", "foreclosure", "modification", "servicer", "appraisal", "refinance", "property", "closing", "lender"),
    ("card", "charge", "fee", "interest", "statement", "balance", "limit", "purchase", "merchant", "annual"),
    ("checking", "savings", "deposit", "overdraft", "branch", "teller", "withdrawal", "funds", "atm", "hold"),
    ("student", "loan", "navient", "forbearance", "deferment", "repayment", "forgiveness", "tuition", "income", "federal"),
    ("vehicle", "car", "auto", "repossession", "dealer", "lease", "title", "insurance", "gap", "trade"),
    ("transfer", "wire", "paypal", "zelle", "sender", "recipient", "crypto", "bitcoin", "exchange", "wallet"),
    ("identity", "theft", "fraud", "stolen", "police", "unauthorized", "scam", "victim", "opened", "impersonated"),
    ("customer", "service", "representative", "supervisor", "waited", "phone", "chat", "email", "response", "ignored"),
)
FILLER = ("i", "my", "the", "was", "and", "to", "they", "me", "a", "of", "on", "it", "this", "have", "been")

DATE_START = dt.date(2011, 12, 1)
DATE_END = dt.date(2024, 4, 30)
BASE_RESPONSE = np.array([0.52, 0.13, 0.03, 0.08, 0.06, 0.05, 0.03, 0.10])


@dataclass
class SynthSpec:
    rows: int = 10_000
    companies: int = 400
    products: int = len(PRODUCTS)
    issues: int = 40
    states: int = len(STATES)
    seed: int = 0
    signal: float = 3.0
    narrative_rate: float = 0.6
    narrative_topics: int = len(TOPIC_WORDS)
    narrative_length: int = 30

    def __post_init__(self):
        if self.rows < 1:
            raise ValueError("rows must be >= 1")
        if not 1 <= self.products <= len(PRODUCTS) or not 1 <= self.states <= len(STATES):
            raise ValueError("products/states exceed the built-in vocabularies")
        if not 1 <= self.narrative_topics <= len(TOPIC_WORDS):
            raise ValueError(f"narrative_topics must lie in [1, {len(TOPIC_WORDS)}]")
        if self.companies < 2 or self.issues < 1:
            raise ValueError("need at least 2 companies and 1 issue")


def _zipf_weights(n, s, rng):
    w = 1.0 / np.arange(1, n + 1) ** s
    return rng.permutation(w / w.sum())


def _heavy_half(weights):
    """Boolean mask of the heaviest categories covering ~half the mass."""
    order = np.argsort(-weights, kind="stable")
    cum = np.cumsum(weights[order])
    mask = np.zeros(len(weights), dtype=bool)
    mask[order[: int(np.searchsorted(cum, 0.5)) + 1]] = True
    return mask


class _Planted:
    def __init__(self, spec: SynthSpec, rng):
        self.company_names = [f"Company {i:05d} Financial" for i in range(spec.companies)]
        self.company_w = _zipf_weights(spec.companies, 1.05, rng)
        self.product_names = list(PRODUCTS[: spec.products])
        self.product_w = _zipf_weights(spec.products, 0.9, rng)
        self.issue_names = [f"Issue {i:03d}" for i in range(spec.issues)]
        self.issue_w = _zipf_weights(spec.issues, 0.8, rng)
        self.state_names = STATES[: spec.states]
        self.state_w = rng.dirichlet(np.full(spec.states, 5.0))
        self.big_company = _heavy_half(self.company_w)
        self.popular_product = _heavy_half(self.product_w)
        self.company_effect = rng.normal(0.0, 0.3, spec.companies)
        # response table: product x 8 categories, tilted per issue
        self.response_table = rng.dirichlet(BASE_RESPONSE * 4.0, size=spec.products)
        self.issue_tilt = rng.lognormal(0.0, 1.0, size=(spec.issues, len(RESPONSE_CATEGORIES)))
        self.product_topic = np.arange(spec.products) % spec.narrative_topics


def _narrative(rng, planted, spec, product):
    n_topics = spec.narrative_topics
    main = planted.product_topic[product]
    other = int(rng.integers(n_topics))
    length = int(rng.poisson(spec.narrative_length)) + 5
    words = []
    for _ in range(length):
        r = rng.random()
        if r < 0.25:
            words.append(FILLER[rng.integers(len(FILLER))])
        elif r < 0.30:
            words.append("XXXX")
        else:
            topic = main if rng.random() < 0.8 else other
            vocab = TOPIC_WORDS[topic]
            words.append(vocab[rng.integers(len(vocab))])
    text = " ".join(words)
    return text[0].upper() + text[1:] + "."


def generate_rows(spec: SynthSpec):
    """Yields canonical-field dicts, fully determined by ``spec``."""
    rng = np.random.default_rng(spec.seed)
    planted = _Planted(spec, rng)
    n = spec.rows
    companies = rng.choice(spec.companies, size=n, p=planted.company_w)
    products = rng.choice(spec.products, size=n, p=planted.product_w)
    issues = rng.choice(spec.issues, size=n, p=planted.issue_w)
    states = rng.choice(spec.states, size=n, p=planted.state_w)
    span = (DATE_END - DATE_START).days
    received = rng.integers(0, span + 1, size=n)
    lag = np.minimum(rng.geometric(0.4, size=n) - 1, 30)
    agree = planted.big_company[companies] == planted.popular_product[products]
    logit = 1.0 + spec.signal * np.where(agree, 0.5, -0.5) + planted.company_effect[companies]
    timely = rng.random(n) < 1.0 / (1.0 + np.exp(-logit))
    u_missing = rng.random((n, 4))

    for i in range(n):
        p = products[i]
        probs = planted.response_table[p] * planted.issue_tilt[issues[i]]
        if not timely[i]:
            probs = probs.copy()
            probs[RESPONSE_CATEGORIES.index("Untimely response")] *= 4.0
        probs = probs / probs.sum()
        response = RESPONSE_CATEGORIES[int(rng.choice(len(probs), p=probs))]
        narrative = _narrative(rng, planted, spec, p) if rng.random() < spec.narrative_rate else ""
        d_recv = DATE_START + dt.timedelta(days=int(received[i]))
        d_sent = d_recv + dt.timedelta(days=int(lag[i]))
        yield {
            "complaint_id": str(1_000_000 + i),
            "company": planted.company_names[companies[i]],
            "product": planted.product_names[p],
            "issue": planted.issue_names[issues[i]],
            "state": "" if u_missing[i, 0] < 0.02 else planted.state_names[states[i]],
            "date_received": d_recv.isoformat(),
            "date_sent": "" if u_missing[i, 1] < 0.01 else d_sent.isoformat(),
            "narrative": narrative,
            "timely_response": "" if u_missing[i, 2] < 0.005 else ("Yes" if timely[i] else "No"),
            "company_response": "" if u_missing[i, 3] < 0.005 else response,
        }


def write_synthetic(spec: SynthSpec, out, schema: SchemaSpec = None) -> int:
    """Write ``spec.rows`` records as CSV (or json-lines, per ``schema``) to
    a path or text stream. Returns the row count."""
    schema = schema or SchemaSpec.default()
    own = isinstance(out, (str, Path))
    try:
        fh = open(out, "w", encoding="utf-8", newline="") if own else out
    except OSError as exc:
        raise ArtifactIoError(f"{out}: {exc.strerror}") from exc
    try:
        if schema.format == "csv":
            writer = csv.writer(fh)
            writer.writerow(csv_header(schema))
            fields = [k for k in CANONICAL_FIELDS if k in schema.column_map]
            for row in generate_rows(spec):
                writer.writerow([row[k] for k in fields])
        else:
            for row in generate_rows(spec):
                fh.write(json.dumps({schema.column_map[k]: row[k] for k in schema.column_map}) + "\n")
    finally:
        if own:
            fh.close()
    return spec.rows


def synthetic_bytes(spec: SynthSpec, schema: SchemaSpec = None) -> bytes:
    buf = io.StringIO(newline="")
    write_synthetic(spec, buf, schema)
    return buf.getvalue().encode("utf-8")
