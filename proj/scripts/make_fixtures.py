#!/usr/bin/env python3
"""Regenerates the offline fixtures under tests/fixtures/.

Everything is drawn from a fixed-seed RNG, so rerunning produces identical files.
"""
import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
SEED_CONCEPT = "C555008776"

CONCEPTS = [
    ("C101", "Electrolyte", 2), ("C102", "Lithium-ion battery", 3), ("C103", "Cathode", 2),
    ("C104", "Anode", 2), ("C105", "Solid-state chemistry", 1), ("C106", "Electrochemistry", 1),
    ("C107", "Graphite", 2), ("C108", "Silicon", 2), ("C109", "Separator (electricity)", 3),
    ("C110", "Energy storage", 1), ("C111", "Supercapacitor", 3), ("C112", "Nanotechnology", 1),
    ("C113", "Polymer", 2), ("C114", "Materials science", 0), ("C115", "Chemistry", 0),
    ("C116", "Sodium-ion battery", 3), ("C117", "Thermal runaway", 4), ("C118", "State of charge", 4),
]

PHRASES = [
    "solid electrolyte", "lithium metal anode", "cathode material", "ionic conductivity",
    "capacity retention", "cycling stability", "silicon anode", "sodium ion battery",
    "thermal runaway", "state of charge estimation", "polymer electrolyte", "graphite anode",
    "layered oxide cathode", "interface engineering", "dendrite growth", "fast charging",
    "energy density", "battery management system", "electrode coating", "separator membrane",
]

TITLE_TEMPLATES = [
    "{a} for high {b}", "Improved {a} via {b}", "On the role of {a} in {b}",
    "{a} and {b} in rechargeable cells", "Understanding {a} under {b}",
]

ABSTRACT_TEMPLATES = [
    "We study {a} and report {b}.", "The {a} shows improved {b} compared with prior work.",
    "Our results reveal that {a} controls {b}.", "A model of {a} is proposed to explain {b}.",
    "Experiments confirm {a} at elevated temperature.",
]

INSTITUTIONS = [
    ("I1", "Fixture Institute"), ("I2", "Example University"), ("I3", "Battery Research Centre"),
    ("I4", "Northern Technical College"), ("I5", "Institute of Energy Materials"),
]

FIRST = ["Ana", "Bo", "Chen", "Dana", "Elif", "Femi", "Goran", "Hana", "Ivo", "Jia", "Kofi", "Lena",
         "Mei", "Nils", "Omar", "Pia", "Quinn", "Rui", "Sara", "Taro", "Uma", "Vera", "Wen", "Xia"]
LAST = ["Smith", "Garcia", "Tanaka", "Okafor", "Novak", "Larsen", "Silva", "Kim", "Smithers", "Rossi",
        "Haddad", "Ivanova"]


def make_authors(rng, n):
    authors = []
    for i in range(n):
        name = f"{FIRST[i % len(FIRST)]} {LAST[(i * 7) % len(LAST)]}"
        authors.append((f"https://openalex.org/A{5000 + i}", name, INSTITUTIONS[i % len(INSTITUTIONS)]))
    return authors


def invert(text):
    index = {}
    for pos, word in enumerate(text.split()):
        index.setdefault(word, []).append(pos)
    return index


def make_work(rng, i, authors, year, date):
    a, b = rng.sample(PHRASES, 2)
    title = rng.choice(TITLE_TEMPLATES).format(a=a, b=b)
    title = title[0].upper() + title[1:]
    sentences = []
    for _ in range(rng.randint(2, 4)):
        x, y = rng.sample(PHRASES, 2)
        sentences.append(rng.choice(ABSTRACT_TEMPLATES).format(a=x, b=y))
    abstract = " ".join(sentences)

    # A skewed author pick so that some authors dominate the top-N ranking.
    k = rng.randint(1, 4)
    chosen = []
    while len(chosen) < k:
        idx = min(int(rng.expovariate(0.12)), len(authors) - 1)
        if idx not in chosen:
            chosen.append(idx)
    authorships = []
    for pos, idx in enumerate(chosen):
        aid, name, (iid, iname) = authors[idx]
        position = "first" if pos == 0 else ("last" if pos == k - 1 else "middle")
        authorships.append({
            "author_position": position,
            "author": {"id": aid, "display_name": name},
            "institutions": [{"id": f"https://openalex.org/{iid}", "display_name": iname}],
            "is_corresponding": pos == 0,
        })

    concepts = [{"id": f"https://openalex.org/{SEED_CONCEPT}", "display_name": "Battery (electricity)",
                 "level": 2, "score": round(rng.uniform(0.5, 0.95), 6)}]
    for cid, cname, level in rng.sample(CONCEPTS, rng.randint(2, 5)):
        score = 0.0 if rng.random() < 0.15 else round(rng.uniform(0.2, 0.95), 6)
        concepts.append({"id": f"https://openalex.org/{cid}", "display_name": cname, "level": level,
                         "score": score})

    work = {
        "id": f"https://openalex.org/W{90000 + i}",
        "doi": f"https://doi.org/10.5555/fixture.{i}" if rng.random() < 0.8 else None,
        "title": title,
        "display_name": title,
        "publication_year": year,
        "publication_date": date,
        "authorships": authorships,
        "concepts": concepts,
        "primary_location": {"source": {
            "display_name": rng.choice(["Journal of Power Sources", "Electrochimica Acta", "Energy Letters"]),
            "host_organization_name": rng.choice(["Fixture Press", "Example Publishing"]) if rng.random() < 0.85 else None,
        }},
        "abstract_inverted_index": invert(abstract) if rng.random() < 0.9 else None,
    }
    return work


def write_pages(dirname, works, per_page):
    out = ROOT / dirname
    out.mkdir(parents=True, exist_ok=True)
    for f in out.glob("*.json"):
        f.unlink()
    pages = [works[i:i + per_page] for i in range(0, len(works), per_page)]
    for n, page in enumerate(pages):
        nxt = f"page:{n + 1}" if n + 1 < len(pages) else None
        body = {"meta": {"count": len(works), "per_page": per_page, "next_cursor": nxt}, "results": page}
        (out / f"page_{n:02d}.json").write_text(json.dumps(body, indent=1, ensure_ascii=False) + "\n")


def corpus50(rng):
    authors = make_authors(rng, 24)
    works = []
    for i in range(50):
        year = rng.choice(list(range(1992, 2024)))
        date = f"{year}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}"
        works.append(make_work(rng, i, authors, year, date))
    # Records the filter must drop.
    for i in range(50, 54):
        year = rng.choice([1975, 1982, 1988, 1989])
        works.append(make_work(rng, i, authors, year, f"{year}-06-01"))
    for i in range(54, 56):
        w = make_work(rng, i, authors, 2010, None)
        w["publication_date"] = None
        works.append(w)
    rng.shuffle(works)
    write_pages("openalex50", works, 12)


def small_pages(rng):
    authors = make_authors(rng, 4)
    works = [make_work(rng, 200 + i, authors, 2015, "2015-03-01") for i in range(6)]
    write_pages("openalex3x2", works, 2)
    bad = ROOT / "openalex_truncated"
    bad.mkdir(parents=True, exist_ok=True)
    text = json.dumps({"meta": {"next_cursor": None}, "results": works[:2]})
    (bad / "page_00.json").write_text(text[: len(text) // 2])


def eval_sample(rng):
    root = ROOT / "eval_sample"
    for sub in ("expected", "documents", "predicted/reference"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    for n in range(24):
        doc = f"doc{n:02d}"
        kws = rng.sample(PHRASES, rng.randint(3, 6))
        title = f"{kws[0].capitalize()} and {kws[1]}"
        abstract = " ".join(rng.choice(ABSTRACT_TEMPLATES).format(a=rng.choice(kws), b=rng.choice(PHRASES))
                            for _ in range(3))
        (root / "documents" / f"{doc}.json").write_text(json.dumps({"title": title, "abstract": abstract}) + "\n")
        expected = kws if n != 23 else []  # one document without ground truth
        (root / "expected" / f"{doc}.txt").write_text("".join(k + "\n" for k in expected))
        pred = rng.sample(PHRASES, rng.randint(2, 8))
        conf = sorted((round(rng.uniform(0.1, 1.0), 4) for _ in pred), reverse=True)
        body = {"doc_id": doc, "keyphrases": [{"text": t, "confidence": c} for t, c in zip(pred, conf)]}
        (root / "predicted" / "reference" / f"{doc}.json").write_text(json.dumps(body, indent=1) + "\n")


def wikidata_cache():
    cache = {
        "fixture institute": {"name": "Fixture Institute", "qid": "Q1", "retrieved_at": "2024-01-01T00:00:00Z",
                              "origin": "manual"},
        "electrolyte": {"name": "electrolyte", "qid": "Q183670", "retrieved_at": "2024-01-01T00:00:00Z",
                        "origin": "manual"},
    }
    (ROOT / "wikidata_cache.json").write_text(json.dumps(cache, indent=2) + "\n")


def main():
    rng = random.Random(20240611)
    corpus50(rng)
    small_pages(rng)
    eval_sample(rng)
    wikidata_cache()


if __name__ == "__main__":
    main()
