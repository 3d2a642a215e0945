#!/usr/bin/env python3
"""Regenerates the packaged fixtures under crates/core/fixtures.

Output is deterministic; rerunning overwrites the files in place.
"""

import csv
import json
import os
import random
import re

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "crates", "core", "fixtures")

SURNAMES = [
    "Aldren", "Brask", "Corvin", "Dunmore", "Elsworth", "Fenwick", "Garrow", "Holloway",
    "Ingram", "Jessup", "Kessler", "Lindqvist", "Marlow", "Norcross", "Oakes", "Pemberton",
    "Quill", "Radcliff", "Stroud", "Thorne", "Underhill", "Vance", "Whitlock", "Yardley",
    "Ashby", "Beaumont", "Carrick", "Delacroix", "Everard", "Falkner", "Gilchrist", "Hartigan",
    "Ivers", "Jarrow", "Kinsella", "Lockhart", "Merrick", "Nyland", "Osgood", "Prescott",
]
CITIES = [
    "Paris", "Vienna", "Lisbon", "Prague", "Dublin", "Oslo", "Madrid", "Geneva", "Zurich",
    "Antwerp", "Leiden", "Bergen", "Krakow", "Seville", "Turin", "Lyon", "Munich", "Toledo",
    "Valencia", "Bruges",
]

POSITIVE = [
    "{A} met {B} in {L} in {T}.",
    "In {T}, {A} worked with {B} in {L}.",
    "{A} married {B} in {L} in {T}.",
    "{A} settled in {L} after the war. In {T} {A} met {B} in {L}, and {B} later recalled the meeting.",
    "{A} and {B} founded a theatre together in {L} in {T}.",
    "In {T} {A} debated {B} at a rally in {L}.",
    "{A} joined {B} on stage in {L} in {T}.",
]
# Both present at (T, L) without interacting.
COPRESENT = [
    "{A} was born in {L} in {T}. {B} also lived in {L} in {T}.",
    "In {T}, {A} studied in {L}. {B} taught in {L} in {T} as well.",
    "{A} was born in {L} in {T}. {B} grew up in {L} in {T}. {A} met {B} in {L2} in {T2}.",
    "{A} lived in {L} in {T}, and {B} was also living in {L} in {T}.",
]
# B was not at (T, L).
ABSENT_B = [
    "{A} moved to {L} in {T}; {B} had left {L} long before {T}.",
    "In {T}, {A} visited {L}, while {B} wrote about {L} from abroad in {T}.",
]


def norm(s):
    return " ".join(s.lower().split())


def spans(text, surface):
    return [[m.start(), m.end()] for m in re.finditer(r"(?<!\w)" + re.escape(surface) + r"(?!\w)", text)]


def mention(text, surface):
    occ = spans(text, surface)
    assert occ, (surface, text)
    return {"surface": surface, "occurrences": occ}


def segment(doc_id, text):
    return {"doc_id": doc_id, "segment_id": f"{doc_id}:s0", "segment_text": text,
            "char_start": 0, "char_end": len(text)}


def ordered(a, b):
    return (a, b) if norm(a) <= norm(b) else (b, a)


def candidate(doc_id, text, a, b, t, l):
    p1, p2 = ordered(a, b)
    rec = segment(doc_id, text)
    rec.update(person1=mention(text, p1), person2=mention(text, p2),
               time=mention(text, t), location=mention(text, l))
    return rec


def triple(doc_id, text, p, t, l):
    rec = segment(doc_id, text)
    rec.update(person=mention(text, p), time=mention(text, t), location=mention(text, l))
    return rec


def dumps(rec):
    return json.dumps(rec, separators=(",", ":"), ensure_ascii=False)


def write_jsonl(path, records):
    with open(path, "w") as f:
        for r in records:
            f.write(dumps(r) + "\n")


def pick_pair(rng, pool):
    a, b = rng.sample(pool, 2)
    return a, b


N_LABELED = 400


def labeled_fixture(rng):
    out = []
    i = 0
    while len(out) < N_LABELED:
        a, b = pick_pair(rng, SURNAMES)
        l, l2 = rng.sample(CITIES, 2)
        t, t2 = (str(y) for y in rng.sample(range(1900, 2021), 2))
        kind = rng.random()
        doc = f"lab{i:03d}"
        i += 1
        if kind < 0.5:
            text = rng.choice(POSITIVE).format(A=a, B=b, L=l, T=t)
            rec = candidate(doc, text, a, b, t, l)
            rec.update(y_inter=1, y_tra1=1, y_tra2=1)
            out.append(rec)
        elif kind < 0.8:
            tpl = rng.choice(COPRESENT)
            text = tpl.format(A=a, B=b, L=l, T=t, L2=l2, T2=t2)
            rec = candidate(doc, text, a, b, t, l)
            rec.update(y_inter=0, y_tra1=1, y_tra2=1)
            out.append(rec)
            if "{L2}" in tpl and len(out) < N_LABELED:
                rec = candidate(doc, text, a, b, t2, l2)
                rec.update(y_inter=1, y_tra1=1, y_tra2=1)
                out.append(rec)
        else:
            text = rng.choice(ABSENT_B).format(A=a, B=b, L=l, T=t)
            rec = candidate(doc, text, a, b, t, l)
            p1, _ = ordered(a, b)
            rec.update(y_inter=0, y_tra1=0 if p1 == b else 1, y_tra2=1 if p1 == b else 0)
            out.append(rec)
    splits = ["train"] * 240 + ["val"] * 80 + ["test"] * 80
    rng.shuffle(splits)
    for rec, s in zip(out, splits):
        rec["split"] = s
    return out


TRA_POS = [
    "{A} lived in {L} in {T}.",
    "In {T}, {A} moved to {L}.",
    "{A} was born in {L} in {T}.",
    "{A} met {B} in {L} in {T}.",
    "In {T} {A} taught in {L}.",
]
TRA_NEG = [
    "{A} wrote about {L} from abroad in {T}.",
    "{A} had left {L} long before {T}.",
    "In {T}, {A} never visited {L}.",
]


def trajectory_fixture(rng):
    out = []
    for i in range(50):
        a, b = pick_pair(rng, SURNAMES)
        l = rng.choice(CITIES)
        t = str(rng.randrange(1900, 2021))
        pos = i % 2 == 0
        text = rng.choice(TRA_POS if pos else TRA_NEG).format(A=a, B=b, L=l, T=t)
        rec = triple(f"tra{i:03d}", text, a, t, l)
        rec["y_tra"] = 1 if pos else 0
        out.append(rec)
    return out


def worked_example():
    docs = {
        "niemans": "Niemans settled in The Hague after the war. In 1950 Niemans met Berg in The Hague, "
                   "and the two founded an ensemble. Berg later recalled the meeting.",
        "joseph": "Joseph was born in New York in 1970. Mary grew up in New York in 1970. "
                  "Joseph married Mary in Washington in 1993.",
    }
    triples = [
        triple("niemans", docs["niemans"], "Niemans", "1950", "The Hague"),
        triple("niemans", docs["niemans"], "Berg", "1950", "The Hague"),
        triple("joseph", docs["joseph"], "Joseph", "1970", "New York"),
        triple("joseph", docs["joseph"], "Mary", "1970", "New York"),
        triple("joseph", docs["joseph"], "Joseph", "1993", "Washington"),
        triple("joseph", docs["joseph"], "Mary", "1993", "Washington"),
    ]
    return docs, triples


FIRST = ["Harlan", "Edith", "Warren", "Lucille", "Morton", "Celia", "Rufus", "Agnes", "Dwight",
         "Opal", "Lyle", "Vera", "Clement", "Ines", "Porter", "Della", "Amos", "Nell", "Gideon",
         "Ruth", "Silas", "Mabel", "Otis", "Hazel", "Virgil"]
LAST = ["Voss", "Brandt", "Kell", "Ashcombe", "Tillman", "Greer", "Pruitt", "Sayer", "Mott",
        "Reyes", "Calder", "Wynn", "Lamont", "Birch", "Hale", "Kimura", "Okafor", "Dale",
        "Fairleigh", "Quint", "Rowe", "Stanek", "Tobin", "Vail", "Ebner"]

GAZETTEER = [
    ("Washington", 38.9072, -77.0369, "DC"),
    ("Boston", 42.3601, -71.0589, "MA"),
    ("Springfield", 42.1015, -72.5898, "MA"),
    ("Austin", 30.2672, -97.7431, "TX"),
    ("Houston", 29.7604, -95.3698, "TX"),
    ("Santa Fe", 35.6870, -105.9378, "NM"),
    ("Albuquerque", 35.0844, -106.6504, "NM"),
    ("Sacramento", 38.5816, -121.4944, "CA"),
    ("Los Angeles", 34.0522, -118.2437, "CA"),
    ("Chicago", 41.8781, -87.6298, "IL"),
    ("Denver", 39.7392, -104.9903, "CO"),
    ("Atlanta", 33.7490, -84.3880, "GA"),
]
PROFESSIONS = ["Politics & Law", "Business", "Education", "Journalism"]

CORPUS_POS = [
    "{A} met {B} in {L} in {T}.",
    "In {T}, {A} worked with {B} in {L}.",
    "{A} debated {B} at a rally in {L} in {T}.",
    "In {T} {A} joined {B} on stage in {L}.",
]
CORPUS_NEG = [
    "{A} was born in {L} in {T}. {B} also lived in {L} in {T}.",
    "In {T}, {A} studied in {L}. {B} taught in {L} in {T} as well.",
]


def political_corpus(rng):
    people = []
    for i in range(50):
        name = f"{FIRST[i % 25]} {LAST[(i * 7 + i // 25) % 25]}"
        party = "Republican" if i % 2 == 0 else "Democrat"
        place = rng.choice(GAZETTEER)
        people.append({"name": name, "party": party, "state": place[3],
                       "birth_lat": place[1], "birth_lon": place[2],
                       "profession": rng.choice(PROFESSIONS)})
    docs, triples, gold = {}, [], []
    for i, subj in enumerate(people):
        doc_id = f"pol{i:02d}"
        paras, used = [], set()
        events = []
        for _ in range(rng.randint(2, 4)):
            other = rng.choice([p for p in people if p is not subj])
            while True:
                loc = rng.choice(GAZETTEER)[0]
                year = rng.randrange(1960, 2024)
                if (loc, year) not in used:
                    used.add((loc, year))
                    break
            positive = rng.random() < 0.65
            tpl = rng.choice(CORPUS_POS if positive else CORPUS_NEG)
            paras.append(tpl.format(A=subj["name"], B=other["name"], L=loc, T=year))
            events.append((subj["name"], other["name"], str(year), loc, positive))
        intro = f"{subj['name']} is an American politician from the {subj['party']} Party."
        coarse = None
        if i == 0:
            # One interaction whose time is annotated at a finer granularity
            # for one participant; exact surface matching cannot pair it.
            other = people[1]
            paras.append(f"In March 1961, {subj['name']} met {other['name']} in Boston.")
            coarse = (subj["name"], other["name"])
        text = "\n\n".join([intro] + paras)
        docs[doc_id] = text
        for a, b, t, l, positive in events:
            triples.append(triple(doc_id, text, a, t, l))
            triples.append(triple(doc_id, text, b, t, l))
            if positive:
                p1, p2 = ordered(a, b)
                gold.append({"doc_id": doc_id, "person1": p1, "person2": p2, "time": t, "location": l})
        if coarse:
            a, b = coarse
            triples.append(triple(doc_id, text, a, "March 1961", "Boston"))
            triples.append(triple(doc_id, text, b, "1961", "Boston"))
            p1, p2 = ordered(a, b)
            gold.append({"doc_id": doc_id, "person1": p1, "person2": p2, "time": "1961", "location": "Boston"})
    assert len({p["name"] for p in people}) == len(people)
    return people, docs, triples, gold


def corpus_candidates(triples):
    by_seg = {}
    for t in triples:
        by_seg.setdefault((t["doc_id"], t["segment_id"]), []).append(t)
    keys = set()
    for (doc, seg), ts in by_seg.items():
        for i in range(len(ts)):
            for j in range(i + 1, len(ts)):
                a, b = ts[i], ts[j]
                pa, pb = norm(a["person"]["surface"]), norm(b["person"]["surface"])
                if pa == pb:
                    continue
                if norm(a["time"]["surface"]) != norm(b["time"]["surface"]):
                    continue
                if norm(a["location"]["surface"]) != norm(b["location"]["surface"]):
                    continue
                p1, p2 = sorted([pa, pb])
                keys.add((seg, p1, p2, norm(a["time"]["surface"]), norm(a["location"]["surface"])))
    return sorted(keys)


def llm_fixture(rng, people, keys):
    party = {norm(p["name"]): p["party"] for p in people}
    out = []
    for seg, p1, p2, t, l in keys:
        year = int(t)
        inter = party[p1] != party[p2]
        if inter:
            adv = 0.3 + 0.5 * (year - 1960) / 64
            r = rng.random()
            kind = "Adversarial" if r < adv else ("Cooperative" if r < adv + (1 - adv) / 2 else "Neutral")
        else:
            kind = rng.choices(["Cooperative", "Neutral", "Adversarial"], [0.7, 0.2, 0.1])[0]
        style = rng.random()
        if style < 0.05:
            response = "I cannot determine the nature of this interaction."
        elif style < 0.5:
            response = kind
        else:
            response = f"The interaction is {kind}."
        out.append({"id": f"{seg}#{p1}|{p2}|{t}|{l}", "response": response})
    return out


TIME_CASES = [
    ("1950", 1950), ("March 1993", 1993), ("12 May 1870", 1870), ("c. 1800", 1800),
    ("AD 800", 800), ("spring of 2001", 2001), ("1950s", None), ("the 1960s", None),
    ("1950 or 1951", None), ("1950-1955", None), ("May 5", None), ("yesterday", None),
    ("in 1066", 1066), ("June 4, 1944", 1944), ("late 1989", 1989), ("early 2010", 2010),
    ("1999.", 1999), ("(1921)", 1921), ("around 955", 955), ("summer 1969", 1969),
    ("1990-91", 1990), ("1,000 days", None), ("12345", None), ("the year 2000", 2000),
    ("19th century", None), ("1 January 2024", 2024), ("autumn, 1888", 1888),
]


def time_fixture(rng):
    rows = list(TIME_CASES)
    months = ["January", "February", "March", "April", "May", "June", "July", "August",
              "September", "October", "November", "December"]
    while len(rows) < 200:
        y = rng.randrange(1000, 2025)
        form = rng.randrange(6)
        if form == 0:
            rows.append((str(y), y))
        elif form == 1:
            rows.append((f"{rng.choice(months)} {y}", y))
        elif form == 2:
            rows.append((f"{rng.randint(1, 28)} {rng.choice(months)} {y}", y))
        elif form == 3:
            rows.append((f"{rng.choice(months)} {rng.randint(1, 28)}, {y}", y))
        elif form == 4:
            rows.append((f"{y // 10 * 10}s", None))
        else:
            rows.append((f"between {y} and {y + rng.randint(1, 9)}", None))
    return rows


def main():
    rng = random.Random(20240601)
    os.makedirs(os.path.join(ROOT, "worked", "docs"), exist_ok=True)
    os.makedirs(os.path.join(ROOT, "corpus", "docs"), exist_ok=True)

    write_jsonl(os.path.join(ROOT, "labeled.jsonl"), labeled_fixture(rng))
    write_jsonl(os.path.join(ROOT, "trajectory.jsonl"), trajectory_fixture(rng))

    docs, triples = worked_example()
    for doc_id, text in docs.items():
        with open(os.path.join(ROOT, "worked", "docs", f"{doc_id}.txt"), "w") as f:
            f.write(text)
    write_jsonl(os.path.join(ROOT, "worked", "triples.jsonl"), triples)

    people, cdocs, ctriples, gold = political_corpus(rng)
    for doc_id, text in cdocs.items():
        with open(os.path.join(ROOT, "corpus", "docs", f"{doc_id}.txt"), "w") as f:
            f.write(text)
    write_jsonl(os.path.join(ROOT, "corpus", "triples.jsonl"), ctriples)
    audit_docs = {f"pol{i:02d}" for i in range(12)}
    audit_gold = [g for g in gold if g["doc_id"] in audit_docs]
    write_jsonl(os.path.join(ROOT, "corpus", "audit_gold.jsonl"), audit_gold)
    with open(os.path.join(ROOT, "corpus", "attrs.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["person", "party", "state", "birth_lat", "birth_lon", "profession"])
        for p in people:
            w.writerow([p["name"], p["party"], p["state"], p["birth_lat"], p["birth_lon"], p["profession"]])
    with open(os.path.join(ROOT, "corpus", "gazetteer.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["location", "lat", "lon", "state"])
        for row in GAZETTEER:
            w.writerow(row)
    write_jsonl(os.path.join(ROOT, "corpus", "llm_responses.jsonl"),
                llm_fixture(rng, people, corpus_candidates(ctriples)))

    with open(os.path.join(ROOT, "time_surfaces.tsv"), "w") as f:
        f.write("surface\tyear\n")
        for surface, year in time_fixture(rng):
            f.write(f"{surface}\t{'' if year is None else year}\n")


if __name__ == "__main__":
    main()
