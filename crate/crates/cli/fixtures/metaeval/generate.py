"""Regenerates judgments.jsonl: toy-vocabulary data-to-text judgments.

Hypotheses are references with k word substitutions; ratings fall with k.
Language L2 has constant ratings so its correlation is undefined.
"""
import json
import random

rng = random.Random(11)
PREFIX = {"L1": "w", "L2": "u", "L3": "v"}
SYSTEMS = ["sys-a", "sys-b", "sys-c"]

rows = []
for lang in ["L1", "L3", "L2"]:
    p = PREFIX[lang]
    docs = 12 if lang != "L2" else 4
    for d in range(docs):
        length = rng.randint(4, 6)
        ref = [rng.randint(1, 10) for _ in range(length)]
        alt = list(ref)
        alt[rng.randrange(length)] = rng.randint(1, 10)
        refs = [" ".join(f"{p}{i}" for i in r) for r in (ref, alt)]
        for s, system in enumerate(SYSTEMS):
            k = 0 if (d == 0 and s == 0) else rng.randint(0, length - 1)
            hyp = list(ref)
            for pos in rng.sample(range(length), k):
                hyp[pos] = (hyp[pos] % 10) + 1
            base = 5.0 - 4.0 * k / length
            ratings = {
                c: [min(5.0, max(1.0, round(base + rng.uniform(-0.5, 0.5), 1))) for _ in range(2)]
                for c in ["data_coverage", "relevance", "correctness"]
            }
            if lang == "L2":
                ratings = {c: [3.0, 3.0] for c in ratings}
            rows.append({
                "doc_id": f"{lang}-d{d}",
                "system_id": system,
                "hypothesis": " ".join(f"{p}{i}" for i in hyp),
                "references": refs,
                "ratings": ratings,
                "language": lang,
            })

with open("judgments.jsonl", "w") as f:
    for r in rows:
        f.write(json.dumps(r) + "\n")
