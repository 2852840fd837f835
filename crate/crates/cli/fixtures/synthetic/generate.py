"""Regenerates the synthetic two-dataset benchmark used by the CLI tests.

Sentences are 5-7 distinct toy-vocabulary words. Paraphrases replace one
word; non-paraphrases reorder the words, which keeps every character and
most n-grams intact. The L2 files translate the accuracy dataset for the
cross-lingual benchmark.

    python generate.py
"""
import json
import random

VOCAB = 10


def sentence(rng, prefix):
    n = rng.randint(5, 7)
    return [f"{prefix}{k}" for k in rng.sample(range(1, VOCAB + 1), n)]


def paraphrase(rng, words, prefix):
    out = list(words)
    i = rng.randrange(len(out))
    out[i] = rng.choice([f"{prefix}{k}" for k in range(1, VOCAB + 1) if f"{prefix}{k}" != out[i]])
    return out


def reorder(rng, words):
    out = list(words)
    kind = rng.random()
    if kind < 0.4:
        i = rng.randrange(len(out) - 1)
        out[i], out[i + 1] = out[i + 1], out[i]
    elif kind < 0.7:
        k = rng.randrange(1, len(out))
        out = out[k:] + out[:k]
    else:
        while out == words:
            rng.shuffle(out)
    return out


def pairs(rng, n, prefix):
    rows = []
    for i in range(n):
        a = sentence(rng, prefix)
        positive = i % 2 == 0
        b = paraphrase(rng, a, prefix) if positive else reorder(rng, a)
        rows.append((f"{i:04d}", " ".join(a), " ".join(b), positive))
    rng.shuffle(rows)
    return rows


def write_tsv(path, rows):
    with open(path, "w") as f:
        f.write("id\tsentence1\tsentence2\tlabel\n")
        for id_, a, b, pos in rows:
            f.write(f"{id_}\t{a}\t{b}\t{int(pos)}\n")


def write_jsonl(path, rows):
    with open(path, "w") as f:
        for id_, a, b, pos in rows:
            rec = {"pair_id": id_, "first": a, "second": b, "judgment": "paraphrase" if pos else "different"}
            f.write(json.dumps(rec) + "\n")


def translate(rows, prefix):
    """Word-for-word L2 version, in reverse row order so alignment must use ids."""
    return [(id_, a.replace("w", prefix), b.replace("w", prefix), pos) for id_, a, b, pos in reversed(rows)]


def main():
    rng = random.Random(7)
    validation = pairs(rng, 120, "w")
    test = pairs(rng, 200, "w")
    write_tsv("acc_validation.tsv", validation)
    write_tsv("acc_test.tsv", test)
    write_jsonl("auc_test.jsonl", pairs(rng, 200, "v"))
    write_tsv("acc_validation_l2.tsv", translate(validation, "u"))
    write_tsv("acc_test_l2.tsv", translate(test, "u"))


if __name__ == "__main__":
    main()
