#!/usr/bin/env python3
"""Build the Adult CSVs and the word-vector file used by the tests.

Reads the Adult split files and a binary word2vec file (both shipped inside
the `responsibly` 0.1.2 wheel on PyPI) and writes:

  data/adult_train.csv   header row, trimmed cells
  data/adult_test.csv    same, with the trailing '.' removed from labels
  data/adult_vectors.txt text vectors for every token of every nominal value

Tokens missing from word2vec are filled in two ways. Abbreviations map to
the words they stand for (hs -> high school). Everything else (mostly
country and ethnicity names, absent from the filtered vocabulary) gets a
deterministic pseudo-random unit vector placed near a shared region anchor.
"""

import argparse
import hashlib
import re
import zipfile
from pathlib import Path

import numpy as np

COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num", "marital-status",
    "occupation", "relationship", "race", "sex", "capital-gain", "capital-loss",
    "hours-per-week", "native-country", "salary-class",
]
NOMINAL = [1, 3, 5, 6, 7, 8, 9, 13]

ALIASES = {
    "?": ["missing", "unknown"],
    "1st": ["first"], "4th": ["fourth"], "5th": ["fifth"], "6th": ["sixth"],
    "7th": ["seventh"], "8th": ["eighth"], "9th": ["ninth"], "10th": ["tenth"],
    "11th": ["eleventh"], "12th": ["twelfth"],
    "acdm": ["academic"], "adm": ["administrative"], "af": ["armed", "forces"],
    "assoc": ["associate"], "bachelors": ["bachelor"], "civ": ["civilian"],
    "emp": ["employed"], "hs": ["high", "school"], "inc": ["incorporated"],
    "inspct": ["inspector"], "priv": ["private"], "prof": ["professional"],
    "serv": ["service"], "voc": ["vocational"],
}

REGIONS = {
    "latin": ["mexico", "cuba", "dominican", "ecuador", "guatemala", "haiti", "honduras",
              "jamaica", "nicaragua", "peru", "puerto", "rico", "salvador", "columbia",
              "trinadad&tobago"],
    "europe": ["england", "france", "germany", "greece", "holand", "hungary", "ireland",
               "italy", "netherlands", "poland", "portugal", "scotland", "yugoslavia"],
    "asia": ["cambodia", "hong", "india", "iran", "japan", "laos", "philippines", "taiwan",
             "thailand", "vietnam", "asian", "pac", "islander"],
    "north": ["canada", "us(guam", "usvi", "etc)", "amer", "indian", "eskimo"],
}


def hashed_unit(name, dim):
    seed = int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "little")
    v = np.random.default_rng(seed).standard_normal(dim)
    return v / np.linalg.norm(v)


def tokens(value):
    return [t for t in re.split(r"[-_/\s]+", value.lower()) if t]


def read_word2vec_bin(data):
    header_end = data.index(b"\n")
    count, dim = map(int, data[:header_end].split())
    pos = header_end + 1
    out = {}
    for _ in range(count):
        space = data.index(b" ", pos)
        word = data[pos:space].decode("utf-8", "replace").strip()
        pos = space + 1
        out[word] = np.frombuffer(data, dtype="<f4", count=dim, offset=pos).astype(np.float64)
        pos += 4 * dim
        if pos < len(data) and data[pos:pos + 1] == b"\n":
            pos += 1
    return out, dim


def read_rows(text, skip_first):
    rows = []
    for i, line in enumerate(text.splitlines()):
        if skip_first and i == 0:
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(COLUMNS):
            continue
        cells[-1] = cells[-1].rstrip(".")
        rows.append(cells)
    return rows


def write_csv(path, rows):
    with open(path, "w", newline="") as f:
        f.write(",".join(COLUMNS) + "\n")
        for r in rows:
            f.write(",".join(r) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--wheel", required=True, help="path to responsibly-0.1.2-py3-none-any.whl")
    ap.add_argument("--out", default="data")
    args = ap.parse_args()

    with zipfile.ZipFile(args.wheel) as z:
        train_text = z.read("responsibly/dataset/adult/adult.data").decode()
        test_text = z.read("responsibly/dataset/adult/adult.test").decode()
        w2v, dim = read_word2vec_bin(
            z.read("responsibly/we/data/GoogleNews-vectors-negative300-bolukbasi.bin"))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train = read_rows(train_text, skip_first=False)
    test = read_rows(test_text, skip_first=True)
    write_csv(out / "adult_train.csv", train)
    write_csv(out / "adult_test.csv", test)

    needed = sorted({t for rows in (train, test) for r in rows for i in NOMINAL for t in tokens(r[i])})
    region_of = {t: region for region, names in REGIONS.items() for t in names}
    vectors = {}
    for tok in needed:
        if tok in w2v:
            vectors[tok] = w2v[tok]
        elif tok in ALIASES:
            vectors[tok] = np.mean([w2v[a] for a in ALIASES[tok]], axis=0)
        elif tok in region_of:
            v = hashed_unit("region:" + region_of[tok], dim) + 0.6 * hashed_unit(tok, dim)
            vectors[tok] = v / np.linalg.norm(v)
        else:
            raise SystemExit(f"no vector rule for token {tok!r}")

    with open(out / "adult_vectors.txt", "w") as f:
        f.write(f"{len(vectors)} {dim}\n")
        for tok, v in vectors.items():
            f.write(tok + " " + " ".join(f"{x:.6f}" for x in v) + "\n")
    print(f"train {len(train)} rows, test {len(test)} rows, {len(vectors)} token vectors")


if __name__ == "__main__":
    main()
