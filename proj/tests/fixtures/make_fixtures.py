#!/usr/bin/env python3
"""Regenerates the committed test fixtures. Output is deterministic."""

import json
import random
import struct
from pathlib import Path

HERE = Path(__file__).resolve().parent

DOMAINS = [
    "Arts_and_Entertainment", "Autos_and_Vehicles", "Beauty_and_Fitness", "Books_and_Literature",
    "Business_and_Industrial", "Computers_and_Electronics", "Finance", "Food_and_Drink", "Games",
    "Health", "Hobbies_and_Leisure", "Home_and_Garden", "Internet_and_Telecom", "Jobs_and_Education",
    "Law_and_Government", "News", "Online_Communities", "People_and_Society", "Pets_and_Animals",
    "Real_Estate", "Science", "Sensitive_Subjects", "Shopping", "Sports", "Travel_and_Transportation",
]

WORDS = (
    "the a river market engine budget court player doctor garden signal harvest ticket museum "
    "village contract planet recipe battery teacher journey storm ledger bridge novel canvas "
    "station vaccine tenant orbit jersey puppy mortgage verdict kernel festival lantern quarry "
    "season harbor reaction pension trail fabric chorus"
).split()
VERBS = "builds carries shows measures opens repairs follows explains changes protects".split()


def write(name, text):
    (HERE / name).write_text(text, encoding="utf-8")


def jsonl(rows):
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows)


def sentence(rng, lo=4, hi=18):
    n = rng.randint(lo, hi)
    words = [rng.choice(WORDS) for _ in range(n)]
    words.insert(rng.randint(1, n - 1), rng.choice(VERBS))
    s = " ".join(words)
    return s[0].upper() + s[1:] + rng.choice([".", ".", "?", "!"])


def rtt_benchmarks():
    rng = random.Random(1250)
    rows = []
    for d in DOMAINS:
        for i in range(50):
            rows.append({"domain": d, "id": f"{d[:4].lower()}-{i:02d}", "text": sentence(rng)})
    write("rtt_bench_25x50.jsonl", jsonl(rows))

    # One domain with a single sentence, one with three. The backward mapping
    # restores the first domain exactly and maps the other to unrelated text.
    small = [
        {"domain": "alpha", "id": "a1", "text": "The harbor lantern guides every boat home."},
        {"domain": "beta", "id": "b1", "text": "Farmers sell maize at the weekly market."},
        {"domain": "beta", "id": "b2", "text": "The court delayed its verdict until spring."},
        {"domain": "beta", "id": "b3", "text": "Children planted beans beside the school."},
    ]
    write("rtt_unbalanced.jsonl", jsonl(small))
    mapping = [
        (small[0]["text"], small[0]["text"]),
        (small[1]["text"], "zq xv"),
        (small[2]["text"], "kj wq"),
        (small[3]["text"], "vv zz yy"),
    ]
    write("rtt_unbalanced_back.tsv", "".join(f"{a}\t{b}\n" for a, b in mapping))


def metrics_suite():
    pairs = [
        ("the cat sat on the mat", "the cat is on the mat"),
        ("the cat is on the mat", "the cat is on the mat"),
        ("a quick brown fox jumps over the lazy dog", "the quick brown fox jumped over the lazy dog"),
        ("hello world", "hello there world"),
        ("Malawi is a landlocked country in southeastern Africa.", "Malawi is a landlocked country in south-eastern Africa."),
        ("It rained, so the match was postponed.", "The match was postponed because it rained."),
        ("zebra", "lion"),
        ("Mwana akusewera panja.", "Mwana akusewera kunja."),
        ("The committee approved the budget on Tuesday.", "On Tuesday the committee approved the budget."),
        ("café crème brûlée", "cafe creme brulee"),
        ("one two three four five six", "one two three four five six seven"),
        ("one two three four five six seven eight", "one two three four"),
        ("Ndikufuna madzi, chonde!", "Ndikufuna madzi chonde."),
        ("data data data data", "data is useful"),
        ("Where is the station?", "Where is the train station?"),
        ("Prices rose by 3.5% in March.", "In March prices rose by 3.5%."),
        ("The doctor said rest is needed", "The doctor said that rest is needed."),
        ("ᓄᓇᕗᑦ ᐃᓄᒃᑎᑐᑦ", "ᓄᓇᕗᑦ ᐃᓄᒃᑎᑐᑦ ᐅᖃᐅᓯᖅ"),
        ("Māori language week begins today.", "Maori language week starts today."),
        ("", "an empty candidate"),
    ]
    write("metrics_suite.tsv", "".join(f"{h}\t{r}\n" for h, r in pairs))


def alignment():
    src = [
        "Kumwamba kuli mitambo.",
        "Mvula idzagwa lero.",
        "Ana apita kusukulu.",
        "Aphunzitsi akuphunzitsa masamu.",
        "Madzulo tidzadya nsima.",
        "Mawa ndi tsiku la msika.",
    ]
    tgt = [
        "There are clouds in the sky.",
        "It will rain today.",
        "The children went to school.",
        "The teachers are teaching mathematics.",
        "In the evening we will eat nsima.",
        "Tomorrow is market day.",
    ]
    write("align_source_doc.txt", "\n".join(src) + "\n")
    write("align_target_doc.txt", "\n".join(tgt) + "\n")

    def rec(s, t):
        return {"source": s, "target": t}

    valid = [
        rec([src[0]], [tgt[0]]),
        rec([src[1], src[2]], [tgt[1] + " " + tgt[2]]),
        rec([src[3]], [tgt[3]]),
        rec([src[4], src[5]], [tgt[4], tgt[5]]),
    ]
    write("align_valid.jsonl", jsonl(valid))
    swapped = [rec([src[1]], [tgt[1]]), rec([src[0]], [tgt[0]])]
    write("align_swapped.jsonl", jsonl(swapped))
    overlap = [rec([src[0], src[1]], [tgt[0], tgt[1]]), rec([src[1], src[2]], [tgt[1], tgt[2]])]
    write("align_overlap.jsonl", jsonl(overlap))
    same = [rec(["The children went to school today."], ["The children went to school today!"])]
    write("align_same_language.jsonl", jsonl(same))
    mixed = [rec([src[0]], [tgt[0]]), rec([src[1], src[2]], [tgt[1] + " " + tgt[2]]), rec([src[3]], [tgt[3]])]
    write("align_mixed_types.jsonl", jsonl(mixed))


BYOL_NYA_12B = [
    ("Global MMLU-Lite", "accuracy", 64.50), ("ARC-Easy", "accuracy", 51.14), ("ARC-Hard", "accuracy", 42.41),
    ("MGSM", "accuracy", 53.20), ("XCOPA", "accuracy", 71.20), ("XStoryCloze", "accuracy", 67.90),
    ("PIQA", "accuracy", 64.96), ("HellaSwag", "accuracy", 51.89), ("XNLI 2.0", "accuracy", 45.21),
    ("XWinograd", "accuracy", 70.37), ("Belebele", "accuracy", 61.00),
]


def aggregation():
    model = "BYOL-nya (12B-CPT)"
    rows = [{"model": model, "task": t, "metric": m, "value": v} for t, m, v in BYOL_NYA_12B]
    rows += [
        {"model": model, "task": "FLORES-200 nya-eng", "metric": "bleu", "value": 27.84},
        {"model": model, "task": "FLORES-200 nya-eng", "metric": "chrf_pp", "value": 51.12},
        {"model": model, "task": "FLORES-200 eng-nya", "metric": "bleu", "value": 13.82},
        {"model": model, "task": "FLORES-200 eng-nya", "metric": "chrf_pp", "value": 49.47},
    ]
    write("byol_nya_12b_results.jsonl", jsonl(rows))

    lambdas = [round(0.1 * i, 1) for i in range(11)]
    grid = {
        ("Global MMLU-Lite", "accuracy"): "45.36 48.86 47.73 50.96 53.43 53.79 53.62 54.53 51.46 50.66 48.72",
        ("ARC-Hard chat", "accuracy"): "33.28 35.67 39.25 43.69 46.08 48.21 50.43 51.45 51.62 51.19 49.57",
        ("MGSM", "accuracy"): "11.20 22.00 21.20 27.20 28.80 26.40 30.00 30.00 27.20 19.60 16.00",
        ("XCOPA", "accuracy"): "52.20 50.60 52.00 55.40 59.40 65.40 66.40 65.80 67.60 68.80 70.80",
        ("XStoryCloze", "accuracy"): "49.31 51.56 53.47 54.60 56.12 57.71 59.23 60.82 60.62 60.42 60.03",
        ("PIQA", "accuracy"): "52.77 52.29 54.30 56.69 58.54 61.10 61.75 62.68 62.73 63.11 63.22",
        ("HellaSwag", "accuracy"): "29.10 31.25 34.15 37.29 40.52 43.30 45.32 47.08 47.54 47.62 47.21",
        ("XNLI 2.0", "accuracy"): "35.75 36.27 37.50 37.43 38.30 38.64 39.18 40.40 40.14 40.12 39.92",
        ("XWinograd", "accuracy"): "52.41 51.44 54.33 56.47 60.64 61.82 66.42 68.98 68.77 70.16 71.02",
        ("Belebele", "accuracy"): "29.00 32.78 37.22 43.11 49.78 52.11 55.00 54.22 53.56 53.33 53.33",
        ("FLORES nya-eng", "bleu"): "11.97 14.95 18.36 21.08 22.80 24.32 24.96 25.33 25.49 25.49 24.63",
        ("FLORES nya-eng", "chrf_pp"): "35.26 39.09 42.46 45.03 47.02 48.46 49.21 49.86 49.94 49.81 48.93",
        ("FLORES eng-nya", "bleu"): "2.80 4.51 6.49 9.03 10.68 12.39 13.31 13.83 13.99 14.21 13.87",
        ("FLORES eng-nya", "chrf_pp"): "25.38 31.05 36.51 41.76 45.14 47.62 48.91 49.70 49.89 50.33 50.02",
        ("TruthfulQA", "accuracy"): "28.76 30.23 32.07 29.13 34.27 38.80 36.11 36.96 37.33 37.09 37.45",
    }
    rows = []
    for i, lam in enumerate(lambdas):
        for (task, metric), values in grid.items():
            rows.append({"model": f"merged-{lam:.1f}", "lambda": lam, "task": task, "metric": metric,
                         "value": float(values.split()[i])})
    write("lambda_sweep_results.jsonl", jsonl(rows))
    specs = []
    for (task, metric) in grid:
        if task.startswith("FLORES"):
            if metric == "chrf_pp":
                specs.append({"task": task, "metric": "chrf_pp", "role": "translation_use_chrf"})
        else:
            specs.append({"task": task, "metric": "accuracy", "role": "include"})
    write("lambda_sweep_tasks.jsonl", jsonl(specs))
    write("lambda_sweep_printed_average.txt",
          "36.91 39.47 41.71 44.52 47.54 49.49 50.89 51.73 51.42 50.94 50.48\n")


def small_inputs():
    write("langs.tsv",
          "code\tname\tword_count\tspeakers\n"
          "nya\tChichewa\t3200000\t14000000\n"
          "mri\tMaori\t150000000\t186000\n"
          "eng\tEnglish\t900000000000\t1500000000\n")
    write("mapping.tsv", "hello\tbonjour\ngood morning\tbonjour le matin\n")
    write("syllabics.tsv",
          "# Inuktitut syllabics to Roman orthography, longest match first.\n"
          "ᓄ\tnu\nᓇ\tna\nᕗ\tvu\nᑦ\tt\nᐃ\ti\nᓄᒃ\tnuk\nᑎ\tti\nᑐ\ttu\n")


def tensor_archive(tensors, metadata):
    out = bytearray(b"BYOLTNS1")
    out += struct.pack("<Q", len(tensors))
    for name, shape, values in tensors:
        nb = name.encode()
        out += struct.pack("<H", len(nb)) + nb + bytes([0, len(shape)])
        for d in shape:
            out += struct.pack("<Q", d)
    for _, _, values in tensors:
        out += struct.pack("<%df" % len(values), *values)
    meta = "".join(f"{k}={v}\n" for k, v in sorted(metadata.items())).encode()
    out += struct.pack("<Q", len(meta)) + meta
    return bytes(out)


def checkpoints():
    for name, value, role in [("g_pt", 1.0, "g_pt"), ("g_it", 3.0, "g_it"), ("expert", -1.0, "expert")]:
        data = tensor_archive([("w", [1], [value]), ("layer.bias", [2, 2], [value] * 4)], {"role": role})
        (HERE / f"scalar_{name}.byt").write_bytes(data)


def pipeline():
    rng = random.Random(77)
    lines = []
    for i in range(120):
        s = sentence(rng, 3, 12)
        t = sentence(rng, 3, 12)
        lines.append(f"{s}\t{t}")
    lines += [lines[3], lines[10], "too short\tnope", "Ok " * 2 + "fine\t" + "a much much longer target sentence here"]
    write("pipeline_bitext.tsv", "\n".join(lines) + "\n")
    for name in ("real", "synthetic", "english"):
        write(f"pipeline_mix_{name}.txt", "".join(f"{name} {sentence(rng, 5, 30)}\n" for _ in range(200)))
    small = []
    for d in DOMAINS[:3]:
        for i in range(6):
            small.append({"domain": d, "id": f"{d[:3].lower()}{i}", "text": sentence(rng)})
    write("pipeline_bench.jsonl", jsonl(small))
    config = {
        "seed": 20251017,
        "concurrency_limit": 2,
        "lambda": 0.6,
        "filter": {"min_tokens": 3, "max_tokens": 256, "max_char_ratio": 1.3, "dedup": True},
        "mix": {"unit": "tokens", "components": [
            {"name": "real", "path": "pipeline_mix_real.txt", "weight": 1},
            {"name": "synthetic", "path": "pipeline_mix_synthetic.txt", "weight": 1},
            {"name": "english", "path": "pipeline_mix_english.txt", "weight": 1},
        ]},
        "rtt": {"forward": "word_reverse", "backward": "drop_last_word", "target_language": "nya",
                "metrics": ["bleu", "chrf_pp", "cosine"]},
        "paths": {
            "profiles": "langs.tsv",
            "bitext": "pipeline_bitext.tsv",
            "benchmark": "pipeline_bench.jsonl",
            "g_pt": "scalar_g_pt.byt",
            "g_it": "scalar_g_it.byt",
            "expert": "scalar_expert.byt",
        },
    }
    write("pipeline_config.json", json.dumps(config, indent=2) + "\n")


if __name__ == "__main__":
    rtt_benchmarks()
    metrics_suite()
    alignment()
    aggregation()
    small_inputs()
    checkpoints()
    pipeline()
