"""Synthetic demo corpus with a designed three-cluster structure.

Sixty short indicators over three constructs (sleep quality, worry, physical
activity), worded so the built-in trigram embedder separates the clusters
cleanly: building a network with k=3 yields one dimension per cluster and no
cross-loadings at the default threshold. The held-out paraphrases project
back onto their source cluster's dimension.

Run ``python -m nomonet.demo OUTDIR`` to write ``corpus.csv`` and
``heldout.csv`` for use with the CLI.
"""

from __future__ import annotations

import sys
from pathlib import Path

from .corpus import Corpus, Indicator

CLUSTERS: dict[str, list[str]] = {
    "sleep quality": [
        "restless sleep all night",
        "slept badly last night",
        "restless sleep left me weary",
        "trouble falling asleep at night",
        "woke from restless sleep at night",
        "lay awake in bed at night",
        "night sleep short and broken",
        "barely slept through the night",
        "sleepless night of broken sleep",
        "bad sleep made the night long",
        "tossing in bed not sleeping at night",
        "sleep broke many times at night",
        "another sleepless night of poor sleep",
        "fell asleep late woke at night",
        "night after night of poor sleep",
        "dozing lightly never deep asleep",
        "restless sleep at bed time",
        "broken sleep and early waking night",
        "no rest troubled sleep at night",
        "weary night without real sleep",
    ],
    "worry": [
        "worry filled my anxious mind",
        "anxious worry about the future",
        "nervous worry would not stop",
        "worried thoughts in my anxious mind",
        "anxiety kept my mind racing",
        "constant worry and nervous anxiety",
        "anxious worry about everything",
        "worry made me tense and anxious",
        "nervous and anxious without reason",
        "fear and worry in my mind",
        "anxious worry through the whole day",
        "worrying about anxious worries",
        "my anxious mind full of worry",
        "dread and worry every anxious morning",
        "worry over small anxious moments",
        "tense nervous anxious worry",
        "anxiety and worry wore me down",
        "uneasy anxious worry kept coming",
        "worried sick with nervous anxiety",
        "endless worry strained my anxious mind",
    ],
    "physical activity": [
        "exercise keeps my body active",
        "jogging and cycling exercise daily",
        "active workout exercise at the gym",
        "daily gym exercise builds fitness",
        "gym workout with weights and cycling",
        "running builds active exercise fitness",
        "cycling to the gym for exercise",
        "fitness workout training daily exercise",
        "active jogging exercise in the park",
        "workout routine builds gym fitness",
        "swimming laps for daily gym exercise",
        "brisk walking keeps my exercise active",
        "weight training at the fitness gym",
        "morning run then gym workout exercise",
        "hiking and cycling fitness exercise",
        "stretching before every gym workout",
        "sports practice builds active fitness",
        "exercise class at the gym weekly",
        "rowing machine workout for gym fitness",
        "daily gym training workout for fitness",
    ],
}

# (text, source construct label) pairs that are not in the corpus.
HELDOUT: list[tuple[str, str]] = [
    ("restless sleep during the night", "sleep quality"),
    ("troubled sleep through the night", "sleep quality"),
    ("trouble staying asleep at night", "sleep quality"),
    ("night of broken restless sleep", "sleep quality"),
    ("anxious worry filled my mind", "worry"),
    ("constant nervous worry and anxiety", "worry"),
    ("worried and anxious all day", "worry"),
    ("my mind was full of anxious worry", "worry"),
    ("daily exercise workout at the gym", "physical activity"),
    ("gym workout builds daily fitness", "physical activity"),
    ("active fitness workout routine", "physical activity"),
    ("cycling exercise builds gym fitness", "physical activity"),
]


def demo_corpus() -> Corpus:
    indicators = []
    n = 0
    for label, items in CLUSTERS.items():
        for text in items:
            n += 1
            indicators.append(
                Indicator(
                    id=f"q{n:03d}",
                    text=text,
                    raw_text=text,
                    construct_label=label,
                    source="demo",
                )
            )
    return Corpus.from_indicators(indicators)


def cluster_of(indicator_id: str) -> int:
    """Cluster index 0..2 for a demo indicator id (20 items per cluster)."""
    return (int(indicator_id[1:]) - 1) // 20


def heldout_csv() -> str:
    lines = ["id,text,construct,source"]
    for i, (text, label) in enumerate(HELDOUT, start=1):
        lines.append(f"h{i:03d},{text},{label},demo")
    return "\n".join(lines) + "\n"


def main(argv: list[str]) -> int:
    if len(argv) != 1:
        print("usage: python -m nomonet.demo OUTDIR", file=sys.stderr)
        return 2
    out = Path(argv[0])
    out.mkdir(parents=True, exist_ok=True)
    (out / "corpus.csv").write_bytes(demo_corpus().canonical_csv())
    (out / "heldout.csv").write_text(heldout_csv(), encoding="utf-8")
    print(f"wrote {out / 'corpus.csv'} and {out / 'heldout.csv'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
