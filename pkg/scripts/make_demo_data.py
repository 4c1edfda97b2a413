#!/usr/bin/env python3
"""Generate a small synthetic scene-tagging dataset for driving the CLI:
a tag file, a feature CSV that (noisily) determines the tags, and two
base-model probability CSVs. See the README for the pipeline walkthrough.
"""

import argparse
from pathlib import Path

import numpy as np

from canopy.data import (
    AMAZON_LABELS,
    LabelMatrix,
    ProbMatrix,
    make_rng,
    save_probs,
    save_tags,
)

MARGINALS = [0.3, 0.2, 0.18, 0.11, 0.09, 0.067, 0.05, 0.02, 0.9, 0.2,
             0.008, 0.006, 0.18]  # ground labels, canonical order


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="demo_data")
    ap.add_argument("--samples", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = make_rng(args.seed)
    n, vocab = args.samples, AMAZON_LABELS
    ids = [f"scene_{i:05d}" for i in range(n)]

    weather = rng.choice(4, size=n, p=[0.55, 0.1, 0.12, 0.23])
    truth = np.zeros((n, len(vocab)), dtype=np.int8)
    truth[np.arange(n), weather] = 1
    truth[:, 4:] = rng.random((n, 13)) < np.array(MARGINALS)
    labels = LabelMatrix(values=truth, vocab=vocab)
    save_tags(out / "tags.csv", ids, labels)

    # features: a noisy linear encoding of the labels
    mix = rng.normal(size=(len(vocab), 24))
    features = truth @ mix + 0.35 * rng.normal(size=(n, 24))
    lines = ["image_name," + ",".join(f"f{j}" for j in range(24))]
    for i, s in enumerate(ids):
        lines.append(s + "," + ",".join(f"{v:.6f}" for v in features[i]))
    (out / "features.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    for name, noise in (("model_a", 0.25), ("model_b", 0.4)):
        raw = truth + rng.normal(0, noise, size=truth.shape)
        values = np.clip(raw, 0, 1).round(6)
        save_probs(out / f"{name}_probs.csv", ids, ProbMatrix(values=values, vocab=vocab))
        hard = ProbMatrix(values=(values >= 0.5).astype(np.float64), vocab=vocab)
        save_probs(out / f"{name}_hard.csv", ids, hard)

    print(
        f"wrote tags.csv, features.csv and per-model probs/hard CSVs "
        f"(model_a, model_b) to {out}/"
    )


if __name__ == "__main__":
    main()
