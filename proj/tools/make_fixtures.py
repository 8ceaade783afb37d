#!/usr/bin/env python3
"""Regenerates the synthetic fixtures under fixtures/.

Expected values are computed here in plain Python so the C++ tests compare
against an implementation that shares no code with the library.
"""
import json
import math
import pathlib
import random

import numpy as np
from PIL import Image

ROOT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
WEIGHTS = (-0.0181, 1.380, -4.058, 8.066)
SIGMA = 0.9


def a_index(psnr, ssim, lpips, clip):
    s = WEIGHTS[0] * psnr + WEIGHTS[1] * ssim + WEIGHTS[2] * (1 - lpips) + WEIGHTS[3] * clip
    return s, 1.0 / (1.0 + math.exp(SIGMA * s))


def smooth_image(rng, h, w):
    base = rng.random((h // 4 + 2, w // 4 + 2, 3))
    img = np.kron(base, np.ones((4, 4, 1)))[:h, :w]
    return (np.clip(img * 0.8 + 0.1, 0, 1) * 255).round().astype(np.uint8)


def adapter_output():
    out = ROOT / "adapter_output"
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(7)
    header = {
        "_header": {
            "schema": "aindex.manifest",
            "version": 1,
            "job": {
                "model_tag": "SD3-medium",
                "steps": 28,
                "guidance": 3.5,
                "eta_base": 0.95,
                "eta_trend": "constant",
                "eta_start": 0,
                "eta_end": 9,
                "gamma": 0.5,
                "seed": 42,
                "precision_tag": "float16",
            },
            "runtime": {"adapter": "0.1.0", "perceptual": "lpips-alex", "semantic": "clip-vit-b32"},
        }
    }
    rows = [header]
    specs = [
        ("pair-000", "real", 0.21, 0.83),
        ("pair-001", "real", 0.34, 0.77),
        ("pair-002", "fake", 0.08, 0.95),
        ("pair-003", "fake", 0.0, 1.0),  # injected identical pair
    ]
    for rid, label, lpips, clip in specs:
        x = smooth_image(rng, 24, 24)
        if rid == "pair-003":
            inv = x.copy()
        else:
            noise = rng.normal(0, 12 if label == "real" else 4, x.shape)
            inv = np.clip(x.astype(float) + noise, 0, 255).round().astype(np.uint8)
        Image.fromarray(x).save(out / f"{rid}.png")
        Image.fromarray(inv).save(out / f"{rid}_inv.png")
        rows.append({
            "id": rid,
            "original": f"{rid}.png",
            "inverted": f"{rid}_inv.png",
            "label": label,
            "generator": "SD3-medium",
            "caption": f"a photo, sample {rid[-1]}",
            "precomputed": {"lpips": lpips, "clip": clip},
        })
    with open(out / "manifest.jsonl", "w") as f:
        for r in rows:
            f.write(json.dumps(r, separators=(",", ":")) + "\n")


def write_table(path, rows):
    with open(path, "w") as f:
        f.write("id,label,generator,psnr,ssim,lpips,clip,composite,a_index,decision\n")
        for r in rows:
            f.write(",".join([r["id"], r["label"], r["generator"]] +
                             [repr(r[k]) for k in ("psnr", "ssim", "lpips", "clip", "composite", "a_index")]) + ",\n")


def draw_row(rnd, rid, label, generator, shift):
    psnr = round(rnd.uniform(14, 34), 4)
    ssim = round(min(0.99, max(0.05, rnd.uniform(0.35, 0.9) + shift)), 4)
    lpips = round(min(0.9, max(0.0, rnd.uniform(0.08, 0.5) - shift)), 4)
    clip = round(min(0.999, max(0.5, rnd.uniform(0.7, 0.95) + shift / 2)), 4)
    s, a = a_index(psnr, ssim, lpips, clip)
    return {"id": rid, "label": label, "generator": generator, "psnr": psnr, "ssim": ssim,
            "lpips": lpips, "clip": clip, "composite": s, "a_index": a}


def internet_scores():
    rnd = random.Random(2024)
    rows = [draw_row(rnd, f"img-{i:04d}", "real", "SD3-medium", 0.0) for i in range(400)]
    write_table(ROOT / "score_tables" / "internet_scores.csv", rows)
    registry = json.load(open(ROOT / "published" / "thresholds.json"))["entries"]
    expected = {tag: sum(1 for r in rows if r["a_index"] >= e["tau_safety"])
                for tag, e in registry.items()}
    json.dump({"records": len(rows), "authentic_at_tau_safety": expected},
              open(ROOT / "score_tables" / "internet_scores_expected.json", "w"), indent=2)


def labeled_scores():
    rnd = random.Random(99)
    rows = [draw_row(rnd, f"r-{i:03d}", "real", "FluxDev", -0.08) for i in range(60)]
    rows += [draw_row(rnd, f"f-{i:03d}", "fake", "FluxDev", 0.08) for i in range(60)]
    rows.sort(key=lambda r: r["id"])
    write_table(ROOT / "score_tables" / "labeled_scores.csv", rows)
    tau = 0.035
    real = [r["a_index"] for r in rows if r["label"] == "real"]
    fake = [r["a_index"] for r in rows if r["label"] == "fake"]
    tp = sum(a >= tau for a in real)
    fp = sum(a >= tau for a in fake)
    tn = len(fake) - fp
    prec = tp / (tp + fp)
    rec = tp / len(real)
    wins = sum((1.0 if a > b else 0.5 if a == b else 0.0) for a in real for b in fake)
    json.dump({"tau": tau, "real_authentic": tp, "fake_authentic": fp,
               "accuracy": (tp + tn) / len(rows), "precision": prec, "recall": rec,
               "f1": 2 * prec * rec / (prec + rec), "auc": wins / (len(real) * len(fake))},
              open(ROOT / "score_tables" / "labeled_scores_expected.json", "w"), indent=2)


if __name__ == "__main__":
    (ROOT / "score_tables").mkdir(parents=True, exist_ok=True)
    adapter_output()
    internet_scores()
    labeled_scores()
