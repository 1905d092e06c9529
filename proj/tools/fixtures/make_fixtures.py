#!/usr/bin/env python3
# Copyright 2026 The gbrtl Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates tests/fixtures. Needs numpy, scikit-learn and xgboost.

Models are trained on quantized feature codes, as in the tool flow
(fit quantizer -> quantize data -> train -> compile).
"""

import argparse
import json
import math
import pathlib

import numpy as np
import xgboost as xgb
from sklearn.datasets import make_classification


def round_half_away(z):
    return int(math.copysign(math.floor(abs(z) + 0.5), z))


def fit_quantizer(x, w):
    return {"w_feature": w, "mins": [float(v) for v in x.min(axis=0)], "maxs": [float(v) for v in x.max(axis=0)]}


def quantize(q, x):
    top = (1 << q["w_feature"]) - 1
    out = np.zeros(x.shape, dtype=np.int64)
    for r in range(x.shape[0]):
        for f in range(x.shape[1]):
            lo, hi = q["mins"][f], q["maxs"][f]
            if hi == lo:
                continue
            z = (x[r, f] - lo) / (hi - lo) * top
            out[r, f] = min(max(round_half_away(z), 0), top)
    return out


def write_csv(path, x, y=None):
    with open(path, "w") as fh:
        for r in range(x.shape[0]):
            cells = [repr(float(v)) if x.dtype.kind == "f" else str(int(v)) for v in x[r]]
            if y is not None:
                cells.append(str(int(y[r])))
            fh.write(",".join(cells) + "\n")


def write_json(path, doc):
    path.write_text(json.dumps(doc, indent=1) + "\n")


def train(x, y, num_class, rounds, depth, seed):
    params = {"max_depth": depth, "eta": 0.3, "seed": seed, "tree_method": "exact"}
    if num_class > 2:
        params.update(objective="multi:softprob", num_class=num_class)
    else:
        params.update(objective="binary:logistic")
    return xgb.train(params, xgb.DMatrix(x, label=y), num_boost_round=rounds)


def xgb_trees(doc):
    """Flat per-tree node lists from a saved XGBoost model."""
    learner = doc["learner"]
    model = learner["gradient_booster"]["model"]
    trees = []
    for t in model["trees"]:
        left, right = t["left_children"], t["right_children"]
        trees.append([
            {"leaf": left[i] == -1, "f": t["split_indices"][i], "t": t["split_conditions"][i],
             "l": left[i], "r": right[i]} for i in range(len(left))
        ])
    return trees, model["tree_info"]


def tree_value(nodes, x, integer=False):
    i = 0
    while not nodes[i]["leaf"]:
        n = nodes[i]
        t = math.ceil(n["t"]) if integer else n["t"]
        i = n["l"] if x[n["f"]] < t else n["r"]
    return nodes[i]["t"]


def binary_quantized_accuracy(doc, x, y, w_tree):
    """Independent integer model: per-tree min shift, global scale, rounding."""
    trees, _ = xgb_trees(doc)
    p = float(json.loads(doc["learner"]["learner_model_param"]["base_score"])[0])
    f0 = math.log(p / (1 - p))
    mins = [min(n["t"] for n in t if n["leaf"]) for t in trees]
    top = max(max(n["t"] - m for n in t if n["leaf"]) for t, m in zip(trees, mins))
    scale = ((1 << w_tree) - 1) / top if top > 0 else 1.0
    qb = round_half_away((f0 + sum(mins)) * scale)
    correct = 0
    for r in range(x.shape[0]):
        qf = qb + sum(round_half_away((tree_value(t, x[r], True) - m) * scale) for t, m in zip(trees, mins))
        correct += int((1 if qf >= 0 else 0) == y[r])
    return correct / x.shape[0]


def worked_example_model():
    def split(f, t, l, r):
        return {"f": f, "t": t, "l": l, "r": r}

    def leaf(v):
        return {"v": v}

    return {
        "task": "binary", "num_classes": 2, "num_features": 5, "f0": 0.0,
        "trees": [
            {"nodes": [split(0, 1.0, 1, 2), split(1, 8.0, 3, 4), split(2, 3.0, 5, 6),
                       leaf(2.0), leaf(-0.1), leaf(0.5), leaf(-0.7)]},
            {"nodes": [split(3, 2.0, 1, 2), split(0, 3.0, 3, 4), split(2, 3.0, 5, 6),
                       leaf(-0.4), leaf(0.8), leaf(-1.4), leaf(0.0)]},
        ],
    }


def make_xgb_fixture(out, name, n_classes, n_features, rounds, depth, w_feature, seed):
    x, y = make_classification(n_samples=300, n_features=n_features, n_informative=min(4, n_features),
                               n_redundant=0, n_classes=n_classes, n_clusters_per_class=1, random_state=seed)
    q = fit_quantizer(x, w_feature)
    codes = quantize(q, x)
    booster = train(codes.astype(np.float64), y, n_classes, rounds, depth, seed)
    model_path = out / f"{name}_xgb.json"
    booster.save_model(str(model_path))
    write_json(out / f"{name}_quantizer.json", q)
    sample = codes[:100]
    write_csv(out / f"{name}_data.csv", x[:100], y[:100])
    write_csv(out / f"{name}_codes.csv", sample)
    margins = booster.predict(xgb.DMatrix(sample.astype(np.float64)), output_margin=True)
    margins = margins.reshape(sample.shape[0], -1)
    with open(out / f"{name}_margins.csv", "w") as fh:
        for row in margins:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def make_synthetic(out, seed):
    x, y = make_classification(n_samples=500, n_features=8, n_informative=5, n_redundant=1, n_classes=2,
                               class_sep=1.2, flip_y=0.02, random_state=seed)
    x = np.round(x, 6)
    q = fit_quantizer(x, 4)
    codes = quantize(q, x)
    train_rows, test = slice(0, 400), slice(400, 500)
    booster = train(codes[train_rows].astype(np.float64), y[train_rows], 2, 12, 3, seed)
    model_path = out / "synth_xgb.json"
    booster.save_model(str(model_path))
    write_json(out / "synth_quantizer.json", q)
    write_csv(out / "synth_data.csv", x, y)
    write_csv(out / "synth_test.csv", x[test], y[test])

    prob = booster.predict(xgb.DMatrix(codes[test].astype(np.float64)))
    float_acc = float(np.mean((prob >= 0.5).astype(int) == y[test]))
    doc = json.loads(model_path.read_text())
    q_acc = binary_quantized_accuracy(doc, codes[test], y[test], 3)
    write_json(out / "synth_meta.json", {
        "rows": 500, "features": 8, "train_rows": 400, "test_rows": 100, "w_feature": 4, "w_tree": 3,
        "float_test_accuracy": float_acc, "reference_quantized_test_accuracy": q_acc,
    })


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parents[2] / "tests" / "fixtures"))
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    write_json(out / "example_model.json", worked_example_model())
    write_json(out / "example_quantizer.json", {"w_feature": 4, "mins": [0.0] * 5, "maxs": [15.0] * 5})
    make_xgb_fixture(out, "binary", 2, 6, 4, 3, 4, seed=7)
    make_xgb_fixture(out, "multiclass", 3, 6, 2, 3, 4, seed=11)
    make_synthetic(out, seed=2026)


if __name__ == "__main__":
    main()
