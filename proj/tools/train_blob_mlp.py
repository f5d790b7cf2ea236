"""Train the small MLP shipped with the blobs benchmark.

Reads the train split written by `trustmon prepare` and writes a trustmon
model file. Plain numpy with a fixed seed, so reruns give the same weights
on the same platform.

    trustmon prepare --benchmark benchmarks/blobs/manifest.json --out /tmp/blobs
    python3 tools/train_blob_mlp.py /tmp/blobs benchmarks/blobs/model.json
"""

import json
import sys
from pathlib import Path

import numpy as np

SIZES = [4, 16, 8, 2]
EPOCHS = 100
LEARNING_RATE = 0.01
SEED = 7


def load(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return data[:, :-1], data[:, -1].astype(int)


def forward(params, x):
    acts = [x]
    for i, (w, b) in enumerate(params):
        z = acts[-1] @ w.T + b
        if i < len(params) - 1:
            acts.append(np.maximum(z, 0.0))
        else:
            z = z - z.max(axis=1, keepdims=True)
            e = np.exp(z)
            acts.append(e / e.sum(axis=1, keepdims=True))
    return acts


def train(x, y):
    rng = np.random.default_rng(SEED)
    params = []
    for fan_in, fan_out in zip(SIZES[:-1], SIZES[1:]):
        w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in))
        params.append([w, np.zeros(fan_out)])
    moments = [[np.zeros_like(p) for p in layer] for layer in params]
    squares = [[np.zeros_like(p) for p in layer] for layer in params]
    onehot = np.eye(SIZES[-1])[y]
    beta1, beta2 = 0.9, 0.999
    for step in range(1, EPOCHS + 1):
        acts = forward(params, x)
        delta = (acts[-1] - onehot) / len(x)
        for i in reversed(range(len(params))):
            grads = [delta.T @ acts[i], delta.sum(axis=0)]
            if i > 0:
                delta = (delta @ params[i][0]) * (acts[i] > 0)
            for k in range(2):
                moments[i][k] = beta1 * moments[i][k] + (1 - beta1) * grads[k]
                squares[i][k] = beta2 * squares[i][k] + (1 - beta2) * grads[k] ** 2
                m_hat = moments[i][k] / (1 - beta1**step)
                v_hat = squares[i][k] / (1 - beta2**step)
                params[i][k] -= LEARNING_RATE * m_hat / (np.sqrt(v_hat) + 1e-8)
    return params


def to_model(params):
    layers = []
    for i, (w, b) in enumerate(params):
        layers.append({
            "kind": "dense",
            "activation": "softmax" if i == len(params) - 1 else "relu",
            "weights": w.tolist(),
            "bias": b.tolist(),
        })
    return {"format_version": 1, "input_dim": SIZES[0], "class_count": SIZES[-1], "layers": layers}


def main():
    split_dir, out = Path(sys.argv[1]), Path(sys.argv[2])
    x, y = load(split_dir / "train.csv")
    params = train(x, y)
    for name in ("train", "val", "test"):
        xs, ys = load(split_dir / f"{name}.csv")
        accuracy = (forward(params, xs)[-1].argmax(axis=1) == ys).mean()
        print(f"{name} accuracy {accuracy:.4f}")
    out.write_text(json.dumps(to_model(params)) + "\n")


if __name__ == "__main__":
    main()
