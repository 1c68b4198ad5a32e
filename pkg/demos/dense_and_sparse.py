"""Learned sparse and dense retrieval over precomputed vectors, checked against brute force.

    python demos/dense_and_sparse.py
"""

import random

import numpy as np

from ragbench.retrieval import DenseIndex, build_sparse_index
from ragbench.testkit import brute_force_topk_dot


def main() -> None:
    rng = random.Random(0)
    vocab = [f"t{i}" for i in range(200)]
    passages = {f"p{i:03d}": {t: round(rng.uniform(0.1, 3.0), 3) for t in rng.sample(vocab, 12)} for i in range(500)}
    query = {t: round(rng.uniform(0.1, 2.0), 3) for t in rng.sample(vocab, 6)}

    sparse = build_sparse_index(passages)
    got = sparse.search(query, 5)
    want = brute_force_topk_dot(passages, query, 5)
    print("sparse top-5:", ", ".join(f"{p}={s:.3f}" for p, s in got.entries))
    print("matches brute force:", list(got.entries) == want)

    gen = np.random.default_rng(0)
    ids = [f"d{i:03d}" for i in range(500)]
    # small integers keep every dot product exact, so the comparison can be strict
    matrix = gen.integers(-4, 5, size=(500, 32)).astype(np.float64)
    q = gen.integers(-4, 5, size=32).astype(np.float64)
    dense = DenseIndex(ids, matrix).search(q, 5)
    want = brute_force_topk_dot(dict(zip(ids, matrix.tolist())), q.tolist(), 5)
    print("\ndense top-5:", ", ".join(f"{p}={s:.0f}" for p, s in dense.entries))
    print("matches brute force:", list(dense.entries) == want)


if __name__ == "__main__":
    main()
