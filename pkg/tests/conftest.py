import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from revdict import autodiff as ad

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def finite_diff_grads(f, params, step=1e-5):
    """Central finite differences of scalar f() w.r.t. every param entry."""
    out = {}
    for name, p in params.items():
        flat = p.data.ravel()
        num = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            lp = f().item()
            flat[i] = orig - step
            lm = f().item()
            flat[i] = orig
            num[i] = (lp - lm) / (2 * step)
        out[name] = num.reshape(p.data.shape)
    return out


def assert_grads_match(f, params, step=1e-5, rtol=1e-4):
    """Tape gradients of f() match central finite differences."""
    ad.zero_grads(params)
    with ad.Tape() as tape:
        grads = ad.backward(tape, f(), params)
    numeric = finite_diff_grads(f, params, step)
    for name in params:
        g, n = grads[name], numeric[name]
        denom = np.maximum(np.maximum(np.abs(g), np.abs(n)), 1e-3)
        rel = np.abs(g - n) / denom
        assert rel.max() < rtol, f"{name}: max rel err {rel.max():.2e}"
    ad.zero_grads(params)


def random_tree(rng, n_nodes, vocab_size, pos_tags=("NOUN", "VERB", "DET", "ADJ")):
    """Uniformly random tree: each new node attaches to a random earlier one."""
    from revdict.data import TreeNode

    nodes = [TreeNode(token_id=int(rng.integers(2, vocab_size)),
                      pos=str(rng.choice(pos_tags)))]
    for _ in range(n_nodes - 1):
        parent = nodes[int(rng.integers(len(nodes)))]
        child = TreeNode(token_id=int(rng.integers(2, vocab_size)),
                         pos=str(rng.choice(pos_tags)))
        parent.children.append(child)
        nodes.append(child)
    return nodes[0]
