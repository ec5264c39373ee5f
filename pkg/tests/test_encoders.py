import numpy as np
import numpy.testing as npt
import pytest

from conftest import assert_grads_match, random_tree
from revdict import autodiff as ad
from revdict import encoders as enc
from revdict.autodiff import ContractError, Tensor
from revdict.data import PAD_NODE_ID, PAD_POS, TreeNode, pad_tree


def make_embeddings(vocab_size, dim, seed=0):
    return enc.EmbeddingTable(vocab_size, dim, np.random.default_rng(seed))


# --------------------------------------------------------------------------
# independent oracles, written against plain numpy (no Tensor engine)


def sigmoid_np(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_cell_oracle(x, h_prev, c_prev, layer):
    """Scalar-loop reference for one LSTM step."""
    hidden = h_prev.shape[0]
    gates = {}
    for name in enc.GATE_NAMES:
        pre = np.zeros(hidden)
        for j in range(hidden):
            pre[j] = (sum(x[i] * layer.W1[name].data[i, j] for i in range(x.shape[0]))
                      + sum(h_prev[i] * layer.W2[name].data[i, j] for i in range(hidden))
                      + layer.B[name].data[j])
        gates[name] = np.tanh(pre) if name == "g" else sigmoid_np(pre)
    c = gates["f"] * c_prev + gates["i"] * gates["g"]
    h = gates["o"] * np.tanh(c)
    return h, c


def encode_lstm_oracle(token_ids, emb, params):
    """Manually reverse and unroll; stacked layers."""
    hidden = params.hidden
    h = [np.zeros(hidden) for _ in params.layers]
    c = [np.zeros(hidden) for _ in params.layers]
    for tok in reversed(token_ids):
        x = emb.table.data[tok]
        for l, layer in enumerate(params.layers):
            h[l], c[l] = lstm_cell_oracle(x, h[l], c[l], layer)
            x = h[l]
    out = h[-1]
    if params.proj is not None:
        out = out @ params.proj.data
    return out


def tree_shared_oracle(tree, emb, params):
    if tree.token_id == PAD_NODE_ID:
        return np.zeros(params.b.shape[0])
    acc = emb.table.data[tree.token_id] @ params.W.data + params.b.data
    for child in tree.children:
        acc = acc + tree_shared_oracle(child, emb, params)
    return np.maximum(acc, 0.0)


def gate_oracle(node, emb, params):
    def classify(tok):
        h = np.maximum(emb.table.data[tok] @ params.U1.data + params.c1.data, 0.0)
        return float(h @ params.u2.data + params.c2.data[0])

    scores = [classify(node.token_id)]
    scores += [classify(c.token_id) for c in node.children
               if c.token_id != PAD_NODE_ID]
    return np.tanh(max(scores))


def tree_gated_oracle(tree, emb, params, root=True):
    if tree.token_id == PAD_NODE_ID:
        return np.zeros(params.b.shape[0])
    W = params.W_by_pos.get(tree.pos, params.W_by_pos[enc.FALLBACK_POS])
    acc = emb.table.data[tree.token_id] @ W.data + params.b.data
    for child in tree.children:
        if child.token_id == PAD_NODE_ID:
            continue
        acc = acc + tree_gated_oracle(child, emb, params, root=False) \
            * gate_oracle(child, emb, params)
    f = np.maximum(acc, 0.0)
    if root:
        f = f * gate_oracle(tree, emb, params)
    return f


# --------------------------------------------------------------------------


class TestLstmCell:
    def test_zero_params_half_gates(self):
        rng = np.random.default_rng(0)
        layer = enc.LstmLayerParams.init(1, 1, rng)
        for g in enc.GATE_NAMES:
            layer.W1[g].data[:] = 0
            layer.W2[g].data[:] = 0
            layer.B[g].data[:] = 0
        h, c = enc.lstm_cell(Tensor([0.3]), Tensor([0.0]), Tensor([1.0]), layer)
        npt.assert_allclose(c.data, [0.5], atol=1e-12)
        npt.assert_allclose(h.data, [0.5 * np.tanh(0.5)], atol=1e-12)
        assert abs(h.data[0] - 0.23106) < 1e-5

    def test_zero_fixed_point(self):
        rng = np.random.default_rng(0)
        layer = enc.LstmLayerParams.init(2, 2, rng)
        for g in enc.GATE_NAMES:
            layer.W1[g].data[:] = 0
            layer.W2[g].data[:] = 0
            layer.B[g].data[:] = 0
        h, c = enc.lstm_cell(Tensor([1.0, -1.0]), Tensor([0.0, 0.0]),
                             Tensor([0.0, 0.0]), layer)
        npt.assert_array_equal(h.data, [0.0, 0.0])
        npt.assert_array_equal(c.data, [0.0, 0.0])

    def test_matches_scalar_loop_oracle(self):
        rng = np.random.default_rng(42)
        layer = enc.LstmLayerParams.init(4, 4, rng)
        x = rng.normal(size=4)
        h_prev = rng.normal(size=4)
        c_prev = rng.normal(size=4)
        h, c = enc.lstm_cell(Tensor(x), Tensor(h_prev), Tensor(c_prev), layer)
        ho, co = lstm_cell_oracle(x, h_prev, c_prev, layer)
        npt.assert_allclose(h.data, ho, atol=1e-12)
        npt.assert_allclose(c.data, co, atol=1e-12)

    def test_dim_mismatch(self):
        rng = np.random.default_rng(0)
        layer = enc.LstmLayerParams.init(3, 4, rng)
        with pytest.raises(ad.DimensionError):
            enc.lstm_cell(Tensor(np.zeros(5)), Tensor(np.zeros(4)),
                          Tensor(np.zeros(4)), layer)


class TestEncodeLstm:
    def test_zero_params_zero_output(self):
        emb = make_embeddings(6, 3)
        params = enc.LstmParams.init(3, 4, 3, np.random.default_rng(1))
        for t in params.tensors().values():
            t.data[:] = 0
        out = enc.encode_lstm([2, 3], 2, emb, params)
        npt.assert_array_equal(out.data, np.zeros(3))

    def test_masking_ignores_pad_positions(self):
        emb = make_embeddings(6, 3)
        params = enc.LstmParams.init(3, 4, 3, np.random.default_rng(2))
        a = enc.encode_lstm([2, 0, 0, 0], 1, emb, params)
        b = enc.encode_lstm([2], 1, emb, params)
        npt.assert_array_equal(a.data, b.data)

    def test_empty_sequence_rejected(self):
        emb = make_embeddings(6, 3)
        params = enc.LstmParams.init(3, 4, 3, np.random.default_rng(2))
        with pytest.raises(ContractError):
            enc.encode_lstm([], 0, emb, params)

    def test_matches_unrolled_oracle(self):
        emb = make_embeddings(8, 3, seed=5)
        params = enc.LstmParams.init(3, 4, 3, np.random.default_rng(6))
        out = enc.encode_lstm([2, 5], 2, emb, params)
        npt.assert_allclose(out.data, encode_lstm_oracle([2, 5], emb, params),
                            atol=1e-12)

    def test_order_sensitive(self):
        # over 20 seeds, swapped tokens never give the same embedding
        for seed in range(20):
            emb = make_embeddings(8, 3, seed=seed)
            params = enc.LstmParams.init(3, 4, 3, np.random.default_rng(seed + 500))
            ab = enc.encode_lstm([2, 3], 2, emb, params)
            ba = enc.encode_lstm([3, 2], 2, emb, params)
            assert not np.allclose(ab.data, ba.data)

    def test_batch_matches_single(self):
        emb = make_embeddings(9, 3, seed=7)
        params = enc.LstmParams.init(3, 5, 3, np.random.default_rng(8))
        seqs = [([2, 3, 4], 3), ([5, 0, 0], 1), ([6, 7, 0], 2)]
        ids = np.array([s for s, _ in seqs])
        lens = [n for _, n in seqs]
        batched = enc.encode_lstm_batch(ids, lens, emb, params)
        for b, (seq, n) in enumerate(seqs):
            single = enc.encode_lstm(seq, n, emb, params)
            npt.assert_allclose(batched.data[b], single.data, atol=1e-10)

    def test_gradients(self):
        emb = make_embeddings(6, 2, seed=9)
        params_obj = enc.LstmParams.init(2, 3, 2, np.random.default_rng(10))
        params = dict(emb.tensors())
        params.update(params_obj.tensors())

        def f():
            out = enc.encode_lstm([2, 4, 3], 3, emb, params_obj)
            return ad.sum_reduce(ad.hadamard(out, out))

        assert_grads_match(f, params)


class TestTreeShared:
    def test_single_node_identity_weights(self):
        emb = make_embeddings(4, 3)
        emb.table.data[2] = [1.0, -1.0, 2.0]
        params = enc.SharedTreeParams(W=Tensor(np.eye(3), requires_grad=True),
                                      b=Tensor(np.zeros(3), requires_grad=True))
        out = enc.encode_tree_shared(TreeNode(2, "NOUN"), emb, params)
        npt.assert_array_equal(out.data, [1.0, 0.0, 2.0])

    def test_single_pad_node_is_zero(self):
        emb = make_embeddings(4, 3)
        params = enc.SharedTreeParams.init(3, np.random.default_rng(1))
        out = enc.encode_tree_shared(TreeNode(PAD_NODE_ID, PAD_POS), emb, params)
        npt.assert_array_equal(out.data, np.zeros(3))

    def test_matches_recursive_oracle(self):
        rng = np.random.default_rng(12)
        emb = make_embeddings(10, 3, seed=12)
        params = enc.SharedTreeParams.init(3, rng)
        for _ in range(25):
            tree = random_tree(rng, int(rng.integers(1, 6)), 10)
            out = enc.encode_tree_shared(tree, emb, params)
            npt.assert_allclose(out.data, tree_shared_oracle(tree, emb, params),
                                atol=1e-12)

    def test_padding_invariance_bitwise(self):
        rng = np.random.default_rng(13)
        emb = make_embeddings(10, 3, seed=13)
        params = enc.SharedTreeParams.init(3, rng)
        tree = random_tree(rng, 5, 10)
        padded = pad_tree(tree, 6, 3)
        a = enc.encode_tree_shared(tree, emb, params)
        b = enc.encode_tree_shared(padded, emb, params)
        npt.assert_array_equal(a.data, b.data)

    def test_gradients(self):
        rng = np.random.default_rng(14)
        emb = make_embeddings(8, 2, seed=14)
        params_obj = enc.SharedTreeParams.init(2, rng)
        tree = random_tree(rng, 4, 8)
        params = dict(emb.tensors())
        params.update(params_obj.tensors())

        def f():
            out = enc.encode_tree_shared(tree, emb, params_obj)
            return ad.sum_reduce(ad.hadamard(out, out))

        assert_grads_match(f, params)


class TestGateWeight:
    def test_zero_classifier_gives_zero(self):
        emb = make_embeddings(5, 3)
        params = enc.GatedTreeParams.init(3, ["NOUN"], 4, np.random.default_rng(1))
        for name in ("U1", "c1", "u2", "c2"):
            getattr(params, name).data[:] = 0
        w = enc.gate_weight(TreeNode(2, "NOUN", [TreeNode(3, "NOUN")]), emb, params)
        npt.assert_array_equal(w.data, 0.0)

    def test_max_then_tanh(self):
        # classifier forced to constant c2; node scores {-2, 3} via embeddings 0
        emb = make_embeddings(5, 3)
        emb.table.data[:] = 0
        params = enc.GatedTreeParams.init(3, ["NOUN"], 4, np.random.default_rng(1))
        params.U1.data[:] = 0
        params.c1.data[:] = 0
        params.u2.data[:] = 0
        node = TreeNode(2, "NOUN", [TreeNode(3, "NOUN")])
        params.c2.data[:] = 3.0
        w = enc.gate_weight(node, emb, params)
        npt.assert_allclose(w.item(), np.tanh(3.0), atol=1e-12)
        assert abs(w.item() - 0.99505) < 1e-5

    def test_matches_hand_oracle(self):
        rng = np.random.default_rng(15)
        emb = make_embeddings(9, 3, seed=15)
        params = enc.GatedTreeParams.init(3, ["NOUN", "VERB"], 4, rng)
        node = TreeNode(2, "NOUN", [TreeNode(3, "VERB"), TreeNode(4, "NOUN")])
        w = enc.gate_weight(node, emb, params)
        npt.assert_allclose(w.item(), gate_oracle(node, emb, params), atol=1e-12)

    def test_output_in_open_interval(self):
        rng = np.random.default_rng(16)
        for seed in range(30):
            emb = make_embeddings(6, 3, seed=seed)
            emb.table.data *= 100  # extreme inputs still bounded
            params = enc.GatedTreeParams.init(3, ["NOUN"], 4,
                                              np.random.default_rng(seed))
            node = random_tree(rng, 3, 6, pos_tags=("NOUN",))
            w = enc.gate_weight(node, emb, params).item()
            assert -1.0 < w < 1.0


class TestTreeGated:
    def test_zero_gates_zero_output(self):
        emb = make_embeddings(6, 3, seed=17)
        params = enc.GatedTreeParams.init(3, ["NOUN"], 4, np.random.default_rng(17))
        for name in ("U1", "c1", "u2", "c2"):
            getattr(params, name).data[:] = 0
        tree = TreeNode(2, "NOUN", [TreeNode(3, "NOUN")])
        out = enc.encode_tree_gated(tree, emb, params)
        npt.assert_array_equal(out.data, np.zeros(3))

    def test_unit_gates_identity_matrix_is_relu(self):
        emb = make_embeddings(6, 3, seed=18)
        params = enc.GatedTreeParams.init(3, ["NOUN"], 4, np.random.default_rng(18))
        params.U1.data[:] = 0
        params.c1.data[:] = 0
        params.u2.data[:] = 0
        params.c2.data[:] = 100.0  # tanh saturates to 1
        params.W_by_pos["NOUN"].data = np.eye(3)
        params.b.data[:] = 0
        out = enc.encode_tree_gated(TreeNode(2, "NOUN"), emb, params)
        npt.assert_allclose(out.data, np.maximum(emb.table.data[2], 0.0), atol=1e-12)

    def test_matches_recursive_oracle(self):
        rng = np.random.default_rng(19)
        emb = make_embeddings(10, 3, seed=19)
        params = enc.GatedTreeParams.init(3, ["NOUN", "VERB", "DET", "ADJ"], 4, rng)
        for _ in range(25):
            tree = random_tree(rng, int(rng.integers(1, 5)), 10)
            out = enc.encode_tree_gated(tree, emb, params)
            npt.assert_allclose(out.data, tree_gated_oracle(tree, emb, params),
                                atol=1e-12)

    def test_unseen_pos_uses_fallback_and_counts(self):
        emb = make_embeddings(6, 3, seed=20)
        params = enc.GatedTreeParams.init(3, ["NOUN"], 4, np.random.default_rng(20))
        before = params.unseen_pos_count
        enc.encode_tree_gated(TreeNode(2, "XPOS"), emb, params)
        assert params.unseen_pos_count == before + 1

    def test_padding_invariance_bitwise(self):
        rng = np.random.default_rng(21)
        emb = make_embeddings(10, 3, seed=21)
        params = enc.GatedTreeParams.init(3, ["NOUN", "VERB", "DET", "ADJ"], 4, rng)
        tree = random_tree(rng, 4, 10)
        padded = pad_tree(tree, 5, 2)
        a = enc.encode_tree_gated(tree, emb, params)
        b = enc.encode_tree_gated(padded, emb, params)
        npt.assert_array_equal(a.data, b.data)

    def test_tied_unit_gates_equal_shared(self):
        # all gates forced to 1 and all POS matrices tied -> shared encoder
        rng = np.random.default_rng(22)
        emb = make_embeddings(10, 3, seed=22)
        shared = enc.SharedTreeParams.init(3, rng)
        gated = enc.GatedTreeParams.init(3, ["NOUN", "VERB", "DET", "ADJ"], 4,
                                         np.random.default_rng(22))
        for W in gated.W_by_pos.values():
            W.data = shared.W.data.copy()
        gated.b.data = shared.b.data.copy()
        gated.U1.data[:] = 0
        gated.c1.data[:] = 0
        gated.u2.data[:] = 0
        gated.c2.data[:] = 1000.0  # tanh(1000) == 1.0 in float64
        for _ in range(10):
            tree = random_tree(rng, int(rng.integers(1, 6)), 10)
            a = enc.encode_tree_gated(tree, emb, gated)
            b = enc.encode_tree_shared(tree, emb, shared)
            npt.assert_array_equal(a.data, b.data)

    def test_gradients(self):
        rng = np.random.default_rng(23)
        emb = make_embeddings(8, 2, seed=23)
        params_obj = enc.GatedTreeParams.init(2, ["NOUN", "VERB"], 3, rng)
        tree = random_tree(rng, 4, 8, pos_tags=("NOUN", "VERB"))
        params = dict(emb.tensors())
        params.update(params_obj.tensors())

        def f():
            out = enc.encode_tree_gated(tree, emb, params_obj)
            return ad.sum_reduce(ad.hadamard(out, out))

        assert_grads_match(f, params)


class TestEmbeddingTable:
    def test_pad_row_starts_zero(self):
        emb = make_embeddings(5, 3)
        npt.assert_array_equal(emb.table.data[0], np.zeros(3))

    def test_pad_row_survives_training_steps(self):
        emb = make_embeddings(5, 3, seed=1)
        params = emb.tensors()
        opt = ad.Optimizer(params, kind="adam", lr=0.1)
        for _ in range(5):
            ad.zero_grads(params)
            with ad.Tape() as tape:
                rows = emb.lookup([0, 2, 3])
                loss = ad.sum_reduce(ad.hadamard(rows, rows))
                grads = ad.backward(tape, loss, params)
            opt.step(grads)
            emb.rezero_pad()
        npt.assert_array_equal(emb.table.data[0], np.zeros(3))
        assert not np.allclose(emb.table.data[2], 0.0)
