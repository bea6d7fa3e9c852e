"""The five learners and the bracket-tag rule."""

import math
import random
from fractions import Fraction

import pytest

from vnspam import Label
from vnspam.classifiers import (
    Hyperparams,
    TrainedModel,
    decision_score,
    predict,
    rule_baseline,
    train,
)
from vnspam.features import FeatureVector

import oracles


def fv(weights, dim, length=None, fp=None):
    return FeatureVector(
        weights=weights, dim=dim, length_feature=length, vocab_fingerprint=fp
    )


def labels(flags):
    return [Label.SPAM if f else Label.LEGITIMATE for f in flags]


def random_instance(rng, max_samples=8, max_feats=4, require_both=True):
    """Small random training set with integer-valued sparse rows."""
    n = rng.randint(2, max_samples)
    d = rng.randint(1, max_feats)
    while True:
        flags = [rng.randint(0, 1) for _ in range(n)]
        if not require_both or 0 < sum(flags) < n:
            break
    rows = []
    for _ in range(n):
        row = {
            f: rng.randint(1, 4)
            for f in range(d)
            if rng.random() < 0.6
        }
        rows.append(row)
    return rows, flags, d


# -- rule baseline ------------------------------------------------------------


def test_baseline_fires_on_ad_tags():
    assert rule_baseline("[QC] Khuyen mai lon").label is Label.SPAM
    assert rule_baseline("(TB2) Nap the ngay").label is Label.SPAM
    assert rule_baseline("[qc khong dau] x").label is Label.SPAM
    assert rule_baseline("truoc (tb) sau").label is Label.SPAM


def test_baseline_scores_are_binary():
    assert rule_baseline("[QC] x").score == 1.0
    assert rule_baseline("hom nay hop luc 3h").score == 0.0


def test_baseline_ignores_other_brackets():
    assert rule_baseline("hom nay hop luc 3h").label is Label.LEGITIMATE
    assert rule_baseline("(hop) luc [3h]").label is Label.LEGITIMATE
    assert rule_baseline("[QC never closed").label is Label.LEGITIMATE
    assert rule_baseline("QC tran trui").label is Label.LEGITIMATE


def test_baseline_never_fires_without_brackets():
    rng = random.Random(2)
    chars = "abcdefgh QCTBqctb0123456789.,!?"
    for _ in range(300):
        text = "".join(rng.choice(chars) for _ in range(rng.randint(0, 40)))
        assert rule_baseline(text).label is Label.LEGITIMATE


# -- train() contract -----------------------------------------------------------


def test_train_rejects_unknown_kind():
    with pytest.raises(ValueError, match="unknown classifier"):
        train("forest", [fv({0: 1}, 1)] * 2, labels([1, 0]))


def test_train_rejects_mismatched_lengths():
    with pytest.raises(ValueError, match="labels"):
        train("nb", [fv({0: 1}, 1)], labels([1, 0]))


def test_train_rejects_single_example():
    with pytest.raises(ValueError, match="at least two"):
        train("nb", [fv({0: 1}, 1)], labels([1]))


def test_train_rejects_single_class():
    with pytest.raises(ValueError, match="both classes"):
        train("nb", [fv({0: 1}, 1), fv({0: 2}, 1)], labels([1, 1]))


def test_train_rejects_mixed_vocabularies():
    vecs = [fv({0: 1}, 1, fp="aaa"), fv({0: 1}, 1, fp="bbb")]
    with pytest.raises(ValueError, match="different vocabulary"):
        train("nb", vecs, labels([1, 0]))


def test_train_rejects_mixed_dims():
    vecs = [fv({0: 1}, 1), fv({0: 1}, 2)]
    with pytest.raises(ValueError, match="dim"):
        train("nb", vecs, labels([1, 0]))


def test_train_rejects_mixed_length_feature():
    vecs = [fv({0: 1}, 1, length=0.5), fv({0: 1}, 1)]
    with pytest.raises(ValueError, match="length feature"):
        train("nb", vecs, labels([1, 0]))


@pytest.mark.parametrize(
    "kind,hp",
    [
        ("nb", Hyperparams(alpha=0.0)),
        ("svm", Hyperparams(reg_lambda=0.0)),
        ("svm", Hyperparams(epochs=0)),
        ("dt", Hyperparams(max_depth=0)),
        ("knn", Hyperparams(k=0)),
    ],
)
def test_train_rejects_bad_hyperparams(kind, hp):
    with pytest.raises(ValueError):
        train(kind, [fv({0: 1}, 1), fv({0: 2}, 1)], labels([1, 0]), hp)


def test_score_label_consistency_across_kinds():
    """predict() reports exactly the score decision_score() returns, and the
    label is the thresholded score."""
    rng = random.Random(77)
    for kind in ("nb", "svm", "lr", "dt", "knn"):
        for _ in range(30):
            rows, flags, d = random_instance(rng)
            vecs = [fv(r, d) for r in rows]
            model = train(kind, vecs, labels(flags), Hyperparams(epochs=5))
            q = fv({f: rng.randint(1, 4) for f in range(d) if rng.random() < 0.5}, d)
            pred = predict(model, q)
            score = decision_score(model, q)
            assert pred.score == score
            threshold = 0.0 if kind == "svm" else 0.5
            assert pred.label is (Label.SPAM if score > threshold else Label.LEGITIMATE)
            if kind != "svm":
                assert 0.0 <= score <= 1.0


# -- naive Bayes -----------------------------------------------------------------


def test_nb_laplace_hand_example():
    vecs = [fv({0: 2}, 2), fv({1: 2}, 2)]
    model = train("nb", vecs, labels([1, 0]))
    # spam saw term 0 twice out of 2 tokens; alpha=1 over 2 slots
    assert model.params["log_likelihood"]["spam"][0] == pytest.approx(math.log(0.75))
    pred = predict(model, fv({0: 1}, 2))
    assert pred.label is Label.SPAM
    assert pred.score > 0.5


def test_nb_likelihoods_normalize():
    rng = random.Random(6)
    for _ in range(50):
        rows, flags, d = random_instance(rng)
        model = train("nb", [fv(r, d) for r in rows], labels(flags))
        for cls in ("spam", "ham"):
            total = sum(math.exp(x) for x in model.params["log_likelihood"][cls])
            assert total == pytest.approx(1.0, abs=1e-9)


def test_nb_matches_exact_posterior():
    rng = random.Random(8)
    for _ in range(100):
        rows, flags, d = random_instance(rng)
        alpha = rng.choice([0.5, 1.0, 2.0])
        model = train("nb", [fv(r, d) for r in rows], labels(flags), Hyperparams(alpha=alpha))
        q = {f: rng.randint(1, 4) for f in range(d) if rng.random() < 0.5}
        got = decision_score(model, fv(q, d))
        want = oracles.nb_posterior(rows, flags, q, d, alpha)
        assert oracles.rel_close(got, float(want)), (rows, flags, q, alpha)


def test_nb_all_oov_query_follows_prior():
    vecs = [fv({0: 1}, 1)] * 3 + [fv({0: 2}, 1)] * 7
    model = train("nb", vecs, labels([1] * 3 + [0] * 7))
    pred = predict(model, fv({}, 1))
    assert pred.label is Label.LEGITIMATE
    assert pred.score == pytest.approx(0.3)


def test_nb_query_scaling_keeps_argmax_under_equal_priors():
    rng = random.Random(9)
    for _ in range(60):
        n = rng.choice([2, 4, 6])
        flags = [1] * (n // 2) + [0] * (n // 2)
        d = rng.randint(1, 4)
        rows = [
            {f: rng.randint(1, 4) for f in range(d) if rng.random() < 0.6}
            for _ in range(n)
        ]
        model = train("nb", [fv(r, d) for r in rows], labels(flags))
        q = {f: rng.randint(1, 3) for f in range(d) if rng.random() < 0.5}
        base = predict(model, fv(q, d)).label
        for c in (2, 5):
            scaled = predict(model, fv({f: c * x for f, x in q.items()}, d)).label
            assert scaled is base


def test_nb_scaling_every_vector_can_flip_the_argmax():
    """Additive smoothing is not scale-free: inflating all counts by the same
    factor moves the likelihood ratios, so the decision may flip even with
    balanced priors."""
    q = {0: 5, 1: 2}
    small = train("nb", [fv({0: 5}, 2), fv({0: 3, 1: 4}, 2)], labels([1, 0]))
    big = train("nb", [fv({0: 50}, 2), fv({0: 30, 1: 40}, 2)], labels([1, 0]))
    lo = predict(small, fv(q, 2)).label
    hi = predict(big, fv({f: 10 * x for f, x in q.items()}, 2)).label
    assert lo is Label.SPAM
    assert hi is Label.LEGITIMATE


# -- linear models ----------------------------------------------------------------


def test_svm_separates_two_points():
    vecs = [fv({0: 1}, 2), fv({1: 1}, 2)]
    model = train("svm", vecs, labels([1, 0]))
    assert predict(model, vecs[0]).label is Label.SPAM
    assert predict(model, vecs[1]).label is Label.LEGITIMATE
    assert decision_score(model, vecs[0]) > 0
    assert decision_score(model, vecs[1]) < 0


def test_svm_perfect_on_separable_cluster():
    rng = random.Random(10)
    vecs, ys = [], []
    for _ in range(40):
        if rng.random() < 0.5:
            vecs.append(fv({0: rng.randint(2, 5), 1: rng.randint(1, 2)}, 3))
            ys.append(1)
        else:
            vecs.append(fv({2: rng.randint(2, 5)}, 3))
            ys.append(0)
    model = train("svm", vecs, labels(ys))
    hits = sum(predict(model, v).label is lab for v, lab in zip(vecs, labels(ys)))
    assert hits == len(vecs)


def test_lr_zero_weights_score_half():
    model = TrainedModel(
        kind="lr",
        params={"weights": [0.0, 0.0], "bias": 0.0},
        n_slots=2,
        has_length=False,
        vocab_fingerprint=None,
    )
    assert decision_score(model, fv({0: 3}, 2)) == 0.5
    assert predict(model, fv({0: 3}, 2)).label is Label.LEGITIMATE  # tie


def test_svm_boundary_vector_scores_zero():
    model = TrainedModel(
        kind="svm",
        params={"weights": [1.0, -1.0], "bias": 0.0},
        n_slots=2,
        has_length=False,
        vocab_fingerprint=None,
    )
    assert decision_score(model, fv({0: 1, 1: 1}, 2)) == 0.0
    assert predict(model, fv({0: 1, 1: 1}, 2)).label is Label.LEGITIMATE


def test_lr_learns_separable_data():
    vecs = [fv({0: 2}, 2), fv({0: 3}, 2), fv({1: 2}, 2), fv({1: 3}, 2)]
    model = train("lr", vecs, labels([1, 1, 0, 0]))
    assert predict(model, fv({0: 2}, 2)).label is Label.SPAM
    assert predict(model, fv({1: 2}, 2)).label is Label.LEGITIMATE
    assert 0.0 <= decision_score(model, fv({0: 2}, 2)) <= 1.0


def test_linear_training_is_seed_deterministic():
    rng = random.Random(12)
    rows, flags, d = random_instance(rng, max_samples=8)
    vecs = [fv(r, d) for r in rows]
    a = train("svm", vecs, labels(flags), Hyperparams(seed=4, epochs=10))
    b = train("svm", vecs, labels(flags), Hyperparams(seed=4, epochs=10))
    assert a.params == b.params
    c = train("svm", vecs, labels(flags), Hyperparams(seed=5, epochs=10))
    assert a.params != c.params


def test_linear_weight_norm_stays_in_pegasos_ball():
    """The L2-regularized optimum lies inside radius 1/sqrt(lambda); a healthy
    schedule must not leave weights far outside it."""
    rng = random.Random(14)
    vecs, ys = [], []
    for i in range(60):
        spam = i % 2 == 0
        row = {0: rng.randint(1, 4)} if spam else {1: rng.randint(1, 4)}
        vecs.append(fv(row, 2))
        ys.append(1 if spam else 0)
    for loss in ("svm", "lr"):
        model = train(loss, vecs, labels(ys), Hyperparams(reg_lambda=1e-2))
        norm = math.sqrt(sum(w * w for w in model.params["weights"]))
        assert norm <= 2.0 / math.sqrt(1e-2)


# -- decision tree ----------------------------------------------------------------


def test_dt_perfect_feature_gives_single_split():
    vecs = [fv({0: 2}, 2), fv({0: 3}, 2), fv({}, 2), fv({1: 1}, 2)]
    model = train("dt", vecs, labels([1, 1, 0, 0]))
    nodes = model.params["nodes"]
    root = nodes[model.params["root"]]
    assert root["feature"] == 0
    assert root["threshold"] == pytest.approx(1.0)
    internal = [n for n in nodes if "feature" in n]
    assert len(internal) == 1
    for v, lab in zip(vecs, labels([1, 1, 0, 0])):
        assert predict(model, v).label is lab


def test_dt_nodes_form_a_tree():
    rng = random.Random(15)
    for _ in range(40):
        rows, flags, d = random_instance(rng)
        model = train("dt", [fv(r, d) for r in rows], labels(flags))
        nodes = model.params["nodes"]
        seen = set()
        stack = [model.params["root"]]
        while stack:
            i = stack.pop()
            assert i not in seen  # each node reached once: no cycles, no sharing
            seen.add(i)
            node = nodes[i]
            if "feature" in node:
                assert set(node) == {"feature", "threshold", "left", "right"}
                stack += [node["left"], node["right"]]
            else:
                assert set(node) == {"spam_fraction", "samples"}
                assert 0.0 <= node["spam_fraction"] <= 1.0
        assert seen == set(range(len(nodes)))


def test_dt_respects_max_depth():
    rng = random.Random(16)
    rows, flags, d = random_instance(rng, max_samples=8)
    model = train("dt", [fv(r, d) for r in rows], labels(flags), Hyperparams(max_depth=1))
    nodes = model.params["nodes"]
    root = nodes[model.params["root"]]
    if "feature" in root:
        assert "feature" not in nodes[root["left"]]
        assert "feature" not in nodes[root["right"]]


def leaf_stop_is_valid(rows, flags, idxs, depth, max_depth):
    n = len(idxs)
    s = sum(flags[i] for i in idxs)
    if s == 0 or s == n or n < 2 or depth >= max_depth:
        return True
    sub_rows = [rows[i] for i in idxs]
    sub_flags = [flags[i] for i in idxs]
    gain, _ = oracles.best_root_split(sub_rows, sub_flags)
    return gain == 0


def test_dt_every_split_attains_exact_max_gini_gain():
    """Route the training rows down the built tree; at every internal node the
    chosen split must attain the exact best Gini gain for the samples that
    reach it, and every leaf must correspond to a valid stopping condition."""
    rng = random.Random(18)
    for _ in range(60):
        rows, flags, d = random_instance(rng)
        max_depth = rng.choice([1, 2, 20])
        model = train("dt", [fv(r, d) for r in rows], labels(flags), Hyperparams(max_depth=max_depth))
        nodes = model.params["nodes"]

        def check(node_idx, idxs, depth):
            node = nodes[node_idx]
            if "feature" not in node:
                assert leaf_stop_is_valid(rows, flags, idxs, depth, max_depth), (idxs, depth)
                return
            sub_rows = [rows[i] for i in idxs]
            sub_flags = [flags[i] for i in idxs]
            best, arg = oracles.best_root_split(sub_rows, sub_flags)
            assert best > 0
            got = (node["feature"], Fraction(node["threshold"]))
            assert got in arg, (sub_rows, sub_flags, node, arg)
            left = [i for i in idxs if rows[i].get(node["feature"], 0) <= node["threshold"]]
            right = [i for i in idxs if rows[i].get(node["feature"], 0) > node["threshold"]]
            check(node["left"], left, depth + 1)
            check(node["right"], right, depth + 1)

        check(model.params["root"], list(range(len(rows))), 0)


def test_dt_leaf_scores_are_spam_fractions():
    # the zero row splits off pure; the three identical rows are 2 spam 1 ham
    vecs = [fv({0: 1}, 1), fv({0: 1}, 1), fv({0: 1}, 1), fv({}, 1)]
    model = train("dt", vecs, labels([1, 1, 0, 0]))
    score = decision_score(model, fv({0: 1}, 1))
    assert score == pytest.approx(2 / 3)


# -- k nearest neighbors -------------------------------------------------------------


def test_knn_identical_point():
    model = train("knn", [fv({0: 1}, 1), fv({}, 1)], labels([1, 0]), Hyperparams(k=1))
    pred = predict(model, fv({0: 1}, 1))
    assert pred.label is Label.SPAM
    assert pred.score == 1.0


def test_knn_vote_tie_goes_legitimate():
    vecs = [fv({0: 1}, 2), fv({1: 1}, 2)]
    model = train("knn", vecs, labels([1, 0]), Hyperparams(k=2))
    pred = predict(model, fv({0: 1, 1: 1}, 2))
    assert pred.score == 0.5
    assert pred.label is Label.LEGITIMATE


def test_knn_distance_tie_prefers_lower_index():
    vecs = [fv({0: 2}, 1), fv({0: 4}, 1)]  # same direction, equal cosine
    model = train("knn", vecs, labels([0, 1]), Hyperparams(k=1))
    assert predict(model, fv({0: 1}, 1)).label is Label.LEGITIMATE


def test_knn_k_larger_than_training_set():
    vecs = [fv({0: 1}, 1), fv({}, 1)]
    model = train("knn", vecs, labels([1, 0]), Hyperparams(k=5))
    pred = predict(model, fv({0: 3}, 1))
    assert pred.score == 0.5  # both rows vote


def test_knn_zero_norm_query_sees_uniform_distance():
    vecs = [fv({0: 1}, 1), fv({0: 2}, 1), fv({0: 3}, 1)]
    model = train("knn", vecs, labels([1, 0, 0]), Hyperparams(k=2))
    pred = predict(model, fv({}, 1))
    assert pred.score == 0.5  # rows 0 and 1 by index tie-break


def test_knn_matches_exhaustive_oracle():
    rng = random.Random(19)
    from vnspam.classifiers import _knn_neighbors

    for _ in range(150):
        rows, flags, d = random_instance(rng)
        k = rng.randint(1, 6)
        model = train("knn", [fv(r, d) for r in rows], labels(flags), Hyperparams(k=k))
        q = {f: rng.randint(1, 4) for f in range(d) if rng.random() < 0.5}
        got = _knn_neighbors(model.params, fv(q, d))
        assert got == oracles.knn_exhaustive(rows, q, k)


def test_knn_scaling_invariance():
    """Cosine ignores vector length: scaling all rows and the query by any
    power of two reproduces identical similarities, hence identical labels."""
    rng = random.Random(21)
    for _ in range(60):
        rows, flags, d = random_instance(rng)
        k = rng.randint(1, 5)
        q = {f: rng.randint(1, 4) for f in range(d) if rng.random() < 0.5}
        base_model = train("knn", [fv(r, d) for r in rows], labels(flags), Hyperparams(k=k))
        base = predict(base_model, fv(q, d)).label
        for c in (0.5, 2.0, 8.0):
            scaled_rows = [{f: c * x for f, x in r.items()} for r in rows]
            scaled_model = train("knn", [fv(r, d) for r in scaled_rows], labels(flags), Hyperparams(k=k))
            scaled_q = fv({f: c * x for f, x in q.items()}, d)
            assert predict(scaled_model, scaled_q).label is base


# -- prediction gating ---------------------------------------------------------------


def test_predict_refuses_foreign_fingerprint():
    vecs = [fv({0: 1}, 1, fp="aaa"), fv({}, 1, fp="aaa")]
    model = train("nb", vecs, labels([1, 0]))
    with pytest.raises(ValueError, match="different vocabulary"):
        predict(model, fv({0: 1}, 1, fp="bbb"))


def test_predict_refuses_wrong_slot_count():
    vecs = [fv({0: 1}, 2), fv({1: 1}, 2)]
    model = train("nb", vecs, labels([1, 0]))
    with pytest.raises(ValueError, match="slots"):
        predict(model, fv({0: 1}, 3))


def test_predict_refuses_length_feature_mismatch():
    vecs = [fv({0: 1}, 1, length=0.1), fv({}, 1, length=0.2)]
    model = train("nb", vecs, labels([1, 0]))
    with pytest.raises(ValueError, match="length feature"):
        predict(model, fv({0: 1}, 1))


def test_baseline_model_cannot_score_vectors():
    model = train("baseline", [], [])
    with pytest.raises(ValueError, match="raw text"):
        decision_score(model, fv({0: 1}, 1))
