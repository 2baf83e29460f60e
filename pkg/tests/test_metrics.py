import math

import numpy as np
import pytest

from cascadeboost.exceptions import EmptySetError, InvalidSpecError, SingleClassError
from cascadeboost.metrics import auc, f1_score, logloss, prf_at_topk


def pairwise_auc(y, s):
    """O(n^2) Mann-Whitney oracle: wins + half ties over all +/- pairs."""
    s = np.asarray(s, dtype=float)
    pos = s[np.asarray(y) == 1]
    neg = s[np.asarray(y) == 0]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


class TestAuc:
    def test_perfect_separation(self):
        assert auc([0, 1, 0, 1], [0, 1, 0, 1]) == 1.0

    def test_all_tied_scores(self):
        assert auc([0, 1, 1, 0], [0.7, 0.7, 0.7, 0.7]) == 0.5

    def test_matches_pairwise_bruteforce(self):
        rng = np.random.default_rng(42)
        for _ in range(40):
            n = int(rng.integers(10, 800))
            y = rng.integers(0, 2, size=n)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            if rng.random() < 0.5:
                s = rng.normal(size=n)
            else:
                s = rng.integers(0, 5, size=n).astype(float)  # heavy ties
            assert auc(y, s) == pytest.approx(pairwise_auc(y, s), abs=1e-9)

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(7)
        y = rng.integers(0, 2, size=500)
        y[:2] = [0, 1]
        s = rng.normal(size=500)
        base = auc(y, s)
        assert auc(y, np.exp(s)) == pytest.approx(base, abs=1e-12)
        assert auc(y, 3.0 * s + 11.0) == pytest.approx(base, abs=1e-12)

    def test_negated_scores_complement(self):
        rng = np.random.default_rng(3)
        y = rng.integers(0, 2, size=400)
        y[:2] = [0, 1]
        s = rng.integers(0, 10, size=400).astype(float)
        assert auc(y, s) + auc(y, -s) == pytest.approx(1.0, abs=1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(SingleClassError):
            auc([1, 1, 1], [0.1, 0.2, 0.3])


class TestPrfAtTopk:
    def test_reported_f1_arithmetic_first_row(self):
        # published precision/recall pair: P=5.75%, R=36.39% -> F1=9.93%
        assert f1_score(0.0575, 0.3639) * 100 == pytest.approx(9.93, abs=0.005)

    def test_reported_f1_arithmetic_second_row(self):
        # P=6.39%, R=37.40% -> F1=10.92%
        assert f1_score(0.0639, 0.3740) * 100 == pytest.approx(10.92, abs=0.005)

    def test_all_positive_instances(self):
        y = np.ones(10, dtype=int)
        s = np.linspace(0, 1, 10)
        p, r, f1 = prf_at_topk(y, s, 0.3)
        assert p == 1.0
        assert r == pytest.approx(3 / 10)
        assert f1 == pytest.approx(f1_score(1.0, 0.3))

    def test_fraction_one_gives_prevalence_and_full_recall(self):
        rng = np.random.default_rng(0)
        y = rng.integers(0, 2, size=137)
        y[0] = 1
        s = rng.normal(size=137)
        p, r, _ = prf_at_topk(y, s, 1.0)
        assert p == pytest.approx(y.mean())
        assert r == 1.0

    def test_ceiling_cut_size(self):
        y = [1, 0, 0, 0, 0, 0, 0]
        s = [7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0]
        p, r, _ = prf_at_topk(y, s, 0.15)  # ceil(0.15 * 7) = 2
        assert p == 0.5 and r == 1.0

    def test_stable_tie_break_keeps_original_order(self):
        y = [1, 0, 0, 1]
        s = [0.5, 0.5, 0.5, 0.5]
        p, r, _ = prf_at_topk(y, s, 0.5)  # first two original rows selected
        assert p == 0.5
        assert r == 0.5

    def test_harmonic_mean_identities_on_random_sets(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(5, 200))
            y = rng.integers(0, 2, size=n)
            s = rng.normal(size=n)
            fraction = float(rng.uniform(0.05, 1.0))
            p, r, f1 = prf_at_topk(y, s, fraction)
            assert f1 <= min(2 * p, 2 * r) + 1e-12
            if p + r > 0:
                assert f1 == pytest.approx(2 * p * r / (p + r), abs=1e-12)
            else:
                assert f1 == 0.0

    def test_bad_fraction_rejected(self):
        with pytest.raises(InvalidSpecError):
            prf_at_topk([0, 1], [0.1, 0.2], 0.0)
        with pytest.raises(InvalidSpecError):
            prf_at_topk([0, 1], [0.1, 0.2], 1.5)

    def test_empty_set_rejected(self):
        with pytest.raises(EmptySetError):
            prf_at_topk([], [], 0.5)


class TestLogloss:
    def test_exact_scores_vanish(self):
        assert logloss([0, 1, 1], [0.0, 1.0, 1.0]) <= 1e-14

    def test_coin_flip_is_ln2(self):
        assert logloss([0, 1, 0, 1], [0.5] * 4) == pytest.approx(math.log(2), abs=1e-15)

    def test_matches_naive_loop(self):
        rng = np.random.default_rng(5)
        y = rng.integers(0, 2, size=300)
        s = rng.uniform(1e-6, 1 - 1e-6, size=300)
        expected = sum(
            -(yi * math.log(si) + (1 - yi) * math.log(1 - si))
            for yi, si in zip(y, s)
        ) / len(y)
        assert logloss(y, s) == pytest.approx(expected, abs=1e-12)
