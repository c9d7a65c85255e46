"""Acceptance: the attack's headline numbers, one verdict line each.

Runs a reduced-size configuration (window 16, hidden 16, 3 epochs on
~10^5-bit streams) so the whole gate finishes in well under a minute on
a CPU; the claims are about accuracy bands, which the reduction
preserves: a whitened stream offers nothing to learn at any size, the
Bernoulli optimum is the majority rate, and the periodic pattern fits
entirely inside the context window. Full-default runs (window 64,
hidden 64, 5 epochs) produce the same verdicts in minutes instead of
seconds; see the README.
"""

from pathlib import Path

import numpy as np

from rtnattack import AttackConfig, read_bits, run_attack

FIXTURE = Path(__file__).parent / "data" / "whitened_diff.rtnb"
REDUCED = dict(window=16, hidden=16, epochs=3)


def verdict(name, ok, text):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {text}"
    print("\n" + line)
    assert ok, line


def test_whitened_export_is_unpredictable():
    bits = read_bits(FIXTURE)[: 2**17]
    accs = [run_attack(bits, AttackConfig(seed=s, **REDUCED), FIXTURE.name).accuracy
            for s in range(10)]
    mean = float(np.mean(accs))
    ok = 0.485 <= mean <= 0.515
    verdict("whitened export", ok,
            f"mean accuracy over 10 seeds {mean:.4f} in [0.485, 0.515] "
            f"(per-seed range {min(accs):.4f}..{max(accs):.4f})")


def test_biased_stream_learned_to_majority():
    bits = (np.random.default_rng(42).random(100_000) < 0.6).astype(np.uint8)
    rep = run_attack(bits, AttackConfig(**REDUCED), "bernoulli06")
    ok = abs(rep.accuracy - 0.60) <= 0.02
    verdict("Bernoulli(0.6)", ok,
            f"accuracy {rep.accuracy:.4f} = 0.60 +- 0.02 "
            f"(majority baseline {rep.majority_baseline:.4f})")


def test_periodic_pattern_fully_learned():
    pattern = np.array([1, 0, 1, 1, 0, 1, 0, 0], dtype=np.uint8)
    bits = np.tile(pattern, 100_000 // 8 + 1)[:100_000]
    rep = run_attack(bits, AttackConfig(**REDUCED), "period8")
    ok = rep.accuracy >= 0.99
    verdict("period-8 pattern", ok, f"accuracy {rep.accuracy:.4f} >= 0.99")


def test_no_leakage_on_ideal_bits():
    bits = (np.random.default_rng(7).random(100_000) < 0.5).astype(np.uint8)
    rep = run_attack(bits, AttackConfig(**REDUCED), "ideal")
    bound = 0.5 + 3.0 * (0.25 / rep.n_test) ** 0.5
    ok = rep.accuracy <= bound
    verdict("no leakage", ok,
            f"accuracy on ideal bits {rep.accuracy:.4f} <= "
            f"0.5 + 3*sqrt(0.25/{rep.n_test}) = {bound:.4f}")
