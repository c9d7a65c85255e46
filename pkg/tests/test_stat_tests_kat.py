"""Known-answer tests for the statistical battery.

Expected values were produced by scripts/make_stat_test_oracles.py,
which evaluates each published statistic directly (pure Python + mpmath,
no numpy/scipy, no shared code with the library) on short frozen
vectors. Matching here is to 1e-6 in p-value.
"""

import numpy as np
import pytest

from rtnlab import stat_tests as stt
from rtnlab.bitgen import BitStream

V128 = BitStream.from_string(
    "01100100111010111001100100010111"
    "10101010010110011011001001110111"
    "10010001110110011111001100101101"
    "01101100010101110101001111100111"
)
V100_58ONES = BitStream.from_string("1" * 58 + "0" * 42)
ALT128 = BitStream.from_string("10" * 64)

EXPECTED = {
    "monobit_v128": 0.1572992070502852,
    "monobit_58_of_100": 0.109598583399116,
    "block_frequency_v128_M32": 0.6898864931364932,
    "runs_v128": 0.10604155370017077,
    "runs_alt128": 1.1224297172982928e-29,
    "longest_run_v128": 0.3662670999085189,
    "rank_v128_m8": 0.7444161914752337,
    "rank_v128_m8_freqs": (1, 1, 0),
    "dft_v128": 0.3303900488487932,
    "dft_v128_n1": 62,
    "apen_v128_m2": 0.018745868237202125,
    "serial_v128_m3_p1": 0.12325207518064413,
    "serial_v128_m3_p2": 0.19691167520419406,
    "cusum_fwd_v128": 0.31455423310964825,
    "cusum_fwd_v128_z": 16,
    "cusum_bwd_v128": 0.2232199060337332,
    "linear_complexity_v128_M64": 0.00022260577739537788,
    "linear_complexity_v128_M64_lcs": [35, 31],
    "rank_probs_32": (0.2887880951538411, 0.5775761901732046, 0.13363571467295432),
}

TOL = 1e-6


def test_monobit_kat():
    assert stt.frequency_monobit(V128).p_value == pytest.approx(
        EXPECTED["monobit_v128"], abs=TOL
    )
    assert stt.frequency_monobit(V100_58ONES).p_value == pytest.approx(
        EXPECTED["monobit_58_of_100"], abs=TOL
    )


def test_monobit_alternation_is_perfect():
    assert stt.frequency_monobit(ALT128).p_value == 1.0


def test_block_frequency_kat():
    r = stt.block_frequency(V128, M=32)
    assert r.p_value == pytest.approx(EXPECTED["block_frequency_v128_M32"], abs=TOL)
    assert r.parameters["N"] == 4


def test_runs_kat():
    assert stt.runs(V128).p_value == pytest.approx(EXPECTED["runs_v128"], abs=TOL)
    # maximal alternation: V = n, wildly over-dispersed
    assert stt.runs(ALT128).p_value == pytest.approx(EXPECTED["runs_alt128"], rel=1e-6)


def test_longest_run_kat():
    r = stt.longest_run_of_ones(V128)
    assert r.parameters["M"] == 8
    assert r.p_value == pytest.approx(EXPECTED["longest_run_v128"], abs=TOL)


def test_rank_kat():
    with pytest.warns(UserWarning):  # N=2 matrices, far below recommended
        r = stt.binary_matrix_rank(V128, matrix_size=8)
    assert r.p_value == pytest.approx(EXPECTED["rank_v128_m8"], abs=TOL)
    assert tuple(r.parameters["ranks"]) == EXPECTED["rank_v128_m8_freqs"]


def test_rank_class_probabilities_32():
    probs = stt.rank_probabilities(32)
    for got, want in zip(probs, EXPECTED["rank_probs_32"]):
        assert got == pytest.approx(want, abs=1e-12)


def test_dft_kat():
    with pytest.warns(UserWarning):
        r = stt.dft_spectral(V128)
    assert r.p_value == pytest.approx(EXPECTED["dft_v128"], abs=TOL)
    assert r.parameters["N1"] == EXPECTED["dft_v128_n1"]


def test_approximate_entropy_kat():
    r = stt.approximate_entropy(V128, m=2)
    assert r.p_value == pytest.approx(EXPECTED["apen_v128_m2"], abs=TOL)


def test_serial_kat():
    r1, r2 = stt.serial(V128, m=3)
    assert r1.p_value == pytest.approx(EXPECTED["serial_v128_m3_p1"], abs=TOL)
    assert r2.p_value == pytest.approx(EXPECTED["serial_v128_m3_p2"], abs=TOL)


def test_cusum_kat():
    fwd = stt.cumulative_sums(V128, "forward")
    bwd = stt.cumulative_sums(V128, "backward")
    assert fwd.p_value == pytest.approx(EXPECTED["cusum_fwd_v128"], abs=TOL)
    assert fwd.parameters["z"] == EXPECTED["cusum_fwd_v128_z"]
    assert bwd.p_value == pytest.approx(EXPECTED["cusum_bwd_v128"], abs=TOL)


def test_linear_complexity_kat():
    with pytest.warns(UserWarning):  # M=64 below recommended 500
        r = stt.linear_complexity(V128, M=64)
    assert r.p_value == pytest.approx(EXPECTED["linear_complexity_v128_M64"], rel=1e-6)
    expected_mean = float(np.mean(EXPECTED["linear_complexity_v128_M64_lcs"]))
    assert r.parameters["mean_lc"] == expected_mean
