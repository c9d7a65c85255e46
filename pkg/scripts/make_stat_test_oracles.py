#!/usr/bin/env python3
"""One-shot oracle for the statistical-test known-answer vectors.

Computes every test statistic by direct formula evaluation in plain Python
(loops, math.erfc, mpmath incomplete gamma), deliberately avoiding numpy,
scipy, and any code shared with the rtnlab library. Output is a dict literal
that gets frozen into tests/test_stat_tests_kat.py.

Run once:  python scripts/make_stat_test_oracles.py
"""

import math

import mpmath

mpmath.mp.dps = 30


def igamc(a, x):
    # regularized upper incomplete gamma Q(a, x)
    return float(mpmath.gammainc(a, x, mpmath.inf, regularized=True))


def phi(x):
    # standard normal CDF
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# ---------------------------------------------------------------- vectors

# 128 bits, generated once from numpy PCG64(seed=20260814) and frozen here
V128 = (
    "01100100111010111001100100010111"
    "10101010010110011011001001110111"
    "10010001110110011111001100101101"
    "01101100010101110101001111100111"
)

# 100 bits with 58 ones (monobit example: s_obs = 1.6)
V100_58ONES = "1" * 58 + "0" * 42

V10_A = "1011010101"  # 10-bit sanity vector
ALT128 = "10" * 64    # strict alternation


def bits_of(s):
    return [int(c) for c in s]


# ---------------------------------------------------------------- tests


def monobit(eps):
    n = len(eps)
    s = sum(2 * b - 1 for b in eps)
    s_obs = abs(s) / math.sqrt(n)
    return math.erfc(s_obs / math.sqrt(2.0))


def block_frequency(eps, M):
    n = len(eps)
    N = n // M
    chi2 = 0.0
    for i in range(N):
        block = eps[i * M:(i + 1) * M]
        pi = sum(block) / M
        chi2 += (pi - 0.5) ** 2
    chi2 *= 4.0 * M
    return igamc(N / 2.0, chi2 / 2.0)


def runs(eps):
    n = len(eps)
    pi = sum(eps) / n
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return 0.0
    v = 1 + sum(1 for k in range(n - 1) if eps[k] != eps[k + 1])
    num = abs(v - 2.0 * n * pi * (1 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1 - pi)
    return math.erfc(num / den)


def longest_run(eps):
    # n >= 128 regime: M=8, K=3, N=16, classes <=1,2,3,>=4
    n = len(eps)
    assert n >= 128
    M, K, N = 8, 3, 16
    pi = [0.2148, 0.3672, 0.2305, 0.1875]
    nu = [0, 0, 0, 0]
    for i in range(N):
        block = eps[i * M:(i + 1) * M]
        longest = 0
        run = 0
        for b in block:
            run = run + 1 if b == 1 else 0
            longest = max(longest, run)
        cls = min(max(longest, 1), 4) - 1
        nu[cls] += 1
    chi2 = sum((nu[i] - N * pi[i]) ** 2 / (N * pi[i]) for i in range(K + 1))
    return igamc(K / 2.0, chi2 / 2.0), chi2, nu


def rank_probabilities(m, q):
    # P(rank = r) of a random m x q binary matrix, classes r=m, m-1, rest
    def p_rank(r):
        p = 2.0 ** (r * (m + q - r) - m * q)
        for i in range(r):
            p *= (1 - 2.0 ** (i - m)) * (1 - 2.0 ** (i - q)) / (1 - 2.0 ** (i - r))
        return p

    p_full = p_rank(m)
    p_minus1 = p_rank(m - 1)
    return p_full, p_minus1, 1.0 - p_full - p_minus1


def gf2_rank(rows, ncols):
    rows = list(rows)
    rank = 0
    for col in range(ncols - 1, -1, -1):
        pivot = None
        for i in range(rank, len(rows)):
            if (rows[i] >> col) & 1:
                pivot = i
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and ((rows[i] >> col) & 1):
                rows[i] ^= rows[rank]
        rank += 1
    return rank


def matrix_rank_test(eps, msize):
    n = len(eps)
    N = n // (msize * msize)
    p_full, p_m1, p_rest = rank_probabilities(msize, msize)
    f_full = f_m1 = f_rest = 0
    for k in range(N):
        block = eps[k * msize * msize:(k + 1) * msize * msize]
        rows = []
        for r in range(msize):
            word = 0
            for c in range(msize):
                word = (word << 1) | block[r * msize + c]
            rows.append(word)
        r = gf2_rank(rows, msize)
        if r == msize:
            f_full += 1
        elif r == msize - 1:
            f_m1 += 1
        else:
            f_rest += 1
    chi2 = ((f_full - p_full * N) ** 2 / (p_full * N)
            + (f_m1 - p_m1 * N) ** 2 / (p_m1 * N)
            + (f_rest - p_rest * N) ** 2 / (p_rest * N))
    return igamc(1.0, chi2 / 2.0), chi2, (f_full, f_m1, f_rest)


def dft_test(eps):
    n = len(eps)
    x = [2 * b - 1 for b in eps]
    half = n // 2
    mods = []
    for k in range(half):
        re = sum(x[j] * math.cos(2 * math.pi * k * j / n) for j in range(n))
        im = -sum(x[j] * math.sin(2 * math.pi * k * j / n) for j in range(n))
        mods.append(math.hypot(re, im))
    t = math.sqrt(math.log(1 / 0.05) * n)
    n0 = 0.95 * n / 2.0
    n1 = sum(1 for m in mods if m < t)
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    return math.erfc(abs(d) / math.sqrt(2.0)), n1


def apen_phi(eps, m):
    n = len(eps)
    if m == 0:
        return 0.0
    counts = {}
    for i in range(n):
        pat = tuple(eps[(i + j) % n] for j in range(m))
        counts[pat] = counts.get(pat, 0) + 1
    return sum((c / n) * math.log(c / n) for c in counts.values())


def approximate_entropy(eps, m):
    n = len(eps)
    apen = apen_phi(eps, m) - apen_phi(eps, m + 1)
    chi2 = 2.0 * n * (math.log(2.0) - apen)
    return igamc(2.0 ** (m - 1), chi2 / 2.0), chi2


def psi_sq(eps, m):
    n = len(eps)
    if m <= 0:
        return 0.0
    counts = {}
    for i in range(n):
        pat = tuple(eps[(i + j) % n] for j in range(m))
        counts[pat] = counts.get(pat, 0) + 1
    return (2.0 ** m / n) * sum(c * c for c in counts.values()) - n


def serial(eps, m):
    d1 = psi_sq(eps, m) - psi_sq(eps, m - 1)
    d2 = psi_sq(eps, m) - 2.0 * psi_sq(eps, m - 1) + psi_sq(eps, m - 2)
    p1 = igamc(2.0 ** (m - 2), d1 / 2.0)
    p2 = igamc(2.0 ** (m - 3), d2 / 2.0)
    return p1, p2, d1, d2


def cusum(eps, backward=False):
    n = len(eps)
    x = [2 * b - 1 for b in eps]
    if backward:
        x = x[::-1]
    s = 0
    z = 0
    for v in x:
        s += v
        z = max(z, abs(s))
    sq = math.sqrt(n)
    term1 = 0.0
    for k in range(int(math.floor((-n / z + 1) / 4)), int(math.floor((n / z - 1) / 4)) + 1):
        term1 += phi((4 * k + 1) * z / sq) - phi((4 * k - 1) * z / sq)
    term2 = 0.0
    for k in range(int(math.floor((-n / z - 3) / 4)), int(math.floor((n / z - 1) / 4)) + 1):
        term2 += phi((4 * k + 3) * z / sq) - phi((4 * k + 1) * z / sq)
    return 1.0 - term1 + term2, z


def berlekamp_massey(seq):
    # textbook list-based BM over GF(2)
    n = len(seq)
    c = [0] * n
    b = [0] * n
    c[0] = b[0] = 1
    L, m = 0, -1
    for i in range(n):
        d = seq[i]
        for j in range(1, L + 1):
            d ^= c[j] & seq[i - j]
        if d == 1:
            t = c[:]
            for j in range(n - i + m):
                c[i - m + j] ^= b[j]
            if 2 * L <= i:
                L = i + 1 - L
                m = i
                b = t
    return L


def linear_complexity(eps, M):
    n = len(eps)
    N = n // M
    pi = [0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833]
    mu = (M / 2.0 + (9.0 + (-1.0) ** (M + 1)) / 36.0
          - (M / 3.0 + 2.0 / 9.0) / 2.0 ** M)
    nu = [0] * 7
    lcs = []
    for i in range(N):
        block = eps[i * M:(i + 1) * M]
        L = berlekamp_massey(block)
        lcs.append(L)
        t = (-1.0) ** M * (L - mu) + 2.0 / 9.0
        if t <= -2.5:
            nu[0] += 1
        elif t <= -1.5:
            nu[1] += 1
        elif t <= -0.5:
            nu[2] += 1
        elif t <= 0.5:
            nu[3] += 1
        elif t <= 1.5:
            nu[4] += 1
        elif t <= 2.5:
            nu[5] += 1
        else:
            nu[6] += 1
    chi2 = sum((nu[i] - N * pi[i]) ** 2 / (N * pi[i]) for i in range(7))
    return igamc(3.0, chi2 / 2.0), chi2, lcs


def main():
    v = bits_of(V128)
    out = {}

    out["monobit_v128"] = monobit(v)
    out["monobit_58_of_100"] = monobit(bits_of(V100_58ONES))
    out["monobit_v10"] = monobit(bits_of(V10_A))

    out["block_frequency_v128_M32"] = block_frequency(v, 32)

    out["runs_v128"] = runs(v)
    out["runs_alt128"] = runs(bits_of(ALT128))

    p, chi2, nu = longest_run(v)
    out["longest_run_v128"] = p

    p, chi2, freqs = matrix_rank_test(v, 8)
    out["rank_v128_m8"] = p
    out["rank_v128_m8_freqs"] = freqs

    p, n1 = dft_test(v)
    out["dft_v128"] = p
    out["dft_v128_n1"] = n1

    p, chi2 = approximate_entropy(v, 2)
    out["apen_v128_m2"] = p

    p1, p2, d1, d2 = serial(v, 3)
    out["serial_v128_m3_p1"] = p1
    out["serial_v128_m3_p2"] = p2

    p, z = cusum(v, backward=False)
    out["cusum_fwd_v128"] = p
    out["cusum_fwd_v128_z"] = z
    p, z = cusum(v, backward=True)
    out["cusum_bwd_v128"] = p

    p, chi2, lcs = linear_complexity(v, 64)
    out["linear_complexity_v128_M64"] = p
    out["linear_complexity_v128_M64_lcs"] = lcs

    # rank class probabilities for 32x32 (library must reproduce these)
    out["rank_probs_32"] = rank_probabilities(32, 32)

    print("EXPECTED = {")
    for k, val in out.items():
        if isinstance(val, float):
            print(f"    {k!r}: {val!r},")
        else:
            print(f"    {k!r}: {val!r},")
    print("}")


if __name__ == "__main__":
    main()
