import numpy as np
import pytest

from acfguard.synthetic import SyntheticSpec, generate


def pearson_lags(x, L):
    """Brute-force Pearson correlation of x[:n-l] and x[l:] for each lag."""
    x = np.asarray(x, dtype=float)
    out = []
    for l in range(1, L + 1):
        a, b = x[: len(x) - l], x[l:]
        a = a - a.mean()
        b = b - b.mean()
        out.append(float(np.sum(a * b) / np.sqrt(np.sum(a * a) * np.sum(b * b))))
    return np.array(out)


def yule_walker_pacf(rho):
    """phi_{l,l} from solving each order-l Toeplitz system directly."""
    rho = np.asarray(rho, dtype=float)
    out = []
    for l in range(1, len(rho) + 1):
        r = np.concatenate(([1.0], rho[: l - 1]))
        R = np.array([[r[abs(i - j)] for j in range(l)] for i in range(l)])
        out.append(np.linalg.solve(R, rho[:l])[-1])
    return np.array(out)


def naive_sums(x, L):
    x = np.asarray(x, dtype=float)
    n = len(x)
    S = np.zeros((5, L))
    for l in range(1, L + 1):
        for t in range(n - l):
            S[0, l - 1] += x[t]
            S[1, l - 1] += x[t + l]
            S[2, l - 1] += x[t] ** 2
            S[3, l - 1] += x[t + l] ** 2
            S[4, l - 1] += x[t] * x[t + l]
    return S


def msmape_direct(a, b):
    """mSMAPE straight from its definition, O(n^2)."""
    n = len(a)
    total = 0.0
    for i in range(n):
        if i == 0:
            s = 0.0
        else:
            m = sum(a[:i]) / i
            s = sum(abs(a[k] - m) for k in range(i)) / i
        den = abs(a[i] + b[i]) / 2 + s
        if den != 0:
            total += abs(a[i] - b[i]) / den
    return total / n


def interpolate(x, kept):
    kept = np.asarray(kept)
    return np.interp(np.arange(len(x)), kept, np.asarray(x, dtype=float)[kept])


def family_series(seed, n, kind=None):
    kinds = ("ar1", "sinusoid", "random_walk")
    kind = kind or kinds[seed % 3]
    params = {"sinusoid": {"period": 24 + seed % 7, "noise": 0.1}, "ar1": {"phi": 0.7}}.get(kind, {})
    return generate(SyntheticSpec(kind, n, seed, params))


@pytest.fixture
def sinusoid():
    return generate(SyntheticSpec("sinusoid", 1024, 7, {"period": 32, "noise": 0.01}))


@pytest.fixture
def walk():
    return generate(SyntheticSpec("random_walk", 400, 3))


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
