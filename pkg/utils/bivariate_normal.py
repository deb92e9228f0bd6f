"""
Bivariate normal orthant probabilities

Vectorized form of Genz's BVND algorithm (Gauss-Legendre integration of the
Plackett/Drezner representation) for a scalar correlation and array limits.
"""
import math

import numpy as np
from scipy.special import ndtr

_LEG_X, _LEG_W = np.polynomial.legendre.leggauss(20)
_LIMIT = 10.0


def bvn_upper(h, k, r: float) -> np.ndarray:
    """
    P(X > h, Y > k) for a standard bivariate normal with correlation r

    Args:
        h: Lower limits of the first coordinate (array-like)
        k: Lower limits of the second coordinate (array-like)
        r: Correlation in [-1, 1]

    Returns:
        Array of orthant probabilities with the broadcast shape of h and k
    """
    h, k = np.broadcast_arrays(
        np.clip(np.asarray(h, dtype=float), -_LIMIT, _LIMIT),
        np.clip(np.asarray(k, dtype=float), -_LIMIT, _LIMIT),
    )
    h = h.astype(float).copy()
    k = k.astype(float).copy()
    r = float(r)
    hk = h * k

    if abs(r) < 0.925:
        hs = (h * h + k * k) / 2.0
        asr = math.asin(r)
        sn = np.sin(asr * (_LEG_X + 1.0) / 2.0)
        terms = np.exp((sn * hk[..., None] - hs[..., None]) / (1.0 - sn * sn))
        bvn = terms @ _LEG_W
        return bvn * asr / (4.0 * math.pi) + ndtr(-h) * ndtr(-k)

    if r < 0:
        k = -k
        hk = -hk
    bvn = np.zeros_like(h)
    if abs(r) < 1.0:
        as_ = (1.0 - r) * (1.0 + r)
        a = math.sqrt(as_)
        bs = (h - k) ** 2
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 16.0
        bvn = a * np.exp(-(bs / as_ + hk) / 2.0) * (
            1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0
        )
        b = np.sqrt(bs)
        tail = (
            np.exp(-hk / 2.0) * math.sqrt(2.0 * math.pi) * ndtr(-b / a) * b
            * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0)
        )
        bvn = bvn - np.where(hk > -160.0, tail, 0.0)

        a /= 2.0
        xs = (a * (_LEG_X + 1.0)) ** 2
        rs = np.sqrt(1.0 - xs)
        asr = -(bs[..., None] / xs + hk[..., None]) / 2.0
        inner = a * _LEG_W * np.exp(np.maximum(asr, -700.0)) * (
            np.exp(-hk[..., None] * xs / (2.0 * (1.0 + rs) ** 2)) / rs
            - (1.0 + c[..., None] * xs * (1.0 + d[..., None] * xs))
        )
        bvn = bvn + np.where(asr > -100.0, inner, 0.0).sum(axis=-1)
        bvn = -bvn / (2.0 * math.pi)

    if r > 0:
        return bvn + ndtr(-np.maximum(h, k))
    bvn = -bvn
    gap = np.where(h < 0, ndtr(k) - ndtr(h), ndtr(-h) - ndtr(-k))
    return bvn + np.where(k > h, gap, 0.0)


def bvn_cdf(x, y, r: float) -> np.ndarray:
    """P(X <= x, Y <= y) for a standard bivariate normal with correlation r"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = bvn_upper(-x, -y, r)
    return np.clip(out, 0.0, 1.0)


def bvn_cdf_general(points, mean, cov) -> np.ndarray:
    """
    Bivariate normal CDF for arbitrary mean and covariance

    Args:
        points: Array of shape (..., 2)
        mean: Length-2 mean vector
        cov: 2x2 covariance matrix

    Returns:
        CDF values with shape points.shape[:-1]
    """
    points = np.asarray(points, dtype=float)
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    sd = np.sqrt(np.diag(cov))
    r = cov[0, 1] / (sd[0] * sd[1])
    z = (points - mean) / sd
    return bvn_cdf(z[..., 0], z[..., 1], r)
