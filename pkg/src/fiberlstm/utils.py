"""Small unit-conversion and numeric helpers shared across the package."""

import numpy as np


def db_to_lin(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watt(p_dbm):
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


def watt_to_dbm(p_w):
    return 10.0 * np.log10(p_w / 1e-3)


def alpha_db_km_to_per_m(alpha_db_per_km):
    """Attenuation coefficient in 1/m from dB/km."""
    return alpha_db_per_km * np.log(10.0) / 10.0 / 1e3


def next_pow2(n):
    """Smallest power of two >= n (n >= 1)."""
    p = 1
    while p < n:
        p *= 2
    return p
