# The module implements the Rayleigh-fading link model: average packet error rate over an
# exponentially distributed SNR, log-distance path loss calibrated against the PRR expected
# at the edge of the transmission range, and the link quality matrix Q.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

import math
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from app.core.exceptions import DomainError
from app.core.logger import console
from app.models.network import INTERFERENCE_PRR, ChannelParams, LinkQualityMatrix, Network


def average_per(mean_snr: float, cp: ChannelParams) -> float:
    """
    Rayleigh-averaged packet error rate for a linear mean SNR, using the three-parameter
    approximation PER(g) = 1 below gamma_pn and a_n * exp(-g_n * g) above it.
    """
    if mean_snr <= 0.0:
        return 1.0
    per = (
        -math.expm1(-cp.gamma_pn / mean_snr)
        + cp.a_n / (1.0 + cp.g_n * mean_snr) * math.exp(-cp.gamma_pn * (cp.g_n + 1.0 / mean_snr))
    )
    return min(1.0, max(0.0, per))


@lru_cache(maxsize=64)
def _calibrated_reference(a_n: float, g_n: float, gamma_pn: float, alpha: float,
                          r_t: float, target_prr: float, calibration_db: float) -> float:
    cp = ChannelParams(a_n=a_n, g_n=g_n, gamma_pn=gamma_pn, alpha=alpha, r_t=r_t,
                       r_i=max(r_t, 1.0), calibration_prr=target_prr)
    # Mean SNR (linear) at which the average PRR equals the target; PER is decreasing in SNR.
    snr_at_edge = brentq(lambda g: 1.0 - average_per(g, cp) - target_prr, 1e-9, 1e12, xtol=1e-14, rtol=1e-15, maxiter=500)
    edge_db = 10.0 * math.log10(snr_at_edge)
    reference = r_t / 10 ** ((calibration_db - edge_db) / (10.0 * alpha))
    console.debug(f"Calibrated path-loss reference distance {reference:.6f} (edge SNR {edge_db:.3f} dB).")
    return reference


def reference_distance(cp: ChannelParams) -> float:
    """Path-loss reference distance that makes link_prr(r_t) == calibration_prr at calibration_db."""
    return _calibrated_reference(cp.a_n, cp.g_n, cp.gamma_pn, cp.alpha, cp.r_t, cp.calibration_prr, cp.calibration_db)


def mean_snr_db(distance: float, cp: ChannelParams) -> float:
    return cp.gamma0_db - 10.0 * cp.alpha * math.log10(distance / reference_distance(cp))


def link_prr(distance: float, cp: ChannelParams) -> float:
    """
    Average packet reception rate 1 - PER(mean SNR(d)) inside the transmission range,
    exactly INTERFERENCE_PRR inside the interference range and 0 beyond it.
    """
    if not distance > 0.0:
        raise DomainError(f"Distance must be positive, got {distance}.")
    if distance > cp.r_i:
        return 0.0
    if distance > cp.r_t:
        return INTERFERENCE_PRR
    snr = 10.0 ** (mean_snr_db(distance, cp) / 10.0)
    return 1.0 - average_per(snr, cp)


def build_quality_matrix(net: Network, cp: ChannelParams) -> LinkQualityMatrix:
    """q_tp = link_prr(dist(t, p)) for every transceiver t and node p != t."""
    transmitters = net.transceiver_ids
    receivers = net.node_ids
    coords = np.array([net.positions[p] for p in receivers], dtype=float)
    rows = np.array([receivers.index(t) for t in transmitters], dtype=int)
    distances = np.hypot(
        coords[rows, 0][:, None] - coords[None, :, 0],
        coords[rows, 1][:, None] - coords[None, :, 1],
    )
    values = np.zeros(distances.shape)
    for (i, j), d in np.ndenumerate(distances):
        if transmitters[i] != receivers[j] and d > 0.0:
            values[i, j] = link_prr(float(d), cp)
        elif transmitters[i] != receivers[j]:
            # Coincident nodes hear each other perfectly.
            values[i, j] = 1.0
    return LinkQualityMatrix(transmitters=transmitters, receivers=receivers, values=values)


if __name__ == "__main__":
    from app.config import settings

    params = settings.channel_params
    console.rule("Link PRR by distance")
    console.display_data_as_table(
        {f"d={d}": f"{link_prr(d, params):.6f}" for d in (1, 5, 10, 15, 20, 25, 30, 45, 61)},
        f"gamma0 = {params.gamma0_db} dB, d_ref = {reference_distance(params):.4f}",
    )
