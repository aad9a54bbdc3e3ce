# The module verifies reliability claims independently of the schedulers: the analytic
# lower bound of a repetition vector and two Monte-Carlo replays of a frame under independent
# per-attempt Bernoulli losses, one per attributed packet hop and one on buffer counts.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0

import math
from typing import List, Mapping, Optional

import numpy as np
from scipy.stats import beta

from app.config import settings
from app.core.exceptions import DomainError
from app.core.incrementer import AttributedFrame, attribute_frame
from app.core.logger import console
from app.models.network import (
    BufferState,
    LinkQualityMatrix,
    NodeId,
    RepetitionVector,
    RoutingTable,
    ScheduleFrame,
    SimulationResult,
)

# Upper bound on the number of Bernoulli draws held in memory per batch.
MAX_DRAWS_PER_BATCH = 2_000_000


def analytic_bound(
    rv: RepetitionVector,
    Q: LinkQualityMatrix,
    R: RoutingTable,
    k: Mapping[NodeId, int],
) -> float:
    """prod_t (1 - (1 - q_{t R_t})^tau_t)^k_t, accumulated in log space."""
    total = 0.0
    for t, load in k.items():
        if load == 0:
            continue
        miss = (1.0 - Q.prr(t, R.parent_of(t))) ** rv.tau[t]
        if miss >= 1.0:
            return 0.0
        total += load * math.log1p(-miss)
    return math.exp(total)


def clopper_pearson(successes: int, trials: int, confidence: float):
    alpha = 1.0 - confidence
    low = 0.0 if successes == 0 else float(beta.ppf(alpha / 2.0, successes, trials - successes + 1))
    high = 1.0 if successes == trials else float(beta.ppf(1.0 - alpha / 2.0, successes + 1, trials - successes))
    return low, high


def _batch_sizes(trials: int, rows: int) -> List[int]:
    return [rows] * (trials // rows) + ([trials % rows] if trials % rows else [])


def _result(successes: int, trials: int, confidence: float) -> SimulationResult:
    low, high = clopper_pearson(successes, trials, confidence)
    return SimulationResult(successes=successes, trials=trials, confidence=confidence, ci_low=low, ci_high=high)


def simulate_frame(
    F: ScheduleFrame,
    R: RoutingTable,
    Q: LinkQualityMatrix,
    b0: BufferState,
    trials: int,
    seed: int,
    confidence: Optional[float] = None,
    batch_size: Optional[int] = None,
) -> SimulationResult:
    """
    Runs `trials` independent executions of F in which every attempt succeeds with the
    q of its link. A packet hop succeeds if any attempt attributed to it does, so a
    packet advances on its first success. A trial succeeds when every packet reaches a
    sink. Batches draw from independent child streams of `seed` and are summed.
    """
    if trials <= 0:
        raise DomainError(f"Number of trials must be positive, got {trials}.")
    confidence = settings.MC_CONFIDENCE if confidence is None else confidence
    batch_size = settings.MC_BATCH_SIZE if batch_size is None else batch_size

    frame = AttributedFrame.from_frame(attribute_frame(F, R, b0), Q, strict=False)
    keys = list(frame.attempts)
    quality: List[float] = []
    starts: List[int] = []
    for key in keys:
        starts.append(len(quality))
        quality.extend([frame.quality[key]] * frame.attempts[key])
    q = np.asarray(quality, dtype=float)
    rows = max(1, min(batch_size, MAX_DRAWS_PER_BATCH // max(1, q.size)))

    sizes = _batch_sizes(trials, rows)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    successes = 0
    for size, stream in zip(sizes, streams):
        if not keys:
            successes += size
            continue
        rng = np.random.Generator(np.random.PCG64(stream))
        delivered = rng.random((size, q.size)) < q
        hop_ok = np.logical_or.reduceat(delivered, starts, axis=1)
        successes += int(np.count_nonzero(hop_ok.all(axis=1)))

    console.debug(f"Monte-Carlo: {successes}/{trials} successful trials over {len(keys)} packet hops.")
    return _result(successes, trials, confidence)


def simulate_replay(
    F: ScheduleFrame,
    R: RoutingTable,
    Q: LinkQualityMatrix,
    b0: BufferState,
    trials: int,
    seed: int,
    confidence: Optional[float] = None,
    batch_size: Optional[int] = None,
) -> SimulationResult:
    """
    Replays F slot by slot on per-trial buffer counts, ignoring attribution: every
    scheduled attempt sends the head-of-line packet of its transmitter, if there is one,
    and a success moves that packet one hop. Packets received in a slot are forwarded
    from the next slot on. A trial succeeds when no transceiver holds a packet at the end.

    Any packet-to-attempt assignment loses against sending whatever is queued, so the
    rate is at least the exact reliability of F up to sampling error.
    """
    if trials <= 0:
        raise DomainError(f"Number of trials must be positive, got {trials}.")
    confidence = settings.MC_CONFIDENCE if confidence is None else confidence
    batch_size = settings.MC_BATCH_SIZE if batch_size is None else batch_size

    nodes = sorted(set(b0.counts) | set(R.parent) | {tx.receiver for slot in F.slots for tx in slot})
    column = {node: i for i, node in enumerate(nodes)}
    holders = [column[t] for t in R.parent]
    initial = np.zeros(len(nodes), dtype=np.int64)
    for t, b in b0.counts.items():
        initial[column[t]] = b
    links = [
        [(column[tx.transmitter], column[tx.receiver], Q.prr(tx.transmitter, tx.receiver)) for tx in slot]
        for slot in F.slots
    ]
    attempts = max(1, F.transmissions)
    rows = max(1, min(batch_size, MAX_DRAWS_PER_BATCH // attempts))

    sizes = _batch_sizes(trials, rows)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    successes = 0
    for size, stream in zip(sizes, streams):
        rng = np.random.Generator(np.random.PCG64(stream))
        counts = np.tile(initial, (size, 1))
        for slot in links:
            moves = [(t, r, (counts[:, t] > 0) & (rng.random(size) < q)) for t, r, q in slot]
            for t, r, moved in moves:
                counts[:, t] -= moved
                counts[:, r] += moved
        successes += int(np.count_nonzero((counts[:, holders] == 0).all(axis=1)))

    console.debug(f"Buffer replay: {successes}/{trials} successful trials over {len(F.slots)} slots.")
    return _result(successes, trials, confidence)
