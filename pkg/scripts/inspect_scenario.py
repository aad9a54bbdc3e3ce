# The module is for inspecting scenario files: nodes, routing tree, repetition vector and
# link quality statistics, followed by a validated SchedEx frame preview. It can also
# generate a scenario and write it to disk first.
# Author: Shiboli
# Date: 2025-06-09
# Version: 0.2.0

import argparse
import sys
from typing import List, Optional

import numpy as np

from app.config import settings
from app.core.exceptions import SchedulingError
from app.core.constraints import validate_schedule
from app.core.incrementer import exact_reliability
from app.core.logger import console
from app.core.oracle import analytic_bound, simulate_frame, simulate_replay
from app.core.routing import etx_route, hop_depths
from app.core.schedex import repetition_vector, schedex_schedule, total_attempts
from app.core.topology import generate_topology, load_scenario, save_scenario
from app.models.network import INTERFERENCE_PRR, BufferState, SchedulerKind


def inspect_scenario(path: str, rho: float, limit: int, trials: int = 0) -> None:
    """
    Loads a scenario and prints it.

    Args:
        path (str): The scenario file.
        rho (float): Reliability bound used for the repetition vector.
        limit (int): The maximum number of nodes to list.
        trials (int): Monte-Carlo trials for the frame check; 0 skips it.
    """
    console.rule(f"Inspecting scenario '{path}'")
    net, Q, cp, tp = load_scenario(path)
    console.success(f"Loaded {len(net.transceiver_ids)} transceivers and sinks {sorted(net.sinks)}.")
    console.display_data_as_table(cp.model_dump(), "Channel Parameters")
    if tp is not None:
        console.display_data_as_table(tp.model_dump(), "Topology Parameters")

    links = Q.values[Q.values > INTERFERENCE_PRR]
    interference = int(np.count_nonzero(Q.values == INTERFERENCE_PRR))
    console.display_data_as_table(
        {
            "routable links": int(links.size),
            "interference-only entries": interference,
            "PRR min / median / max": f"{links.min():.4f} / {np.median(links):.4f} / {links.max():.4f}" if links.size else "-",
        },
        "Link Qualities",
    )

    routing = etx_route(net, Q)
    depth = hop_depths(routing)
    rv = repetition_vector(Q, routing, rho)
    rows = {}
    for t in net.transceiver_ids[:limit]:
        p = routing.parent[t]
        rows[f"node {t}"] = (
            f"parent={p} q={Q.prr(t, p):.4f} hops={depth[t]} k={routing.packet_load[t]} tau={rv.tau[t]}"
        )
    console.display_data_as_table(rows, f"Routing tree and repetition vector (rho={rho})")
    if len(net.transceiver_ids) > limit:
        console.info(f"... {len(net.transceiver_ids) - limit} more transceivers not shown.")
    console.info(
        f"Max hop depth {max(depth.values())}, max tau {rv.max_tau}, "
        f"SchedEx transmissions {total_attempts(rv, routing.packet_load)}."
    )
    frame = schedex_schedule(SchedulerKind.NODE_BASED, net, Q, routing, rho, rv=rv)
    console.display_frame(frame, f"SchedEx node-based frame, {len(frame.slots)} slots", limit=limit)
    console.display_validation(validate_schedule(frame, routing, Q), "Frame validation")
    if trials:
        b0 = BufferState.filled(net.transceiver_ids, net.transceiver_ids)
        seed = tp.seed if tp is not None else 0
        attributed = simulate_frame(frame, routing, Q, b0, trials, seed=seed)
        replayed = simulate_replay(frame, routing, Q, b0, trials, seed=seed)
        console.display_data_as_table(
            {
                "analytic bound": f"{analytic_bound(rv, Q, routing, routing.packet_load):.6f}",
                "exact reliability": f"{exact_reliability(frame, Q):.6f}",
                "per packet hop": f"{attributed.rate:.6f} +/- {attributed.half_width:.6f}",
                "buffer replay": f"{replayed.rate:.6f} +/- {replayed.half_width:.6f}",
            },
            f"Reliability of the frame ({trials} trials)",
        )
    console.rule("Inspection Complete", style="green")


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Inspect (or generate) a WSN scenario file.")
    parser.add_argument("path", help="Scenario file to read (or to write with --generate).")
    parser.add_argument("--generate", type=int, metavar="SIZE", default=None, help="Generate a topology of SIZE transceivers first.")
    parser.add_argument("--seed", type=int, default=1, help="Topology seed used with --generate.")
    parser.add_argument("--snr-db", type=float, default=None, help="Reference SNR used with --generate.")
    parser.add_argument("--rho", type=float, default=0.9, help="Reliability bound for the repetition vector.")
    parser.add_argument("-l", "--limit", type=int, default=20, help="The maximum number of nodes to display.")
    parser.add_argument("--trials", type=int, default=0, help="Monte-Carlo trials for the frame check (0 skips it).")
    args = parser.parse_args(argv)

    try:
        if args.generate is not None:
            cp = settings.channel_params_for(settings.CHANNEL_SNR_DB if args.snr_db is None else args.snr_db)
            tp = settings.topology_params(args.generate, args.seed)
            net, Q = generate_topology(tp, cp)
            save_scenario(args.path, net, Q, cp, tp)
            console.success(f"Scenario written to {args.path}.")
        inspect_scenario(args.path, args.rho, args.limit, args.trials)
    except (SchedulingError, ValueError) as e:
        console.display_error_panel(args.path, str(e))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
