"""Scripted shared-memory executor used by the agreement tests.

Drives smmaa generators by hand, one effect per step, without the event
kernel, so expected values and contraction measurements come from an
independent execution route.
"""

import numpy as np

from asgd import sim
from asgd.maa import smmaa_subroutine


class FakeCtx:
    def __init__(self, pid, n, witness):
        self.pid = pid
        self.cluster_id = 0
        self.cluster_members = tuple(range(n))
        self.witness = witness


def run_scripted(inputs, rounds, rule, order):
    """Drive smmaa generators by an explicit pid order, one effect per step.

    `inputs` holds one scalar or vector per process. `order` may be a list of
    pids or a random.Random used to pick among the still-running processes.
    Returns (results, cells, witness recorder).
    """
    n = len(inputs)
    witness = sim.WitnessRecorder()
    cells = {}
    gens, feeds, results = [], [None] * n, {}
    for pid, x in enumerate(inputs):
        v = np.atleast_1d(np.asarray(x, dtype=np.float64))
        node = witness.input(v)
        ctx = FakeCtx(pid, n, witness)
        gens.append(smmaa_subroutine(ctx, 1, 1, rounds, v, node, rule, mark=False))
    live = set(range(n))
    scripted = list(order) if isinstance(order, list) else None
    step = 0
    while live:
        if scripted is not None:
            pid = scripted[step]
        else:
            pid = order.choice(sorted(live))
        step += 1
        try:
            effect = gens[pid].send(feeds[pid])
        except StopIteration as stop:
            results[pid] = stop.value
            live.discard(pid)
            continue
        feeds[pid] = None
        if isinstance(effect, sim.Write):
            key = (effect.round_index, pid)
            assert key not in cells, "double write"
            cells[key] = effect.payload
        elif isinstance(effect, sim.Read):
            feeds[pid] = cells.get((effect.round_index, effect.owner))
    return results, cells, witness
