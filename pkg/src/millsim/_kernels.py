"""Inner loop of the spiking processor, in one place so the compiled and
pure-Python executors cannot drift apart.

State layout: charges per neuron, a ring buffer of pending deliveries
(summed weights plus a touched flag per target), CSR adjacency for the
synapses, and per-output fire counters. `run_cycles` advances the clock;
the compiled variant is used when numba is importable and the
MILLSIM_PURE_PYTHON environment flag is unset.
"""
from __future__ import annotations

import os

import numpy as np

CHARGE_FLOOR = -127


def run_cycles_py(ring_w, ring_t, charge, leak, threshold,
                  indptr, syn_tgt, syn_w, syn_d, out_slot, counts,
                  start_cycle, n_cycles, count_from, stim_idx, stim_mag,
                  fires, n_fires):
    """One processor step per iteration: deliver, leak, fire, enqueue.

    Neurons fire at most once per cycle, only on cycles where they
    received a delivery, when their post-leak charge meets the threshold.
    Output fires are tallied from in-call cycle offset `count_from` on.
    Returns the updated length of the `fires` log.
    """
    ring_size = ring_w.shape[0]
    n_neurons = charge.shape[0]
    record = fires.shape[0] > 0
    for k in range(n_cycles):
        c = start_cycle + k
        slot = c % ring_size
        if stim_idx >= 0:
            ring_w[slot, stim_idx] += stim_mag
            ring_t[slot, stim_idx] = 1
        touched_any = False
        for i in range(n_neurons):
            if ring_t[slot, i]:
                touched_any = True
                ch = charge[i] + ring_w[slot, i]
                if ch < CHARGE_FLOOR:
                    ch = CHARGE_FLOOR
                charge[i] = ch
        for i in range(n_neurons):
            tc = leak[i]
            if tc > 0:
                ch = charge[i]
                if ch > 0:
                    charge[i] = ch - (ch + tc - 1) // tc
                elif ch < 0:
                    charge[i] = ch + (-ch + tc - 1) // tc
        if touched_any:
            counting = k >= count_from
            for i in range(n_neurons):
                if ring_t[slot, i] and charge[i] >= threshold[i]:
                    charge[i] = 0
                    if record:
                        fires[n_fires, 0] = c
                        fires[n_fires, 1] = i
                        n_fires += 1
                    if counting and out_slot[i] >= 0:
                        counts[out_slot[i]] += 1
                    for e in range(indptr[i], indptr[i + 1]):
                        dslot = (c + syn_d[e] + 1) % ring_size
                        ring_w[dslot, syn_tgt[e]] += syn_w[e]
                        ring_t[dslot, syn_tgt[e]] = 1
            for i in range(n_neurons):
                ring_w[slot, i] = 0
                ring_t[slot, i] = 0
    return n_fires


def _build_compiled():
    if os.environ.get("MILLSIM_PURE_PYTHON"):
        return None
    try:
        from numba import njit
    except ImportError:
        return None
    return njit(cache=True)(run_cycles_py)


run_cycles_jit = _build_compiled()
run_cycles = run_cycles_jit if run_cycles_jit is not None else run_cycles_py


def warmup() -> None:
    """Force JIT compilation now (cheap no-op state) so forked evaluation
    workers inherit the compiled kernel."""
    if run_cycles_jit is None:
        return
    ring_w = np.zeros((4, 1), dtype=np.int32)
    ring_t = np.zeros((4, 1), dtype=np.uint8)
    charge = np.zeros(1, dtype=np.int32)
    zeros = np.zeros(1, dtype=np.int32)
    indptr = np.zeros(2, dtype=np.int32)
    empty = np.zeros(0, dtype=np.int32)
    out_slot = np.full(1, -1, dtype=np.int32)
    counts = np.zeros(1, dtype=np.int64)
    fires = np.zeros((0, 2), dtype=np.int64)
    run_cycles_jit(ring_w, ring_t, charge, zeros, zeros, indptr, empty,
                   empty, empty, out_slot, counts, 0, 1, 0, -1, 0,
                   fires, 0)
