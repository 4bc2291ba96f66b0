"""Pure-numpy implementations of the hot kernels.

The compiled extension (fluctlab._ckernels) implements the same three entry
points with identical semantics; fluctlab._backend picks whichever is
available.  Monte Carlo routines must stay bit-identical across backends:
draw k of trial t is uniform(stream_key(seed, stream, t), k) regardless of
how trials are batched, and atom selection is right-continuous CDF inversion
on identical cdf arrays.
"""

from __future__ import annotations

import numpy as np

from ._rng import stream_keys, uniform_vec

BACKEND_NAME = "python"


def dp_killed(init_offset, init_vec, jump_lo, jump_probs, thresholds, caps,
              snapshots=(), record_sites=False):
    """Evolve a killed lattice walk layer by layer.

    init_vec is the alive mass over sites init_offset + i.  At step n
    (1-based) the layer is convolved with the jump kernel (jump_probs[i] is
    the probability of a jump of jump_lo + i), mass at sites <= thresholds
    [n-1] is absorbed, and mass at sites > caps[n-1] is truncated into a loss
    ledger (caps may be None for no truncation).

    Returns a dict of per-step arrays: survival (N+1), absorbed_mass (N),
    absorbed_depth (N, mass-weighted depth below the threshold),
    alive_sum_y (N+1, unnormalized first moment of the alive layer),
    loss (N+1, cumulative truncated mass), final (offset, vec), snapshots
    {n: (offset, vec)}, and optionally absorbed_sites (N, D) with column d
    holding the mass absorbed at site thresholds[n-1] - d (worst depth
    -jump_lo, reached from a start on the threshold).
    """
    n_steps = len(thresholds)
    jump_probs = np.asarray(jump_probs, dtype=np.float64)
    depth_max = 1 - jump_lo if record_sites else 0
    if record_sites and jump_lo >= 0:
        raise ValueError("site recording needs a downward jump")

    vec = np.asarray(init_vec, dtype=np.float64).copy()
    off = int(init_offset)

    survival = np.zeros(n_steps + 1)
    absorbed_mass = np.zeros(n_steps)
    absorbed_depth = np.zeros(n_steps)
    alive_sum_y = np.zeros(n_steps + 1)
    loss = np.zeros(n_steps + 1)
    absorbed_sites = np.zeros((n_steps, depth_max)) if record_sites else None
    snaps = {}
    want_snaps = set(int(s) for s in snapshots)

    survival[0] = vec.sum()
    alive_sum_y[0] = np.arange(off, off + len(vec)) @ vec
    if 0 in want_snaps:
        snaps[0] = (off, vec.copy())

    lost = 0.0
    for n in range(1, n_steps + 1):
        vec = np.convolve(vec, jump_probs)
        off = off + jump_lo
        thr = int(thresholds[n - 1])

        # absorb everything at or below the threshold
        cut = thr + 1 - off
        if cut > 0:
            cut = min(cut, len(vec))
            dead = vec[:cut]
            dm = dead.sum()
            absorbed_mass[n - 1] = dm
            if dm > 0.0:
                sites = np.arange(off, off + cut)
                absorbed_depth[n - 1] = (thr - sites).astype(np.float64) @ dead
                if record_sites:
                    for i in range(cut):
                        d = thr - (off + i)
                        if d < depth_max:
                            absorbed_sites[n - 1, d] += dead[i]
            vec = vec[cut:]
            off = off + cut

        # truncate above the cap, tracking the lost mass
        if caps is not None:
            cap = int(caps[n - 1])
            keep = cap + 1 - off
            if keep < len(vec):
                keep = max(keep, 0)
                lost += vec[keep:].sum()
                vec = vec[:keep]
        loss[n] = lost

        if len(vec) == 0:
            vec = np.zeros(1)
        survival[n] = vec.sum()
        alive_sum_y[n] = np.arange(off, off + len(vec)) @ vec
        if n in want_snaps:
            snaps[n] = (off, vec.copy())

    out = {
        "survival": survival,
        "absorbed_mass": absorbed_mass,
        "absorbed_depth": absorbed_depth,
        "alive_sum_y": alive_sum_y,
        "loss": loss,
        "final": (off, vec),
        "snapshots": snaps,
    }
    if record_sites:
        out["absorbed_sites"] = absorbed_sites
    return out


def mc_walk(seed, stream, trial_lo, trial_hi, step_values, step_cdfs,
            thresholds, start=0.0):
    """Simulate first passage of a walk with per-step jump laws below a
    moving boundary.

    step_values/step_cdfs are (n_steps, w) arrays (rows padded with the last
    atom); thresholds[n-1] kills positions <= it after step n.  Returns
    (exit_step, endpoint): exit_step[t] = n_steps + 1 for survivors, else the
    absorption step; endpoint is the walk position at exit or at the horizon.
    """
    n_steps = len(thresholds)
    trials = np.arange(trial_lo, trial_hi, dtype=np.uint64)
    keys = stream_keys(seed, stream, trials)
    n_tr = len(trials)

    pos = np.full(n_tr, float(start))
    exit_step = np.full(n_tr, n_steps + 1, dtype=np.int64)
    endpoint = np.zeros(n_tr)
    alive = np.arange(n_tr)

    for n in range(1, n_steps + 1):
        if len(alive) == 0:
            break
        u = uniform_vec(keys[alive], n - 1)
        idx = np.searchsorted(step_cdfs[n - 1], u, side="right")
        idx = np.minimum(idx, len(step_values[n - 1]) - 1)
        pos[alive] += step_values[n - 1][idx]
        died = pos[alive] <= thresholds[n - 1]
        if died.any():
            gone = alive[died]
            exit_step[gone] = n
            endpoint[gone] = pos[gone]
            alive = alive[~died]
    endpoint[alive] = pos[alive]
    return exit_step, endpoint


def mc_chain(seed, stream, trial_lo, trial_hi, values, cdfs, widths, mode,
             start, n_steps, kill):
    """Simulate a Markov chain with a state-dependent jump law.

    values/cdfs are (n_laws, w) padded rows; mode 0 uses law 0 everywhere,
    mode 1 switches on parity of floor(position) (even -> law 0, odd ->
    law 1).  kill True absorbs at positions <= 0 (checks start at step 1).
    Returns (exit_step, endpoint) as in mc_walk.
    """
    trials = np.arange(trial_lo, trial_hi, dtype=np.uint64)
    keys = stream_keys(seed, stream, trials)
    n_tr = len(trials)

    pos = np.full(n_tr, float(start))
    exit_step = np.full(n_tr, n_steps + 1, dtype=np.int64)
    endpoint = np.zeros(n_tr)
    alive = np.arange(n_tr)

    for n in range(1, n_steps + 1):
        if len(alive) == 0:
            break
        u = uniform_vec(keys[alive], n - 1)
        p = pos[alive]
        if mode == 0:
            law = np.zeros(len(p), dtype=np.int64)
        else:
            law = (np.floor(p).astype(np.int64) & 1).astype(np.int64)
        jump = np.empty(len(p))
        for li in (0, 1) if mode == 1 else (0,):
            sel = law == li
            if sel.any():
                w = widths[li]
                idx = np.searchsorted(cdfs[li][:w], u[sel], side="right")
                idx = np.minimum(idx, w - 1)
                jump[sel] = values[li][idx]
        pos[alive] = p + jump
        if kill:
            died = pos[alive] <= 0.0
            if died.any():
                gone = alive[died]
                exit_step[gone] = n
                endpoint[gone] = pos[gone]
                alive = alive[~died]
    endpoint[alive] = pos[alive]
    return exit_step, endpoint
