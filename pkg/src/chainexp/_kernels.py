"""Compiled hot loops for the trajectory simulator.

Both the compiled path and the pure-python reference path consume the same
pre-generated uniform streams and the same encoded spec tables, and both
route every draw through the njit helpers below, so the two engines are
bit-identical by construction.

Sampling rules (shared everywhere):

* next state: first y with u < row-cdf[y], falling back to the last state;
* reward kinds: 0 constant, 1 bernoulli (0 iff u <= 1-p), 2 uniform
  (lo + u (hi - lo)), 3 finite discrete (first value with u < cdf).

Scalar policy/trajectory state crosses kernel calls through the ``istate``
int64 array: [x, latch, prev_action, step_index, switch_count].  Actions
are 0-based inside the kernels.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# policy kinds for the static-policy kernel
MARKOV, REGENERATIVE, SWITCHBACK, SINGLE, COOP = 0, 1, 2, 3, 4

# stop reasons for the adaptive-policy kernel
RAN_TO_END, NEW_EDGE, POW2_CROSSED = 0, 1, 2

IX, ILATCH, IPREV, ISTEP, ISWITCH, IM, IOPEN = 0, 1, 2, 3, 4, 5, 6

# float scalar state of the adaptive regenerative design
FCYC_Y, FCYC_LEN, FP_HAT = 0, 1, 2
FC, FY, FETA, FYY, FYETA, FETAETA = 3, 5, 7, 9, 11, 13  # per-chain pairs
ETI2_STATE_LEN = 15


@njit(cache=True, nogil=True)
def draw_next(trans_cdf, a, x, u):
    S = trans_cdf.shape[2]
    for y in range(S):
        if u < trans_cdf[a, x, y]:
            return y
    return S - 1


@njit(cache=True, nogil=True)
def draw_reward(rew_kind, rew_a, rew_b, disc_off, disc_len, disc_val, disc_cdf, a, x, y, u):
    kind = rew_kind[a, x, y]
    if kind == 0:
        return rew_a[a, x, y]
    if kind == 1:
        return 0.0 if u <= 1.0 - rew_a[a, x, y] else 1.0
    if kind == 2:
        lo = rew_a[a, x, y]
        return lo + u * (rew_b[a, x, y] - lo)
    off = disc_off[a, x, y]
    ln = disc_len[a, x, y]
    for k in range(off, off + ln):
        if u < disc_cdf[k]:
            return disc_val[k]
    return disc_val[off + ln - 1]


@njit(cache=True, nogil=True)
def run_static(
    policy_kind,
    p1_arr,
    x_r,
    p_r,
    block_len,
    fixed_a,
    j_start,
    j_limit,
    stop_on_new_edge,
    u_pol,
    u_trans,
    u_rew,
    trans_cdf,
    rew_kind,
    rew_a,
    rew_b,
    disc_off,
    disc_len,
    disc_val,
    disc_cdf,
    gamma,
    phi,
    theta,
    psi,
    upsilon,
    istate,
):
    """Advance a fixed (non-adaptive) policy, accumulating counts.

    While ``stop_on_new_edge`` the kernel returns right after a step that
    records a previously unseen transition, so the caller can keep the
    stopping-time bookkeeping exactly in step with the per-step reference
    engine.  Returns (steps_taken, reason).
    """
    S = trans_cdf.shape[2]
    x = istate[IX]
    latch = istate[ILATCH]
    prev_a = istate[IPREV]
    step = istate[ISTEP]
    switches = istate[ISWITCH]
    taken = 0
    reason = RAN_TO_END
    for j in range(j_start, j_limit):
        if policy_kind == MARKOV:
            a = 0 if u_pol[j] <= p1_arr[x] else 1
        elif policy_kind == REGENERATIVE:
            if x == x_r or latch < 0:
                a = 0 if u_pol[j] <= p_r else 1
                latch = a
            else:
                a = latch
        elif policy_kind == SWITCHBACK:
            a = 0 if (step // block_len) % 2 == 0 else 1
        elif policy_kind == SINGLE:
            a = fixed_a
        else:  # COOP: chain 1 at the top state, chain 2 inside, alternate at 0
            if x == S - 1:
                a = 0
            elif x != 0:
                a = 1
            else:
                a = latch
                latch = 1 - a
        y = draw_next(trans_cdf, a, x, u_trans[j])
        r = draw_reward(rew_kind, rew_a, rew_b, disc_off, disc_len, disc_val, disc_cdf, a, x, y, u_rew[j])
        new_edge = phi[a, x, y] == 0.0
        gamma[a, x] += 1.0
        phi[a, x, y] += 1.0
        theta[a, x] += r
        psi[a, x, y] += r
        upsilon[a, x, y] += r * r
        if prev_a >= 0 and a != prev_a:
            switches += 1
        prev_a = a
        step += 1
        x = y
        taken += 1
        if stop_on_new_edge != 0 and new_edge:
            reason = NEW_EDGE
            break
    istate[IX] = x
    istate[ILATCH] = latch
    istate[IPREV] = prev_a
    istate[ISTEP] = step
    istate[ISWITCH] = switches
    return taken, reason


@njit(cache=True, nogil=True)
def run_eti2(
    x_r,
    j_start,
    j_limit,
    stop_on_new_edge,
    u_pol,
    u_trans,
    u_rew,
    trans_cdf,
    rew_kind,
    rew_a,
    rew_b,
    disc_off,
    disc_len,
    disc_val,
    disc_cdf,
    gamma,
    phi,
    theta,
    psi,
    upsilon,
    istate,
    fstate,
):
    """Advance the adaptive regenerative design, mirroring the reference
    state machine operation for operation (bit-identical trajectories).

    On every visit to the anchor the open cycle is closed into the
    per-chain running sums, the cycle estimates are refreshed once both
    chains have a completed cycle, and the next latch is drawn with the
    steered probability (exploration floor (1/2) m^-1/2); between visits
    the latch repeats.  Returns (steps_taken, reason).
    """
    x = istate[IX]
    latch = istate[ILATCH]
    prev_a = istate[IPREV]
    switches = istate[ISWITCH]
    taken = 0
    reason = RAN_TO_END
    for j in range(j_start, j_limit):
        if x == x_r or latch < 0:
            open_chain = istate[IOPEN]
            if open_chain >= 0:
                y_c = fstate[FCYC_Y]
                l_c = fstate[FCYC_LEN]
                fstate[FC + open_chain] += 1.0
                fstate[FY + open_chain] += y_c
                fstate[FETA + open_chain] += l_c
                fstate[FYY + open_chain] += y_c * y_c
                fstate[FYETA + open_chain] += y_c * l_c
                fstate[FETAETA + open_chain] += l_c * l_c
            istate[IM] += 1
            if fstate[FC] > 0.0 and fstate[FC + 1] > 0.0:
                a0 = fstate[FY] / fstate[FETA]
                a1 = fstate[FY + 1] / fstate[FETA + 1]
                e0 = fstate[FETA] / fstate[FC]
                e1 = fstate[FETA + 1] / fstate[FC + 1]
                ss0 = fstate[FYY] - 2.0 * a0 * fstate[FYETA] + a0 * a0 * fstate[FETAETA]
                ss1 = fstate[FYY + 1] - 2.0 * a1 * fstate[FYETA + 1] + a1 * a1 * fstate[FETAETA + 1]
                sb0 = np.sqrt(max(ss0, 0.0) / fstate[FETA])
                sb1 = np.sqrt(max(ss1, 0.0) / fstate[FETA + 1])
                if sb0 > 0.0 and sb1 > 0.0:
                    p_text = e1 * sb0 / (e1 * sb0 + e0 * sb1)
                    d = 1.0 / np.sqrt(float(istate[IM]))
                    fstate[FP_HAT] = (1.0 - d) * p_text + 0.5 * d
                else:
                    fstate[FP_HAT] = 0.5
            else:
                fstate[FP_HAT] = 0.5
            a = 0 if u_pol[j] <= fstate[FP_HAT] else 1
            latch = a
            istate[IOPEN] = a
            fstate[FCYC_Y] = 0.0
            fstate[FCYC_LEN] = 0.0
        else:
            a = latch
        y = draw_next(trans_cdf, a, x, u_trans[j])
        r = draw_reward(rew_kind, rew_a, rew_b, disc_off, disc_len, disc_val, disc_cdf, a, x, y, u_rew[j])
        new_edge = phi[a, x, y] == 0.0
        gamma[a, x] += 1.0
        phi[a, x, y] += 1.0
        theta[a, x] += r
        psi[a, x, y] += r
        upsilon[a, x, y] += r * r
        fstate[FCYC_Y] += r
        fstate[FCYC_LEN] += 1.0
        if prev_a >= 0 and a != prev_a:
            switches += 1
        prev_a = a
        x = y
        taken += 1
        if stop_on_new_edge != 0 and new_edge:
            reason = NEW_EDGE
            break
    istate[IX] = x
    istate[ILATCH] = latch
    istate[IPREV] = prev_a
    istate[ISWITCH] = switches
    istate[ISTEP] += taken
    return taken, reason


@njit(cache=True, nogil=True)
def eti_decision_p1(kprop1, visits, j_reached, have_kappa, beta):
    """Decision probability for the adaptive per-state design.

    Pre-stopping-time, without a solved design, on a first state visit, or
    at a zero-mass state the fallback is 1/2; otherwise the solved
    proportion with the forced-exploration floor (1/2) visits^-beta.
    """
    if j_reached == 0 or have_kappa == 0:
        return 0.5
    if visits <= 0 or kprop1 < 0.0:
        return 0.5
    if beta == 0.5:
        d = 1.0 / np.sqrt(float(visits))
    else:
        d = float(visits) ** (-beta)
    return (1.0 - d) * kprop1 + 0.5 * d


@njit(cache=True, nogil=True)
def run_eti_segment(
    j_start,
    j_limit,
    u_pol,
    u_trans,
    u_rew,
    trans_cdf,
    rew_kind,
    rew_a,
    rew_b,
    disc_off,
    disc_len,
    disc_val,
    disc_cdf,
    gamma,
    phi,
    theta,
    psi,
    upsilon,
    visit_counts,
    next_pow2,
    kprop1,
    have_kappa,
    j_reached,
    beta,
    istate,
):
    """Advance the adaptive per-state design until a breakpoint.

    Stops after the step that records a previously unseen transition while
    the stopping time is pending (the caller re-runs the irreducibility
    check), or after the step that pushes a state's visit count across its
    next power-of-two threshold once the design is live (the caller
    re-solves), or at j_limit.  Returns (steps_taken, reason).
    """
    x = istate[IX]
    prev_a = istate[IPREV]
    switches = istate[ISWITCH]
    taken = 0
    reason = RAN_TO_END
    for j in range(j_start, j_limit):
        p1 = eti_decision_p1(kprop1[x], visit_counts[x], j_reached, have_kappa, beta)
        a = 0 if u_pol[j] <= p1 else 1
        y = draw_next(trans_cdf, a, x, u_trans[j])
        r = draw_reward(rew_kind, rew_a, rew_b, disc_off, disc_len, disc_val, disc_cdf, a, x, y, u_rew[j])
        new_edge = phi[a, x, y] == 0.0
        gamma[a, x] += 1.0
        phi[a, x, y] += 1.0
        theta[a, x] += r
        psi[a, x, y] += r
        upsilon[a, x, y] += r * r
        visit_counts[x] += 1
        if prev_a >= 0 and a != prev_a:
            switches += 1
        prev_a = a
        taken += 1
        stop_here = False
        if j_reached == 0:
            if new_edge:
                reason = NEW_EDGE
                stop_here = True
        elif visit_counts[x] >= next_pow2[x]:
            reason = POW2_CROSSED
            stop_here = True
        x = y
        if stop_here:
            break
    istate[IX] = x
    istate[IPREV] = prev_a
    istate[ISWITCH] = switches
    istate[ISTEP] += taken
    return taken, reason
