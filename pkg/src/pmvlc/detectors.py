"""Block detectors: coherent ML and three channel-blind soft-decision forms.

All soft-decision (SD) detectors work on the sign-flipped observation
yhat = -Y, so a codeword's decision metric is the negated sum of received
values over its support; for a multiweight entry that equals the sum of the
per-component metrics because components never overlap.

* ml_detect          exhaustive argmin of ||Y - H a_m P_q||_F^2 (needs CSI)
* bf_sd_detect       exhaustive support-metric search over the codebook
* bb_detect          greedy level-by-level column selection (weight 1 only)
* iterative_sd_detect assignment-driven search: best assignment first, then
                      next-best assignments until one lands in the codebook

Intensity and weight side-decisions are factored out as estimate_intensity
and classify_weight; multiweight detection assumes the weight class is known
(genie mode) unless configured otherwise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .assignment import murty_iter
from .channel import ChannelMatrix, default_calibration_gain, fixture_h02
from .codebook import Codebook, entry_to_bits
from .txcodec import PamConfig, pam_intensity


class NoDecisionError(RuntimeError):
    """The detector exhausted its search without producing a codeword."""


@dataclass(frozen=True)
class Calibration:
    """Receiver-side gain knowledge for intensity and weight decisions.

    gain: scalar expected per-link gain (blind mode); defaults to the mean of
    the h02 fixture when left unset.  channel: full gain matrix for exact
    support inversion and calibrated weight scoring.
    """

    gain: float | None = None
    channel: np.ndarray | None = None


@dataclass
class DetectionResult:
    q: int | None
    m: int
    w: int
    bits: tuple[int, ...] | None
    cost: float
    iterations: int = 0
    op_count: int = 0


def _as_H(channel) -> np.ndarray:
    return channel.H if isinstance(channel, ChannelMatrix) else np.asarray(channel, dtype=np.float64)


def _decision(q: int, m: int, codebook: Codebook, pam: PamConfig, cost: float,
              iterations: int = 0, op_count: int = 0) -> DetectionResult:
    entry = codebook.entries[q - 1]
    index = (q - 1) * pam.M + (m - 1)
    bits = None
    if index < codebook.signaling_count(pam.M):
        bits = entry_to_bits(q, m, codebook, pam.M)
    return DetectionResult(q=q, m=m, w=entry.weight, bits=bits, cost=cost,
                           iterations=iterations, op_count=op_count)


def estimate_intensity(Y: np.ndarray, support: np.ndarray, pam: PamConfig,
                       calibration: Calibration | None = None) -> int:
    """Level index from the mean received value over a candidate support.

    The estimate sum(Y[support]) / (w L g) inverts the expected support sum;
    g is the calibration scalar in blind mode, or the exact per-support mean
    of H P when a channel matrix is supplied.  Ties between neighboring
    levels resolve to the lower index; M=1 returns 1 without looking at Y.
    """
    if pam.M == 1:
        return 1
    support = np.asarray(support).astype(bool)
    L = support.shape[0]
    w = int(support.sum()) // L
    cal = calibration or Calibration()
    if cal.channel is not None:
        g = float((_as_H(cal.channel) @ support.astype(np.float64))[support].sum()) / (w * L)
    else:
        # every support cell accumulates w link gains, so the scalar
        # link-gain calibration scales with the weight
        g = w * (cal.gain if cal.gain is not None else default_calibration_gain())
    a_hat = float(np.asarray(Y)[support].sum()) / (w * L * g)
    step = pam_intensity(1, pam.M, w, pam.I)
    x = a_hat / step
    base = int(np.floor(x))
    # midpoint ties fall to the lower level; the slack absorbs float error
    m = base if x - base <= 0.5 * (1.0 + 1e-9) else base + 1
    return min(max(m, 1), pam.M)


def classify_weight(Y: np.ndarray, codebook: Codebook, mode: str = "genie",
                    pam: PamConfig | None = None, true_weight: int | None = None,
                    calibration: Calibration | None = None) -> int:
    """Pick the weight class of a received block.

    genie   trusts the supplied true weight (the standard assumption for
            multiweight decoding).
    energy  thresholds the total received sum against per-weight expectations;
            the intensity rule makes those expectations identical, so with
            equal mean power this falls back to joint mode.
    joint   decodes each class blind, reconstructs each candidate against the
            calibration gain profile, and keeps the class with the smallest
            residual.
    """
    weights = codebook.weights_present
    if len(weights) == 1:
        return weights[0]
    if mode == "genie":
        if true_weight is None:
            raise ValueError("genie mode needs the true weight")
        if true_weight not in weights:
            raise ValueError(f"weight {true_weight} not in codebook")
        return true_weight
    if pam is None:
        raise ValueError(f"{mode} mode needs the PAM config")
    cal = calibration or Calibration()
    H_ref = _as_H(cal.channel) if cal.channel is not None else fixture_h02().H
    if mode == "energy":
        g = cal.gain if cal.gain is not None else default_calibration_gain()
        L = codebook.L
        expected = {}
        for w in weights:
            levels = [w * pam_intensity(m, pam.M, w, pam.I) for m in range(1, pam.M + 1)]
            expected[w] = L * g * L * float(np.mean(levels))
        values = np.array([expected[w] for w in weights])
        if np.ptp(values) > 1e-9 * abs(values).max():
            total = float(np.asarray(Y).sum())
            return int(weights[int(np.argmin(np.abs(values - total)))])
        mode = "joint"  # equal-power codebooks carry no weight in the total
    if mode == "joint":
        Y = np.asarray(Y, dtype=np.float64)
        best_w, best_res = weights[0], np.inf
        for w in weights:
            idx = codebook.weight_class_indices(w)
            stack = codebook.matrix_stack[idx]
            costs = -np.einsum("ij,qij->q", Y, stack)
            pick = int(np.argmin(costs))
            P = stack[pick]
            m = estimate_intensity(Y, P.astype(bool), pam, cal)
            a = pam_intensity(m, pam.M, w, pam.I)
            res = float(((Y - H_ref @ (a * P)) ** 2).sum())
            if res < best_res:
                best_w, best_res = w, res
        return int(best_w)
    raise ValueError(f"unknown mode {mode!r}")


def ml_detect(Y: np.ndarray, channel, codebook: Codebook, pam: PamConfig) -> DetectionResult:
    """Exhaustive coherent detection over every (entry, level) candidate.

    Ties resolve to the lowest (q, m) pair.  op_count models one L x L
    residual evaluation per candidate.
    """
    H = _as_H(channel)
    Y = np.asarray(Y, dtype=np.float64)
    L = codebook.L
    levels = np.array([[pam_intensity(m, pam.M, int(w), pam.I) for m in range(1, pam.M + 1)]
                       for w in codebook.weight_array])
    HP = np.einsum("ij,qjk->qik", H, codebook.matrix_stack)
    cand = levels[:, :, None, None] * HP[:, None, :, :]           # (Q, M, L, L)
    residuals = ((Y[None, None, :, :] - cand) ** 2).sum(axis=(2, 3)).reshape(-1)
    flat = int(np.argmin(residuals))
    q, m = flat // pam.M + 1, flat % pam.M + 1
    return _decision(q, m, codebook, pam, float(residuals[flat]),
                     op_count=codebook.size * pam.M * L * L)


def _classify(Y, codebook, pam, weight_mode, true_weight, calibration):
    if len(codebook.weights_present) == 1:
        return codebook.weights_present[0]
    return classify_weight(Y, codebook, weight_mode, pam, true_weight, calibration)


def bf_sd_detect(Y: np.ndarray, codebook: Codebook, pam: PamConfig, *,
                 true_weight: int | None = None, weight_mode: str = "genie",
                 calibration: Calibration | None = None) -> DetectionResult:
    """Blind exhaustive search: smallest negated support sum within the
    weight class, then level estimation on the winning support.

    op_count models the w L additions of each entry's metric.
    """
    Y = np.asarray(Y, dtype=np.float64)
    w = _classify(Y, codebook, pam, weight_mode, true_weight, calibration)
    idx = codebook.weight_class_indices(w)
    stack = codebook.matrix_stack[idx]
    costs = -np.einsum("ij,qij->q", Y, stack)
    pick = int(np.argmin(costs))
    q = int(idx[pick]) + 1
    m = estimate_intensity(Y, stack[pick].astype(bool), pam, calibration)
    return _decision(q, m, codebook, pam, float(costs[pick]),
                     op_count=len(idx) * w * codebook.L)


def bb_detect(Y: np.ndarray, codebook: Codebook, *, pam: PamConfig | None = None,
              calibration: Calibration | None = None,
              nearest_fallback: bool = False) -> DetectionResult:
    """Greedy level-by-level column selection for weight-1 codebooks.

    Level k scores each unused column with the path cost so far, the
    candidate entry, and the sum of everything still selectable below; the
    shared path prefix cannot change a level's argmin, so this matches
    scoring each node against the remaining-matrix bound.  Only one node
    survives per level, so the result is a permutation that may fall outside
    a restricted codebook; by default that outcome carries no bit decision.
    """
    if codebook.weights_present != (1,):
        raise ValueError("branch-and-bound decoding applies to weight-1 codebooks only")
    pam = pam or PamConfig()
    Y = np.asarray(Y, dtype=np.float64)
    yhat = -Y
    L = codebook.L
    ops = 0
    used: list[int] = []
    free = list(range(L))
    path_cost = 0.0
    for row in range(L):
        best_col, best_score = -1, np.inf
        for col in free:
            rest = [c for c in free if c != col]
            bound = float(yhat[row + 1:, rest].sum()) if row + 1 < L else 0.0
            score = path_cost + float(yhat[row, col]) + bound
            ops += 1 + (L - row - 1) * len(rest)
            if score < best_score:
                best_col, best_score = col, score
        used.append(best_col)
        free.remove(best_col)
        path_cost += float(yhat[row, best_col])
    perm = tuple(c + 1 for c in used)
    lookup = {cm.components[0].symbols: i for i, cm in enumerate(codebook.entries)}
    if perm in lookup:
        q = lookup[perm] + 1
        support = codebook.matrix_stack[q - 1].astype(bool)
        m = estimate_intensity(Y, support, pam, calibration)
        return _decision(q, m, codebook, pam, path_cost, iterations=L, op_count=ops)
    if nearest_fallback:
        res = bf_sd_detect(Y, codebook, pam, calibration=calibration)
        res.iterations = L
        res.op_count += ops
        return res
    return DetectionResult(q=None, m=1, w=1, bits=None, cost=path_cost,
                           iterations=L, op_count=ops)


def _walk_until_member(yhat: np.ndarray, members: set[tuple[int, ...]], e_max: int):
    # Enumerate assignments from best cost upward; stop at the first codebook
    # member.  Returns (perm, cost, tries) with perm None if e_max ran out.
    tries = 0
    for a in murty_iter(yhat):
        tries += 1
        if a.perm in members:
            return a.perm, a.cost, tries
        if tries >= e_max:
            return None, None, tries
    return None, None, tries


_LAP_OPS = lambda L: L ** 3  # nominal work of one assignment solve


def iterative_sd_detect(Y: np.ndarray, codebook: Codebook, pam: PamConfig,
                        e_max: int | None = None, *,
                        true_weight: int | None = None, weight_mode: str = "genie",
                        calibration: Calibration | None = None,
                        bf_fallback: bool = True) -> DetectionResult:
    """Assignment-driven blind detection.

    Weight 1: solve the assignment problem on yhat; if the optimum is not a
    codebook member, take next-best assignments in cost order until one is.
    Multiweight entries: run the same walk against each component position's
    codebook; every row whose component matches a walk's winner becomes a
    candidate, and candidates are scored by the summed support metric.  When
    the walk budget e_max (default: class size) runs dry the detector falls
    back to exhaustive search within the class, or raises NoDecisionError if
    the fallback is disabled.
    """
    Y = np.asarray(Y, dtype=np.float64)
    yhat = -Y
    L = codebook.L
    w = _classify(Y, codebook, pam, weight_mode, true_weight, calibration)
    idx = codebook.weight_class_indices(w)
    budget = e_max if e_max is not None else len(idx)
    if budget < 1:
        raise ValueError("e_max must be at least 1")
    ops = 0
    iterations = 0

    if w == 1:
        members = {}
        for pos, i in enumerate(idx):
            members[codebook.entries[int(i)].components[0].symbols] = int(i)
        perm, cost, tries = _walk_until_member(yhat, set(members), budget)
        iterations += tries
        ops += tries * _LAP_OPS(L) + tries * L
        if perm is not None:
            q = members[perm] + 1
            m = estimate_intensity(Y, codebook.matrix_stack[q - 1].astype(bool), pam, calibration)
            return _decision(q, m, codebook, pam, float(cost),
                             iterations=iterations, op_count=ops)
    else:
        candidates: set[int] = set()
        for slot in range(w):
            slot_perms = {codebook.entries[int(i)].components[slot].symbols for i in idx}
            perm, _, tries = _walk_until_member(yhat, slot_perms, budget)
            iterations += tries
            ops += tries * _LAP_OPS(L) + tries * L
            if perm is not None:
                candidates.update(
                    int(i) for i in idx
                    if codebook.entries[int(i)].components[slot].symbols == perm
                )
        if candidates:
            cand = sorted(candidates)
            stack = codebook.matrix_stack[cand]
            costs = -np.einsum("ij,qij->q", Y, stack)
            ops += len(cand) * w * L
            pick = int(np.argmin(costs))
            q = cand[pick] + 1
            m = estimate_intensity(Y, stack[pick].astype(bool), pam, calibration)
            return _decision(q, m, codebook, pam, float(costs[pick]),
                             iterations=iterations, op_count=ops)

    if not bf_fallback:
        raise NoDecisionError("assignment walk exhausted without a codebook member")
    res = bf_sd_detect(Y, codebook, pam, true_weight=w, weight_mode="genie",
                       calibration=calibration)
    res.iterations = iterations
    res.op_count += ops
    return res


# ---------------------------------------------------------------------------
# Single-stream baselines at matched mean optical power.  Both transmit once
# per slot: repetition drives all L LEDs with one PAM symbol, spatial
# modulation drives a single LED selected by the leading bits.

@dataclass(frozen=True)
class RcConfig:
    L: int = 4
    M: int = 16
    I: float = 1.0

    @property
    def bits(self) -> int:
        b = (self.M).bit_length() - 1
        if 2 ** b != self.M:
            raise ValueError("M must be a power of two")
        return b

    def level(self, m: int) -> float:
        # Weight-L scaling keeps the slot total at mean I across levels.
        return pam_intensity(m, self.M, self.L, self.I)


@dataclass(frozen=True)
class SmConfig:
    L: int = 4
    M: int = 4
    I: float = 1.0

    @property
    def bits(self) -> int:
        lb = (self.L).bit_length() - 1
        mb = (self.M).bit_length() - 1
        if 2 ** lb != self.L or 2 ** mb != self.M:
            raise ValueError("L and M must be powers of two")
        return lb + mb

    def level(self, m: int) -> float:
        return pam_intensity(m, self.M, 1, self.I)


def _bits_to_index(bits) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def _index_to_bits(index: int, width: int) -> tuple[int, ...]:
    return tuple((index >> k) & 1 for k in reversed(range(width)))


def rc_encode(bits, config: RcConfig) -> np.ndarray:
    m = _bits_to_index(bits) + 1
    return np.full(config.L, config.level(m))


def rc_detect(y: np.ndarray, channel, config: RcConfig) -> tuple[int, ...]:
    """Sum the photodiode outputs and slice against the known level sums."""
    H = _as_H(channel)
    total = float(np.asarray(y).sum())
    gains = float(H.sum())
    levels = np.array([config.level(m) * gains for m in range(1, config.M + 1)])
    m = int(np.argmin(np.abs(levels - total))) + 1
    return _index_to_bits(m - 1, config.bits)


def sm_encode(bits, config: SmConfig) -> np.ndarray:
    index = _bits_to_index(bits)
    k, m = index // config.M, index % config.M + 1
    s = np.zeros(config.L)
    s[k] = config.level(m)
    return s


def sm_detect(y: np.ndarray, channel, config: SmConfig) -> tuple[int, ...]:
    """Joint ML over (LED, level); ties resolve to the lowest pair."""
    H = _as_H(channel)
    y = np.asarray(y, dtype=np.float64)
    cand = np.stack([
        config.level(m) * H[:, k]
        for k in range(config.L) for m in range(1, config.M + 1)
    ])
    index = int(np.argmin(((y[None, :] - cand) ** 2).sum(axis=1)))
    return _index_to_bits(index, config.bits)
