"""Error-rate analysis: Gaussian tail helpers, the pairwise union bound, and
a reproducible Monte Carlo BER harness.

Reproducibility contract: a record depends only on (master seed, scheme,
detector, grid index, batch index). Batches are fixed-size; the harness
always includes batches 0..k* where k* is the first index at which the
cumulative stopping rule fires, so the output is byte-identical for any
worker count: speculative batches beyond k* are discarded.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .channel import ChannelMatrix, default_calibration_gain, n0_for_bits
from .codebook import Codebook
from .detectors import (
    Calibration,
    RcConfig,
    SmConfig,
    bb_detect,
    bf_sd_detect,
    iterative_sd_detect,
    rc_encode,
    sm_encode,
)
from .txcodec import PamConfig, pam_intensity

BATCH_BLOCKS = 4096

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def qfunc(r):
    """Standard normal tail probability, Q(r) = P(Z > r)."""
    return 0.5 * erfc(np.asarray(r, dtype=np.float64) / np.sqrt(2.0))


def pairwise_error_prob(S, S_hat, H, Es: float, N0: float) -> float:
    """Probability that a minimum-distance receiver prefers S_hat over S."""
    if N0 <= 0:
        raise ValueError("N0 must be positive")
    H = H.H if isinstance(H, ChannelMatrix) else np.asarray(H, dtype=np.float64)
    d2 = float(np.sum((H @ (np.asarray(S) - np.asarray(S_hat))) ** 2))
    return float(qfunc(np.sqrt(Es / (2.0 * N0) * d2)))


@dataclass(frozen=True)
class BoundCurve:
    scheme: str
    ebn0_db: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        v = np.asarray(self.values)
        if (v < 0).any():
            raise ValueError("bound values must be nonnegative")
        if (np.diff(v) > 1e-12).any():
            raise ValueError("bound must be nonincreasing in Eb/N0")


def _signaling_blocks(codebook: Codebook, pam: PamConfig):
    """Physical transmit matrices, bit labels and weights for every
    signaling (entry, level) pair, ordered entry-major / level-minor."""
    bits = codebook.bits_per_block(pam.M)
    n_sig = codebook.signaling_count(pam.M)
    S = np.empty((n_sig, codebook.L, codebook.L))
    weights = np.empty(n_sig, dtype=np.int64)
    for k in range(n_sig):
        q, m = k // pam.M, k % pam.M
        w = int(codebook.weight_array[q])
        a = pam_intensity(m + 1, pam.M, w, pam.I)
        S[k] = a * codebook.matrix_stack[q]
        weights[k] = w
    labels = np.arange(n_sig, dtype=np.int64)
    return S, labels, weights, bits


def _pair_terms(codebook: Codebook, pam: PamConfig, H: np.ndarray):
    """Bit distances and squared channel-space distances over all ordered
    signaling pairs with distinct labels."""
    S, labels, _, bits = _signaling_blocks(codebook, pam)
    n = len(labels)
    HS = np.einsum("ij,kjl->kil", H, S)
    d_bits = []
    d2 = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            db = int(_POPCOUNT[(labels[i] ^ labels[j]) & 0xFF])
            d_bits.append(db)
            d2.append(float(np.sum((HS[i] - HS[j]) ** 2)))
    return np.asarray(d_bits, dtype=np.float64), np.asarray(d2), n, bits


def ber_union_bound(codebook: Codebook, pam: PamConfig, H, ebn0_grid,
                    scheme: str = "", r: float = 1.0, ts: float = 1.0) -> BoundCurve:
    """Union bound on BER: average pairwise error weighted by bit distance.

    Each term uses the physical intensity-bearing transmit matrices, so the
    bound is directly comparable with the simulated receiver operating at
    the same noise density.
    """
    H = H.H if isinstance(H, ChannelMatrix) else np.asarray(H, dtype=np.float64)
    d_bits, d2, n_sig, bits = _pair_terms(codebook, pam, H)
    values = []
    for db in ebn0_grid:
        n0 = n0_for_bits(db, bits, pam.I, r=r, ts=ts)
        terms = qfunc(np.sqrt(r * r * ts * d2 / (2.0 * n0)))
        values.append(float(np.sum(d_bits * terms) / (n_sig * bits)))
    return BoundCurve(scheme=scheme, ebn0_db=tuple(float(x) for x in ebn0_grid),
                      values=tuple(values))


@dataclass(frozen=True)
class BerRecord:
    scheme: str
    detector: str
    ebn0_db: float
    ber: float
    bit_errors: int
    bits: int
    blocks: int
    seed: int


@dataclass
class SimConfig:
    """Everything one BER sweep needs, already resolved to objects."""

    scheme: str
    detector: str
    ebn0_grid: tuple[float, ...]
    channel: ChannelMatrix | np.ndarray
    codebook: Codebook | None = None
    pam: PamConfig = field(default_factory=PamConfig)
    rc: RcConfig | None = None
    sm: SmConfig | None = None
    errors_target: int = 200
    block_cap: int = 10_000_000
    seed: int = 0
    weight_mode: str = "genie"
    calibration: Calibration | None = None
    e_max: int | None = None
    bb_fallback: bool = False
    r: float = 1.0
    ts: float = 1.0

    def __post_init__(self):
        if self.detector in ("rc", "sm"):
            if self.detector == "rc" and self.rc is None:
                self.rc = RcConfig()
            if self.detector == "sm" and self.sm is None:
                self.sm = SmConfig()
        elif self.codebook is None:
            raise ValueError(f"detector {self.detector!r} needs a codebook")
        if len(self.ebn0_grid) == 0:
            raise ValueError("empty Eb/N0 grid")
        if list(self.ebn0_grid) != sorted(self.ebn0_grid):
            raise ValueError("Eb/N0 grid must be ascending")
        if self.errors_target < 1 or self.block_cap < 1:
            raise ValueError("stopping rule must be positive")


def _channel_matrix(channel) -> np.ndarray:
    return channel.H if isinstance(channel, ChannelMatrix) else np.asarray(channel, dtype=np.float64)


def _batch_rng(config: SimConfig, point_idx: int, batch_idx: int) -> np.random.Generator:
    ident = zlib.crc32(f"{config.scheme}|{config.detector}".encode())
    ss = np.random.SeedSequence(entropy=(config.seed, ident),
                                spawn_key=(point_idx, batch_idx))
    return np.random.default_rng(ss)


def _estimate_levels(support_sums, denominators, weights, pam: PamConfig):
    """Vectorized nearest-level rule matching detectors.estimate_intensity."""
    steps = 2.0 * pam.I / (weights * (pam.M + 1))
    x = support_sums / (denominators * steps)
    base = np.floor(x)
    m = base + (x - base > 0.5 * (1.0 + 1e-9))
    return np.clip(m, 1, pam.M).astype(np.int64)


class _CodedBatch:
    """Precomputed state for one (codebook, pam, channel) simulation."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.H = _channel_matrix(config.channel)
        cb, pam = config.codebook, config.pam
        self.S, self.labels, self.weights, self.bits = _signaling_blocks(cb, pam)
        self.n_sig = len(self.labels)
        self.L = cb.L
        self.HS = np.einsum("ij,kjl->kil", self.H, self.S)
        # class-restricted search stacks for the blind detectors
        self.class_idx = {w: np.asarray(cb.weight_class_indices(w))
                          for w in cb.weights_present}
        self.stack = cb.matrix_stack
        # per-entry denominator for level estimation: sum of Y over the
        # support divided by this gives the intensity estimate
        cal = config.calibration or Calibration()
        w_arr = cb.weight_array.astype(np.float64)
        if cal.channel is not None:
            Hc = _channel_matrix(cal.channel)
            HP = np.einsum("ij,qjk->qik", Hc, self.stack)
            self.level_den = np.einsum("qij,qij->q", HP, self.stack)
        else:
            g = cal.gain if cal.gain is not None else default_calibration_gain()
            self.level_den = w_arr * w_arr * self.L * g

    def draw(self, rng, size):
        k = rng.integers(self.n_sig, size=size)
        return k

    def transmit(self, k, n0, rng):
        noise = rng.normal(0.0, np.sqrt(n0 / 2.0), size=(len(k), self.L, self.L))
        return self.HS[k] + noise

    def _levels_for(self, Y, picks):
        pam = self.config.pam
        if pam.M == 1:
            return np.ones(len(picks), dtype=np.int64)
        P = self.stack[picks]
        sums = np.einsum("bij,bij->b", Y, P)
        w = self.config.codebook.weight_array[picks].astype(np.float64)
        return _estimate_levels(sums, self.level_den[picks], w, pam)

    def decode_ml(self, Y):
        res = ((Y[:, None, :, :] - self.HS[None, :, :, :]) ** 2).sum(axis=(2, 3))
        return np.argmin(res, axis=1)

    def decode_bf(self, Y, tx_k):
        pam = self.config.pam
        tx_q = tx_k // pam.M
        tx_w = self.config.codebook.weight_array[tx_q]
        picks = np.empty(len(tx_k), dtype=np.int64)
        for w, idx in self.class_idx.items():
            sel = np.nonzero(tx_w == w)[0]
            if len(sel) == 0:
                continue
            costs = -np.einsum("bij,qij->bq", Y[sel], self.stack[idx])
            picks[sel] = idx[np.argmin(costs, axis=1)]
        m = self._levels_for(Y, picks)
        return picks * pam.M + (m - 1)

    def decode_loop(self, Y, tx_k, fn):
        pam = self.config.pam
        out = np.empty(len(tx_k), dtype=np.int64)
        for b in range(len(tx_k)):
            r = fn(Y[b], tx_k[b])
            out[b] = -1 if r.q is None else (r.q - 1) * pam.M + (r.m - 1)
        return out

    def bit_errors(self, tx_k, rx_k):
        valid = (rx_k >= 0) & (rx_k < self.n_sig)
        xor = (self.labels[tx_k] ^ self.labels[np.where(valid, rx_k, 0)]) & 0xFF
        d = _POPCOUNT[xor]
        return int(np.where(valid, d, self.bits).sum())


def _simulate_coded_batch(state: _CodedBatch, n0, point_idx, batch_idx):
    config = state.config
    rng = _batch_rng(config, point_idx, batch_idx)
    tx = state.draw(rng, BATCH_BLOCKS)
    Y = state.transmit(tx, n0, rng)
    det = config.detector
    if det == "ml":
        rx = state.decode_ml(Y)
    elif det == "bf":
        if config.weight_mode == "genie":
            rx = state.decode_bf(Y, tx)
        else:
            rx = state.decode_loop(
                Y, tx, lambda y, w: bf_sd_detect(
                    y, config.codebook, config.pam,
                    weight_mode=config.weight_mode,
                    calibration=config.calibration))
    elif det == "iterative":
        pam, cb = config.pam, config.codebook
        tx_w = cb.weight_array[tx // pam.M]
        genie = config.weight_mode == "genie"
        rx = np.empty(len(tx), dtype=np.int64)
        for b in range(len(tx)):
            r = iterative_sd_detect(Y[b], cb, pam, config.e_max,
                                    true_weight=int(tx_w[b]) if genie else None,
                                    weight_mode=config.weight_mode,
                                    calibration=config.calibration)
            rx[b] = -1 if r.q is None else (r.q - 1) * pam.M + (r.m - 1)
    elif det == "bb":
        rx = state.decode_loop(
            Y, tx, lambda y, k: bb_detect(y, config.codebook, pam=config.pam,
                                          calibration=config.calibration,
                                          nearest_fallback=config.bb_fallback))
    elif det == "guess":
        rx = rng.integers(state.n_sig, size=len(tx))
    else:
        raise ValueError(f"unknown detector {det!r}")
    return state.bit_errors(tx, rx), BATCH_BLOCKS


class _BaselineBatch:
    """RC / SM single-slot baselines share the block-loop shape."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.H = _channel_matrix(config.channel)
        cfg = config.rc if config.detector == "rc" else config.sm
        self.cfg = cfg
        self.bits = cfg.bits
        self.n_sig = 2 ** self.bits
        if config.detector == "rc":
            enc = lambda b: rc_encode(b, cfg)
        else:
            enc = lambda b: sm_encode(b, cfg)
        self.tx_vectors = np.stack([
            enc(tuple((v >> k) & 1 for k in reversed(range(self.bits))))
            for v in range(self.n_sig)
        ])
        self.Hx = self.tx_vectors @ self.H.T   # received means, one per symbol

    def run_batch(self, n0, point_idx, batch_idx):
        config = self.config
        rng = _batch_rng(config, point_idx, batch_idx)
        tx = rng.integers(self.n_sig, size=BATCH_BLOCKS)
        Y = self.Hx[tx] + rng.normal(0.0, np.sqrt(n0 / 2.0), size=(BATCH_BLOCKS, len(self.H)))
        if config.detector == "rc":
            totals = Y.sum(axis=1)
            gains = float(self.H.sum())
            levels = np.array([self.cfg.level(m) * gains for m in range(1, self.cfg.M + 1)])
            rx = np.argmin(np.abs(totals[:, None] - levels[None, :]), axis=1)
            # symbol index == bit label for the repetition scheme
        else:
            res = ((Y[:, None, :] - self.Hx[None, :, :]) ** 2).sum(axis=2)
            rx = np.argmin(res, axis=1)
        d = _POPCOUNT[(tx ^ rx) & 0xFF]
        return int(d.sum()), BATCH_BLOCKS


def monte_carlo_ber(config: SimConfig, threads: int = 1) -> list[BerRecord]:
    """Simulate the configured detector over the Eb/N0 grid.

    Per point, fixed-size batches run until the cumulative bit-error target
    or the block cap is reached; the included batch set is independent of
    the thread count.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if config.detector in ("rc", "sm"):
        state = _BaselineBatch(config)
        bits = state.bits
        batch_fn = state.run_batch
        intensity = config.rc.I if config.detector == "rc" else config.sm.I
    else:
        state = _CodedBatch(config)
        bits = state.bits
        batch_fn = lambda n0, p, b: _simulate_coded_batch(state, n0, p, b)
        intensity = config.pam.I

    records = []
    max_batches = max(1, -(-config.block_cap // BATCH_BLOCKS))
    for point_idx, ebn0_db in enumerate(config.ebn0_grid):
        n0 = n0_for_bits(ebn0_db, bits, intensity, r=config.r, ts=config.ts)
        errors = 0
        blocks = 0
        next_batch = 0
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pending = {}
            while True:
                while len(pending) < threads and next_batch < max_batches:
                    pending[next_batch] = pool.submit(batch_fn, n0, point_idx, next_batch)
                    next_batch += 1
                take = blocks // BATCH_BLOCKS
                if take not in pending:
                    break
                e, nblocks = pending.pop(take).result()
                errors += e
                blocks += nblocks
                if errors >= config.errors_target or blocks >= config.block_cap:
                    for fut in pending.values():
                        fut.cancel()
                    break
        records.append(BerRecord(
            scheme=config.scheme, detector=config.detector,
            ebn0_db=float(ebn0_db),
            ber=errors / (blocks * bits),
            bit_errors=errors, bits=blocks * bits, blocks=blocks,
            seed=config.seed))
    return records


def write_ber_csv(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("scheme,detector,ebn0_db,ber,bit_errors,bits,blocks,seed\n")
        for r in records:
            fh.write(f"{r.scheme},{r.detector},{r.ebn0_db:.4f},{r.ber:.10e},"
                     f"{r.bit_errors},{r.bits},{r.blocks},{r.seed}\n")


def write_bound_csv(curve: BoundCurve, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("scheme,ebn0_db,bound\n")
        for db, v in zip(curve.ebn0_db, curve.values):
            fh.write(f"{curve.scheme},{db:.4f},{v:.10e}\n")
