"""Line-of-sight optical MIMO channel: Lambertian gains, noise, fixtures.

The received block is Y = H S + N where H[i][j] is the DC gain from LED j to
photodiode i and N has independent real Gaussian entries of variance N0/2.
Two measured-style gain matrices ship as plain-text fixtures: a 0.2 m
transmitter grid (h02) and a 0.6 m grid with four blocked links
(h06_blocked).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np


@dataclass(frozen=True)
class LambertianParams:
    """Emitter half-power semi-angle, receiver field of view, detector area."""

    phi_half_deg: float = 15.0
    psi_fov_deg: float = 15.0
    area_pd: float = 1e-4

    def __post_init__(self):
        if not 0 < self.phi_half_deg < 90:
            raise ValueError("phi_half_deg must be in (0, 90)")
        if not 0 < self.psi_fov_deg <= 90:
            raise ValueError("psi_fov_deg must be in (0, 90]")
        if not self.area_pd > 0:
            raise ValueError("area_pd must be positive")

    @property
    def order(self) -> float:
        """Lambertian mode number -ln 2 / ln cos(phi_half)."""
        return -math.log(2.0) / math.log(math.cos(math.radians(self.phi_half_deg)))


@dataclass(frozen=True)
class RoomGeometry:
    """Ceiling LED grid facing down, floor-level photodiode grid facing up."""

    led_positions: tuple[tuple[float, float, float], ...]
    pd_positions: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if not self.led_positions or not self.pd_positions:
            raise ValueError("geometry needs at least one LED and one photodiode")


def _square_grid(spacing: float, z: float, offset: tuple[float, float] = (0.0, 0.0)):
    half = spacing / 2.0
    ox, oy = offset
    corners = ((-1, -1), (-1, 1), (1, -1), (1, 1))
    return tuple((ox + sx * half, oy + sy * half, z) for (sx, sy) in corners)


def square_grid_geometry(
    tx_spacing: float = 0.2,
    rx_spacing: float = 0.1,
    height: float = 1.75,
    rx_offset: tuple[float, float] = (0.0, 0.0),
) -> RoomGeometry:
    """Co-centered 2x2 grids; indices run over the same corner order on both
    sides, so index k faces index k and the two grid diagonals face each
    other at positions (1,4), (2,3), (3,2), (4,1)."""
    return RoomGeometry(
        led_positions=_square_grid(tx_spacing, height),
        pd_positions=_square_grid(rx_spacing, 0.0, rx_offset),
    )


DEFAULT_LAMBERTIAN = LambertianParams()


def lambertian_gain(led, pd, params: LambertianParams = DEFAULT_LAMBERTIAN) -> float:
    """DC gain (order+1) A / (2 pi f^2) cos^order(phi) cos(psi) inside the
    field of view, zero outside.

    phi is the emission angle off the downward LED axis, psi the incidence
    angle off the upward photodiode axis, f the LED-photodiode distance.
    """
    led = np.asarray(led, dtype=np.float64)
    pd = np.asarray(pd, dtype=np.float64)
    diff = pd - led
    f = float(np.linalg.norm(diff))
    if f == 0.0:
        raise ValueError("LED and photodiode positions coincide")
    cos_phi = -diff[2] / f  # emission measured against the LED normal (0, 0, -1)
    cos_psi = -diff[2] / f  # incidence measured against the PD normal (0, 0, 1)
    if cos_psi <= 0.0:
        return 0.0
    psi = math.degrees(math.acos(min(1.0, cos_psi)))
    if psi > params.psi_fov_deg:
        return 0.0
    e = params.order
    return (e + 1.0) * params.area_pd / (2.0 * math.pi * f * f) * (cos_phi ** e) * cos_psi


@dataclass(frozen=True)
class ChannelMatrix:
    """Gain matrix plus a 0/1 mask recording which links are blocked."""

    H: np.ndarray
    blockage_mask: np.ndarray

    def __post_init__(self):
        h = np.ascontiguousarray(np.asarray(self.H, dtype=np.float64))
        h.setflags(write=False)
        object.__setattr__(self, "H", h)
        mask = np.ascontiguousarray(np.asarray(self.blockage_mask, dtype=np.uint8))
        mask.setflags(write=False)
        object.__setattr__(self, "blockage_mask", mask)
        if h.ndim != 2:
            raise ValueError("H must be a matrix")
        if mask.shape != h.shape:
            raise ValueError("mask shape mismatch")
        if (h < 0).any():
            raise ValueError("gains must be nonnegative")
        if ((mask == 0) & (h != 0)).any():
            raise ValueError("blocked links must have zero gain")

    @classmethod
    def from_gains(cls, H) -> "ChannelMatrix":
        H = np.asarray(H, dtype=np.float64)
        return cls(H=H, blockage_mask=np.ones_like(H, dtype=np.uint8))


def build_channel(
    geometry: RoomGeometry, params: LambertianParams = DEFAULT_LAMBERTIAN
) -> ChannelMatrix:
    """Evaluate the Lambertian gain for every LED-photodiode pair."""
    H = np.array(
        [
            [lambertian_gain(led, pd, params) for led in geometry.led_positions]
            for pd in geometry.pd_positions
        ],
        dtype=np.float64,
    )
    return ChannelMatrix.from_gains(H)


def apply_blockage(channel: ChannelMatrix | np.ndarray, pairs) -> ChannelMatrix:
    """Zero the gain of each (transmitter, receiver) pair, 1-based indices."""
    if isinstance(channel, ChannelMatrix):
        H = channel.H.copy()
        mask = channel.blockage_mask.copy()
    else:
        H = np.asarray(channel, dtype=np.float64).copy()
        mask = np.ones_like(H, dtype=np.uint8)
    n_rx, n_tx = H.shape
    for tx, rx in pairs:
        if not (1 <= tx <= n_tx and 1 <= rx <= n_rx):
            raise ValueError(f"pair ({tx}, {rx}) out of range")
        H[rx - 1, tx - 1] = 0.0
        mask[rx - 1, tx - 1] = 0
    return ChannelMatrix(H=H, blockage_mask=mask)


@dataclass(frozen=True)
class NoiseParams:
    """Additive real Gaussian noise of variance n0/2 per matrix element."""

    n0: float
    r: float = 1.0   # photodiode responsivity
    ts: float = 1.0  # slot duration

    def __post_init__(self):
        if not self.n0 > 0:
            raise ValueError("n0 must be positive")
        if not (self.r > 0 and self.ts > 0):
            raise ValueError("r and ts must be positive")


def transmit(
    S: np.ndarray,
    channel: ChannelMatrix | np.ndarray,
    noise: NoiseParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """One noisy channel use: H S plus elementwise Gaussian noise."""
    H = channel.H if isinstance(channel, ChannelMatrix) else np.asarray(channel)
    clean = H @ np.asarray(S, dtype=np.float64)
    return clean + rng.normal(0.0, math.sqrt(noise.n0 / 2.0), size=clean.shape)


def n0_for_bits(ebn0_db: float, bits: int, I: float, r: float = 1.0, ts: float = 1.0) -> float:
    """Noise density giving the requested per-bit SNR at symbol energy (r I)^2 ts."""
    if bits < 1:
        raise ValueError("bits must be positive")
    es = (r * I) ** 2 * ts
    eb = es / bits
    return eb / (10.0 ** (ebn0_db / 10.0))


def ebn0_to_n0(ebn0_db: float, pam, codebook, r: float = 1.0, ts: float = 1.0) -> float:
    """Noise density for a codebook scheme, normalized per signaled bit."""
    return n0_for_bits(ebn0_db, codebook.bits_per_block(pam.M), pam.I, r, ts)


def _load_fixture(name: str) -> np.ndarray:
    text = resources.files("pmvlc.fixtures").joinpath(name).read_text()
    return np.array([[float(v) for v in line.split()] for line in text.strip().splitlines()])


def fixture_h02() -> ChannelMatrix:
    """Gain matrix of the 0.2 m transmitter grid over a 0.1 m receiver grid."""
    return ChannelMatrix.from_gains(_load_fixture("h02.txt"))


def fixture_h06_blocked() -> ChannelMatrix:
    """0.6 m transmitter grid with the four diagonal-facing links blocked."""
    H = _load_fixture("h06_blocked.txt")
    mask = (H != 0).astype(np.uint8)
    return ChannelMatrix(H=H, blockage_mask=mask)


FIXTURES = {"h02": fixture_h02, "h06_blocked": fixture_h06_blocked}


def default_calibration_gain() -> float:
    """Mean gain of the h02 fixture; the stock constant for blind receivers."""
    return float(fixture_h02().H.mean())
