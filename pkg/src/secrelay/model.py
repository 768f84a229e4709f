"""System configuration, node layout, and average channel gains.

The network has one multi-antenna source, one destination, K single-antenna
untrusted amplify-and-forward relays and L passive eavesdroppers.  Average
link gains follow distance-based path loss mu = d**(-path_loss_exp); the
instantaneous fading on top of them is Rayleigh (see channel.py).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

# Closed forms enumerate all 2**K - 1 non-empty relay subsets.
MAX_RELAYS = 25


class ConfigError(ValueError):
    """Invalid system configuration."""


class TopologyError(ValueError):
    """Degenerate node layout (zero-length modeled link, bad exponent)."""


class EveModel(Enum):
    """Eavesdropper decoding model.

    NCE: nodes decode independently, the leakage is the strongest single
    observation.  CE: the L external eavesdroppers pool their observations
    (maximum-ratio combining over both protocol phases) while the untrusted
    relays still act alone.
    """

    NCE = "nce"
    CE = "ce"


@dataclass(frozen=True)
class Modulation:
    """Coherent modulation with SER(snr) ~= alpha_m * Q(sqrt(beta_m * snr))."""

    alpha_m: float
    beta_m: float
    name: str = "custom"

    @classmethod
    def qam(cls, order: int) -> "Modulation":
        """Square M-QAM: alpha = 4(1 - 1/sqrt(M)), beta = 3/(M - 1)."""
        if order < 4 or int(math.isqrt(order)) ** 2 != order:
            raise ConfigError(f"qam order must be a square >= 4, got {order}")
        root = math.sqrt(order)
        return cls(4.0 * (1.0 - 1.0 / root), 3.0 / (order - 1), f"qam{order}")

    @classmethod
    def psk(cls, order: int) -> "Modulation":
        """M-PSK for M >= 4: alpha = 2, beta = 2 sin^2(pi/M)."""
        if order < 4:
            raise ConfigError(f"psk approximation needs order >= 4, got {order}")
        name = "qpsk" if order == 4 else f"psk{order}"
        return cls(2.0, 2.0 * math.sin(math.pi / order) ** 2, name)


@dataclass(frozen=True)
class SystemConfig:
    """Static system parameters.

    snr_linear is the transmit SNR rho = P/sigma^2 in linear scale; anything
    user-facing (CLI, sweeps) speaks dB and converts at the boundary.
    Construction is permissive; call validate() before using a config.
    """

    n_antennas: int
    n_relays: int
    n_eves: int
    snr_linear: float
    target_rate: float = 1.0
    eve_model: EveModel = EveModel.NCE
    modulation: Modulation = field(default_factory=lambda: Modulation.psk(4))
    master_seed: int = 0

    def with_snr_db(self, snr_db: float) -> "SystemConfig":
        return replace(self, snr_linear=10.0 ** (snr_db / 10.0))


def validate(config: SystemConfig) -> None:
    """Check every config invariant, raising ConfigError with all violations."""
    problems = []
    if config.n_antennas < 1:
        problems.append(f"n_antennas must be >= 1, got {config.n_antennas}")
    if config.n_relays < 1:
        problems.append(f"n_relays must be >= 1, got {config.n_relays}")
    elif config.n_relays > MAX_RELAYS:
        problems.append(
            f"n_relays={config.n_relays} exceeds {MAX_RELAYS}: closed forms "
            f"enumerate 2^K - 1 relay subsets and would explode"
        )
    if config.n_eves < 0:
        problems.append(f"n_eves must be >= 0, got {config.n_eves}")
    if not (math.isfinite(config.snr_linear) and config.snr_linear > 0):
        problems.append(f"snr_linear must be positive and finite, got {config.snr_linear}")
    if not (math.isfinite(config.target_rate) and config.target_rate >= 0):
        problems.append(f"target_rate must be >= 0, got {config.target_rate}")
    if not isinstance(config.eve_model, EveModel):
        problems.append(f"eve_model must be an EveModel, got {config.eve_model!r}")
    mod = config.modulation
    if not (mod.alpha_m > 0 and mod.beta_m > 0):
        problems.append(f"modulation needs alpha_m, beta_m > 0, got {mod}")
    if not (0 <= config.master_seed < 2**64):
        problems.append(f"master_seed must fit in 64 bits, got {config.master_seed}")
    if problems:
        raise ConfigError("; ".join(problems))


@dataclass(frozen=True)
class Topology:
    """Planar node positions. Relays and eavesdroppers are the malicious set."""

    source_pos: tuple[float, float]
    dest_pos: tuple[float, float]
    relay_pos: tuple[tuple[float, float], ...]
    eve_pos: tuple[tuple[float, float], ...] = ()
    path_loss_exp: float = 3.0

    @property
    def n_relays(self) -> int:
        return len(self.relay_pos)

    @property
    def n_eves(self) -> int:
        return len(self.eve_pos)


def paper_topology(
    n_relays: int,
    n_eves: int,
    relay_ring: float = 0.02,
    eve_ring: float = 0.03,
    path_loss_exp: float = 3.0,
) -> Topology:
    """Reference layout: source (-1,0), destination (0,0), relay cluster at (1,0).

    Relays sit on a small ring of radius relay_ring around (1,0) (a single
    relay sits exactly at (1,0)); eavesdroppers sit on a slightly larger ring
    around the same center, i.e. right next to the relays, which is their
    worst-case placement.  The rings keep every modeled pairwise link at a
    strictly positive distance.
    """
    if n_relays < 1:
        raise TopologyError(f"need at least one relay, got {n_relays}")
    center = np.array([1.0, 0.0])
    if n_relays == 1:
        relays = [center.copy()]
    else:
        ang = 2.0 * np.pi * np.arange(n_relays) / n_relays
        relays = [center + relay_ring * np.array([np.cos(a), np.sin(a)]) for a in ang]
    ang = 2.0 * np.pi * (np.arange(n_eves) + 0.5) / max(n_eves, 1)
    eves = [center + eve_ring * np.array([np.cos(a), np.sin(a)]) for a in ang[:n_eves]]
    return Topology(
        source_pos=(-1.0, 0.0),
        dest_pos=(0.0, 0.0),
        relay_pos=tuple((float(p[0]), float(p[1])) for p in relays),
        eve_pos=tuple((float(p[0]), float(p[1])) for p in eves),
        path_loss_exp=path_loss_exp,
    )


@dataclass(frozen=True, eq=False)
class MeanGains:
    """Average (path-loss) gains for every modeled link.

    mu_sr, mu_rd: per-relay source->relay / relay->destination gains.
    mu_se, mu_ed: per-eavesdropper source->eve / destination->eve gains.
    mu_sd: source->destination gain.
    mu_rl: (K, K+L) inter-malicious gains, row = candidate relay, columns =
        relays then eavesdroppers; the diagonal self entries are zero and
        never drawn.  These only shape the second-phase overhearing channel.

    Average SNRs scale linearly with the transmit SNR: gbar = rho * mu.
    """

    mu_sr: np.ndarray
    mu_rd: np.ndarray
    mu_se: np.ndarray
    mu_ed: np.ndarray
    mu_sd: float
    mu_rl: np.ndarray | None = None

    def __post_init__(self):
        for name in ("mu_sr", "mu_rd", "mu_se", "mu_ed"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            if arr.size and not (np.isfinite(arr).all() and (arr > 0).all()):
                raise ValueError(f"{name} entries must be positive and finite")
        if len(self.mu_sr) != len(self.mu_rd):
            raise ValueError("mu_sr and mu_rd must have one entry per relay")
        if len(self.mu_se) != len(self.mu_ed):
            raise ValueError("mu_se and mu_ed must have one entry per eavesdropper")
        if not (math.isfinite(self.mu_sd) and self.mu_sd > 0):
            raise ValueError(f"mu_sd must be positive and finite, got {self.mu_sd}")
        k, l = self.n_relays, self.n_eves
        if self.mu_rl is None:
            mu_rl = np.ones((k, k + l))
            np.fill_diagonal(mu_rl[:, :k], 0.0)
            object.__setattr__(self, "mu_rl", mu_rl)
        else:
            mu_rl = np.asarray(self.mu_rl, dtype=float)
            object.__setattr__(self, "mu_rl", mu_rl)
            if mu_rl.shape != (k, k + l):
                raise ValueError(f"mu_rl must have shape ({k}, {k + l}), got {mu_rl.shape}")
            off = ~np.eye(k, k + l, dtype=bool)
            if not (np.isfinite(mu_rl).all() and (mu_rl[off] > 0).all()):
                raise ValueError("off-diagonal mu_rl entries must be positive and finite")

    @property
    def n_relays(self) -> int:
        return len(self.mu_sr)

    @property
    def n_eves(self) -> int:
        return len(self.mu_se)

    @classmethod
    def iid(
        cls,
        n_relays: int,
        n_eves: int,
        mu_sr: float = 1.0,
        mu_rd: float = 1.0,
        mu_se: float = 1.0,
        mu_ed: float = 1.0,
        mu_sd: float = 1.0,
        mu_rl: float = 1.0,
    ) -> "MeanGains":
        """Gains with identical statistics per relay / per eavesdropper."""
        k, l = n_relays, n_eves
        rl = np.full((k, k + l), mu_rl, dtype=float)
        np.fill_diagonal(rl[:, :k], 0.0)
        return cls(
            mu_sr=np.full(k, mu_sr),
            mu_rd=np.full(k, mu_rd),
            mu_se=np.full(l, mu_se),
            mu_ed=np.full(l, mu_ed),
            mu_sd=mu_sd,
            mu_rl=rl,
        )

    def gbar_rd(self, rho: float) -> np.ndarray:
        """Average relay->destination SNRs at transmit SNR rho."""
        return rho * self.mu_rd

    def gbar_sr(self, rho: float) -> np.ndarray:
        """Average per-antenna source->relay SNRs at transmit SNR rho."""
        return rho * self.mu_sr

    def gbar_sd(self, rho: float) -> float:
        return rho * self.mu_sd

    def leak_means_dt(self, rho: float) -> np.ndarray:
        """Average beamformer-leakage SNRs toward all K+L malicious nodes
        under direct transmission (relays first, then eavesdroppers)."""
        return rho * np.concatenate([self.mu_sr, self.mu_se])

    def relay_gains_iid(self, rel_tol: float = 1e-12) -> bool:
        """True when every relay has the same (mu_sr, mu_rd) within rel_tol."""
        return _spread_within(self.mu_sr, rel_tol) and _spread_within(self.mu_rd, rel_tol)

    def eve_gains_iid(self, rel_tol: float = 1e-12) -> bool:
        if self.n_eves == 0:
            return True
        return _spread_within(self.mu_se, rel_tol) and _spread_within(self.mu_ed, rel_tol)


def _spread_within(arr: np.ndarray, rel_tol: float) -> bool:
    if arr.size <= 1:
        return True
    lo, hi = float(arr.min()), float(arr.max())
    return (hi - lo) <= rel_tol * hi


def mean_gains_from_topology(topology: Topology) -> MeanGains:
    """Distance-based path loss mu = d**(-alpha) on every modeled link.

    Modeled links: source to every other node, destination to every relay and
    eavesdropper, and each relay to every other malicious node.  Two
    eavesdroppers may share a position (they never talk to each other), but
    any other coincidence is degenerate.
    """
    alpha = topology.path_loss_exp
    if not (math.isfinite(alpha) and alpha > 0):
        raise TopologyError(f"path_loss_exp must be positive, got {alpha}")
    src = np.asarray(topology.source_pos, dtype=float)
    dst = np.asarray(topology.dest_pos, dtype=float)
    relays = np.asarray(topology.relay_pos, dtype=float).reshape(-1, 2)
    eves = np.asarray(topology.eve_pos, dtype=float).reshape(-1, 2)
    k, l = len(relays), len(eves)
    if k < 1:
        raise TopologyError("topology needs at least one relay")

    def gain(a, b, what):
        d = float(np.hypot(*(a - b)))
        if d <= 0.0:
            raise TopologyError(f"zero distance on modeled link: {what}")
        return d ** (-alpha)

    mu_sr = np.array([gain(src, r, f"source-relay{i}") for i, r in enumerate(relays)])
    mu_rd = np.array([gain(dst, r, f"relay{i}-dest") for i, r in enumerate(relays)])
    mu_se = np.array([gain(src, e, f"source-eve{j}") for j, e in enumerate(eves)])
    mu_ed = np.array([gain(dst, e, f"eve{j}-dest") for j, e in enumerate(eves)])
    mu_sd = gain(src, dst, "source-dest")
    malicious = np.concatenate([relays, eves]) if l else relays
    mu_rl = np.zeros((k, k + l))
    for i in range(k):
        for j in range(k + l):
            if j == i:
                continue
            mu_rl[i, j] = gain(relays[i], malicious[j], f"relay{i}-node{j}")
    return MeanGains(mu_sr=mu_sr, mu_rd=mu_rd, mu_se=mu_se, mu_ed=mu_ed, mu_sd=mu_sd, mu_rl=mu_rl)
