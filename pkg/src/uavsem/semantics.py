"""Symbol budgets and reconstruction quality for importance-ordered latents.

A device's image is never materialised. Quality is a function of how many of
the ``M`` leading latent symbols reached the UAV; the tail is zero-padded by
the decoder, so any prefix yields a usable reconstruction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

UNTOUCHED, SERVING, VISITED = "untouched", "serving", "visited"
PSNR_CAP_DB = 60.0


def psnr_db(zeta_max: float, mse: float, cap: float = PSNR_CAP_DB) -> float:
    if mse < 0:
        raise ValueError("mse must be non-negative")
    if mse == 0:
        return cap
    return 10.0 * math.log10(zeta_max**2 / mse)


@dataclass(frozen=True)
class LatentProfile:
    """Symbol budget and PSNR curve standing in for the learned codec.

    With ``table`` unset the curve is the parametric log-concave form
    ``psnr_min + (psnr_max - psnr_min) * log(1 + kappa*f) / log(1 + kappa)``
    where ``f = m / M``. Otherwise ``table`` holds ``(fraction, psnr_db)``
    pairs interpolated linearly.
    """

    n_symbols: int = 512
    bits_per_symbol: int = 32
    psnr_min: float = 10.0
    psnr_max: float = 35.0
    kappa: float = 9.0
    table: Optional[tuple] = None

    def __post_init__(self):
        if self.n_symbols < 1:
            raise ValueError("n_symbols must be >= 1")
        if self.bits_per_symbol < 2:
            raise ValueError("bits_per_symbol must be >= 2")
        if self.table is not None:
            table = tuple((float(f), float(p)) for f, p in self.table)
            object.__setattr__(self, "table", table)
            _validate_table(table)
            object.__setattr__(self, "psnr_min", table[0][1])
            object.__setattr__(self, "psnr_max", table[-1][1])
        elif self.kappa <= 0 or self.psnr_max < self.psnr_min:
            raise ValueError("parametric curve needs kappa > 0 and psnr_max >= psnr_min")


def _validate_table(table: Sequence) -> None:
    fr = [f for f, _ in table]
    ps = [p for _, p in table]
    if len(table) < 2 or fr[0] != 0.0 or fr[-1] != 1.0:
        raise ValueError("curve table must span fractions 0 to 1")
    if any(b <= a for a, b in zip(fr, fr[1:])):
        raise ValueError("curve table fractions must be strictly increasing")
    if any(b < a for a, b in zip(ps, ps[1:])):
        raise ValueError("curve table PSNR must be non-decreasing")


def load_curve_csv(path) -> tuple:
    """Read a ``fraction,psnr_db`` CSV into a curve table."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.DictReader(fh)]
    table = tuple((float(r["fraction"]), float(r["psnr_db"])) for r in rows)
    _validate_table(table)
    return table


def curve_psnr(profile: LatentProfile, m: float) -> float:
    M = profile.n_symbols
    if not 0 <= m <= M:
        raise ValueError(f"received symbols {m} outside [0, {M}]")
    frac = m / M
    if profile.table is None:
        span = profile.psnr_max - profile.psnr_min
        return profile.psnr_min + span * math.log1p(profile.kappa * frac) / math.log1p(profile.kappa)
    fr, ps = zip(*profile.table)
    return float(np.interp(frac, fr, ps))


@dataclass(frozen=True)
class DeviceCollectionState:
    received: int = 0
    status: str = UNTOUCHED
    psnr: float = 10.0
    carry: float = 0.0


def initial_state(profile: LatentProfile) -> DeviceCollectionState:
    return DeviceCollectionState(psnr=curve_psnr(profile, 0))


def deliver(state: DeviceCollectionState, rate: float, tau: float, profile: LatentProfile) -> DeviceCollectionState:
    """Credit one slot of transmission at ``rate`` bit/s to a serving device.

    Bits that do not fill a whole symbol are carried into the next slot. A
    device whose budget is exhausted becomes visited immediately.
    """
    if state.status == VISITED:
        raise ValueError("device already visited; it cannot be served again")
    if state.status != SERVING:
        raise ValueError("deliver requires a serving device")
    bits = rate * tau + state.carry
    whole = math.floor(bits / profile.bits_per_symbol)
    carry = bits - whole * profile.bits_per_symbol
    received = min(state.received + whole, profile.n_symbols)
    status = state.status
    if received >= profile.n_symbols:
        status, carry = VISITED, 0.0
    return replace(
        state,
        received=received,
        status=status,
        psnr=curve_psnr(profile, received),
        carry=carry,
    )
