"""In-flight transformations between the two modal converters.

Transverse-frame rotation (static, per-photon random, or time-varying),
Gouy-phase accumulation over the link distance, photon loss, the rotational
frequency shift picked up by nonzero-OAM encodings, and intercept-resend
eavesdropping.  Elements compose in list order via ChannelSpec; all
applications are pure apart from explicit PRNG draws.

The encoding's headline property lives here: an l = 0 state is bitwise
unchanged by any rotation of the transverse frame, and a fixed-l sector
only ever picks up the global phase e^{i l phi0}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .exceptions import DimensionMismatch, IndexOutOfRange, WrongFrame
from .modes import BeamGeometry, beam_params
from .states import Frame, MubFamily, PureState, born_measure

__all__ = [
    "Rotation",
    "RandomRotation",
    "TimeVaryingRotation",
    "Gouy",
    "Loss",
    "FrequencyShift",
    "Eve",
    "EveStrategy",
    "EveGuess",
    "ChannelElement",
    "ChannelSpec",
    "ChannelResult",
    "apply_rotation",
    "apply_time_varying_rotation",
    "apply_gouy",
    "apply_loss",
    "apply_frequency_shift",
    "eve_attack",
    "apply_channel",
]


@dataclass(frozen=True)
class Rotation:
    """Static misalignment of the receiver's transverse frame, in radians."""

    angle: float


@dataclass(frozen=True)
class RandomRotation:
    """Fresh uniform angle in [0, 2pi) per photon; one PRNG draw each."""


@dataclass(frozen=True)
class TimeVaryingRotation:
    """Relative frame rotation at angular velocity omega (rad/s)."""

    omega: float


@dataclass(frozen=True)
class Gouy:
    """Order-dependent propagation phase accumulated over distance z."""

    z: float
    geom: BeamGeometry


@dataclass(frozen=True)
class Loss:
    """Photon absorption with the given probability; one PRNG draw."""

    probability: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"loss probability must be in [0, 1], got {self.probability}")


@dataclass(frozen=True)
class FrequencyShift:
    """Rotational frequency shift of an l != 0 encoding (rad/s)."""

    omega: float


@dataclass(frozen=True)
class EveStrategy:
    """Intercept-resend policy: measure in a fixed MUB basis or a random one.

    ``fixed_basis = None`` draws a fresh uniform basis per photon.
    """

    mub: MubFamily
    fixed_basis: int | None = None

    def __post_init__(self) -> None:
        if self.fixed_basis is not None and not 0 <= self.fixed_basis < self.mub.num_bases:
            raise IndexOutOfRange(
                f"fixed basis {self.fixed_basis} outside 0..{self.mub.num_bases - 1}"
            )


@dataclass(frozen=True)
class Eve:
    """Eavesdropper element wrapping an intercept-resend strategy."""

    strategy: EveStrategy


ChannelElement = Union[Rotation, RandomRotation, TimeVaryingRotation, Gouy, Loss, FrequencyShift, Eve]


@dataclass(frozen=True)
class ChannelSpec:
    """Ordered list of channel elements applied to each photon in flight."""

    elements: tuple[ChannelElement, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", tuple(self.elements))

    def has_eve(self) -> bool:
        return any(isinstance(el, Eve) for el in self.elements)


class EveGuess(NamedTuple):
    """What the eavesdropper learned from one photon."""

    basis: int
    outcome: int


class ChannelResult(NamedTuple):
    """Photon after the channel (None when absorbed) plus Eve's log."""

    state: PureState | None
    eve_guess: EveGuess | None


def apply_rotation(state: PureState, angle: float) -> PureState:
    """Rotate the transverse frame by ``angle`` about the propagation axis.

    The l = 0 encoding is returned bitwise unchanged; a fixed-l sector picks
    up the global phase e^{i l angle} on every amplitude, so any
    superposition within the sector is unchanged observationally.
    """
    if state.frame is not Frame.LG_SIDE:
        raise WrongFrame("rotations act on the LG-side (in-flight) state")
    l = state.oam_sector
    if l == 0:
        return state
    return state.rephased(np.exp(1j * l * angle))


def apply_time_varying_rotation(state: PureState, omega: float, t: float) -> PureState:
    """Rotation by the frame angle omega * t at the photon's emission time."""
    return apply_rotation(state, omega * t)


def apply_gouy(state: PureState, z: float, geom: BeamGeometry) -> PureState:
    """Dephase logical components by their mode order over distance z.

    Component n (physical order 2n + l) is multiplied by
    e^{-i(2n + l + 1) psi(z)}, the propagation-phase convention of the mode
    functions.  z = 0 is the identity; in the far field the relative factor
    between neighboring components approaches (-1).
    """
    if z == 0.0:
        return state
    psi = beam_params(geom, z).psi
    return state.rephased(np.exp(-1j * (state.physical_orders() + 1) * psi))


def apply_loss(
    state: PureState, probability: float, rng: np.random.Generator
) -> PureState | None:
    """Absorb the photon with the given probability; one PRNG draw.

    Returns the delivered state, or None when the photon is lost.
    """
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"loss probability must be in [0, 1], got {probability}")
    return None if rng.random() < probability else state


def apply_frequency_shift(state: PureState, omega: float, t: float) -> PureState:
    """Rotation-induced frequency shift: global phase e^{i l omega t}.

    Unobservable on its own; its operational consequence is modeled through
    the measurement device's detuning knob.
    """
    l = state.oam_sector
    if l == 0:
        return state
    return state.rephased(np.exp(1j * l * omega * t))


def eve_attack(
    state: PureState, strategy: EveStrategy, rng: np.random.Generator
) -> tuple[PureState, EveGuess]:
    """Intercept-resend: measure in a guessed basis, forward the eigenstate.

    Draws one uniform basis when the strategy is random (none when fixed),
    then one draw for the measurement.  The forwarded photon keeps the
    original frame and OAM sector; the guess is returned for
    information-leak accounting.
    """
    if strategy.mub.d != state.d:
        raise DimensionMismatch(
            f"state dimension {state.d} != eavesdropper basis dimension {strategy.mub.d}"
        )
    if strategy.fixed_basis is None:
        basis_idx = int(rng.integers(strategy.mub.num_bases))
    else:
        basis_idx = strategy.fixed_basis
    basis = strategy.mub[basis_idx]
    outcome = born_measure(state, basis, rng)
    resent = basis.state(outcome, oam_sector=state.oam_sector, frame=state.frame)
    return resent, EveGuess(basis=basis_idx, outcome=outcome)


def apply_channel(
    spec: ChannelSpec, state: PureState, t: float, rng: np.random.Generator
) -> ChannelResult:
    """Apply every element in order to one photon emitted at time t.

    Stops at the first absorption.  When several Eve elements are present
    the last guess is reported.
    """
    guess: EveGuess | None = None
    current: PureState | None = state
    for el in spec.elements:
        if isinstance(el, Rotation):
            current = apply_rotation(current, el.angle)
        elif isinstance(el, RandomRotation):
            current = apply_rotation(current, rng.random() * 2.0 * math.pi)
        elif isinstance(el, TimeVaryingRotation):
            current = apply_time_varying_rotation(current, el.omega, t)
        elif isinstance(el, Gouy):
            current = apply_gouy(current, el.z, el.geom)
        elif isinstance(el, Loss):
            current = apply_loss(current, el.probability, rng)
            if current is None:
                return ChannelResult(None, guess)
        elif isinstance(el, FrequencyShift):
            current = apply_frequency_shift(current, el.omega, t)
        elif isinstance(el, Eve):
            current, guess = eve_attack(current, el.strategy, rng)
        else:
            raise TypeError(f"unknown channel element {el!r}")
    return ChannelResult(current, guess)
