"""Business-logic handler contract and the built-in logic packs.

A handler table maps names to callables:

* an endpoint handler ``fn(ctx, current, *args) -> NewState | Err`` receives a
  :class:`CallContext`, the stored :data:`StateContents` and the call
  arguments as plain Python values (``str`` or ``int``);
* a trigger hook named ``<endpoint>FundTrigger`` / ``<endpoint>SlotTrigger``
  receives the endpoint's arguments only and returns a :data:`TriggerSpec`.

Endpoints missing from a table behave as the identity on the stored state.
Handlers must be pure: they never mutate ``current``.
"""

from __future__ import annotations

import hashlib
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Union

from .ast import BaseType

LOVELACE_PER_ADA = 1_000_000


# ---------------------------------------------------------------------------
# stored values


@dataclass(frozen=True)
class Str:
    value: str


@dataclass(frozen=True)
class Hashed:
    value: str


@dataclass(frozen=True)
class Key:
    value: str


@dataclass(frozen=True)
class Funds:
    value: int

    def __post_init__(self) -> None:
        if isinstance(self.value, bool) or not isinstance(self.value, int) or self.value < 0:
            raise ValueError(f"Funds must be a non-negative integer of Lovelace, got {self.value!r}")


@dataclass(frozen=True)
class Tok:
    value: str


FieldValue = Union[Str, Hashed, Key, Funds, Tok]
StateContents = tuple[FieldValue, ...]

VARIANT_OF: dict[BaseType, type] = {
    BaseType.STRING: Str,
    BaseType.HASHED_STRING: Hashed,
    BaseType.PUBKEYHASH: Key,
    BaseType.VALUE: Funds,
    BaseType.TOKEN: Tok,
}


def signature(fields: tuple[BaseType, ...]) -> tuple[BaseType, ...]:
    """Declared fields plus the implicit trailing funds field."""
    return tuple(fields) + (BaseType.VALUE,)


def default_contents(fields: tuple[BaseType, ...]) -> StateContents:
    return tuple(Funds(0) if t is BaseType.VALUE else VARIANT_OF[t]("") for t in signature(fields))


def matches_signature(fields: tuple[BaseType, ...], contents: StateContents) -> bool:
    sig = signature(fields)
    return len(contents) == len(sig) and all(type(v) is VARIANT_OF[t] for t, v in zip(sig, contents))


def funds_of(contents: StateContents) -> int:
    last = contents[-1]
    assert isinstance(last, Funds)
    return last.value


def with_funds(contents: StateContents, amount: int) -> StateContents:
    return contents[:-1] + (Funds(amount),)


# ---------------------------------------------------------------------------
# handler results and trigger specs


@dataclass(frozen=True)
class NewState:
    """Successful handler outcome.

    ``payouts`` lists extra ``(wallet, amount)`` transfers the contract makes
    to wallets other than the caller, e.g. refunding an outbid bidder.  The
    caller covers them on top of the funds delta.
    """

    contents: StateContents
    message: str | None = None
    payouts: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class Err:
    message: str


HandlerResult = Union[NewState, Err]


@dataclass(frozen=True)
class FundsPredicate:
    predicate: Callable[[int], bool] = field(compare=False)
    description: str = "custom"

    def __call__(self, funds: int) -> bool:
        return bool(self.predicate(funds))


@dataclass(frozen=True)
class SlotAt:
    slot: int


TriggerSpec = Union[FundsPredicate, SlotAt]


@dataclass(frozen=True)
class CallContext:
    """Who is calling and when. ``caller`` is None for automatic interrupts."""

    caller: str | None
    role: str
    slot: int


Handler = Callable[..., Any]
HandlerTable = Mapping[str, Handler]


def identity(ctx: CallContext, current: StateContents, *args: object) -> NewState:
    return NewState(current)


# ---------------------------------------------------------------------------
# guessing game


def hash_string(s: str) -> str:
    """Lowercase hex SHA-256 of the UTF-8 encoding of ``s``."""
    return hashlib.sha256(s.encode("utf-8")).hexdigest()


GAME_OVER = "Game over"
DEFAULT_SLOT_HORIZON = 20


def gg_lock(secret: str, amount: int) -> HandlerResult:
    if amount <= 0:
        return Err(f"Lock rejected: value must be positive, got {amount}")
    return NewState(
        (Hashed(hash_string(secret)), Funds(amount)),
        f"No previous state found, initialising SM with value: {amount}",
    )


def gg_guess(word: str, current: StateContents) -> HandlerResult:
    stored = current[0]
    assert isinstance(stored, Hashed)
    if hash_string(word) != stored.value:
        return Err("Wrong guess")
    return NewState((stored, Funds(0)), "Congratulations, you won!")


def gg_close_game(current: StateContents) -> HandlerResult:
    return NewState((Hashed(hash_string(GAME_OVER)), Funds(0)), "Closing the game")


def _guessing_game(slot_horizon: int = DEFAULT_SLOT_HORIZON) -> dict[str, Handler]:
    return {
        "lock": lambda ctx, current, secret, amount: gg_lock(secret, amount),
        "guess": lambda ctx, current, word: gg_guess(word, current),
        "closeGame": lambda ctx, current: gg_close_game(current),
        "lockFundTrigger": lambda secret, amount: FundsPredicate(lambda funds: funds <= 0, "funds <= 0"),
        "lockSlotTrigger": lambda secret, amount: SlotAt(slot_horizon),
    }


# ---------------------------------------------------------------------------
# ping pong: no business logic


def _ping_pong() -> dict[str, Handler]:
    def unchanged(ctx: CallContext, current: StateContents) -> NewState:
        return NewState(with_funds(current, 0))

    return {"init": unchanged, "ping": unchanged, "pong": unchanged}


# ---------------------------------------------------------------------------
# crowdfunding: contents are just the pot


def _crowdfunding() -> dict[str, Handler]:
    def init(ctx: CallContext, current: StateContents, goal: int) -> HandlerResult:
        if goal <= 0:
            return Err(f"Campaign goal must be positive, got {goal}")
        return NewState(with_funds(current, 0), f"Campaign opened with goal {goal}")

    def contribute(ctx: CallContext, current: StateContents, amount: int) -> HandlerResult:
        if amount <= 0:
            return Err(f"Contribution must be positive, got {amount}")
        return NewState(with_funds(current, funds_of(current) + amount), f"Contribution of {amount} received")

    def close(ctx: CallContext, current: StateContents) -> HandlerResult:
        return NewState(with_funds(current, 0), f"Campaign closed, {funds_of(current)} collected")

    return {"init": init, "contribute": contribute, "closeCrowdfund": close}


# ---------------------------------------------------------------------------
# auction: contents are (highest bidder, highest bid, pot)

AUCTION_CLOSE_SLOT = 10


def _auction() -> dict[str, Handler]:
    def begin(ctx: CallContext, current: StateContents, token: str, reserve: int) -> HandlerResult:
        if reserve < 0:
            return Err(f"Reserve price must be non-negative, got {reserve}")
        return NewState((Key(""), Funds(reserve), Funds(0)), f"Auction opened for token {token}")

    def bid(ctx: CallContext, current: StateContents, amount: int) -> HandlerResult:
        bidder, highest, pot = current
        assert isinstance(bidder, Key) and isinstance(highest, Funds) and isinstance(pot, Funds)
        if amount <= highest.value:
            return Err(f"Bid of {amount} does not beat the current highest bid {highest.value}")
        assert ctx.caller is not None
        refund = ((bidder.value, pot.value),) if pot.value > 0 else ()
        return NewState((Key(ctx.caller), Funds(amount), Funds(amount)), f"New highest bid: {amount}", refund)

    def end(ctx: CallContext, current: StateContents) -> HandlerResult:
        bidder, highest, _ = current
        assert isinstance(bidder, Key) and isinstance(highest, Funds)
        if not bidder.value:
            return NewState((bidder, highest, Funds(0)), "Auction closed without bids")
        return NewState(
            (bidder, highest, Funds(0)),
            f"Auction closed: token transferred to {bidder.value} for {highest.value}",
        )

    return {
        "beginAuction": begin,
        "bid": bid,
        "endAuction": end,
        "beginAuctionSlotTrigger": lambda token, reserve: SlotAt(AUCTION_CLOSE_SLOT),
    }


_PACKS: dict[str, Callable[[], dict[str, Handler]]] = {
    "guessing_game": _guessing_game,
    "ping_pong": _ping_pong,
    "crowdfunding": _crowdfunding,
    "auction": _auction,
}

PACK_NAMES = tuple(_PACKS)

# protocol name -> pack, for the protocols shipped with the package
DEFAULT_PACK = {
    "StraightLineGuessingGame": "guessing_game",
    "ChoiceGuessingGame": "guessing_game",
    "RecGuessingGame": "guessing_game",
    "GuessingGame": "guessing_game",
    "PingPongRec": "ping_pong",
    "Crowdfunding": "crowdfunding",
    "Auction": "auction",
}


def register_pack(name: str) -> HandlerTable:
    """Return the read-only handler table of a built-in pack."""
    try:
        factory = _PACKS[name]
    except KeyError:
        raise KeyError(f"unknown logic pack {name!r}; choose from {', '.join(PACK_NAMES)}") from None
    return MappingProxyType(factory())
