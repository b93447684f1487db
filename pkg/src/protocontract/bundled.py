"""Protocol sources and scenarios shipped inside the package."""

from __future__ import annotations

from importlib import resources

# file stem -> protocol name, in the order the protocols are introduced
PROTOCOLS = {
    "straight_line_guessing_game": "StraightLineGuessingGame",
    "choice_guessing_game": "ChoiceGuessingGame",
    "rec_guessing_game": "RecGuessingGame",
    "guessing_game": "GuessingGame",
    "ping_pong": "PingPongRec",
    "crowdfunding": "Crowdfunding",
    "auction": "Auction",
}


def protocol_source(stem: str) -> str:
    return resources.files(__package__).joinpath("protocols", f"{stem}.psc").read_text(encoding="utf-8")


def scenario_source(stem: str) -> str:
    return resources.files(__package__).joinpath("scenarios", f"{stem}.json").read_text(encoding="utf-8")
