"""Stored datasets and game tables shipped with the package.

``titanic.csv`` is the 2201-passenger Titanic table (class coded 1st=1,
2nd=2, 3rd=3, crew=4; age adult=0, child=1; sex male=0, female=1).
``titanic_game.csv`` is its full classification game, one row per mask.
"""

from __future__ import annotations

from importlib import resources

from ..data import Dataset, load_csv
from ..game import TabularGame, read_game_csv

FIXTURES = ("titanic",)


def path(filename: str):
    return resources.files(__name__).joinpath(filename)


def titanic_dataset() -> Dataset:
    with resources.as_file(path("titanic.csv")) as p:
        return load_csv(p, "survived", "yes")


def titanic_game() -> TabularGame:
    with path("titanic_game.csv").open("r", encoding="utf-8") as handle:
        return read_game_csv(handle)
