"""Shared fixtures: small hand-written datasets used across the suite."""

from __future__ import annotations

import random

import pytest

from weaver.tabular import load_dataset

COUNTRIES_CSV = """\
country,continent,year,lifeExp,gdpPercap
Algeria,Africa,2007,72.3,6223.4
Angola,Africa,2007,42.7,4797.2
Benin,Africa,2007,56.7,1441.3
Gabon,Africa,2007,56.7,13206.5
Chad,Africa,2007,50.7,1704.1
Chile,Americas,2007,78.6,13171.6
Canada,Americas,2007,80.7,36319.2
China,Asia,2007,73.0,4959.1
Japan,Asia,2007,82.6,31656.1
France,Europe,2007,80.7,30470.0
Germany,Europe,2007,79.4,32170.0
"""

TIMESERIES_CSV = """\
year,count,sex
1952,10,F
1957,14,F
1962,19,F
1967,25,F
1972,33,F
1952,90,M
1957,88,M
1962,85,M
1967,80,M
1972,76,M
"""

MOVIES_CSV = """\
title,genre,studio,gross,rating
A,Action,Alpha,120.5,7.1
B,Action,Beta,80.0,6.5
C,Drama,Alpha,45.2,8.0
D,Drama,Gamma,60.1,7.7
E,Comedy,Beta,95.9,6.9
F,Comedy,Gamma,30.4,5.8
G,Action,Alpha,200.0,7.9
H,Drama,Beta,15.3,8.4
"""


@pytest.fixture
def countries():
    return load_dataset(COUNTRIES_CSV, "countries", dataset_id="ds-countries")


@pytest.fixture
def timeseries():
    return load_dataset(TIMESERIES_CSV, "olympics", dataset_id="ds-olympics")


@pytest.fixture
def movies():
    return load_dataset(MOVIES_CSV, "movies", dataset_id="ds-movies")


def random_dataset(rng: random.Random, max_rows: int = 500) -> str:
    """Random mixed-type CSV text for fuzzing, always parseable."""
    n = rng.randint(5, max_rows)
    cats = ["red", "green", "blue", "gold"]
    lines = ["label,group,year,metric,score"]
    for i in range(n):
        year = rng.randint(1950, 2020)
        metric = round(rng.uniform(-50, 150), 3)
        score = round(rng.gauss(10, 4), 4)
        lines.append(f"item{i},{rng.choice(cats)},{year},{metric},{score}")
    return "\n".join(lines) + "\n"
