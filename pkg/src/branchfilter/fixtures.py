"""Simulated samples of the five reference scenarios (30 generations, x0 = 100).

The fifth scenario repeats (pi, lam) = (0.4, 0.6) and is meant to be
filtered with ``x0`` treated as unknown.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .model import ModelParams, Trajectory


@dataclass(frozen=True)
class Fixture:
    name: str
    params: ModelParams
    x0_known: bool
    x: tuple
    z: tuple

    @property
    def trajectory(self) -> Trajectory:
        return Trajectory(self.x, self.z)


FIXTURES = (
    Fixture(
        name="pi0.2_lambda0.31",
        params=ModelParams(pi=0.2, lam=0.31, phi=0.5),
        x0_known=True,
        x=(
        100, 111, 111, 109, 124, 111, 127, 142, 157, 159, 179,
        193, 193, 209, 206, 218, 263, 287, 323, 348, 392, 412,
        443, 457, 500, 550, 599, 633, 686, 744, 817,
        ),
        z=(
        13, 25, 28, 20, 37, 23, 23, 28, 36, 26, 30,
        44, 42, 47, 42, 35, 47, 55, 70, 61, 80, 87,
        105, 95, 102, 98, 121, 142, 136, 139, 173,
        ),
    ),
    Fixture(
        name="pi0.4_lambda0.6",
        params=ModelParams(pi=0.4, lam=0.6, phi=0.5),
        x0_known=True,
        x=(
        100, 105, 122, 148, 162, 172, 172, 180, 205, 208, 222,
        273, 304, 308, 333, 353, 392, 415, 451, 450, 452, 470,
        495, 546, 593, 663, 713, 742, 807, 854, 922,
        ),
        z=(
        44, 34, 46, 56, 59, 79, 57, 62, 80, 88, 76,
        100, 139, 117, 148, 144, 155, 161, 187, 199, 178, 185,
        198, 204, 228, 270, 304, 311, 352, 349, 360,
        ),
    ),
    Fixture(
        name="pi0.6_lambda0.97",
        params=ModelParams(pi=0.6, lam=0.97, phi=0.5),
        x0_known=True,
        x=(
        100, 103, 113, 98, 111, 113, 126, 141, 150, 163, 180,
        190, 217, 232, 247, 263, 264, 277, 325, 371, 423, 413,
        437, 479, 491, 513, 570, 615, 610, 628, 684,
        ),
        z=(
        60, 61, 78, 60, 69, 72, 75, 81, 92, 104, 108,
        111, 132, 149, 151, 162, 157, 165, 181, 213, 266, 233,
        256, 296, 302, 307, 348, 389, 371, 379, 392,
        ),
    ),
    Fixture(
        name="pi0.8_lambda1.47",
        params=ModelParams(pi=0.8, lam=1.47, phi=0.5),
        x0_known=True,
        x=(
        100, 102, 99, 99, 100, 109, 120, 125, 153, 173, 190,
        216, 217, 238, 257, 275, 279, 289, 337, 360, 353, 389,
        411, 431, 445, 463, 500, 533, 602, 654, 722,
        ),
        z=(
        81, 88, 79, 83, 80, 90, 96, 96, 122, 132, 149,
        173, 179, 189, 206, 223, 231, 237, 269, 297, 287, 312,
        331, 348, 372, 383, 406, 428, 482, 515, 573,
        ),
    ),
    Fixture(
        name="pi0.4_lambda0.6_unknown_x0",
        params=ModelParams(pi=0.4, lam=0.6, phi=0.5),
        x0_known=False,
        x=(
        100, 99, 109, 125, 134, 150, 157, 187, 204, 218, 241,
        238, 258, 288, 294, 321, 333, 357, 410, 433, 483, 518,
        555, 607, 613, 659, 714, 783, 886, 984, 1030,
        ),
        z=(
        41, 42, 42, 53, 52, 54, 64, 73, 85, 80, 103,
        90, 100, 127, 114, 135, 141, 120, 154, 176, 193, 211,
        223, 264, 250, 268, 291, 302, 327, 411, 416,
        ),
    ),
)

BY_NAME = {f.name: f for f in FIXTURES}


def get_fixture(key) -> Fixture:
    """Look up a fixture by name or by 0-based position."""
    if isinstance(key, int):
        return FIXTURES[key]
    try:
        return BY_NAME[key]
    except KeyError:
        raise KeyError(f"unknown fixture {key!r}; choose from {sorted(BY_NAME)}") from None


def fixture_csv(fixture: Fixture) -> str:
    lines = ["n,x,z"]
    lines += [f"{n},{x},{z}" for n, (x, z) in enumerate(zip(fixture.x, fixture.z))]
    return "\n".join(lines) + "\n"


def fixtures_digest() -> str:
    """SHA-256 over the CSV rendering of all fixtures, in order."""
    h = hashlib.sha256()
    for f in FIXTURES:
        h.update(f.name.encode())
        h.update(fixture_csv(f).encode())
    return h.hexdigest()
