"""Hazard gridworlds built from plain-text layouts.

Layout characters::

    S  start (exactly one)
    G  goal: reward 1 on entry, ends the episode
    H  hazard: cost 1 on entry
    .  free
    #  wall: cannot be entered

Moves are deterministic; bumping into a wall or the border leaves the
agent in place (and re-collects that cell's reward/cost).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import InputError
from .tabular import TabularCMDP, TabularEnv

DEFAULT_LAYOUT = """\
S....
.H...
..H..
...H.
....G
"""

# up, right, down, left
MOVES = ((-1, 0), (0, 1), (1, 0), (0, -1))


def parse_layout(text: str) -> list[str]:
    rows = [line.strip() for line in text.splitlines()]
    rows = [r for r in rows if r and not r.startswith(";")]
    if not rows:
        raise InputError("empty grid layout")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InputError("grid layout rows must all have the same length")
    bad = set("".join(rows)) - set("SGH.#")
    if bad:
        raise InputError(f"unknown layout characters: {''.join(sorted(bad))}")
    flat = "".join(rows)
    if flat.count("S") != 1:
        raise InputError("layout needs exactly one start cell 'S'")
    if "G" not in flat:
        raise InputError("layout needs at least one goal cell 'G'")
    return rows


def grid_cmdp(layout: str | list[str] = DEFAULT_LAYOUT, gamma: float = 0.99) -> TabularCMDP:
    rows = parse_layout(layout) if isinstance(layout, str) else parse_layout("\n".join(layout))
    n_rows, n_cols = len(rows), len(rows[0])
    S = n_rows * n_cols
    P = np.zeros((S, len(MOVES), S))
    reward = np.zeros(S)
    cost = np.zeros(S)
    terminal = np.zeros(S, dtype=bool)
    start = 0
    for r in range(n_rows):
        for c in range(n_cols):
            s = r * n_cols + c
            ch = rows[r][c]
            if ch == "S":
                start = s
            elif ch == "G":
                reward[s] = 1.0
                terminal[s] = True
            elif ch == "H":
                cost[s] = 1.0
            for a, (dr, dc) in enumerate(MOVES):
                rr, cc = r + dr, c + dc
                if ch == "#" or not (0 <= rr < n_rows and 0 <= cc < n_cols) or rows[rr][cc] == "#":
                    P[s, a, s] = 1.0
                else:
                    P[s, a, rr * n_cols + cc] = 1.0
    return TabularCMDP(P, reward, cost, gamma, start, terminal)


class HazardGrid(TabularEnv):
    """Gridworld with four moves, hazards and a terminal goal (default 5x5)."""

    def __init__(self, layout: str | list[str] = DEFAULT_LAYOUT, gamma: float = 0.99, episode_cap: int | None = 50):
        self.layout = parse_layout(layout) if isinstance(layout, str) else parse_layout("\n".join(layout))
        super().__init__(grid_cmdp(self.layout, gamma), episode_cap)

    @classmethod
    def from_file(cls, path, gamma: float = 0.99, episode_cap: int | None = 50) -> "HazardGrid":
        return cls(Path(path).read_text(), gamma=gamma, episode_cap=episode_cap)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.layout), len(self.layout[0])

    def position(self) -> tuple[int, int]:
        return divmod(self.state, self.shape[1])
