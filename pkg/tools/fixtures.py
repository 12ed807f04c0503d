# tools/fixtures.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# The small worked examples that the analyses are checked against and that
# the figure commands draw, built in one place so tests, the CLI and the
# figures agree on node order and edge weights:
#
#   seven_node_graph()     undirected 7-node graph: two triangles joined by a
#                          path through a middle node (nodes 1..7)
#   four_agent_benefits()  4-agent benefits matrix where agent 4 completes
#                          every cycle
#   block_pattern()        the 3x3 cross-effect pattern C of the block market
#
# Node numbers in comments are 1-based; array indices are 0-based.
# ============================================================================

import numpy as np

from core.matrix_core import SquareMatrix


# ── SEVEN-NODE GRAPH ───────────────────────────────────────────────────

# Undirected edges, 1-based.
SEVEN_NODE_EDGES = [(1, 3), (2, 3), (3, 4), (4, 5), (5, 6), (5, 7), (1, 2), (6, 7)]

# Drawing coordinates; the mirror about x = 1 swaps 3 and 5.
SEVEN_NODE_POSITIONS = {
    1: (3.0, 1.0), 2: (3.0, 3.0), 3: (2.0, 2.0), 4: (1.0, 2.0),
    5: (0.0, 2.0), 6: (-1.0, 1.0), 7: (-1.0, 3.0),
}


def seven_node_graph() -> SquareMatrix:
    a = np.zeros((7, 7))
    for i, j in SEVEN_NODE_EDGES:
        a[i - 1, j - 1] = 1.0
        a[j - 1, i - 1] = 1.0
    return SquareMatrix(a, labels=[str(k) for k in range(1, 8)])


# ── FOUR-AGENT BENEFITS MATRIX ─────────────────────────────────────────

# Arrow i -> j with weight w is stored at B[i, j]: row i is the beneficiary
# of j's action.
FOUR_AGENT_ARROWS = [
    (1, 2, 5.0), (3, 2, 6.0), (3, 1, 7.0),
    (1, 4, 0.5), (4, 1, 0.5),
    (4, 3, 0.5), (3, 4, 0.5),
    (4, 2, 0.5), (2, 4, 0.5),
]

FOUR_AGENT_POSITIONS = {1: (0.0, 0.0), 2: (3.0, -4.0), 3: (-3.0, -4.0), 4: (0.0, -2.3)}


def four_agent_benefits() -> SquareMatrix:
    b = np.zeros((4, 4))
    for i, j, w in FOUR_AGENT_ARROWS:
        b[i - 1, j - 1] = w
    return SquareMatrix(b, labels=["1", "2", "3", "4"])


# ── BLOCK MARKET PATTERN ───────────────────────────────────────────────

BLOCK_PATTERN = np.array([
    [-1.0, 0.15, 0.7],
    [0.15, -1.0, 0.6],
    [0.7, 0.6, -1.0],
])


def block_pattern() -> np.ndarray:
    return BLOCK_PATTERN.copy()
