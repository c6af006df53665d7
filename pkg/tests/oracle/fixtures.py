"""Hand fixtures shared by the brute-force oracle and the golden tests.

Ratings are ``(user, item, rating)`` triples with string ids; trust edges are
``(truster, trustee)`` pairs.
"""

THREE_USER = {
    "ratings": [
        ("q", "A", 5), ("q", "B", 3),
        ("x", "B", 4), ("x", "C", 2),
        # filler: shapes the item histograms
        ("f", "A", 4), ("f", "B", 3), ("f", "C", 1),
    ],
    "trust": [],
}

FOUR_USER = {
    "ratings": [
        ("q", "A", 5), ("q", "B", 2),
        ("x1", "A", 4), ("x1", "C", 3),
        ("x2", "B", 1), ("x2", "D", 5), ("x2", "A", 2),
        ("t", "C", 4), ("t", "D", 3), ("t", "B", 2),
    ],
    "trust": [("q", "x1"), ("q", "x2")],
}

FIVE_USER = {
    "ratings": [
        ("q", "I1", 5), ("q", "I2", 3), ("q", "I3", 4),
        ("a", "I1", 4), ("a", "I2", 2), ("a", "I4", 5),
        ("b", "I2", 3), ("b", "I3", 5), ("b", "T", 4),
        ("c", "I1", 1), ("c", "I5", 2), ("c", "T", 2),
        ("d", "I4", 3), ("d", "I5", 5), ("d", "T", 5),
    ],
    # q trusts the scorer b directly; z has no ratings at all
    "trust": [("q", "a"), ("q", "b"), ("q", "z"), ("a", "q"), ("c", "d"), ("b", "c")],
}

# (user, item) queries evaluated end to end on FIVE_USER
FIVE_USER_QUERIES = [("q", "T"), ("a", "T"), ("a", "I3"), ("c", "I2"), ("b", "I4"), ("q", "I9")]
