"""Malformed parser inputs with the expected (line, column) of the error."""

# (text, line, column) for expressions
MALFORMED_EXPR = [
    ("1/(1-z", 1, 7),
    ("1/(1-z))", 1, 8),
    ("z^(1/3)", 1, 3),
    ("q^(1/4)", 1, 3),
    ("", 1, 1),
    ("1+", 1, 3),
    ("*z", 1, 1),
    ("foo", 1, 1),
    ("z^", 1, 3),
    ("delta(2)", 1, 7),
    ("1/0", 1, 2),
    ("z w", 1, 3),
    ("2..3", 1, 2),
    ("delta()", 1, 7),
]

# (text, line, column) for matrix documents
MALFORMED_QMX = [
    ("n = 2\nR[3,1|1,1] = 1", 2, 3),
    ("n = 2\nR[1,1|1,1] = 1\nR[1,1|1,1] = 2", 3, 1),
    ("n = 2\nR[1,1|1,1] =", 2, 13),
    ("n = 2\nR[1,1|1,1] = 1/(1-z", 2, 20),
    ("n = 2\nrule = weird", 2, 8),
    ("n = 2\nvar z region=Middle", 2, 7),
    ("R[1,1|1,1] = 1", 1, 1),
    ("n = 2\nbogus line", 2, 1),
]
