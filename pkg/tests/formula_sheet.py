"""Hand-coded 2x2 agreement formulas, independent of the metrics module.

Cell layout: [[a, b], [c, d]] with rows = gold, columns = prediction.
"""
from __future__ import annotations

import math


def metrics_2x2(a, b, c, d):
    n = a + b + c + d
    precision0 = a / (a + c) if (a + c) else None
    recall0 = a / (a + b) if (a + b) else None
    precision1 = d / (b + d) if (b + d) else None
    recall1 = d / (c + d) if (c + d) else None

    def f1(p, r):
        if p is None or r is None or (p + r) == 0:
            return None
        return 2 * p * r / (p + r)

    accuracy = (a + d) / n
    p_o = accuracy
    p_e = ((a + b) * (a + c) + (c + d) * (b + d)) / (n * n)
    kappa = None if p_e == 1 else (p_o - p_e) / (1 - p_e)
    return {
        "class0": {"precision": precision0, "recall": recall0, "f1": f1(precision0, recall0),
                   "accuracy": accuracy},
        "class1": {"precision": precision1, "recall": recall1, "f1": f1(precision1, recall1),
                   "accuracy": accuracy},
        "overall_accuracy": accuracy,
        "kappa": kappa,
    }


def pearson_reference(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    vx = sum((a - mx) ** 2 for a in x)
    vy = sum((b - my) ** 2 for b in y)
    if vx == 0 or vy == 0:
        return None
    return cov / math.sqrt(vx * vy)
