"""Brute-force metric values for the three-scene fixture in tests/unit/test_metrics.cpp."""
import math

T = 4
LAT, LON = 3.0, 6.0


def truth(scene):
    starts = [(0.0, 0.0), (0.0, 10.0)]
    out = []
    for a, (x0, y0) in enumerate(starts):
        if scene == 2 and a == 0:
            out.append([(x0, y0)] * T)
        else:
            out.append([(x0 + t, y0) for t in range(1, T + 1)])
    return out


# (probability, per-agent constant offsets)
MODES = [
    [(0.5, [(0, 0), (0, 0)]), (0.3, [(0, 4), (0, 0)]), (0.2, [(1, 0), (1, 0)])],
    [(0.85, [(0, 0), (0, 3.5)]), (0.15, [(1, 1), (1, 1)])],
    [(0.7, [(7, 0), (0, 0)]), (0.3, [(2, 0), (0, 5)])],
]


def hits(offsets):
    # ground-truth heading is 0 everywhere, so lon = dx and lat = dy
    return all(abs(dx) <= LON and abs(dy) <= LAT for dx, dy in offsets)


def bucket(scene):
    return "stationary" if scene == 2 else "straight"


def ap(entries, positives):
    entries = sorted(entries, key=lambda e: -e[0])
    tp = fp = 0
    curve = []
    for _, outcome in entries:
        if outcome < 0:
            continue
        if outcome > 0:
            tp += 1
        else:
            fp += 1
        curve.append((tp / positives, tp / (tp + fp)))
    total = 0.0
    for i in range(11):
        r = i / 10
        total += max([p for rec, p in curve if rec >= r - 1e-12], default=0.0)
    return total / 11


def map_score(soft):
    per = {}
    pos = {}
    for s, modes in enumerate(MODES):
        b = bucket(s)
        pos[b] = pos.get(b, 0) + 1
        h = [hits(o) for _, o in modes]
        tp = None
        for i, (p, _) in enumerate(modes):
            if h[i] and (tp is None or p > modes[tp][0]):
                tp = i
        for i, (p, _) in enumerate(modes):
            outcome = 1 if i == tp else (-1 if h[i] and soft else 0)
            per.setdefault(b, []).append((p, outcome))
    return sum(ap(per[b], pos[b]) for b in per) / len(per)


for s, modes in enumerate(MODES):
    ade = min(sum(math.hypot(*o) for o in offs) / 2 for _, offs in modes)
    print(f"scene {s}: minADE {ade!r} minFDE {ade!r} miss {not any(hits(o) for _, o in modes)}")
print("mAP", repr(map_score(False)))
print("soft mAP", repr(map_score(True)))
