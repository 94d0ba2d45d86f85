"""Exhaustive 2^n subset search for the minimal angle cover."""

from rissim.scene import ReceiverRole


def brute_force_cover(angles, columns, receivers):
    """Return (angles, feasible) by scanning every non-empty subset bitmask.

    ``columns`` maps receiver name -> list of powers aligned with ``angles``.
    """
    n = len(angles)
    best = None
    for mask in range(1, 1 << n):
        chosen = [i for i in range(n) if mask >> i & 1]
        ok = True
        for r in receivers:
            vals = [columns[r.name][i] for i in chosen]
            if r.role is ReceiverRole.INTERFERED:
                ok = all(v < r.threshold_dbm for v in vals)
            else:
                ok = any(v >= r.threshold_dbm for v in vals)
            if not ok:
                break
        if ok:
            key = (len(chosen), sorted(angles[i] for i in chosen))
            if best is None or key < best:
                best = key
    if best is None:
        return None, False
    return tuple(best[1]), True


def preferred_angle(angles, column, interfered):
    sign = -1 if interfered else 1
    top = max(sign * v for v in column)
    return min((a for a, v in zip(angles, column) if sign * v == top), key=lambda a: (abs(a), a))
