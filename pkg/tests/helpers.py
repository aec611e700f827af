"""Shared test helpers."""
import numpy as np

from eulerkorteweg.model import ConservedState


def random_states(rng, n, rho=(0.5, 2.0), vel=1.0):
    rho_ = rng.uniform(*rho, n)
    return np.stack([rho_, rho_ * rng.uniform(-vel, vel, n), rho_ * rng.uniform(-vel, vel, n)])


def smooth_state(model, n, length=1.0, amp=0.1, u_amp=0.05):
    x = np.arange(n) * length / n
    k = 2 * np.pi / length
    h = 1.0 + amp * np.sin(k * x) + 0.3 * amp * np.cos(2 * k * x)
    u = u_amp * np.cos(k * x)
    return ConservedState.from_profile(model, 0.0, length, h, u)


# acceptance results: criterion -> list of (part, passed, detail)
ACCEPTANCE = {}


def record(criterion, part, passed, detail):
    """Store one acceptance check and print its line."""
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
    print(f"criterion {criterion} [{part}]: {'PASS' if passed else 'FAIL'}  {detail}")
    return bool(passed)


def acceptance_lines():
    lines = []
    for crit in sorted(ACCEPTANCE, key=int):
        parts = ACCEPTANCE[crit]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAILED'} ({d})" for name, good, d in parts)
        lines.append(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  {detail}")
    return lines
