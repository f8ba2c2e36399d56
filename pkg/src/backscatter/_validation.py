"""Small argument checks shared by the estimators and evaluators."""

import numpy as np

from .exceptions import DomainError, InputError


def check_positive(value, name, error=DomainError):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise error(f"{name} must be finite and > 0, got {value!r}")
    return value


def check_nonnegative(value, name, error=DomainError):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise error(f"{name} must be finite and >= 0, got {value!r}")
    return value


def check_unit_interval(value, name, *, closed_low=False, error=DomainError):
    """Check ``value`` lies in (0, 1], or [0, 1] when ``closed_low``."""
    v = float(value)
    low_ok = v >= 0 if closed_low else v > 0
    if not (np.isfinite(v) and low_ok and v <= 1):
        interval = "[0, 1]" if closed_low else "(0, 1]"
        raise error(f"{name} must lie in {interval}, got {value!r}")
    return v


def check_frequency_grid(frequencies, name="frequencies"):
    """Return ``frequencies`` as a 1-D float array, strictly increasing."""
    f = np.asarray(frequencies, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise InputError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(f)):
        raise InputError(f"{name} contains non-finite values")
    if f.size > 1 and np.any(np.diff(f) <= 0):
        raise InputError(f"{name} must be strictly increasing")
    return f


def uniform_step(frequencies, name="frequencies", rtol=1e-6):
    """Spacing of a uniform grid; raises if the grid is not uniform."""
    f = check_frequency_grid(frequencies, name)
    if f.size < 2:
        raise InputError(f"{name} needs at least two points to define a resolution")
    steps = np.diff(f)
    step = float(np.mean(steps))
    if np.max(np.abs(steps - step)) > rtol * step + 1e-12 * np.max(np.abs(f)):
        raise InputError(f"{name} must be uniformly spaced")
    return step


def check_band(band, name="band"):
    try:
        lo, hi = (float(b) for b in band)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} must be a (low, high) pair, got {band!r}") from exc
    if not (np.isfinite(lo) and np.isfinite(hi) and 0 <= lo < hi):
        raise InputError(f"{name} must satisfy 0 <= low < high, got {band!r}")
    return lo, hi
