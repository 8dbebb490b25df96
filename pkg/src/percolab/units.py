"""Density unit conversion. Internals use users per square meter."""

M2_PER_KM2 = 1e6


def from_per_km2(value):
    return value / M2_PER_KM2


def to_per_km2(value):
    return value * M2_PER_KM2
