"""Built-in Fourier initial data and the tabulated-file loader."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .spectral import FourierField, GridD

__all__ = ["default_initial_data", "gaussian_data", "anisotropic_data",
           "zero_data", "builtin", "load_tabulated", "BUILTINS"]

SUPPORT = 4.0


def _sample_grid(d: int, half: float = SUPPORT + 0.5, n: int = None) -> GridD:
    n = n or {1: 257, 2: 65, 3: 33}[d]
    return GridD.cube(d, -half, half + 2 * half / (n - 1), n)


def _radial_profile(k_norm):
    g = np.exp(-8.0 * (k_norm - 1.0) ** 2) * np.exp(-(k_norm**2) / 32.0)
    return np.where(k_norm <= SUPPORT, g, 0.0)


def default_initial_data(d: int) -> FourierField:
    """``exp(-8(|k|-1)^2) exp(-|k|^2/32)``, cut off for ``|k| > 4``."""
    def fn(k):
        return _radial_profile(np.linalg.norm(k, axis=-1)).astype(complex)
    return FourierField.from_function(fn, _sample_grid(d), support_radius=SUPPORT)


def gaussian_data(d: int, width: float = 1.0) -> FourierField:
    """``exp(-|k|^2 / width^2)``; not compactly supported."""
    def fn(k):
        return np.exp(-np.sum(np.asarray(k) ** 2, axis=-1) / width**2).astype(complex)
    grid = _sample_grid(d)
    return FourierField(grid, fn(grid.mesh()), closure=fn)


def anisotropic_data(d: int) -> FourierField:
    """Default radial bump modulated by ``1 + 0.5 k_1/|k|`` and a phase ``exp(i k_2/2)``."""
    def fn(k):
        k = np.asarray(k, dtype=float)
        r = np.linalg.norm(k, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cosine = np.where(r > 0, k[..., 0] / np.where(r > 0, r, 1.0), 0.0)
        phase = np.exp(0.5j * k[..., 1]) if k.shape[-1] > 1 else 1.0
        return _radial_profile(r) * (1.0 + 0.5 * cosine) * phase
    return FourierField.from_function(fn, _sample_grid(d), support_radius=SUPPORT)


def zero_data(d: int) -> FourierField:
    def fn(k):
        return np.zeros(np.asarray(k).shape[:-1], dtype=complex)
    return FourierField.from_function(fn, _sample_grid(d), support_radius=0.0)


BUILTINS = {
    "default": default_initial_data,
    "gaussian": gaussian_data,
    "anisotropic": anisotropic_data,
    "zero": zero_data,
}


def builtin(name: str, d: int) -> FourierField:
    try:
        return BUILTINS[name](d)
    except KeyError:
        raise ConfigurationError(
            f"unknown initial data {name!r}; known: {', '.join(sorted(BUILTINS))}") from None


def load_tabulated(path, d: int, support_radius: float = None) -> FourierField:
    """Read ``k_1,...,k_d,re,im`` rows on a uniform tensor grid.

    Rows may come in any order; a header line is optional.  Off-grid values
    are interpolated (cubic).  With ``support_radius`` the data is taken to
    vanish beyond that radius.
    """
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in rec])
            except ValueError:
                if lineno == 1:
                    continue
                raise ConfigurationError(f"{path}:{lineno}: non-numeric entry") from None
            if len(rows[-1]) != d + 2:
                raise ConfigurationError(
                    f"{path}:{lineno}: expected {d + 2} columns, got {len(rows[-1])}")
    if not rows:
        raise ConfigurationError(f"{path}: no data rows")
    data = np.array(rows)
    axes = [np.unique(data[:, j]) for j in range(d)]
    shape = tuple(len(a) for a in axes)
    if int(np.prod(shape)) != len(data):
        raise ConfigurationError(f"{path}: rows do not form a complete tensor grid")
    grid = GridD.from_nodes(*axes)
    values = np.zeros(shape, dtype=complex)
    index = tuple(np.searchsorted(axes[j], data[:, j]) for j in range(d))
    values[index] = data[:, d] + 1j * data[:, d + 1]
    return FourierField(grid, values, support_radius=support_radius)
