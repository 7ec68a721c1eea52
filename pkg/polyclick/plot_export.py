"""
Plot-ready CSV tables: S2 over the grid, and the S3 and S4 cuts at the
omega_2 grid point nearest 0, measured values next to model values.
"""

import logging
from pathlib import Path
from typing import List, Optional

import numpy as np

from polyclick import guards, utils
from polyclick.estimator.core import SpectraSet
from polyclick.polyspectra.analytic import ModelSpectra

logger = logging.getLogger("plot_export")

S2_FILE = "s2.csv"
S3_FILE = "s3_cut.csv"
S4_FILE = "s4_cut.csv"


def ring_background(values: np.ndarray) -> float:
    """Median over the outermost ring of a 1D or 2D grid."""
    values = np.asarray(values)
    if values.ndim == 1:
        return float(np.median(values[[0, -1]]))
    ring = np.concatenate((values[0, :], values[-1, :], values[1:-1, 0], values[1:-1, -1]))
    return float(np.median(ring))


def _background(values: np.ndarray, subtract: bool) -> float:
    return ring_background(values) if subtract else 0.0


def _column(values: Optional[np.ndarray], size: int) -> np.ndarray:
    return np.asarray(values) if values is not None else np.full(size, np.nan)


def _save(path: Path, header: List[str], columns: List[np.ndarray], force: bool):
    guards.can_write(path, force)
    np.savetxt(path, np.column_stack(columns), delimiter=",", header=",".join(header), comments="", fmt="%.17g")


def export(measured: SpectraSet, model: Optional[ModelSpectra], folder: Path, subtract_background: bool = False,
           force: bool = False) -> List[Path]:
    if model is not None and not np.allclose(model.grid.values, measured.grid.values, rtol=1e-12, atol=0):
        logger.warning("Model and measured spectra use different grids; model columns left empty.")
        model = None

    utils.ensure_folder(folder)
    omegas = measured.grid.values
    n = len(omegas)
    cut = measured.grid.nearest_index(0.0)
    written: List[Path] = []

    if measured.s2 is not None:
        model_s2 = model.s2 if model is not None else None
        values = measured.s2 - _background(measured.s2, subtract_background)
        model_column = _column(model_s2, n) - (_background(model_s2, subtract_background) if model_s2 is not None else 0)
        path = folder / S2_FILE
        _save(path, ["omega_khz", "value", "sigma", "model"], [omegas, values, measured.s2_sigma, model_column], force)
        written.append(path)

    if measured.s3 is not None:
        s3 = measured.s3 - _background(measured.s3.real, subtract_background)
        sigma = np.asarray(measured.s3_sigma)[:, cut]
        model_s3 = model.s3 if model is not None else None
        if model_s3 is not None:
            model_cut = (model_s3 - _background(model_s3.real, subtract_background))[:, cut]
        else:
            model_cut = np.full(n, np.nan + 1j * np.nan)
        path = folder / S3_FILE
        _save(path, ["omega_khz", "value_real", "value_imag", "sigma_real", "sigma_imag", "model_real", "model_imag"],
              [omegas, s3[:, cut].real, s3[:, cut].imag, sigma.real, sigma.imag, model_cut.real, model_cut.imag], force)
        written.append(path)

    if measured.s4 is not None:
        s4 = measured.s4 - _background(measured.s4, subtract_background)
        model_s4 = model.s4 if model is not None else None
        model_cut = (model_s4 - _background(model_s4, subtract_background))[:, cut] if model_s4 is not None else np.full(n, np.nan)
        path = folder / S4_FILE
        _save(path, ["omega_khz", "value", "sigma", "model"], [omegas, s4[:, cut], np.asarray(measured.s4_sigma)[:, cut], model_cut], force)
        written.append(path)

    logger.info(f"Wrote {len(written)} tables to [{folder}] (cut at omega_2 = {omegas[cut]:.6g} kHz).")
    return written
