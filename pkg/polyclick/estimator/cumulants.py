"""
Unbiased joint cumulant estimators (k-statistics) of orders 1 to 4.

Samples run along `axis`; any other axes are carried along, so many
estimators can be evaluated at once. With centered samples x, y, z, w and
sample means written <.>:

    c2 = m/(m-1) <xy>
    c3 = m^2/((m-1)(m-2)) <xyz>
    c4 = m^2/((m-1)(m-2)(m-3)) [(m+1) <xyzw> - (m-1)(<xy><zw> + <xz><yw> + <xw><yz>)]
"""

import numpy as np

from polyclick import errors


def joint_cumulant(*variables: np.ndarray, axis: int = 0) -> np.ndarray:
    order = len(variables)
    if not 1 <= order <= 4:
        raise errors.BadInputError("order", f"joint cumulants are implemented for orders 1 to 4, got {order}")

    arrays = np.broadcast_arrays(*[np.asarray(variable) for variable in variables])
    arrays = [np.moveaxis(array, axis, 0) for array in arrays]
    m = arrays[0].shape[0]
    if m < order:
        raise errors.CumulantOrderError(order, m)

    if order == 1:
        return arrays[0].mean(axis=0)

    centered = [array - array.mean(axis=0) for array in arrays]
    if order == 2:
        x, y = centered
        return m / (m - 1) * (x * y).mean(axis=0)
    if order == 3:
        x, y, z = centered
        return m ** 2 / ((m - 1) * (m - 2)) * (x * y * z).mean(axis=0)

    x, y, z, w = centered
    pairs = (x * y).mean(axis=0) * (z * w).mean(axis=0) \
        + (x * z).mean(axis=0) * (y * w).mean(axis=0) \
        + (x * w).mean(axis=0) * (y * z).mean(axis=0)
    return m ** 2 / ((m - 1) * (m - 2) * (m - 3)) * ((m + 1) * (x * y * z * w).mean(axis=0) - (m - 1) * pairs)


def cumulant(samples: np.ndarray, order: int, axis: int = 0) -> np.ndarray:
    """Univariate k-statistic of the given order."""
    return joint_cumulant(*([samples] * order), axis=axis)


def power_cumulant(centered: np.ndarray) -> np.ndarray:
    """c2(a_k, a_k*) for centered coefficients of shape (..., m, n)."""
    m = centered.shape[-2]
    if m < 2:
        raise errors.CumulantOrderError(2, m)
    return m / (m - 1) * (np.abs(centered) ** 2).mean(axis=-2)


def bispectrum_cumulant(centered_full: np.ndarray, half_width: int) -> np.ndarray:
    """
    c3(a_k1, a_k2, a_(k1+k2)*) for k1, k2 in -K..K.

    `centered_full` has shape (..., m, 4K + 1) holding k = -2K..2K.
    """
    m = centered_full.shape[-2]
    if m < 3:
        raise errors.CumulantOrderError(3, m)

    offset = 2 * half_width
    ks = np.arange(-half_width, half_width + 1)
    y = centered_full[..., offset + ks]
    result = np.empty(centered_full.shape[:-2] + (len(ks), len(ks)), dtype=complex)
    for row, k1 in enumerate(ks):
        x = centered_full[..., offset + k1][..., None]
        z = np.conj(centered_full[..., offset + k1 + ks])
        result[..., row, :] = (x * y * z).mean(axis=-2)
    return m ** 2 / ((m - 1) * (m - 2)) * result


def trispectrum_cut_cumulant(centered: np.ndarray) -> np.ndarray:
    """c4(a_k1, a_k1*, a_k2, a_k2*) for centered coefficients of shape (..., m, n); real."""
    m = centered.shape[-2]
    if m < 4:
        raise errors.CumulantOrderError(4, m)

    power = np.abs(centered) ** 2
    fourth = np.einsum("...fi,...fj->...ij", power, power) / m
    mean_power = power.mean(axis=-2)
    same = np.einsum("...fi,...fj->...ij", centered, centered) / m
    mixed = np.einsum("...fi,...fj->...ij", centered, np.conj(centered)) / m
    pairs = mean_power[..., :, None] * mean_power[..., None, :] + np.abs(same) ** 2 + np.abs(mixed) ** 2
    return m ** 2 / ((m - 1) * (m - 2) * (m - 3)) * ((m + 1) * fourth - (m - 1) * pairs)
