"""
Module of custom data types.
"""

import typing as _t

import numpy as _np
import numpy.typing as _npt


CMatrix = _npt.NDArray[_np.complex128]
CVector = _npt.NDArray[_np.complex128]
RVector = _npt.NDArray[_np.float64]
IndexArray = _npt.NDArray[_np.int64]
BitArray = _npt.NDArray[_np.uint8]
Rng = _np.random.Generator
Record = _t.Dict[str, _t.Any]
