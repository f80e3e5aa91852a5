# Pass/fail ledger entries for verification reports.
#
# Part of flagmixvol

import math
from typing import Any, Dict, Optional

import numpy as np

from .Grassmann import MCEstimate


class Check:
    def __init__(self, name: str, value: Any, expected: Any, *, std_error: float = 0.0,
                 tolerance: float = 0.0, sigmas: float = 3.0, passed: Optional[bool] = None,
                 note: Optional[str] = None) -> None:
        self.name: str = name
        self.value: Any = value
        self.expected: Any = expected
        self.std_error: float = float(std_error)
        self.tolerance: float = float(tolerance)
        self.sigmas: float = sigmas
        self.note: Optional[str] = note

        if passed is None:
            diff = np.abs(np.asarray(value, dtype=float) - np.asarray(expected, dtype=float))
            bound = max(sigmas * self.std_error, self.tolerance)
            passed = bool(np.all(diff <= bound))
        self.passed: bool = passed

    def __str__(self) -> str:
        status = 'PASS' if self.passed else 'FAIL'
        text = f'{status}  {self.name}: {_fmt(self.value)} vs {_fmt(self.expected)}'
        if self.std_error:
            text += f' (σ={self.std_error:.3g})'
        if self.note:
            text += f'  [{self.note}]'
        return text

    def __bool__(self) -> bool:
        return self.passed

    @staticmethod
    def against(name: str, estimate: MCEstimate, expected: float, *, sigmas: float = 3.0,
                rel: float = 0.0, expected_error: float = 0.0, note: Optional[str] = None):
        """Compare a Monte Carlo estimate with a reference value"""
        sigma = math.hypot(estimate.std_error, expected_error)
        return Check(name, estimate.mean, expected, std_error=sigma, tolerance=rel * abs(expected),
                     sigmas=sigmas, passed=estimate.agrees(expected, sigmas=sigmas, rel=rel,
                                                           expected_error=expected_error), note=note)

    @staticmethod
    def compare(name: str, value: Any, expected: Any, tolerance: float, note: Optional[str] = None):
        """Deterministic comparison to an absolute tolerance"""
        return Check(name, value, expected, tolerance=tolerance, note=note)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'value': _plain(self.value),
            'expected': _plain(self.expected),
            'std_error': self.std_error,
            'tolerance': self.tolerance,
            'passed': self.passed,
            'note': self.note,
        }


def _plain(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


def _fmt(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return f'{value:.8g}'
    if isinstance(value, np.ndarray):
        return np.array2string(value, precision=6)
    return str(value)
