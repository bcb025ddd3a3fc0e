from .grid import (CHART, FREE, TORUS, DomainSpec, ScalarField2D, VectorField2D,
                   dealias_23, fourier_coefficient, gradient_spectral, grad_max)
from .biot_savart import biot_savart_free, biot_savart_image_sum, biot_savart_torus, velocity
from .stepping import EulerStepper, cfl_dt, step_rk4
from .semilagrangian import advect_semilagrangian, cubic_interpolate, periodic_cubic_sampler

__all__ = [
    "CHART", "FREE", "TORUS", "DomainSpec", "ScalarField2D", "VectorField2D",
    "dealias_23", "fourier_coefficient", "gradient_spectral", "grad_max",
    "biot_savart_free", "biot_savart_image_sum", "biot_savart_torus", "velocity",
    "EulerStepper", "cfl_dt", "step_rk4",
    "advect_semilagrangian", "cubic_interpolate", "periodic_cubic_sampler",
]
