from .functionals import (
    Functional, CoordE, CoordB, UnknownFunctional, NonFiniteValue,
    I1, I2, H, S_CONJ, S_FORMAL, H_FORMAL, G, REGISTRY,
    get_functional, evaluate, flow_rate, flow_rate_scale, gradient_check, maxwell_flow,
)
