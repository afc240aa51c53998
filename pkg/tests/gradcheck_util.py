"""Central finite-difference gradient checking against analytic backward passes."""

import numpy as np


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a.ravel())
    nb = np.linalg.norm(b.ravel())
    if na == 0.0 and nb == 0.0:
        return 0.0
    return float(np.linalg.norm((a - b).ravel()) / max(na, nb))


def numeric_grad(scalar_fn, array: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of scalar_fn with respect to `array`, mutated in place."""
    grad = np.zeros_like(array)
    flat = array.ravel()
    grad_flat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        f_plus = scalar_fn()
        flat[i] = orig - h
        f_minus = scalar_fn()
        flat[i] = orig
        grad_flat[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def check_layer(layer, x: np.ndarray, rng: np.random.Generator,
                train: bool = True, tol: float = 1e-4, reseed=None) -> dict:
    """Compare every parameter gradient and the input gradient of `layer`
    against central finite differences of a random linear functional of
    the output. Returns the per-tensor relative errors.

    `reseed` re-arms stochastic layers (dropout) before every forward so
    the finite-difference surface is deterministic.
    """
    def fwd():
        if reseed is not None:
            reseed(layer)
        return layer.forward(x, train)

    projection = rng.standard_normal(fwd().shape)

    def loss():
        return float(np.sum(fwd() * projection))

    loss()  # arm caches on the unperturbed point
    dx_analytic = layer.backward(projection.copy())
    analytic_grads = {name: g.copy() for name, g in layer.grads().items()}

    errors = {}
    for name, param in layer.params().items():
        if name not in analytic_grads:   # e.g. batchnorm running stats
            continue
        errors[name] = relative_error(analytic_grads[name], numeric_grad(loss, param))
    errors["input"] = relative_error(dx_analytic, numeric_grad(loss, x))
    for name, err in errors.items():
        assert err < tol, f"{layer.name}.{name}: relative error {err:.3e} >= {tol}"
    return errors
