"""Shared generators and finite-difference oracles for the test suite."""

import math

import numpy as np

from semisub.expr import Call, Num, Sym, eval_value, parse
from semisub.geometry import Chart, FrameModel
from semisub.models import builtin_model, model_from_dict

COORDS = ("x", "y", "z")
CONSTS = ("a", "b")


# ---------------------------------------------------------------------------
# random expression ASTs

def _leaf(rng):
    r = rng.random()
    if r < 0.45:
        axis = int(rng.integers(3))
        return Sym(COORDS[axis], axis)
    if r < 0.65:
        return Sym(CONSTS[rng.integers(2)], None)
    return Num(round(float(rng.uniform(0.1, 2.0)), 4))


def _guarded(rng, sub):
    # keep args of log/sqrt and denominators inside a safe band
    return Num(2.0) + Call("tanh", sub)


def random_expr(rng, depth):
    """A random AST of depth <= depth using every node type; arguments of
    partial functions are banded so the expression is defined on the test
    box."""
    if depth <= 0:
        return _leaf(rng)
    r = rng.random()
    if r < 0.16:
        return random_expr(rng, depth - 1) + random_expr(rng, depth - 1)
    if r < 0.30:
        return random_expr(rng, depth - 1) - random_expr(rng, depth - 1)
    if r < 0.46:
        return random_expr(rng, depth - 1) * random_expr(rng, depth - 1)
    if r < 0.56:
        return random_expr(rng, depth - 1) / _guarded(rng, random_expr(rng, depth - 1))
    if r < 0.62:
        return -random_expr(rng, depth - 1)
    if r < 0.72:
        n = int(rng.choice([2, 3, -1, -2]))
        base = (
            _guarded(rng, random_expr(rng, depth - 1))
            if n < 0
            else random_expr(rng, depth - 1)
        )
        return base**n
    fn = str(rng.choice(["exp", "sin", "cos", "sinh", "cosh", "tanh", "log", "sqrt"]))
    sub = random_expr(rng, depth - 1)
    if fn in ("log", "sqrt"):
        return Call(fn, _guarded(rng, sub))
    if fn in ("exp", "sinh", "cosh"):
        return Call(fn, Call("tanh", sub))
    return Call(fn, sub)


def random_tame_expr(rng, points, constants, depth=6, value_cap=50.0):
    """Draw random expressions until one is finite and moderate on all test
    points (keeps the finite-difference truncation error inside tolerance)."""
    from semisub.expr import eval_poly

    while True:
        e = random_expr(rng, depth)
        try:
            p = eval_poly(e, points, constants, order=2)
        except Exception:
            continue
        if not np.all(np.isfinite(p.c)):
            continue
        if np.max(np.abs(p.value)) > value_cap:
            continue
        if np.max(np.abs(p.grad)) > value_cap:
            continue
        if np.max(np.abs(p.hess6)) > 4.0 * value_cap:
            continue
        return e


def random_points(rng, n):
    return rng.uniform(0.4, 1.6, size=(n, 3))


def random_constants(rng):
    return {"a": float(rng.uniform(0.5, 1.5)), "b": float(rng.uniform(0.5, 1.5))}


# ---------------------------------------------------------------------------
# finite-difference oracles

def fd_gradient(f, p, h=1e-5):
    g = np.zeros(3)
    for a in range(3):
        q = np.array(p, dtype=float)
        q[a] += h
        up = f(q)
        q[a] -= 2 * h
        dn = f(q)
        g[a] = (up - dn) / (2 * h)
    return g


def fd_hessian(f, p, h=1e-4):
    H = np.zeros((3, 3))
    f0 = f(np.array(p, dtype=float))
    for a in range(3):
        q = np.array(p, dtype=float)
        q[a] += h
        up = f(q)
        q[a] -= 2 * h
        dn = f(q)
        H[a, a] = (up - 2 * f0 + dn) / h**2
    for a in range(3):
        for b in range(a + 1, 3):
            q = np.array(p, dtype=float)
            vals = []
            for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                r = q.copy()
                r[a] += sa * h
                r[b] += sb * h
                vals.append(f(r))
            H[a, b] = H[b, a] = (vals[0] - vals[1] - vals[2] + vals[3]) / (4 * h**2)
    return H


def expr_fn(e, constants):
    return lambda q: eval_value(e, q, constants)


# ---------------------------------------------------------------------------
# model builders

def example1_model(c=1.0, side="+", grid=(5, 2, 2)):
    """The proper-biharmonic product model, on either side of the profile
    pole at x = 0."""
    doc = builtin_model("example1")
    doc["constants"]["c"] = float(c)
    if side == "-":
        doc["chart"]["domain"][0] = [-3.0, -0.5]
    doc["chart"]["grid"] = list(grid)
    return model_from_dict(doc)


def phi_profile(x, c):
    u = np.exp(c * np.asarray(x, dtype=float))
    return c * (1.0 + u) / (1.0 - u)


def random_datamode_model(seed, z_free_f=True, z_free_all=False, grid=(3, 3, 3)):
    """A random smooth data-mode model.  The horizontal data f1, f2 are kept
    independent of the vertical coordinate (they descend from the base for a
    genuine submersion); k1, k2, sigma may vary along the fiber unless
    z_free_all is set."""
    rng = np.random.default_rng(seed)

    def smooth(z_free):
        x, y, z = (Sym(n, a) for a, n in enumerate(COORDS))
        c0, c1, c2, c3 = (round(float(v), 3) for v in rng.uniform(-0.8, 0.8, size=4))
        w = round(float(rng.uniform(0.3, 1.2)), 3)
        ph = round(float(rng.uniform(0.0, 6.28)), 3)
        e = (
            Num(c0)
            + Num(c1) * Call("sin", Num(w) * x + Num(ph))
            + Num(c2) * x * y
        )
        if not z_free:
            e = e + Num(c3) * Call("cos", Num(w) * z)
        return e

    data = {
        "f1": smooth(z_free=z_free_f),
        "f2": smooth(z_free=z_free_f),
        "k1": smooth(z_free=z_free_all),
        "k2": smooth(z_free=z_free_all),
        "sigma": smooth(z_free=z_free_all),
    }
    chart = Chart(coords=COORDS, domain=((-1.0, 1.0),) * 3, grid_shape=grid)
    return FrameModel(chart=chart, constants={}, data=data, name=f"random-data-{seed}")
