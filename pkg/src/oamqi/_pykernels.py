"""Pure numpy implementations of the hot kernels.

Mirrors ``_ckernels.pyx`` exactly in signature and semantics; selected by
``oamqi._kernels`` when the compiled module is missing or disabled.
"""
import numpy as np

# 15-point Kronrod / embedded 7-point Gauss rule on [-1, 1] (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GK_GAUSS_WEIGHTS = np.zeros(15)
GK_GAUSS_WEIGHTS[1:7:2] = _WG[:3]
GK_GAUSS_WEIGHTS[7] = _WG[3]
GK_GAUSS_WEIGHTS[9:15:2] = _WG[2::-1]


def h_integrand(l, alpha, beta, x, y):
    """Complex focusing-factor integrand at (x, y); broadcasts."""
    px = 1.0 + 1j * x
    my = 1.0 - 1j * y
    d = px * my * (2.0 + 1j * (x - y) / beta) + alpha * (1.0 + 1j * x / beta) * (
        1.0 - 1j * y / beta
    ) * (2.0 + 1j * (x - y))
    return (px * my) ** l / d ** (l + 1)


def h_panel(l, alpha, beta, x0, x1, y0, y1):
    """Tensor-product GK15 rule on one panel.

    Returns ``(kronrod, gauss)`` complex estimates of the panel integral.
    """
    hx = 0.5 * (x1 - x0)
    hy = 0.5 * (y1 - y0)
    xs = 0.5 * (x0 + x1) + hx * GK_NODES
    ys = 0.5 * (y0 + y1) + hy * GK_NODES
    f = h_integrand(l, alpha, beta, xs[:, None], ys[None, :])
    jac = hx * hy
    k = GK_KRONROD_WEIGHTS @ f @ GK_KRONROD_WEIGHTS * jac
    g = GK_GAUSS_WEIGHTS @ f @ GK_GAUSS_WEIGHTS * jac
    return complex(k), complex(g)


def count_coincidences(signal, idler, lo, hi):
    """Number of (s, i) pairs with ``lo <= t_i - t_s < hi``.

    Evaluated as ``t_s + lo <= t_i < t_s + hi`` in floating point. Both
    streams must be sorted ascending.
    """
    signal = np.asarray(signal, dtype=np.float64)
    idler = np.asarray(idler, dtype=np.float64)
    upper = np.searchsorted(idler, signal + hi, side="left")
    lower = np.searchsorted(idler, signal + lo, side="left")
    return int(np.sum(np.maximum(upper - lower, 0)))


def count_coincidences_many(signal, idler, los, his):
    """Vector of :func:`count_coincidences` over paired (lo, hi) windows."""
    los = np.asarray(los, dtype=np.float64)
    his = np.asarray(his, dtype=np.float64)
    out = np.empty(los.shape[0], dtype=np.int64)
    for k in range(los.shape[0]):
        out[k] = count_coincidences(signal, idler, los[k], his[k])
    return out
