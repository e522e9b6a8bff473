"""Two-input first-order Sugeno ANFIS with triangular membership functions.

Layers: memberships -> product firing -> normalisation -> affine consequents
-> weighted sum.  Inputs are divided by ``e_scale`` / ``de_scale`` and clamped
to ``[-1, 1]`` before the membership layer, and the consequents act on the
scaled inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import CoverageError

LO, HI = -1.0, 1.0
_EDGE = 0.05        # outer MFs reach this far past the input range
_MIN_WIDTH = 0.05


@dataclass(frozen=True)
class TrainingSample:
    e: float
    de: float
    duty: float

    def __post_init__(self):
        if not (0 < self.duty < 1):
            raise ValueError(f"target duty must lie in (0, 1), got {self.duty!r}")


@dataclass(frozen=True, eq=False)
class AnfisModel:
    mf_e: np.ndarray        # (K, 3) left, peak, right
    mf_de: np.ndarray       # (K, 3)
    conseq: np.ndarray      # (K*K, 3) p, q, r; rule index = i_e * K + i_de
    e_scale: float = 1.0
    de_scale: float = 1.0
    out_clip: tuple = (1e-6, 1 - 1e-6)

    @property
    def K(self):
        return self.mf_e.shape[0]

    def params_vector(self) -> np.ndarray:
        return np.concatenate([self.conseq.ravel(), self.mf_e.ravel(), self.mf_de.ravel()])

    def with_vector(self, v) -> "AnfisModel":
        K = self.K
        n_c = K * K * 3
        return replace(self, conseq=v[:n_c].reshape(K * K, 3).copy(),
                       mf_e=v[n_c:n_c + 3 * K].reshape(K, 3).copy(),
                       mf_de=v[n_c + 3 * K:].reshape(K, 3).copy())


def uniform_mfs(K: int) -> np.ndarray:
    if K == 1:
        return np.array([[LO - 1.0, 0.0, HI + 1.0]])
    peaks = np.linspace(LO, HI, K)
    h = peaks[1] - peaks[0]
    mf = np.column_stack([peaks - h, peaks, peaks + h])
    return project_mfs(mf)


def default_model(K: int = 5, nominal: float = 0.5, e_scale=1.0, de_scale=1.0) -> AnfisModel:
    conseq = np.zeros((K * K, 3))
    conseq[:, 2] = nominal
    return AnfisModel(uniform_mfs(K), uniform_mfs(K), conseq, float(e_scale), float(de_scale))


def project_mfs(mf: np.ndarray) -> np.ndarray:
    """Restore ordering, minimum width and coverage of one input's MFs."""
    mf = np.sort(np.asarray(mf, dtype=float), axis=1)
    mf = mf[np.argsort(mf[:, 1], kind="stable")]
    K = mf.shape[0]
    for k in range(K):
        a, b, c = mf[k]
        if b - a < _MIN_WIDTH / 2:
            a = b - _MIN_WIDTH / 2
        if c - b < _MIN_WIDTH / 2:
            c = b + _MIN_WIDTH / 2
        mf[k] = (a, b, c)
    for k in range(K - 1):
        # neighbouring triangles must overlap so every point is covered
        mf[k, 2] = max(mf[k, 2], mf[k + 1, 1])
        mf[k + 1, 0] = min(mf[k + 1, 0], mf[k, 1])
    mf[0, 0] = min(mf[0, 0], LO - _EDGE)
    mf[-1, 2] = max(mf[-1, 2], HI + _EDGE)
    return mf


def project(model: AnfisModel) -> AnfisModel:
    return replace(model, mf_e=project_mfs(model.mf_e), mf_de=project_mfs(model.mf_de))


def tri(x, mf):
    """Memberships of samples ``x`` (N,) in each MF -> (N, K)."""
    x = np.asarray(x, dtype=float)[:, None]
    a, b, c = mf[:, 0], mf[:, 1], mf[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(b > a, (x - a) / (b - a), (x >= a).astype(float))
        down = np.where(c > b, (c - x) / (c - b), (x <= c).astype(float))
    return np.clip(np.minimum(up, down), 0.0, 1.0)


def _tri_grad(x, mf):
    """d mu / d(a, b, c) for samples x -> (N, K, 3)."""
    x = np.asarray(x, dtype=float)[:, None]
    a, b, c = mf[:, 0], mf[:, 1], mf[:, 2]
    g = np.zeros(x.shape[:1] + mf.shape)
    left = (x > a) & (x < b)
    right = (x >= b) & (x < c)
    with np.errstate(divide="ignore", invalid="ignore"):
        dl = b - a
        g[..., 0] = np.where(left, (x - b) / dl ** 2, 0.0)
        g[..., 1] = np.where(left, -(x - a) / dl ** 2, 0.0)
        dr = c - b
        g[..., 1] += np.where(right, (c - x) / dr ** 2, 0.0)
        g[..., 2] = np.where(right, (x - b) / dr ** 2, 0.0)
    return g


def _scaled(model, e, de):
    xe = np.clip(np.atleast_1d(np.asarray(e, dtype=float)) / model.e_scale, LO, HI)
    xd = np.clip(np.atleast_1d(np.asarray(de, dtype=float)) / model.de_scale, LO, HI)
    return xe, xd


def layers(model: AnfisModel, e, de):
    """Forward pass returning intermediate quantities (unclamped output)."""
    xe, xd = _scaled(model, e, de)
    me = tri(xe, model.mf_e)
    md = tri(xd, model.mf_de)
    w = (me[:, :, None] * md[:, None, :]).reshape(len(xe), -1)
    s = w.sum(axis=1)
    if np.any(s <= 0):
        raise CoverageError("no rule fires for some input: membership functions do not cover it")
    wn = w / s[:, None]
    f = xe[:, None] * model.conseq[:, 0] + xd[:, None] * model.conseq[:, 1] + model.conseq[:, 2]
    y = np.sum(wn * f, axis=1)
    return dict(xe=xe, xd=xd, me=me, md=md, w=w, s=s, wn=wn, f=f, y=y)


def normalized_firing(model, e, de):
    return layers(model, e, de)["wn"]


def _mu(x, a, b, c):
    if x < a or x > c:
        return 0.0
    if x <= b:
        return (x - a) / (b - a) if b > a else 1.0
    return (c - x) / (c - b) if c > b else 1.0


def _infer_scalar(model: AnfisModel, e: float, de: float) -> float:
    # plain-Python path: per-call numpy overhead dominates at this size
    xe = min(max(e / model.e_scale, LO), HI)
    xd = min(max(de / model.de_scale, LO), HI)
    me = [_mu(xe, *m) for m in model.mf_e.tolist()]
    md = [_mu(xd, *m) for m in model.mf_de.tolist()]
    conseq = model.conseq.tolist()
    K = len(md)
    num = s = 0.0
    for i, a in enumerate(me):
        if a == 0.0:
            continue
        for j, b in enumerate(md):
            w = a * b
            if w:
                p, q, r = conseq[i * K + j]
                num += w * (p * xe + q * xd + r)
                s += w
    if s <= 0:
        raise CoverageError("no rule fires for this input: membership functions do not cover it")
    return min(max(num / s, model.out_clip[0]), model.out_clip[1])


def anfis_infer(model: AnfisModel, e, de):
    if np.ndim(e) == 0 and np.ndim(de) == 0:
        return _infer_scalar(model, float(e), float(de))
    return np.clip(layers(model, e, de)["y"], *model.out_clip)


def loss_and_grad(model: AnfisModel, e, de, target):
    """Half mean squared error and its gradient w.r.t. ``params_vector``."""
    L = layers(model, e, de)
    t = np.asarray(target, dtype=float)
    N = len(t)
    r = L["y"] - t
    loss = 0.5 * np.mean(r ** 2)
    K = model.K
    wn, xe, xd = L["wn"], L["xe"], L["xd"]
    rr = r[:, None] / N
    g_c = np.stack([(rr * wn * xe[:, None]).sum(0),
                    (rr * wn * xd[:, None]).sum(0),
                    (rr * wn).sum(0)], axis=1)
    # dy/dw_j = (f_j - y)/s
    dy_dw = (L["f"] - L["y"][:, None]) / L["s"][:, None]          # (N, K*K)
    G = (rr * dy_dw).reshape(N, K, K)                             # indexed [n, i_e, i_de]
    dL_dme = np.einsum("nij,nj->ni", G, L["md"])
    dL_dmd = np.einsum("nij,ni->nj", G, L["me"])
    g_e = np.einsum("nk,nkp->kp", dL_dme, _tri_grad(xe, model.mf_e))
    g_d = np.einsum("nk,nkp->kp", dL_dmd, _tri_grad(xd, model.mf_de))
    return loss, np.concatenate([g_c.ravel(), g_e.ravel(), g_d.ravel()])


def rmse(model, e, de, target) -> float:
    y = layers(model, e, de)["y"]
    return float(np.sqrt(np.mean((y - np.asarray(target)) ** 2)))


def _arrays(data):
    e = np.array([s.e for s in data], dtype=float)
    de = np.array([s.de for s in data], dtype=float)
    t = np.array([s.duty for s in data], dtype=float)
    return e, de, t


DEFAULT_LR = 2.0


def anfis_train(model: AnfisModel, data, epochs: int, learning_rate: float = DEFAULT_LR,
                train_mfs: bool = True):
    """Full-batch gradient descent; MF constraints are re-projected after each step.

    Returns ``(model, rmse_history)`` where entry ``k`` is the RMSE after epoch ``k``.
    """
    if not learning_rate > 0:
        raise ValueError("learning_rate must be > 0")
    if epochs and not len(data):
        raise ValueError("training data is empty")
    history = []
    if epochs == 0:
        return model, history
    e, de, t = _arrays(data)
    n_c = model.K ** 2 * 3
    for _ in range(epochs):
        _, g = loss_and_grad(model, e, de, t)
        if not train_mfs:
            g[n_c:] = 0.0
        model = project(model.with_vector(model.params_vector() - learning_rate * g))
        history.append(rmse(model, e, de, t))
    return model, history


def demo_dataset(n: int = 400, seed: int = 0):
    """Smooth nonlinear duty surface used as the shipped regression dataset."""
    rng = np.random.default_rng(seed)
    e = rng.uniform(LO, HI, n)
    de = rng.uniform(LO, HI, n)
    duty = 0.5 + 0.15 * np.tanh(1.5 * e) + 0.05 * de - 0.04 * e * de
    return [TrainingSample(float(a), float(b), float(c)) for a, b, c in zip(e, de, duty)]


def linear_dataset(n: int = 200, seed: int = 0, slope: float = 0.05, offset: float = 0.4):
    rng = np.random.default_rng(seed)
    e = rng.uniform(LO, HI, n)
    de = rng.uniform(LO, HI, n)
    return [TrainingSample(float(a), float(b), offset + slope * a) for a, b in zip(e, de)]
