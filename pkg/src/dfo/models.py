"""Solution parametrizations, PDE right-hand sides, and batch system assembly.

A parametrization is a stateless map ``(theta, x) -> u_hat`` together with
its exact parameter Jacobian and the spatial derivatives required by the
attached PDE operator. Parameter derivatives are closed-form throughout
(layerwise chain rule for the network, hand-derived formulas for the toys);
spatial derivatives are exact forward-mode, never finite differences.

Batch conventions: collocation points are arrays of shape ``(N, d)``; stacked
systems order rows as all output components of point ``x_1``, then ``x_2``,
and so on (row ``i*q + j`` is component ``j`` at point ``i``).
"""

from __future__ import annotations

import numpy as np

from .errors import InputError, NumericalError

__all__ = [
    "Parametrization",
    "WaveTwoGaussian",
    "AdvReactSine",
    "PeriodicMLP",
    "PdeProblem",
    "WaveProblem",
    "AdvectionReactionProblem",
    "Transport2dProblem",
    "advreact_source",
    "wave_rhs",
    "transport2d_rhs",
    "transport_speed_x",
    "transport_speed_y",
    "assemble_system",
]


def as_points(points, spatial_dim):
    """Coerce ``points`` to a float array of shape (N, spatial_dim)."""
    pts = np.asarray(points, dtype=float)
    if spatial_dim == 1 and pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[1] != spatial_dim:
        raise InputError(
            f"points must have shape (N, {spatial_dim}), got {pts.shape}"
        )
    if pts.shape[0] == 0:
        raise InputError("points must be nonempty")
    return pts


class Parametrization:
    """Abstract ansatz u_hat(theta, x).

    Concrete classes define ``param_count``, ``spatial_dim``, ``output_dim``
    and the three evaluation methods below. All methods are pure functions
    of their arguments.
    """

    param_count: int
    spatial_dim: int
    output_dim: int

    def evaluate(self, theta, points):
        """Values, shape (N, output_dim)."""
        raise NotImplementedError

    def param_jacobian(self, theta, points):
        """d u_hat / d theta, shape (N, output_dim, param_count)."""
        raise NotImplementedError

    def spatial_gradient(self, theta, points):
        """d u_hat / d x, shape (N, output_dim, spatial_dim)."""
        raise NotImplementedError

    def param_gradient_weighted(self, theta, points, weights):
        """sum_n sum_j weights[n, j] * d u_hat_j(x_n) / d theta, shape (p,).

        Default goes through the full Jacobian; subclasses may provide a
        cheaper reverse-accumulation path.
        """
        jac = self.param_jacobian(theta, points)
        return np.einsum("nqp,nq->p", jac, np.asarray(weights, dtype=float))

    def value_and_weighted_gradient(self, theta, points, weights_from_values):
        """Values plus the weighted parameter gradient in one evaluation.

        ``weights_from_values(values)`` maps the (N, q) values to the (N, q)
        weights of the gradient sum; used by the fitting loop to avoid a
        second forward pass where the subclass can share work.
        """
        values = self.evaluate(theta, points)
        weights = weights_from_values(values)
        return values, self.param_gradient_weighted(theta, points, weights)

    def _check_theta(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.param_count,):
            raise InputError(
                f"theta must have shape ({self.param_count},), got {theta.shape}"
            )
        if not np.all(np.isfinite(theta)):
            raise InputError("theta contains non-finite entries")
        return theta


def _gauss(z, width):
    return np.exp(-0.5 * z * z / width)


class WaveTwoGaussian(Parametrization):
    """Two traveling Gaussian bumps in first-order wave form.

    Component 1 is the displacement ``phi(x; theta1) + phi_rho(x; theta2)``,
    component 2 the velocity field ``c d_mu phi(x; theta3) - c d_mu
    phi_rho(x; theta4)``, where ``phi_rho(x; mu) = exp(-(x-mu)^2/(2(1+rho)))``
    and the rho-widened profile sits on the second bump of each pair.
    """

    param_count = 4
    spatial_dim = 1
    output_dim = 2

    def __init__(self, rho=0.0, c=1.0):
        if rho < 0.0:
            raise InputError(f"rho must be >= 0, got {rho}")
        self.rho = float(rho)
        self.c = float(c)

    def _profiles(self, x, mu, widened):
        width = 1.0 + (self.rho if widened else 0.0)
        z = x - mu
        g = _gauss(z, width)
        d1 = (z / width) * g                      # d/dmu phi
        d2 = (z * z / width**2 - 1.0 / width) * g  # d2/dmu2 phi
        return g, d1, d2

    def evaluate(self, theta, points):
        theta = self._check_theta(theta)
        x = as_points(points, 1)[:, 0]
        g1, _, _ = self._profiles(x, theta[0], False)
        g2, _, _ = self._profiles(x, theta[1], True)
        _, d3, _ = self._profiles(x, theta[2], False)
        _, d4, _ = self._profiles(x, theta[3], True)
        return np.stack([g1 + g2, self.c * (d3 - d4)], axis=1)

    def param_jacobian(self, theta, points):
        theta = self._check_theta(theta)
        x = as_points(points, 1)[:, 0]
        n = x.shape[0]
        jac = np.zeros((n, 2, 4))
        _, d1, _ = self._profiles(x, theta[0], False)
        _, d2, _ = self._profiles(x, theta[1], True)
        _, _, s3 = self._profiles(x, theta[2], False)
        _, _, s4 = self._profiles(x, theta[3], True)
        jac[:, 0, 0] = d1
        jac[:, 0, 1] = d2
        jac[:, 1, 2] = self.c * s3
        jac[:, 1, 3] = -self.c * s4
        return jac

    def spatial_gradient(self, theta, points):
        # d/dx phi(x; mu) = -d/dmu phi(x; mu)
        theta = self._check_theta(theta)
        x = as_points(points, 1)[:, 0]
        _, d1, _ = self._profiles(x, theta[0], False)
        _, d2, _ = self._profiles(x, theta[1], True)
        _, _, s3 = self._profiles(x, theta[2], False)
        _, _, s4 = self._profiles(x, theta[3], True)
        grad = np.stack([-(d1 + d2), -self.c * (s3 - s4)], axis=1)
        return grad[:, :, None]

    def second_x_derivative_u1(self, theta, points):
        """d2/dx2 of the displacement component (closed form)."""
        theta = self._check_theta(theta)
        x = as_points(points, 1)[:, 0]
        _, _, s1 = self._profiles(x, theta[0], False)
        _, _, s2 = self._profiles(x, theta[1], True)
        return s1 + s2


class AdvReactSine(Parametrization):
    """Two-parameter ansatz sin(theta1) sin(x) + sin(theta2) cos(x).

    ``c`` and ``kappa`` are the advection speed and reaction rate of the
    problem this ansatz targets; they do not enter the ansatz itself and are
    read by :class:`AdvectionReactionProblem` as defaults.
    """

    param_count = 2
    spatial_dim = 1
    output_dim = 1

    def __init__(self, c=1.0, kappa=1.0):
        self.c = float(c)
        self.kappa = float(kappa)

    def evaluate(self, theta, points):
        theta = self._check_theta(theta)
        x = as_points(points, 1)[:, 0]
        u = np.sin(theta[0]) * np.sin(x) + np.sin(theta[1]) * np.cos(x)
        return u[:, None]

    def param_jacobian(self, theta, points):
        theta = self._check_theta(theta)
        x = as_points(points, 1)[:, 0]
        jac = np.empty((x.shape[0], 1, 2))
        jac[:, 0, 0] = np.cos(theta[0]) * np.sin(x)
        jac[:, 0, 1] = np.cos(theta[1]) * np.cos(x)
        return jac

    def spatial_gradient(self, theta, points):
        theta = self._check_theta(theta)
        x = as_points(points, 1)[:, 0]
        du = np.sin(theta[0]) * np.cos(x) - np.sin(theta[1]) * np.sin(x)
        return du[:, None, None]


def _swish(z):
    s = 1.0 / (1.0 + np.exp(-z))
    return z * s, s * (1.0 + z * (1.0 - s))


class PeriodicMLP(Parametrization):
    """MLP with a periodic embedding layer and swish activations.

    Each embedding channel c computes ``sum_i a[c,i] cos(2 pi x_i / P_i +
    phi[c,i]) + b[c,i]``, which makes the network exactly P-periodic per
    input dimension. By default the amplitudes are frozen at 1 and the
    offsets at 0 so only the phases are trainable; ``trainable_affine=True``
    adds a and b to the parameter vector.

    Parameter packing order: phases (w*d, row-major over channels), then
    amplitudes and offsets when trainable, then per affine layer the weight
    matrix (in*out, row-major) followed by its bias.
    """

    def __init__(
        self,
        spatial_dim,
        embed_width,
        hidden_sizes,
        periods,
        output_dim=1,
        trainable_affine=False,
    ):
        self.spatial_dim = int(spatial_dim)
        self.embed_width = int(embed_width)
        self.hidden_sizes = tuple(int(h) for h in hidden_sizes)
        self.output_dim = int(output_dim)
        self.trainable_affine = bool(trainable_affine)
        periods = np.broadcast_to(
            np.asarray(periods, dtype=float), (self.spatial_dim,)
        ).copy()
        if np.any(periods <= 0.0):
            raise InputError("periods must be positive")
        self.periods = periods
        self._k = 2.0 * np.pi / periods
        widths = (self.embed_width, *self.hidden_sizes, self.output_dim)
        self._layer_shapes = list(zip(widths[:-1], widths[1:]))
        n_embed = self.embed_width * self.spatial_dim
        self.param_count = n_embed * (3 if trainable_affine else 1) + sum(
            fi * fo + fo for fi, fo in self._layer_shapes
        )

    def initial_params(self, seed=0):
        """Seeded start: uniform He-style fan-in weights, zero biases,
        phases uniform on [0, 2 pi)."""
        rng = np.random.default_rng(seed)
        w, d = self.embed_width, self.spatial_dim
        parts = [rng.uniform(0.0, 2.0 * np.pi, size=w * d)]
        if self.trainable_affine:
            parts.append(np.ones(w * d))
            parts.append(np.zeros(w * d))
        for fi, fo in self._layer_shapes:
            lim = np.sqrt(6.0 / fi)
            parts.append(rng.uniform(-lim, lim, size=fi * fo))
            parts.append(np.zeros(fo))
        return np.concatenate(parts)

    def _unpack(self, theta):
        w, d = self.embed_width, self.spatial_dim
        i = 0
        phases = theta[i : i + w * d].reshape(w, d)
        i += w * d
        if self.trainable_affine:
            amps = theta[i : i + w * d].reshape(w, d)
            i += w * d
            offs = theta[i : i + w * d].reshape(w, d)
            i += w * d
        else:
            amps = None
            offs = None
        weights, biases = [], []
        for fi, fo in self._layer_shapes:
            weights.append(theta[i : i + fi * fo].reshape(fi, fo))
            i += fi * fo
            biases.append(theta[i : i + fo])
            i += fo
        return phases, amps, offs, weights, biases

    def _forward(self, theta, points):
        theta = self._check_theta(theta)
        pts = as_points(points, self.spatial_dim)
        phases, amps, offs, weights, biases = self._unpack(theta)
        # cos(k x + phi) expanded so the batch only needs trig of k x
        ckx = np.cos(self._k * pts)
        skx = np.sin(self._k * pts)
        cp = np.cos(phases)
        sp = np.sin(phases)
        if amps is None:
            y = ckx @ cp.T - skx @ sp.T
        else:
            y = ckx @ (amps * cp).T - skx @ (amps * sp).T + offs.sum(axis=1)
        acts = [y]
        sw = []
        a = y
        for layer in range(len(self._layer_shapes) - 1):
            a, dz = _swish(a @ weights[layer] + biases[layer])
            acts.append(a)
            sw.append(dz)
        out = acts[-1] @ weights[-1] + biases[-1]
        cache = (pts, ckx, skx, cp, sp, phases, amps, acts, sw, weights)
        return out, cache

    def evaluate(self, theta, points):
        out, _ = self._forward(theta, points)
        return out

    def spatial_gradient(self, theta, points):
        out, cache = self._forward(theta, points)
        pts, ckx, skx, cp, sp, phases, amps, acts, sw, weights = cache
        n = pts.shape[0]
        grad = np.empty((n, self.output_dim, self.spatial_dim))
        for i in range(self.spatial_dim):
            # tangent of channel c: -a k_i sin(k_i x_i + phi_ci)
            sin_arg = skx[:, [i]] @ cp.T[[i]] + ckx[:, [i]] @ sp.T[[i]]
            if amps is not None:
                sin_arg = sin_arg * amps[:, i]
            t = -self._k[i] * sin_arg
            for layer in range(len(self._layer_shapes) - 1):
                t = (t @ weights[layer]) * sw[layer]
            grad[:, :, i] = t @ weights[-1]
        return grad

    def _backward_deltas(self, cache, delta_out):
        """Per-layer adjoints for a seeded output cotangent (N, q)."""
        pts, ckx, skx, cp, sp, phases, amps, acts, sw, weights = cache
        deltas = [None] * len(self._layer_shapes)
        deltas[-1] = delta_out
        d = delta_out
        for layer in range(len(self._layer_shapes) - 2, -1, -1):
            d = (d @ weights[layer + 1].T) * sw[layer]
            deltas[layer] = d
        delta_embed = deltas[0] @ weights[0].T
        return deltas, delta_embed

    def param_jacobian(self, theta, points):
        out, cache = self._forward(theta, points)
        pts, ckx, skx, cp, sp, phases, amps, acts, sw, weights = cache
        n, q = out.shape
        jac = np.empty((n, q, self.param_count))
        sin_arg = skx[:, None, :] * cp[None, :, :] + ckx[:, None, :] * sp[None, :, :]
        if amps is None:
            embed_d_phase = -sin_arg
        else:
            embed_d_phase = -amps[None, :, :] * sin_arg
            cos_arg = ckx[:, None, :] * cp[None, :, :] - skx[:, None, :] * sp[None, :, :]
        for j in range(q):
            seed = np.zeros((n, q))
            seed[:, j] = 1.0
            deltas, delta_embed = self._backward_deltas(cache, seed)
            cols = [(delta_embed[:, :, None] * embed_d_phase).reshape(n, -1)]
            if amps is not None:
                cols.append((delta_embed[:, :, None] * cos_arg).reshape(n, -1))
                cols.append(
                    np.repeat(delta_embed, self.spatial_dim, axis=1).reshape(n, -1)
                )
            for layer in range(len(self._layer_shapes)):
                a_in = acts[layer]
                dl = deltas[layer]
                cols.append(np.einsum("ni,nj->nij", a_in, dl).reshape(n, -1))
                cols.append(dl)
            jac[:, j, :] = np.concatenate(cols, axis=1)
        return jac

    def param_gradient_weighted(self, theta, points, weights_nq):
        """Reverse accumulation of sum_n w_nj d u_j(x_n)/d theta without
        materializing the Jacobian."""
        out, cache = self._forward(theta, points)
        wts = np.asarray(weights_nq, dtype=float).reshape(out.shape)
        return self._weighted_gradient_from_cache(cache, wts)

    def value_and_weighted_gradient(self, theta, points, weights_from_values):
        out, cache = self._forward(theta, points)
        wts = np.asarray(weights_from_values(out), dtype=float).reshape(out.shape)
        return out, self._weighted_gradient_from_cache(cache, wts)

    def _weighted_gradient_from_cache(self, cache, wts):
        pts, ckx, skx, cp, sp, phases, amps, acts, sw, weights = cache
        deltas, delta_embed = self._backward_deltas(cache, wts)
        # phase gradient via the same trig expansion as the forward pass
        g_sin_t = delta_embed.T @ skx
        g_cos_t = delta_embed.T @ ckx
        g_phase = -(cp * g_sin_t + sp * g_cos_t)
        if amps is not None:
            g_phase = g_phase * amps
            g_amp = cp * g_cos_t - sp * g_sin_t
            g_off = np.repeat(delta_embed.sum(axis=0)[:, None], self.spatial_dim, axis=1)
            parts = [g_phase.ravel(), g_amp.ravel(), g_off.ravel()]
        else:
            parts = [g_phase.ravel()]
        for layer in range(len(self._layer_shapes)):
            parts.append((acts[layer].T @ deltas[layer]).ravel())
            parts.append(deltas[layer].sum(axis=0))
        return np.concatenate(parts)


# ---------------------------------------------------------------------------
# PDE problems
# ---------------------------------------------------------------------------


class PdeProblem:
    """Right-hand-side operator F plus domain metadata.

    ``rhs`` returns F(u_hat(theta, .)) evaluated at the collocation points,
    stacked in the canonical row order (components within a point).
    """

    spatial_dim: int
    domain: np.ndarray  # (d, 2) bounds, domain is [lo, hi) per dimension
    periodic: tuple

    def rhs(self, model, theta, t, points):
        raise NotImplementedError


def wave_rhs(model, theta, points):
    """First-order wave operator [u2; c^2 d2 u1/dx2] for the Gaussian ansatz."""
    vals = model.evaluate(theta, points)
    d2u1 = model.second_x_derivative_u1(theta, points)
    out = np.stack([vals[:, 1], model.c**2 * d2u1], axis=1)
    return out.reshape(-1)


class WaveProblem(PdeProblem):
    spatial_dim = 1
    periodic = (False,)

    def __init__(self, x_lo=-12.0, x_hi=12.0):
        self.domain = np.array([[x_lo, x_hi]])

    def rhs(self, model, theta, t, points):
        return wave_rhs(model, theta, points)


def advreact_source(t, x, c, kappa):
    """Forcing that makes sin(t)(sin x + cos x) an exact solution of
    the advection-reaction equation u_t = -c u_x - kappa u + s."""
    ct, st = np.cos(t), np.sin(t)
    return (ct + (kappa - c) * st) * np.sin(x) + (ct + (kappa + c) * st) * np.cos(x)


class AdvectionReactionProblem(PdeProblem):
    spatial_dim = 1
    periodic = (True,)

    def __init__(self, c=1.0, kappa=1.0):
        self.c = float(c)
        self.kappa = float(kappa)
        self.domain = np.array([[0.0, 2.0 * np.pi]])

    def rhs(self, model, theta, t, points):
        x = as_points(points, 1)[:, 0]
        u = model.evaluate(theta, points)[:, 0]
        ux = model.spatial_gradient(theta, points)[:, 0, 0]
        s = advreact_source(t, x, self.c, self.kappa)
        return -self.c * ux - self.kappa * u + s


def transport_speed_x(x, x0=0.0, length=2.0):
    return 1.0 * (1.0 + 0.6 * np.sin(2.0 * np.pi * 3.0 * (x - x0) / length))


def transport_speed_y(y, y0=0.0, length=2.0):
    return 0.8 * (1.0 + 0.3 * np.cos(2.0 * np.pi * 2.0 * (y - y0) / length))


def transport2d_rhs(model, theta, points, x0=0.0, y0=0.0):
    """Variable-speed advection operator -c_x(x) u_x - c_y(y) u_y."""
    pts = as_points(points, 2)
    grad = model.spatial_gradient(theta, pts)[:, 0, :]
    cx = transport_speed_x(pts[:, 0], x0)
    cy = transport_speed_y(pts[:, 1], y0)
    return -cx * grad[:, 0] - cy * grad[:, 1]


class Transport2dProblem(PdeProblem):
    spatial_dim = 2
    periodic = (True, True)

    def __init__(self, x0=0.0, y0=0.0, sigma=8e-3, center=(-0.2, 0.0)):
        self.x0 = float(x0)
        self.y0 = float(y0)
        self.sigma = float(sigma)
        self.center = (float(center[0]), float(center[1]))
        self.domain = np.array([[-1.0, 1.0], [-1.0, 1.0]])

    def rhs(self, model, theta, t, points):
        return transport2d_rhs(model, theta, points, self.x0, self.y0)

    def initial_condition(self, points):
        """Localized Gaussian bump used as the benchmark start state."""
        pts = as_points(points, 2)
        dx = pts[:, 0] - self.center[0]
        dy = pts[:, 1] - self.center[1]
        return np.exp(-(dx * dx + dy * dy) / (np.pi * self.sigma))


def assemble_system(problem, model, theta, t, points):
    """Batch Jacobian and right-hand side at the collocation points.

    Returns ``J`` of shape (N*q, p) with ``J[i*q + j, k] = d u_hat_j(x_i) /
    d theta_k`` and ``f`` of shape (N*q,) with the matching stacking of
    F(u_hat)(x_i).
    """
    pts = as_points(points, model.spatial_dim)
    lo, hi = problem.domain[:, 0], problem.domain[:, 1]
    if np.any(pts < lo) or np.any(pts > hi):
        raise InputError("collocation points outside the problem domain")
    n, q = pts.shape[0], model.output_dim
    jac = model.param_jacobian(theta, pts).reshape(n * q, -1)
    f = np.asarray(problem.rhs(model, theta, t, pts), dtype=float).reshape(-1)
    if f.shape[0] != n * q:
        raise InputError(
            f"rhs returned {f.shape[0]} values for {n} points x {q} components"
        )
    for name, arr in (("jacobian", jac), ("rhs", f)):
        if not np.all(np.isfinite(arr)):
            bad = np.where(~np.isfinite(arr))[0]
            idx = int(bad[0]) // q if arr.ndim == 1 else int(bad[0]) // q
            raise NumericalError(
                f"non-finite {name} value at collocation point {idx}",
                point_index=idx,
            )
    return jac, f
