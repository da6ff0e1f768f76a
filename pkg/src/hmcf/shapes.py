"""Analytic test immersions on structured grids."""
import numpy as np

from hmcf.geometry import Immersion

TWO_PI = 2.0 * np.pi


def circle(n, r=1.0, center=(0.0, 0.0)):
    theta = TWO_PI * np.arange(n) / n
    pts = np.stack([center[0] + r * np.cos(theta), center[1] + r * np.sin(theta)], axis=-1)
    return Immersion(pts, (TWO_PI / n,))


def ellipse(n, a=2.0, b=1.0):
    theta = TWO_PI * np.arange(n) / n
    return Immersion(np.stack([a * np.cos(theta), b * np.sin(theta)], axis=-1), (TWO_PI / n,))


def flat_line(n, length=TWO_PI):
    x = length * np.arange(n) / n
    shift = [[length, 0.0]]
    return Immersion(np.stack([x, np.zeros(n)], axis=-1), (length / n,), shift=shift)


def sphere_directions(alpha, beta):
    a, b = np.meshgrid(alpha, beta, indexing="ij")
    return np.stack([np.cos(a) * np.cos(b), np.cos(a) * np.sin(b), np.sin(a)], axis=-1)


def sphere_band_nodes(n_alpha, n_beta, alpha_max=np.pi / 4, pad=4):
    """Latitudes (including ghost rows) and longitudes of a sphere band."""
    d_alpha = 2.0 * alpha_max / (n_alpha - 1)
    alpha = -alpha_max + d_alpha * np.arange(-pad, n_alpha + pad)
    beta = TWO_PI * np.arange(n_beta) / n_beta
    return alpha, beta, d_alpha, TWO_PI / n_beta


def sphere_band(n_alpha, n_beta, r=1.0, alpha_max=np.pi / 4, pad=4):
    """Band |alpha| <= alpha_max of the round sphere, exact ghost rows outside.

    Axis 0 is latitude alpha (not periodic, ``pad`` ghost rows per side),
    axis 1 is longitude beta (periodic).
    """
    alpha, beta, da, db = sphere_band_nodes(n_alpha, n_beta, alpha_max, pad)
    return Immersion(r * sphere_directions(alpha, beta), (da, db),
                     periodic=(False, True), pad=(pad, 0))


def cylinder(n_theta, n_z, r=1.0, length=TWO_PI):
    """(r cos a, r sin a, z); the axial direction repeats with a z-translation."""
    theta = TWO_PI * np.arange(n_theta) / n_theta
    z = length * np.arange(n_z) / n_z
    a, zz = np.meshgrid(theta, z, indexing="ij")
    pts = np.stack([r * np.cos(a), r * np.sin(a), zz], axis=-1)
    shift = [[0.0, 0.0, 0.0], [0.0, 0.0, length]]
    return Immersion(pts, (TWO_PI / n_theta, length / n_z), shift=shift)


def torus(n_u, n_v, big_r=2.0, small_r=1.0):
    u = TWO_PI * np.arange(n_u) / n_u
    v = TWO_PI * np.arange(n_v) / n_v
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ring = big_r + small_r * np.cos(uu)
    pts = np.stack([ring * np.cos(vv), ring * np.sin(vv), small_r * np.sin(uu)], axis=-1)
    return Immersion(pts, (TWO_PI / n_u, TWO_PI / n_v))


def flat_band(n1, n2, l1=TWO_PI, l2=TWO_PI):
    x = l1 * np.arange(n1) / n1
    y = l2 * np.arange(n2) / n2
    xx, yy = np.meshgrid(x, y, indexing="ij")
    pts = np.stack([xx, yy, np.zeros_like(xx)], axis=-1)
    shift = [[l1, 0.0, 0.0], [0.0, l2, 0.0]]
    return Immersion(pts, (l1 / n1, l2 / n2), shift=shift)


def graph_immersion(displacement, period=TWO_PI):
    """X0 + Y over the periodic flat chart, X0 = (x^1, .., x^n, 0)."""
    Y = np.asarray(displacement, dtype=np.float64)
    n = Y.ndim - 1
    shape = Y.shape[:n]
    axes = [period * np.arange(s) / s for s in shape]
    grids = np.meshgrid(*axes, indexing="ij")
    base = np.zeros_like(Y)
    for i, gr in enumerate(grids):
        base[..., i] = gr
    shift = np.zeros((n, n + 1))
    for i in range(n):
        shift[i, i] = period
    return Immersion(base + Y, tuple(period / s for s in shape), shift=shift)


def _axial_directions(im):
    """Unit vectors of the translation directions (cylinder axis etc.)."""
    dirs = [s / np.linalg.norm(s) for s in im.shift if np.linalg.norm(s) > 0]
    return dirs


def centroid(im):
    return im.points[im.interior].reshape(-1, im.points.shape[-1]).mean(axis=0)


def radial_offsets(im, center=None):
    """X - center with translation directions projected out."""
    c = centroid(im) if center is None else np.asarray(center, dtype=np.float64)
    d = im.points - c
    for e in _axial_directions(im):
        d = d - np.einsum("...a,a->...", d, e)[..., None] * e
    return d


def radii(im, center=None):
    return np.linalg.norm(radial_offsets(im, center), axis=-1)


def radial_unit(im, center=None):
    d = radial_offsets(im, center)
    return d / np.linalg.norm(d, axis=-1)[..., None]
