"""
Correlation quantifiers of the frequency-traced polarization state, the rival
two-qubit pure-state model, and the brute-force oracles used to check them.

All entropic quantities are in bits.
"""
import logging
import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy.optimize import minimize

import core_state
import density_ops
from constants import (BINARY_ENTROPY_FLOOR, PURE_FAMILY_TOLERANCE, MIXTURE_EPSILON,
                       RANK_CUTOFF, VAR_OPTIMIZER_RESTARTS_DEFAULT,
                       VAR_OPTIMIZER_COMPONENTS_DEFAULT, VAR_OPTIMIZER_SEED_DEFAULT)
from errors import NumericalFailure, OptimizerNotConverged

log = logging.getLogger('qqlab.correlations')

METHOD_BELL_MIXTURE = 'closed_form_bell_mixture'
METHOD_NUMERIC = 'numeric_minimization'
METHOD_EXACT_PURE = 'exact_pure'

_SIGMA_Y = np.array([[0, -1j], [1j, 0]])
_YY = np.kron(_SIGMA_Y, _SIGMA_Y)


@dataclass
class CorrelationReport:
    k_bar: float
    c_bar: float
    s_rel: float
    mutual_info: float
    c_cl: float
    c_cl_from_k: float
    p_bar: float
    k_2qb: float
    c_2qb: float
    p_2qb: float
    s_rel_method: str

    def to_dict(self) -> dict:
        return asdict(self)


def _qutrit_invariant(q) -> complex:
    return 2 * q.c1 * q.c4 - q.b_plus ** 2


def schmidt_K_mps(q) -> float:
    bm2 = abs(q.b_minus) ** 2
    return 2.0 / (1.0 + (1.0 - bm2) ** 2 - abs(_qutrit_invariant(q)) ** 2)


def concurrence_mps(q) -> float:
    return abs(abs(_qutrit_invariant(q)) - abs(q.b_minus) ** 2)


def _matrix_sqrt(m: np.ndarray) -> np.ndarray:
    eig, vec = np.linalg.eigh(m)
    eig = np.where(eig < RANK_CUTOFF, 0.0, eig)
    return (vec * np.sqrt(eig)) @ vec.conj().T


def wootters_concurrence(rho_bar: density_ops.MPSDensity) -> float:
    rho = rho_bar.product_basis()
    try:
        root = _matrix_sqrt(rho)
        lam = np.linalg.svd(root @ _YY @ root.conj(), compute_uv=False)
    except np.linalg.LinAlgError as e:
        raise NumericalFailure(f'Eigen-solver failed: {e}') from e
    lam = np.sort(lam)[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def binary_entropy(p: float) -> float:
    p = min(max(p, BINARY_ENTROPY_FLOOR), 1.0)
    r = min(max(1.0 - p, BINARY_ENTROPY_FLOOR), 1.0)
    return float(-p * math.log2(p) - r * math.log2(r))


def _unpack(x: np.ndarray, components: int):
    m = components
    logits = x[:m]
    u = (x[m:5 * m:2] + 1j * x[m + 1:5 * m:2]).reshape(m, 2)
    v = (x[5 * m::2] + 1j * x[5 * m + 1::2]).reshape(m, 2)
    return logits, u, v


def _pack_gradient(g_logits, g_u, g_v) -> np.ndarray:
    out = [g_logits]
    for g in (g_u, g_v):
        flat = np.empty(2 * g.size)
        flat[0::2] = g.real.ravel()
        flat[1::2] = g.imag.ravel()
        out.append(flat)
    return np.concatenate(out)


def _cross_entropy(x: np.ndarray, rho: np.ndarray, components: int):
    """-Tr rho log2 sigma over mixtures of product states, with its gradient."""
    logits, u, v = _unpack(x, components)
    w = np.exp(logits - logits.max())
    w = w / w.sum()
    ru = np.linalg.norm(u, axis=1)
    rv = np.linalg.norm(v, axis=1)
    a = u / ru[:, None]
    b = v / rv[:, None]
    phi = np.einsum('ki,kj->kij', a, b).reshape(components, 4)

    sigma = np.einsum('k,ki,kj->ij', w, phi, phi.conj())
    sigma = (1 - MIXTURE_EPSILON) * sigma + MIXTURE_EPSILON * np.eye(4) / 4
    lam, vec = np.linalg.eigh(sigma)
    lam = np.maximum(lam, MIXTURE_EPSILON / 8)
    log_lam = np.log(lam)
    rho_rot = vec.conj().T @ rho @ vec
    value = -float(np.real(np.sum(np.diag(rho_rot) * log_lam))) / math.log(2)

    dl = lam[:, None] - lam[None, :]
    same = np.abs(dl) < 1e-14
    gamma = np.where(same, 1.0 / lam[:, None], (log_lam[:, None] - log_lam[None, :]) / np.where(same, 1.0, dl))
    grad = -(1 - MIXTURE_EPSILON) / math.log(2) * (vec @ (rho_rot * gamma) @ vec.conj().T)

    h = np.real(np.einsum('ki,ij,kj->k', phi.conj(), grad, phi))
    g_logits = w * (h - np.dot(w, h))

    g4 = grad.reshape(2, 2, 2, 2)
    g_a = np.einsum('ikjl,nk,nl->nij', g4, b.conj(), b)
    g_b = np.einsum('ikjl,ni,nj->nkl', g4, a.conj(), a)
    g_u = _sphere_gradient(g_a, a, w, ru)
    g_v = _sphere_gradient(g_b, b, w, rv)
    return value, _pack_gradient(g_logits, g_u, g_v)


def _sphere_gradient(g_local, a, w, r):
    ga = np.einsum('nij,nj->ni', g_local, a)
    expect = np.real(np.einsum('ni,ni->n', a.conj(), ga))
    return (2 * w / r)[:, None] * (ga - expect[:, None] * a)


def separable_relative_entropy(rho: np.ndarray, rng: np.random.Generator,
                               restarts: int = VAR_OPTIMIZER_RESTARTS_DEFAULT,
                               components: int = VAR_OPTIMIZER_COMPONENTS_DEFAULT,
                               maxiter: int = 5000) -> float:
    """
    Upper bound on min over separable sigma of S(rho || sigma).

    rho is a two-qubit density matrix in the product basis. Candidates are mixtures of
    `components` pure product states; each restart starts from a random point drawn
    from rng and the smallest bound is kept.
    """
    entropy = density_ops.von_neumann_entropy(rho)
    best = math.inf
    converged = 0
    for attempt in range(restarts):
        x0 = rng.standard_normal(9 * components)
        res = minimize(_cross_entropy, x0, args=(rho, components), jac=True,
                       method='L-BFGS-B', options={'maxiter': maxiter, 'ftol': 1e-14, 'gtol': 1e-10})
        value = float(res.fun) - entropy
        log.debug('restart %d: bound %.12g (%s)', attempt, value, res.message)
        if not math.isfinite(value):
            continue
        best = min(best, value)
        # status 1 means the iteration cap was hit
        if res.status != 1:
            converged += 1
    if converged == 0:
        raise OptimizerNotConverged(max(0.0, best))
    return max(0.0, best)


def relative_entropy(q, rng: np.random.Generator = None,
                     restarts: int = VAR_OPTIMIZER_RESTARTS_DEFAULT,
                     components: int = VAR_OPTIMIZER_COMPONENTS_DEFAULT) -> tuple:
    bm2 = abs(q.b_minus) ** 2
    if abs(q.c1) ** 2 + abs(q.c4) ** 2 < PURE_FAMILY_TOLERANCE:
        p_max = max(abs(q.b_plus) ** 2, bm2)
        value = 1.0 - binary_entropy(p_max) if p_max > 0.5 else 0.0
        return value, METHOD_BELL_MIXTURE
    if bm2 < PURE_FAMILY_TOLERANCE or bm2 > 1.0 - PURE_FAMILY_TOLERANCE:
        rho_r = density_ops.reduced_closed_form(q)
        return density_ops.von_neumann_entropy(rho_r), METHOD_EXACT_PURE
    if rng is None:
        rng = np.random.default_rng(VAR_OPTIMIZER_SEED_DEFAULT)
    rho = density_ops.mps_closed_form(q).product_basis()
    return separable_relative_entropy(rho, rng, restarts, components), METHOD_NUMERIC


def mutual_information(q) -> float:
    s_r = density_ops.von_neumann_entropy(density_ops.reduced_closed_form(q))
    s_bar = density_ops.von_neumann_entropy(density_ops.mps_closed_form(q))
    return 2 * s_r - s_bar


def classical_correlations(q, rng: np.random.Generator = None, s_rel: float = None) -> tuple:
    if s_rel is None:
        s_rel, _ = relative_entropy(q, rng)
    info = mutual_information(q)
    k_bar = schmidt_K_mps(q)
    c_cl_from_k = math.sqrt(max(0.0, 2 * (1 - 1 / k_bar)))
    return info - s_rel, c_cl_from_k, info


def two_qubit_model_metrics(q) -> tuple:
    c = abs(_qutrit_invariant(q) + q.b_minus ** 2)
    return 2.0 / (2.0 - c * c), c


def two_qubit_polarization(q) -> float:
    _, c = two_qubit_model_metrics(q)
    return math.sqrt(max(0.0, 1.0 - c * c))


def correlation_report(q, rng: np.random.Generator = None,
                       restarts: int = VAR_OPTIMIZER_RESTARTS_DEFAULT,
                       components: int = VAR_OPTIMIZER_COMPONENTS_DEFAULT) -> CorrelationReport:
    s_rel, method = relative_entropy(q, rng, restarts, components)
    c_cl, c_cl_from_k, info = classical_correlations(q, s_rel=s_rel)
    _, p_bar = density_ops.stokes_and_polarization(density_ops.reduced_closed_form(q))
    k_2qb, c_2qb = two_qubit_model_metrics(q)
    return CorrelationReport(
        k_bar=schmidt_K_mps(q),
        c_bar=concurrence_mps(q),
        s_rel=s_rel,
        mutual_info=info,
        c_cl=c_cl,
        c_cl_from_k=c_cl_from_k,
        p_bar=p_bar,
        k_2qb=k_2qb,
        c_2qb=c_2qb,
        p_2qb=two_qubit_polarization(q),
        s_rel_method=method,
    )


def b_minus_family(p: float, base=None):
    """State with |B-|^2 = p; the qutrit part of base (default B+ only) fills the rest."""
    qutrit = (0j, 1 + 0j, 0j)
    phase = 1 + 0j
    if base is not None:
        norm = math.sqrt(base.qutrit.norm_squared())
        # a B- only base keeps the default qutrit
        if norm > 0:
            qutrit = tuple(z / norm for z in (base.c1, base.b_plus, base.c4))
        if abs(base.b_minus) > 0:
            phase = base.b_minus / abs(base.b_minus)
    scale = math.sqrt(max(0.0, 1.0 - p))
    return core_state.make_ququart(*(z * scale for z in qutrit), math.sqrt(p) * phase,
                                   renormalize=True)


def sweep_b_minus(grid, base=None, rng: np.random.Generator = None,
                  restarts: int = VAR_OPTIMIZER_RESTARTS_DEFAULT,
                  components: int = VAR_OPTIMIZER_COMPONENTS_DEFAULT) -> list:
    rows = []
    for p in grid:
        report = correlation_report(b_minus_family(float(p), base), rng, restarts, components)
        row = {'b_minus_sq': float(p)}
        row.update(report.to_dict())
        rows.append(row)
    return rows
