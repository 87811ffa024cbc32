"""Batch integration kernels.

Two interchangeable backends share one calling convention:

* a numba path that runs each scenario as a tight scalar loop (``@njit``),
* a pure-numpy path that advances the whole batch in lock-step with
  vectorised array operations.

The numba path is used when numba imports and ``PROTESTSIM_DISABLE_NUMBA``
is unset (or ``0``). Both backends are exposed by name so the test suite
and ``benchmarks/`` can compare them directly.

Calling convention
------------------
``y0``      (n, 5) float64 initial ``v1, v2, u1, u2, tau``
``par``     (n, NPAR) float64, packed with :func:`pack_params`
``step``    time step (``h`` for RK4, ``dt`` for the discrete game)
``n_steps`` maximum number of steps
``record_every``, ``n_rec``
            record the state every ``record_every`` steps into ``n_rec``
            slots (slot 0 is the initial state); slots after termination
            hold the final state. ``n_rec = 0`` disables recording.

Returns ``(final, peak_u1, stop_step, status, records, signature)``.
``signature`` counts on/off switches of the three step functions and of
police presence, and sums the step indices at which they happened; two
runs with equal signatures crossed the same thresholds on the same steps.
"""

import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda fn: fn


def _env_disables_numba():
    return os.environ.get("PROTESTSIM_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


USE_NUMBA = HAVE_NUMBA and not _env_disables_numba()

# packed parameter layout
T1, T2, T3, TAU_C, V_C, TAU_F3, THETA, OMEGA, EPS, INC1, INC2, INC3, P0, T_ENTER, MIN_PROT = range(15)
NPAR = 15

DEPLETED, HORIZON, STEP_SIZE, NONFINITE = 0, 1, 2, 3
NSIG = 8


def pack_params(params, schedule):
    return np.array(
        [
            params.T1, params.T2, params.T3, params.tau_c, params.v_c, params.tau_f3,
            params.theta, params.omega, params.epsilon,
            float(params.f1_inclusive), float(params.f2_inclusive), float(params.f3_inclusive),
            schedule.p0, schedule.t_enter, schedule.min_protesters,
        ],
        dtype=np.float64,
    )


def n_steps_for(t_max, step):
    # tolerate t_max/step landing a hair above an integer
    return max(int(math.ceil(t_max / step - 1e-9)), 0)


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

@njit(cache=True)
def _step_on(x, threshold, inclusive):
    if inclusive > 0.5:
        return x >= threshold
    return x > threshold


@njit(cache=True)
def _presence(t, u1, u2, par):
    if t >= par[T_ENTER] and u1 + u2 > par[MIN_PROT]:
        return par[P0]
    return 0.0


@njit(cache=True)
def _rhs(v1, v2, u1, u2, tau, p, par, out):
    f1 = par[T1] if _step_on(tau, par[TAU_C], par[INC1]) else 0.0
    f2 = par[T2] if _step_on(v1, par[V_C], par[INC2]) else 0.0
    f3 = par[T3] if _step_on(tau, par[TAU_F3], par[INC3]) else 0.0
    lam_a = f1 / (p + 1.0)
    lam_c = v2 / (v2 + v1 + 1.0) * f3
    out[0] = u1 * lam_a
    out[1] = p * f2
    out[2] = u2 * lam_c - u1 * (lam_a + par[EPS])
    out[3] = -u2 * (lam_c + par[EPS])
    out[4] = par[THETA] * (u1 * lam_a + p * f2) - par[OMEGA] * tau


@njit(cache=True)
def _switch(j, on, k, prev, sig):
    if k > 0 and on != prev[j]:
        sig[j] += 1
        sig[4 + j] += k
    prev[j] = on


@njit(cache=True)
def _track_switches(k, y, p, par, prev, sig):
    _switch(0, _step_on(y[4], par[TAU_C], par[INC1]), k, prev, sig)
    _switch(1, _step_on(y[0], par[V_C], par[INC2]), k, prev, sig)
    _switch(2, _step_on(y[4], par[TAU_F3], par[INC3]), k, prev, sig)
    _switch(3, p > 0.0, k, prev, sig)


@njit(cache=True, nogil=True)
def ode_batch_numba(y0, par, h, n_steps, record_every, n_rec):
    n = y0.shape[0]
    final = np.empty((n, 5))
    peak = np.empty(n)
    stop = np.zeros(n, dtype=np.int64)
    status = np.full(n, HORIZON, dtype=np.int64)
    rec = np.empty((n, n_rec, 5))
    sig = np.zeros((n, NSIG), dtype=np.int64)

    k1 = np.empty(5)
    k2 = np.empty(5)
    k3 = np.empty(5)
    k4 = np.empty(5)
    ys = np.empty(5)
    y = np.empty(5)
    prev = np.zeros(4, dtype=np.bool_)

    for i in range(n):
        pr = par[i]
        for j in range(5):
            y[j] = y0[i, j]
        pk = y[2]
        if n_rec > 0:
            for j in range(5):
                rec[i, 0, j] = y[j]
        last_slot = 0
        st = HORIZON
        k_stop = n_steps
        if y[2] + y[3] < 1.0:
            st = DEPLETED
            k_stop = 0
        else:
            for k in range(n_steps):
                t = k * h
                p = _presence(t, y[2], y[3], pr)
                _track_switches(k, y, p, pr, prev, sig[i])
                _rhs(y[0], y[1], y[2], y[3], y[4], p, pr, k1)
                for j in range(5):
                    ys[j] = y[j] + 0.5 * h * k1[j]
                _rhs(ys[0], ys[1], ys[2], ys[3], ys[4], p, pr, k2)
                for j in range(5):
                    ys[j] = y[j] + 0.5 * h * k2[j]
                _rhs(ys[0], ys[1], ys[2], ys[3], ys[4], p, pr, k3)
                for j in range(5):
                    ys[j] = y[j] + h * k3[j]
                _rhs(ys[0], ys[1], ys[2], ys[3], ys[4], p, pr, k4)
                finite = True
                for j in range(5):
                    v = y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                    if not math.isfinite(v):
                        finite = False
                    y[j] = v if v > 0.0 else 0.0
                if y[2] > pk:
                    pk = y[2]
                if not finite:
                    st = NONFINITE
                    k_stop = k + 1
                    break
                if n_rec > 0 and (k + 1) % record_every == 0:
                    slot = (k + 1) // record_every
                    if slot < n_rec:
                        for j in range(5):
                            rec[i, slot, j] = y[j]
                        last_slot = slot
                if y[2] + y[3] < 1.0:
                    st = DEPLETED
                    k_stop = k + 1
                    break
        for slot in range(last_slot + 1, n_rec):
            for j in range(5):
                rec[i, slot, j] = y[j]
        for j in range(5):
            final[i, j] = y[j]
        peak[i] = pk
        stop[i] = k_stop
        status[i] = st
    return final, peak, stop, status, rec, sig


@njit(cache=True, nogil=True)
def discrete_batch_numba(y0, par, dt, n_steps, record_every, n_rec):
    n = y0.shape[0]
    final = np.empty((n, 5))
    peak = np.empty(n)
    stop = np.zeros(n, dtype=np.int64)
    status = np.full(n, HORIZON, dtype=np.int64)
    rec = np.empty((n, n_rec, 5))
    sig = np.zeros((n, NSIG), dtype=np.int64)
    y = np.empty(5)
    prev = np.zeros(4, dtype=np.bool_)

    for i in range(n):
        pr = par[i]
        for j in range(5):
            y[j] = y0[i, j]
        pk = y[2]
        if n_rec > 0:
            for j in range(5):
                rec[i, 0, j] = y[j]
        last_slot = 0
        st = HORIZON
        k_stop = n_steps
        if y[2] + y[3] < 1.0:
            st = DEPLETED
            k_stop = 0
        else:
            for k in range(n_steps):
                v1 = y[0]
                v2 = y[1]
                u1 = y[2]
                u2 = y[3]
                tau = y[4]
                p = _presence(k * dt, u1, u2, pr)
                _track_switches(k, y, p, pr, prev, sig[i])
                f1 = pr[T1] if _step_on(tau, pr[TAU_C], pr[INC1]) else 0.0
                f2 = pr[T2] if _step_on(v1, pr[V_C], pr[INC2]) else 0.0
                f3 = pr[T3] if _step_on(tau, pr[TAU_F3], pr[INC3]) else 0.0
                a = -math.expm1(-(f1 / (p + 1.0)) * dt)
                b = -math.expm1(-f2 * dt)
                c = -math.expm1(-(v2 / (v2 + v1 + 1.0)) * f3 * dt)
                loss1 = a + pr[EPS] * dt
                loss2 = c + pr[EPS] * dt
                if loss1 > 1.0 or loss2 > 1.0:
                    st = STEP_SIZE
                    k_stop = k
                    break
                dv1 = u1 * a
                dv2 = p * b
                conv = u2 * c
                u1n = u1 + conv - u1 * loss1
                u2n = u2 - u2 * loss2
                taun = tau + pr[THETA] * (dv1 + dv2) - pr[OMEGA] * tau * dt
                y[0] = v1 + dv1
                y[1] = v2 + dv2
                y[2] = u1n if u1n > 0.0 else 0.0
                y[3] = u2n if u2n > 0.0 else 0.0
                y[4] = taun if taun > 0.0 else 0.0
                finite = True
                for j in range(5):
                    if not math.isfinite(y[j]):
                        finite = False
                if y[2] > pk:
                    pk = y[2]
                if not finite:
                    st = NONFINITE
                    k_stop = k + 1
                    break
                if n_rec > 0 and (k + 1) % record_every == 0:
                    slot = (k + 1) // record_every
                    if slot < n_rec:
                        for j in range(5):
                            rec[i, slot, j] = y[j]
                        last_slot = slot
                if y[2] + y[3] < 1.0:
                    st = DEPLETED
                    k_stop = k + 1
                    break
        for slot in range(last_slot + 1, n_rec):
            for j in range(5):
                rec[i, slot, j] = y[j]
        for j in range(5):
            final[i, j] = y[j]
        peak[i] = pk
        stop[i] = k_stop
        status[i] = st
    return final, peak, stop, status, rec, sig


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

class _Cols:
    """Column views of a packed parameter matrix."""

    def __init__(self, par):
        self.T1 = par[:, T1]
        self.T2 = par[:, T2]
        self.T3 = par[:, T3]
        self.tau_c = par[:, TAU_C]
        self.v_c = par[:, V_C]
        self.tau_f3 = par[:, TAU_F3]
        self.theta = par[:, THETA]
        self.omega = par[:, OMEGA]
        self.eps = par[:, EPS]
        self.inc1 = par[:, INC1] > 0.5
        self.inc2 = par[:, INC2] > 0.5
        self.inc3 = par[:, INC3] > 0.5
        self.p0 = par[:, P0]
        self.t_enter = par[:, T_ENTER]
        self.min_prot = par[:, MIN_PROT]


def _np_on(x, threshold, inclusive):
    return np.where(inclusive, x >= threshold, x > threshold)


def _np_switch_flags(y, p, c):
    return np.stack(
        [
            _np_on(y[:, 4], c.tau_c, c.inc1),
            _np_on(y[:, 0], c.v_c, c.inc2),
            _np_on(y[:, 4], c.tau_f3, c.inc3),
            p > 0.0,
        ],
        axis=1,
    )


def _np_presence(t, y, c):
    on = (t >= c.t_enter) & (y[:, 2] + y[:, 3] > c.min_prot)
    return np.where(on, c.p0, 0.0)


def _np_rhs(y, p, c):
    v1, v2, u1, u2, tau = y[:, 0], y[:, 1], y[:, 2], y[:, 3], y[:, 4]
    f1 = np.where(_np_on(tau, c.tau_c, c.inc1), c.T1, 0.0)
    f2 = np.where(_np_on(v1, c.v_c, c.inc2), c.T2, 0.0)
    f3 = np.where(_np_on(tau, c.tau_f3, c.inc3), c.T3, 0.0)
    lam_a = f1 / (p + 1.0)
    lam_c = v2 / (v2 + v1 + 1.0) * f3
    out = np.empty_like(y)
    out[:, 0] = u1 * lam_a
    out[:, 1] = p * f2
    out[:, 2] = u2 * lam_c - u1 * (lam_a + c.eps)
    out[:, 3] = -u2 * (lam_c + c.eps)
    out[:, 4] = c.theta * (u1 * lam_a + p * f2) - c.omega * tau
    return out


def _np_rk4(y, p, c, h):
    k1 = _np_rhs(y, p, c)
    k2 = _np_rhs(y + 0.5 * h * k1, p, c)
    k3 = _np_rhs(y + 0.5 * h * k2, p, c)
    k4 = _np_rhs(y + h * k3, p, c)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), np.zeros(len(y), dtype=bool)


def _np_discrete(y, p, c, dt):
    v1, v2, u1, u2, tau = y[:, 0], y[:, 1], y[:, 2], y[:, 3], y[:, 4]
    f1 = np.where(_np_on(tau, c.tau_c, c.inc1), c.T1, 0.0)
    f2 = np.where(_np_on(v1, c.v_c, c.inc2), c.T2, 0.0)
    f3 = np.where(_np_on(tau, c.tau_f3, c.inc3), c.T3, 0.0)
    a = -np.expm1(-(f1 / (p + 1.0)) * dt)
    b = -np.expm1(-f2 * dt)
    cv = -np.expm1(-(v2 / (v2 + v1 + 1.0)) * f3 * dt)
    loss1 = a + c.eps * dt
    loss2 = cv + c.eps * dt
    bad = (loss1 > 1.0) | (loss2 > 1.0)
    dv1 = u1 * a
    dv2 = p * b
    out = np.empty_like(y)
    out[:, 0] = v1 + dv1
    out[:, 1] = v2 + dv2
    out[:, 2] = u1 + u2 * cv - u1 * loss1
    out[:, 3] = u2 - u2 * loss2
    out[:, 4] = tau + c.theta * (dv1 + dv2) - c.omega * tau * dt
    return out, bad


def _np_batch(advance, clamp_all, y0, par, step, n_steps, record_every, n_rec):
    n = y0.shape[0]
    c = _Cols(par)
    y = np.array(y0, dtype=np.float64, copy=True)
    peak = y[:, 2].copy()
    stop = np.full(n, n_steps, dtype=np.int64)
    status = np.full(n, HORIZON, dtype=np.int64)
    rec = np.empty((n, n_rec, 5))
    sig = np.zeros((n, NSIG), dtype=np.int64)
    last_slot = np.zeros(n, dtype=np.int64)
    if n_rec > 0:
        rec[:, 0] = y

    active = ~(y[:, 2] + y[:, 3] < 1.0)
    stop[~active] = 0
    status[~active] = DEPLETED
    prev = np.zeros((n, 4), dtype=bool)

    for k in range(n_steps):
        if not active.any():
            break
        p = _np_presence(k * step, y, c)
        on = _np_switch_flags(y, p, c)
        if k > 0:
            flip = (on != prev) & active[:, None]
            sig[:, :4] += flip
            sig[:, 4:] += flip * k
        prev = on

        ynew, bad = advance(y, p, c, step)
        bad &= active
        if bad.any():
            status[bad] = STEP_SIZE
            stop[bad] = k
            active &= ~bad
        ynew = np.maximum(ynew, 0.0) if clamp_all else ynew
        if not clamp_all:
            # the discrete game only clamps u1, u2, tau
            ynew[:, 2:] = np.maximum(ynew[:, 2:], 0.0)
        y = np.where(active[:, None], ynew, y)
        peak = np.where(active, np.maximum(peak, y[:, 2]), peak)

        nonfinite = active & ~np.isfinite(y).all(axis=1)
        if nonfinite.any():
            status[nonfinite] = NONFINITE
            stop[nonfinite] = k + 1
            active &= ~nonfinite

        if n_rec > 0 and (k + 1) % record_every == 0:
            slot = (k + 1) // record_every
            if slot < n_rec:
                rec[active, slot] = y[active]
                last_slot[active] = slot

        depleted = active & (y[:, 2] + y[:, 3] < 1.0)
        if depleted.any():
            status[depleted] = DEPLETED
            stop[depleted] = k + 1
            active &= ~depleted

    if n_rec > 0:
        slots = np.arange(n_rec)
        pad = slots[None, :] > last_slot[:, None]
        rec = np.where(pad[:, :, None], y[:, None, :], rec)
    return y, peak, stop, status, rec, sig


def ode_batch_numpy(y0, par, h, n_steps, record_every, n_rec):
    return _np_batch(_np_rk4, True, y0, par, h, n_steps, record_every, n_rec)


def discrete_batch_numpy(y0, par, dt, n_steps, record_every, n_rec):
    return _np_batch(_np_discrete, False, y0, par, dt, n_steps, record_every, n_rec)


def ode_batch(y0, par, h, n_steps, record_every=1, n_rec=0, backend=None):
    fn = ode_batch_numba if _pick_numba(backend) else ode_batch_numpy
    return fn(_f64(y0), _f64(par), float(h), int(n_steps), int(record_every), int(n_rec))


def discrete_batch(y0, par, dt, n_steps, record_every=1, n_rec=0, backend=None):
    fn = discrete_batch_numba if _pick_numba(backend) else discrete_batch_numpy
    return fn(_f64(y0), _f64(par), float(dt), int(n_steps), int(record_every), int(n_rec))


def _pick_numba(backend):
    if backend is None:
        return USE_NUMBA
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not importable")
        return True
    if backend == "numpy":
        return False
    raise ValueError(f"unknown backend {backend!r}; expected 'numba' or 'numpy'")


def _f64(a):
    return np.ascontiguousarray(np.atleast_2d(np.asarray(a, dtype=np.float64)))
