# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: pulse-level Monte Carlo and the fused key-length objective.

Both functions mirror :mod:`qsatlink._fallback` exactly; the Monte Carlo
consumes the bit generator in the same order as ``Generator.random``.
"""
import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, log, log2, sqrt, fmin, fmax
from numpy.random cimport bitgen_t

cnp.import_array()


def simulate_pulses(bit_generator, long long n_pulses, double p_mu1, double p_za,
                    double p_zb, double[:, ::1] cdf, double[::1] surv, double p_dark,
                    double p_ap, double q_sig):
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")
    tally_arr = np.zeros(20, dtype=np.int64)
    cdef long long[::1] tally = tally_arr
    cdef Py_ssize_t n_cdf = cdf.shape[1]
    cdef long long i
    cdef Py_ssize_t n
    cdef double u[9]
    cdef int j, k, a, b, c, sig, dark, ap, clicks, flips
    cdef double pflip
    with bit_generator.lock, nogil:
        for i in range(n_pulses):
            for j in range(9):
                u[j] = rng.next_double(rng.state)
            k = 0 if u[0] < p_mu1 else 1
            a = 0 if u[1] < p_za else 1
            b = 0 if u[2] < p_zb else 1
            n = 0
            while n < n_cdf and cdf[k, n] <= u[3]:
                n += 1
            sig = u[4] < surv[n]
            dark = u[5] < p_dark
            if not (sig or dark):
                continue
            ap = u[6] < p_ap
            if a == b:
                pflip = q_sig if sig else 0.5
            else:
                pflip = 0.5
            clicks = 1 + ap
            flips = (u[7] < pflip) + (ap != 0 and u[8] < 0.5)
            c = a * 4 + b * 2 + k
            tally[c] += clicks
            tally[8 + c] += flips
            if a == 0 and b == 0:
                if n == 0:
                    tally[16] += clicks
                elif n == 1:
                    tally[17] += clicks
            elif a == 1 and b == 1 and n == 1:
                tally[18] += clicks
                tally[19] += flips
    return tally_arr


cdef inline double _h(double x) noexcept nogil:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * log2(x) - (1.0 - x) * log2(1.0 - x)


cdef inline double _click(double mu, double eta, double pec, double pap) noexcept nogil:
    cdef double d = (1.0 + pap) * (1.0 - (1.0 - 2.0 * pec) * exp(-eta * mu))
    return fmin(fmax(d, 0.0), 1.0)


cdef inline double _error(double mu, double eta, double pec, double pap,
                          double qber_i) noexcept nogil:
    cdef double d = _click(mu, eta, pec, pap)
    cdef double e = pec + 0.5 * pap * d + qber_i * (1.0 - exp(-eta * mu))
    return fmin(fmax(e, 0.0), d)


cdef inline double _upper(double x, double beta) noexcept nogil:
    return x + 0.5 * beta + sqrt(2.0 * beta * x + 0.25 * beta * beta)


cdef inline double _lower(double x, double beta) noexcept nogil:
    return fmax(0.0, x - sqrt(2.0 * beta * x))


cpdef double skl_raw(double mu1, double mu2, double p_mu1, double p_za, double p_zb,
                     double eta, double n_pulses, double pec, double pap, double qber_i,
                     double eps_s, double eps_c, double alpha, double f_ec) noexcept:
    """Unfloored key length of one window from expected counts."""
    cdef double p_mu2 = 1.0 - p_mu1
    cdef double zz = p_za * p_zb
    cdef double xx = (1.0 - p_za) * (1.0 - p_zb)
    cdef double d1 = _click(mu1, eta, pec, pap), d2 = _click(mu2, eta, pec, pap)
    cdef double e1 = _error(mu1, eta, pec, pap, qber_i), e2 = _error(mu2, eta, pec, pap, qber_i)
    cdef double a1 = n_pulses * p_mu1, a2 = n_pulses * p_mu2
    cdef double nz1 = a1 * zz * d1, nz2 = a2 * zz * d2
    cdef double mz1 = a1 * zz * e1, mz2 = a2 * zz * e2
    cdef double nx1 = a1 * xx * d1, nx2 = a2 * xx * d2
    cdef double mx1 = a1 * xx * e1, mx2 = a2 * xx * e2

    cdef double beta = log(1.0 / (eps_s / alpha))
    cdef double w1 = exp(mu1) / p_mu1, w2 = exp(mu2) / p_mu2
    cdef double tau0 = p_mu1 * exp(-mu1) + p_mu2 * exp(-mu2)
    cdef double tau1 = p_mu1 * exp(-mu1) * mu1 + p_mu2 * exp(-mu2) * mu2
    cdef double gap = mu1 - mu2

    cdef double s_z0 = fmax(0.0, tau0 * (mu1 * w2 * _lower(nz2, beta)
                                         - mu2 * w1 * _upper(nz1, beta)) / gap)
    cdef double s_z0_hi = 2.0 * (_upper(mz1, beta) + _upper(mz2, beta))
    cdef double pre = tau1 * mu1 / (mu2 * gap)
    cdef double r2 = (mu2 * mu2) / (mu1 * mu1)
    cdef double r0 = (mu1 * mu1 - mu2 * mu2) / (mu1 * mu1)
    cdef double s_z1 = fmax(0.0, pre * (w2 * _lower(nz2, beta) - r2 * w1 * _upper(nz1, beta)
                                       - r0 * s_z0_hi / tau0))
    cdef double s_x0_hi = 2.0 * (_upper(mx1, beta) + _upper(mx2, beta))
    cdef double s_x1 = fmax(0.0, pre * (w2 * _lower(nx2, beta) - r2 * w1 * _upper(nx1, beta)
                                       - r0 * s_x0_hi / tau0))
    cdef double v_x1 = tau1 * (w1 * _upper(mx1, beta) - w2 * _lower(mx2, beta)) / gap
    v_x1 = fmin(fmax(v_x1, 0.0), nx1 + nx2)

    cdef double phi = 0.5, ratio, b, arg, inner
    if s_z1 > 0.0 and s_x1 > 0.0:
        ratio = v_x1 / s_x1
        if ratio < 0.5:
            b = fmin(fmax(ratio, 1e-300), 0.5)
            arg = (log2(s_z1 + s_x1) - log2(s_z1) - log2(s_x1) - log2(1.0 - b) - log2(b)
                   + 2.0 * log2(21.0 / eps_s))
            inner = (s_z1 + s_x1) * (1.0 - b) * b / (s_z1 * s_x1 * log(2.0)) * arg
            if inner >= 0.0 and inner == inner:
                phi = fmin(0.5, ratio + sqrt(inner))

    cdef double n_z = nz1 + nz2
    cdef double q_z = 0.5
    if n_z > 0.0:
        q_z = fmin(0.5, (mz1 + mz2) / n_z)
    cdef double leak = f_ec * n_z * _h(q_z)
    return (s_z0 + s_z1 * (1.0 - _h(phi)) - leak
            - 6.0 * log2(alpha / eps_s) - log2(2.0 / eps_c))
