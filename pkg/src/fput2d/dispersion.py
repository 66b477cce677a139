"""Spectral algebra at a carrier wave vector of the 2D square lattice.

The scalar lattice with nearest-neighbor coupling has the dispersion relation

    omega_x^2(k) = 2 - 2 cos k,   omega_y^2(l) = 2 - 2 cos l,
    omega(k, l)  = sqrt(omega_x^2(k) + omega_y^2(l)),

on the torus (-pi, pi]^2.  This module evaluates omega and its exact first and
second derivatives, the cubic envelope (NLS) coefficients for the strain and
displacement formulations, the amplitude ratio linking the two strain
envelopes, the third-harmonic correction-amplitude solves, the non-resonance
check 3*omega(k0) != omega(3*k0), and the cubic interaction kernels

    n(k1, k2, k3) = (e^{ik1}-1)(e^{ik2}-1)(e^{ik3}-1) + c.c.
    D(kv1, kv2, kv3) = n(k1, k2, k3) + n(l1, l2, l3).

Everything here is a pure function of value inputs; there is no shared state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_RESONANCE_MARGIN = 1e-8


class ZeroFrequency(ValueError):
    """Operation requires omega(kv) > 0 but the carrier sits on a zero."""


class AxisDegenerate(ValueError):
    """Carrier component is 0 so the requested envelope is identically zero."""


class Resonant(ValueError):
    """A correction-amplitude denominator is below the resonance margin."""


def wrap_angle(k):
    """Reduce an angle (or array of angles) modulo 2*pi into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(k), 2.0 * np.pi)


@dataclass(frozen=True)
class WaveVector:
    """A point (k, l) on the torus (-pi, pi]^2, reduced by the constructor."""

    k: float
    l: float

    def __post_init__(self):
        object.__setattr__(self, "k", float(wrap_angle(self.k)))
        object.__setattr__(self, "l", float(wrap_angle(self.l)))

    def scaled(self, m: int) -> "WaveVector":
        return WaveVector(m * self.k, m * self.l)

    def negated(self) -> "WaveVector":
        return WaveVector(-self.k, -self.l)

    @property
    def is_zero(self) -> bool:
        return self.k == 0.0 and self.l == 0.0


@dataclass(frozen=True)
class DispersionData:
    """Carrier-local dispersion data and envelope-equation coefficients.

    gamma_a / gamma_b are the cubic coefficients of the strain envelopes A and
    B (the physical-space envelope equation carries an extra factor 4 on
    them); gamma_q is the full cubic coefficient of the displacement envelope
    equation.  A coefficient is None when the corresponding carrier component
    vanishes and the envelope is identically zero (axis-degenerate case).
    """

    carrier: WaveVector
    omega0: float
    group_velocity: tuple[float, float]
    hessian: np.ndarray
    gamma_a: complex | None
    gamma_b: complex | None
    gamma_q: complex
    nonresonant: bool
    axis_degenerate_k: bool
    axis_degenerate_l: bool


@dataclass(frozen=True)
class CorrectionAmplitudeCoefficients:
    """Scalar factors mapping envelope triple products to the correction fields.

    With P the physical envelope of the field the coefficients feed (A for
    strain-u and displacement, B for strain-v), the correction amplitudes are

        A_{1,-1} = c_1m1 * (2P) (2 conj P)^2
        A_{1,3}  = c_13  * (2P)^3
        A_{1,-3} = c_1m3 * (2 conj P)^3

    denom_* are the resolvent denominators i*m*omega0 - i*omega(m*k0),
    exposed for diagnostics and tests.
    """

    c_1m1: complex
    c_13: complex
    c_1m3: complex
    denom_m1: complex
    denom_3: complex
    denom_m3: complex


def omega_x_sq(k):
    return 2.0 - 2.0 * np.cos(k)


def omega(kv: WaveVector) -> float:
    """Dispersion relation; value in [0, 2*sqrt(2)]."""
    w2 = omega_x_sq(kv.k) + omega_x_sq(kv.l)
    return float(np.sqrt(max(w2, 0.0)))


def group_velocity(kv: WaveVector) -> tuple[float, float]:
    """Exact gradient of omega, (sin k / omega, sin l / omega)."""
    w = omega(kv)
    if w == 0.0:
        raise ZeroFrequency("group velocity is singular at omega = 0")
    return (float(np.sin(kv.k) / w), float(np.sin(kv.l) / w))


def hessian(kv: WaveVector) -> np.ndarray:
    """Exact 2x2 Hessian of omega at kv."""
    w = omega(kv)
    if w == 0.0:
        raise ZeroFrequency("hessian is singular at omega = 0")
    sk, sl = np.sin(kv.k), np.sin(kv.l)
    ck, cl = np.cos(kv.k), np.cos(kv.l)
    w3 = w**3
    hkk = ck / w - sk * sk / w3
    hll = cl / w - sl * sl / w3
    hkl = -sk * sl / w3
    return np.array([[hkk, hkl], [hkl, hll]])


def nonresonance_check(kv: WaveVector, delta_res: float = DEFAULT_RESONANCE_MARGIN) -> bool:
    """True iff omega(3*kv) > 0 and |3*omega(kv) - omega(3*kv)| exceeds the margin."""
    w3 = omega(kv.scaled(3))
    if w3 <= delta_res:
        return False
    return bool(abs(3.0 * omega(kv) - w3) > delta_res)


def _gamma_strain(own_sq: float, other_sq: float, w0: float) -> complex:
    # (3 own / (8 i w0)) + (3 other^2 / (8 i own w0)); built from real pieces,
    # a single multiplication by -1j at the end.
    real_part = 3.0 * own_sq / (8.0 * w0) + 3.0 * other_sq**2 / (8.0 * own_sq * w0)
    return -1j * real_part


def nls_coefficients(kv: WaveVector, delta_res: float = DEFAULT_RESONANCE_MARGIN) -> DispersionData:
    """Assemble the full DispersionData record at a carrier wave vector."""
    if kv.is_zero:
        raise ZeroFrequency("carrier (0, 0) has omega = 0")
    w0 = omega(kv)
    wx2 = float(omega_x_sq(kv.k))
    wy2 = float(omega_x_sq(kv.l))
    deg_k = wx2 == 0.0
    deg_l = wy2 == 0.0
    gamma_a = None if deg_k else _gamma_strain(wx2, wy2, w0)
    gamma_b = None if deg_l else _gamma_strain(wy2, wx2, w0)
    gamma_q = -1j * 3.0 * (wx2**2 + wy2**2) / (2.0 * w0)
    return DispersionData(
        carrier=kv,
        omega0=w0,
        group_velocity=group_velocity(kv),
        hessian=hessian(kv),
        gamma_a=gamma_a,
        gamma_b=gamma_b,
        gamma_q=gamma_q,
        nonresonant=nonresonance_check(kv, delta_res),
        axis_degenerate_k=deg_k,
        axis_degenerate_l=deg_l,
    )


def amplitude_ratio_b_over_a(kv: WaveVector) -> complex:
    """Scalar ratio (e^{il0}-1)/(e^{ik0}-1) linking the strain envelopes B and A."""
    a = np.exp(1j * kv.k) - 1.0
    if a == 0.0:
        raise AxisDegenerate("k0 = 0: B is the primary envelope, invert the relation")
    b = np.exp(1j * kv.l) - 1.0
    return complex(b / a)


def amplitude_b_from_a(kv: WaveVector, a_hat: np.ndarray) -> np.ndarray:
    """Apply the compatibility ratio to an A-envelope (array or scalar)."""
    return amplitude_ratio_b_over_a(kv) * np.asarray(a_hat, dtype=complex)


def _rho(k: float, l: float) -> complex:
    # cross-coupling multiplier (e^{ik}-1)(1-e^{-il})
    return complex((np.exp(1j * k) - 1.0) * (1.0 - np.exp(-1j * l)))


def _check_denominators(kv: WaveVector, delta_res: float):
    w0 = omega(kv)
    w3 = omega(kv.scaled(3))
    denom_m1 = -2j * w0
    denom_3 = 1j * (3.0 * w0 - w3)
    denom_m3 = -1j * (3.0 * w0 + w3)
    if w3 <= delta_res:
        raise Resonant("omega(3*k0) vanishes; third-harmonic solve needs omega(3*k0) > 0")
    for d in (denom_m1, denom_3, denom_m3):
        if abs(d) < delta_res:
            raise Resonant(f"correction denominator {d} below margin {delta_res}")
    return w0, w3, denom_m1, denom_3, denom_m3


def correction_coefficients(
    kv: WaveVector,
    variant: str,
    delta_res: float = DEFAULT_RESONANCE_MARGIN,
) -> CorrectionAmplitudeCoefficients:
    """Solve the three linear correction-amplitude equations at the carrier.

    variant selects which field the coefficients feed: "strain" (alias
    "strain_u") multiplies products of the A-envelope, "strain_v" products of
    the B-envelope, "displacement" products of the displacement envelope.
    """
    w0, w3, denom_m1, denom_3, denom_m3 = _check_denominators(kv, delta_res)
    k0, l0 = kv.k, kv.l

    if variant == "displacement":
        d_m1 = kernel_D(kv, kv.negated(), kv.negated())
        d_3 = kernel_D(kv, kv, kv)
        num_m1 = -3.0 * d_m1 / (8j * w0)
        num_3 = -d_3 / (8j * w3)
        num_m3 = -d_3 / (8j * w3)
    elif variant in ("strain", "strain_u", "strain_v"):
        if variant == "strain_v":
            if omega_x_sq(l0) == 0.0:
                raise AxisDegenerate("l0 = 0: the B envelope is identically zero")
            own = lambda m: float(omega_x_sq(m * l0))
            rho = lambda m: _rho(m * l0, m * k0)
            ratio = (
                complex(amplitude_ratio_b_over_a(WaveVector(l0, k0)))
                if omega_x_sq(k0) != 0.0
                else None
            )
        else:
            if omega_x_sq(k0) == 0.0:
                raise AxisDegenerate("k0 = 0: the A envelope is identically zero")
            own = lambda m: float(omega_x_sq(m * k0))
            rho = lambda m: _rho(m * k0, m * l0)
            ratio = (
                complex(amplitude_ratio_b_over_a(kv))
                if omega_x_sq(l0) != 0.0
                else None
            )
        # cross term folds the other field's products via the amplitude ratio;
        # it drops entirely when the other envelope is identically zero.
        if ratio is None:
            cross_m1 = cross_3 = cross_m3 = 0.0
        else:
            cross_m1 = rho(-1) * ratio * np.conj(ratio) ** 2
            cross_3 = rho(3) * ratio**3
            cross_m3 = rho(-3) * np.conj(ratio) ** 3
        num_m1 = 3.0 * (own(1) - cross_m1) / (8j * w0)
        num_3 = (own(3) - cross_3) / (8j * w3)
        num_m3 = (own(3) - cross_m3) / (8j * w3)
    else:
        raise ValueError(f"unknown variant {variant!r}")

    return CorrectionAmplitudeCoefficients(
        c_1m1=complex(num_m1 / denom_m1),
        c_13=complex(num_3 / denom_3),
        c_1m3=complex(num_m3 / denom_m3),
        denom_m1=complex(denom_m1),
        denom_3=complex(denom_3),
        denom_m3=complex(denom_m3),
    )


def kernel_n(k1, k2, k3):
    """Cubic interaction kernel 2*Re[(e^{ik1}-1)(e^{ik2}-1)(e^{ik3}-1)].

    Accepts scalars or broadcastable arrays; fully symmetric in its arguments
    and bounded by C*|wrap(k1+k2+k3)|.
    """
    p = (np.exp(1j * np.asarray(k1)) - 1.0) * (np.exp(1j * np.asarray(k2)) - 1.0) * (
        np.exp(1j * np.asarray(k3)) - 1.0
    )
    out = 2.0 * p.real
    return float(out) if np.isscalar(k1) and np.isscalar(k2) and np.isscalar(k3) else out


def kernel_D(kv1: WaveVector, kv2: WaveVector, kv3: WaveVector) -> float:
    """Sum of the scalar kernels over the two lattice directions."""
    return float(kernel_n(kv1.k, kv2.k, kv3.k) + kernel_n(kv1.l, kv2.l, kv3.l))
