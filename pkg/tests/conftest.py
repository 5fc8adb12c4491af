import numpy as np
import pytest


def path_sum_amplitudes(psi0, omegas, gammas, transmissions=None):
    """Final amplitudes by summing over every coin-outcome path.

    Independent of both the array evolution and the dense-matrix reference:
    each path picks the polarization after every coin, multiplies the coin
    elements along the way and lands in bin ``start + (number of V outcomes)``.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    N = len(omegas)
    B = psi0.shape[1]
    out = np.zeros((2, B + N), dtype=complex)
    if N == 0:
        out[:, :B] = psi0
        return out
    paths = ((np.arange(2 ** N)[:, None] >> np.arange(N)) & 1).astype(np.int8)  # (P, N)
    n_v = paths.sum(axis=1)
    for pol0 in (0, 1):
        for m0 in range(B):
            a0 = psi0[pol0, m0]
            if a0 == 0:
                continue
            amp = np.full(paths.shape[0], a0, dtype=complex)
            prev = np.full(paths.shape[0], pol0, dtype=np.int8)
            for n in range(N):
                c, s = np.cos(omegas[n] / 2), np.sin(omegas[n] / 2)
                e = np.exp(1j * gammas[n])
                nxt = paths[:, n]
                # element <nxt|C|prev>
                elem = np.where(prev == 0, np.where(nxt == 0, c, np.conj(e) * s),
                                np.where(nxt == 0, e * s, -c))
                amp = amp * elem
                prev = nxt
            np.add.at(out, (paths[:, -1], m0 + n_v), amp)
    if transmissions is not None:
        out *= np.sqrt(np.prod(transmissions))
    return out


@pytest.fixture
def path_sum():
    return path_sum_amplitudes
