"""Brute-force four-qubit simulation of one DEJMPS round.

Independent of the closed-form coefficient map: builds the 16-dim state of
two Bell pairs, applies the local rotations and bilateral CNOT, and keeps
the branches where both target qubits read the same outcome.
"""

import itertools

import numpy as np

_S = 1 / np.sqrt(2)
# (phi+, psi-, psi+, phi-) on |q_a q_b>
BELL = [
    np.array([_S, 0, 0, _S]),
    np.array([0, _S, -_S, 0]),
    np.array([0, _S, _S, 0]),
    np.array([_S, 0, 0, -_S]),
]
_X = np.array([[0, 1], [1, 0]])
_I = np.eye(2)


def _rx(theta):
    return np.cos(theta / 2) * _I - 1j * np.sin(theta / 2) * _X


def _on(u, qubit):
    mats = [_I] * 4
    mats[qubit] = u
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def _cnot(control, target):
    m = np.zeros((16, 16))
    for idx in range(16):
        bits = [(idx >> (3 - k)) & 1 for k in range(4)]
        if bits[control]:
            bits[target] ^= 1
        m[sum(b << (3 - k) for k, b in enumerate(bits)), idx] = 1
    return m


# qubit order a1 b1 a2 b2; Alice rotates +pi/2, Bob -pi/2
_U = (
    _cnot(0, 2)
    @ _cnot(1, 3)
    @ _on(_rx(np.pi / 2), 0)
    @ _on(_rx(-np.pi / 2), 1)
    @ _on(_rx(np.pi / 2), 2)
    @ _on(_rx(-np.pi / 2), 3)
)


def _table():
    t = np.zeros((4, 4, 4))
    for i, j in itertools.product(range(4), range(4)):
        psi = (_U @ np.kron(BELL[i], BELL[j])).reshape(2, 2, 2, 2)
        for m in (0, 1):
            branch = psi[:, :, m, m].reshape(4)
            for k in range(4):
                t[i, j, k] += abs(np.vdot(BELL[k], branch)) ** 2
    return t


TABLE = _table()


def dejmps_round(a, b):
    """(success probability, output coefficients) for inputs a (kept) and b."""
    out = np.einsum("i,j,ijk->k", np.asarray(a), np.asarray(b), TABLE)
    p = out.sum()
    return p, out / p
