import numpy as np
import pytest

import gibbstriple as gt

GOLDEN_RATIO = (1.0 + np.sqrt(5.0)) / 2.0
BERN_P = (0.3, 0.7)


@pytest.fixture(scope="session")
def full2():
    return gt.build_subshift(2, [[1, 1], [1, 1]])


@pytest.fixture(scope="session")
def golden():
    return gt.build_subshift(2, [[1, 1], [1, 0]])


@pytest.fixture(scope="session")
def full3():
    return gt.build_subshift(3, np.ones((3, 3), dtype=int))


@pytest.fixture(scope="session")
def uniform_solution(full2):
    return gt.solve_thermo(full2, gt.constant_potential(full2, 0.0))


@pytest.fixture(scope="session")
def bernoulli_potential(full2):
    return gt.make_potential(full2, 1, {(1,): np.log(0.3), (2,): np.log(0.7)})


@pytest.fixture(scope="session")
def bernoulli_solution(full2, bernoulli_potential):
    return gt.solve_thermo(full2, bernoulli_potential)


@pytest.fixture(scope="session")
def golden_solution(golden):
    return gt.solve_thermo(golden, gt.constant_potential(golden, 0.0))


@pytest.fixture(scope="session")
def full3_solution(full3):
    return gt.solve_thermo(full3, gt.constant_potential(full3, 0.0))


@pytest.fixture(scope="session")
def reference_solutions(uniform_solution, bernoulli_solution, golden_solution):
    return {
        "uniform": uniform_solution,
        "bernoulli": bernoulli_solution,
        "golden": golden_solution,
    }


@pytest.fixture(scope="session")
def range2_solution(full2):
    """A genuinely range-2 potential (one-step Markov memory) on the full 2-shift."""
    values = {
        (1, 1): np.log(0.60),
        (1, 2): np.log(0.40),
        (2, 1): np.log(0.25),
        (2, 2): np.log(0.75),
    }
    return gt.solve_thermo(full2, gt.make_potential(full2, 2, values))


def parry_oracle(spec):
    """Stationary Markov data of the maximal-entropy measure, via dense eig.

    Independent of the power-iteration solver: uses numpy's full
    eigendecomposition of the adjacency matrix.
    """
    a = spec.adjacency.astype(float)
    eigvals, eigvecs = np.linalg.eig(a)
    i = int(np.argmax(eigvals.real))
    lam = float(eigvals.real[i])
    right = np.abs(eigvecs.real[:, i])
    eigvals_l, eigvecs_l = np.linalg.eig(a.T)
    j = int(np.argmax(eigvals_l.real))
    left = np.abs(eigvecs_l.real[:, j])
    transitions = a * right[None, :] / (lam * right[:, None])
    stationary = left * right
    stationary /= stationary.sum()
    return lam, stationary, transitions


def parry_mass(spec, word):
    """Oracle mass of a cylinder under the maximal-entropy measure."""
    _, stationary, transitions = parry_oracle(spec)
    mass = stationary[word[0] - 1]
    for a, b in zip(word, word[1:]):
        mass *= transitions[a - 1, b - 1]
    return float(mass)


def brute_force_stream(model, restriction=(), n=2000):
    """Independent enumeration of the singular-value stream.

    Shares the model's mass recurrence (values bit-identical by design) but
    none of the best-first merging: collects everything above a threshold
    covering the first n values, then sorts by (value desc, label asc),
    which for digit alphabets coincides with the stream's tie order.
    """
    from gibbstriple.spectral import word_label

    sol = model.solution
    entries = [(v, label) for v, _, label in model.finite_values(restriction)]
    t = model.mass(restriction) / (4.0 * n)
    while True:
        collected = list(entries)
        stack = [(tuple(restriction), model.mass(restriction))]
        while stack:
            word, mass = stack.pop()
            symbols, cmasses = sol.children_masses(word, model.which)
            if word and len(symbols) >= 2:
                value = mass / (len(symbols) - 1)
                if value > t:
                    label = word_label(word, sol.spec.alphabet_size)
                    collected.extend((value, label) for _ in range(len(symbols) - 1))
            for b, m in zip(symbols, cmasses):
                if m > t:
                    stack.append((word + (b,), float(m)))
        if len(collected) >= n:
            break
        t /= 4.0
    collected.sort(key=lambda pair: (-pair[0], pair[1]))
    return collected[:n]
